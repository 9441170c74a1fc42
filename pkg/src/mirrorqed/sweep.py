"""Config-driven sweep orchestration and tabular output.

Sweeps partition their grid into independent columns (one per tune value or
power), solve each column's probe trace with a per-column cached generator,
and gather results into pre-sized tables keyed by grid index, so worker
scheduling cannot affect the output. Data files are byte-stable for a given
config; only the manifest carries timestamps and timing statistics.
"""

from __future__ import annotations

import concurrent.futures
import copy
import hashlib
import json
import os
import time
import warnings
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from . import transmon as _transmon
from .coupling import CouplingMatrices, OperatingPoint, alpha, symmetrize
from .errors import (
    ConfigError,
    SolverError,
    VelocityInconsistencyError,
    ZeroDriveError,
)
from .liouvillian import (
    SIGMA_MINUS,
    SIGMA_PLUS,
    Superoperator,
    _lmul,
    _rmul,
    _sandwich,
    embed,
)
from .observables import DipReport, _dips_from_arrays, splitting_from_dips
from .solver import steady_state
from .transmon import ProbeSpec, TransmonSpec, WaveguideSpec, power_to_voltage
from .units import RAD_S_TO_RAD_NS, TWO_PI

WORKER_ENV_VAR = "MIRRORQED_WORKERS"

# columns below this count run serially; pool startup costs more than it saves
_SERIAL_THRESHOLD = 8


def _require(mapping: dict, key: str, context: str):
    if key not in mapping:
        raise ConfigError(f"{context}: missing required key {key!r}")
    return mapping[key]


def _check_keys(mapping: dict, allowed: set[str], context: str) -> None:
    unknown = sorted(set(mapping) - allowed)
    if unknown:
        raise ConfigError(f"{context}: unknown keys {unknown}")


def _axis(section: dict, start_key: str, stop_key: str, step_key: str,
          context: str) -> np.ndarray:
    start = float(_require(section, start_key, context))
    stop = float(_require(section, stop_key, context))
    if not stop > start:
        raise ConfigError(f"{context}: {stop_key} must exceed {start_key}")
    if ("points" in section) == (step_key in section):
        raise ConfigError(
            f"{context}: give exactly one of 'points' or {step_key!r}"
        )
    if "points" in section:
        points = section["points"]
        if not isinstance(points, int) or points < 2:
            raise ConfigError(f"{context}: 'points' must be an integer >= 2")
    else:
        step = float(section[step_key])
        if step <= 0:
            raise ConfigError(f"{context}: {step_key} must be positive")
        points = round((stop - start) / step) + 1
        if points < 2:
            raise ConfigError(f"{context}: step larger than the range")
    return np.linspace(start, stop, points)


@dataclass(frozen=True, eq=False)
class ExperimentConfig:
    """Validated sweep configuration; raw retains the exact parsed dict."""

    atoms: tuple[TransmonSpec, ...]
    wg: WaveguideSpec
    operating_kind: str
    operating_values: tuple[float, ...]
    probe_v0_v: float | None
    probe_power_w: float | None
    probe_axis_ghz: np.ndarray
    tune_atom: int | None
    tune_kind: str | None
    tune_values: np.ndarray | None
    power_db: np.ndarray | None
    power_reference_w: float | None
    solver_tol: float
    solver_regularize: bool
    dip_prominence: float
    reference_atom: int | None
    workers: int | None
    output_directory: str
    output_stem: str
    raw: dict

    @classmethod
    def from_file(cls, path: str | os.PathLike) -> "ExperimentConfig":
        try:
            with open(path, "r", encoding="utf-8") as fh:
                data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: not valid JSON ({exc})") from exc
        return cls.from_dict(data)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise ConfigError("config root must be an object")
        _check_keys(
            data,
            {
                "atoms", "waveguide", "operating", "probe", "probe_axis",
                "tune_axis", "power_axis", "solver", "dips",
                "reference_atom", "workers", "output",
            },
            "config",
        )

        atoms_raw = _require(data, "atoms", "config")
        if not isinstance(atoms_raw, list) or not atoms_raw:
            raise ConfigError("config: 'atoms' must be a nonempty list")
        atoms = []
        for idx, entry in enumerate(atoms_raw):
            ctx = f"atoms[{idx}]"
            if not isinstance(entry, dict):
                raise ConfigError(f"{ctx}: must be an object")
            _check_keys(
                entry,
                {"label", "ec_ghz", "ejmax_ghz", "anchor", "beta", "x_mm",
                 "gamma_phi_mhz"},
                ctx,
            )
            ec = float(_require(entry, "ec_ghz", ctx))
            if ("ejmax_ghz" in entry) == ("anchor" in entry):
                raise ConfigError(
                    f"{ctx}: give exactly one of 'ejmax_ghz' or 'anchor'"
                )
            if "ejmax_ghz" in entry:
                ejmax = float(entry["ejmax_ghz"])
            else:
                anchor = entry["anchor"]
                _check_keys(anchor, {"frequency_ghz", "flux"}, f"{ctx}.anchor")
                freq = float(_require(anchor, "frequency_ghz", f"{ctx}.anchor"))
                flux = float(anchor.get("flux", 0.0))
                cosine = abs(np.cos(np.pi * flux))
                if cosine == 0.0 or freq <= 0:
                    raise ConfigError(f"{ctx}.anchor: unreachable anchor point")
                if ec <= 0:
                    raise ConfigError(f"{ctx}: ec_ghz must be positive")
                ejmax = (freq + ec) ** 2 / (8.0 * ec) / cosine
            try:
                atoms.append(
                    TransmonSpec(
                        label=str(entry.get("label", f"atom{idx}")),
                        ec=ec,
                        ejmax=ejmax,
                        beta=float(_require(entry, "beta", ctx)),
                        x=float(_require(entry, "x_mm", ctx)) * 1e-3,
                        gamma_phi=float(entry.get("gamma_phi_mhz", 0.0))
                        * TWO_PI * 1e6,
                    )
                )
            except ValueError as exc:
                raise ConfigError(f"{ctx}: {exc}") from exc

        wg_raw = data.get("waveguide", {})
        _check_keys(wg_raw, {"z0_ohm", "v_m_per_s"}, "waveguide")
        try:
            wg = WaveguideSpec(
                z0=float(wg_raw.get("z0_ohm", 50.0)),
                v=float(wg_raw.get("v_m_per_s", 8.948e7)),
            )
        except ValueError as exc:
            raise ConfigError(f"waveguide: {exc}") from exc

        operating = _require(data, "operating", "config")
        _check_keys(operating, {"frequencies_ghz", "fluxes"}, "operating")
        if ("frequencies_ghz" in operating) == ("fluxes" in operating):
            raise ConfigError(
                "operating: give exactly one of 'frequencies_ghz' or 'fluxes'"
            )
        operating_kind = (
            "frequencies_ghz" if "frequencies_ghz" in operating else "fluxes"
        )
        operating_values = tuple(float(v) for v in operating[operating_kind])
        if len(operating_values) != len(atoms):
            raise ConfigError(
                f"operating: expected {len(atoms)} values, "
                f"got {len(operating_values)}"
            )

        probe = _require(data, "probe", "config")
        _check_keys(probe, {"power_w", "v0_v"}, "probe")
        if ("power_w" in probe) == ("v0_v" in probe):
            raise ConfigError("probe: give exactly one of 'power_w' or 'v0_v'")
        probe_power = probe.get("power_w")
        probe_v0 = probe.get("v0_v")
        amplitude = probe_power if probe_power is not None else probe_v0
        if not float(amplitude) > 0:
            raise ConfigError("probe: drive amplitude must be positive")
        probe_power = None if probe_power is None else float(probe_power)
        probe_v0 = None if probe_v0 is None else float(probe_v0)

        probe_section = _require(data, "probe_axis", "config")
        _check_keys(
            probe_section,
            {"start_ghz", "stop_ghz", "points", "step_ghz"},
            "probe_axis",
        )
        probe_axis = _axis(
            probe_section, "start_ghz", "stop_ghz", "step_ghz", "probe_axis"
        )

        tune_atom = tune_kind = tune_values = None
        if "tune_axis" in data:
            tune = data["tune_axis"]
            _check_keys(
                tune,
                {"atom", "start_ghz", "stop_ghz", "step_ghz",
                 "start_flux", "stop_flux", "step_flux", "points"},
                "tune_axis",
            )
            tune_atom = _require(tune, "atom", "tune_axis")
            if not isinstance(tune_atom, int) or not 0 <= tune_atom < len(atoms):
                raise ConfigError(
                    f"tune_axis: 'atom' must index one of {len(atoms)} atoms"
                )
            freq_keys = {"start_ghz", "stop_ghz", "step_ghz"} & set(tune)
            flux_keys = {"start_flux", "stop_flux", "step_flux"} & set(tune)
            if freq_keys and flux_keys:
                raise ConfigError(
                    "tune_axis: mix of frequency and flux keys"
                )
            if freq_keys:
                tune_kind = "frequencies_ghz"
                tune_values = _axis(
                    tune, "start_ghz", "stop_ghz", "step_ghz", "tune_axis"
                )
            elif flux_keys:
                tune_kind = "fluxes"
                tune_values = _axis(
                    tune, "start_flux", "stop_flux", "step_flux", "tune_axis"
                )
            else:
                raise ConfigError("tune_axis: no range given")

        power_db = power_reference = None
        if "power_axis" in data:
            power = data["power_axis"]
            _check_keys(
                power,
                {"start_db", "stop_db", "step_db", "points", "reference_w"},
                "power_axis",
            )
            power_db = _axis(power, "start_db", "stop_db", "step_db", "power_axis")
            power_reference = float(_require(power, "reference_w", "power_axis"))
            if power_reference <= 0:
                raise ConfigError("power_axis: reference_w must be positive")

        solver = data.get("solver", {})
        _check_keys(solver, {"tol", "regularize"}, "solver")
        solver_tol = float(solver.get("tol", 1e-10))
        if solver_tol <= 0:
            raise ConfigError("solver: tol must be positive")
        solver_regularize = solver.get("regularize", False)
        if not isinstance(solver_regularize, bool):
            raise ConfigError("solver: regularize must be true or false")

        dips = data.get("dips", {})
        _check_keys(dips, {"prominence"}, "dips")
        prominence = float(dips.get("prominence", 0.02))
        if not 0 < prominence < 1:
            raise ConfigError("dips: prominence must lie in (0, 1)")

        reference = data.get("reference_atom")
        if reference is not None:
            if not isinstance(reference, int) or not 0 <= reference < len(atoms):
                raise ConfigError(
                    f"reference_atom must index one of {len(atoms)} atoms"
                )

        workers = data.get("workers")
        if workers is not None and (not isinstance(workers, int) or workers < 1):
            raise ConfigError("workers must be a positive integer")

        output = data.get("output", {})
        _check_keys(output, {"directory", "stem"}, "output")

        cfg = cls(
            atoms=tuple(atoms),
            wg=wg,
            operating_kind=operating_kind,
            operating_values=operating_values,
            probe_v0_v=probe_v0,
            probe_power_w=probe_power,
            probe_axis_ghz=probe_axis,
            tune_atom=tune_atom,
            tune_kind=tune_kind,
            tune_values=tune_values,
            power_db=power_db,
            power_reference_w=power_reference,
            solver_tol=solver_tol,
            solver_regularize=solver_regularize,
            dip_prominence=prominence,
            reference_atom=reference,
            workers=workers,
            output_directory=str(output.get("directory", ".")),
            output_stem=str(output.get("stem", "sweep")),
            raw=copy.deepcopy(data),
        )

        try:
            omega_ghz = [w / (TWO_PI * 1e9) for w in cfg.operating_point().omega10]
        except ValueError as exc:
            raise ConfigError(f"operating point invalid: {exc}") from exc
        if probe_axis[-1] > 2.0 * min(omega_ghz):
            warnings.warn(
                f"probe axis extends to {probe_axis[-1]:g} GHz, above twice "
                f"an atom transition at {min(omega_ghz):g} GHz; the weak-"
                "coupling model is not validated there",
                UserWarning,
                stacklevel=2,
            )
        return cfg

    def fluxes_at_operating(self) -> tuple[float, ...]:
        if self.operating_kind == "fluxes":
            return self.operating_values
        return tuple(
            _transmon.flux_for_frequency(spec, f)
            for spec, f in zip(self.atoms, self.operating_values)
        )

    def operating_point(self) -> OperatingPoint:
        return OperatingPoint.at_fluxes(self.atoms, self.fluxes_at_operating(), self.wg)

    def probe_v0(self) -> float:
        if self.probe_v0_v is not None:
            return self.probe_v0_v
        return power_to_voltage(self.probe_power_w, self.wg.z0)

    def config_sha256(self) -> str:
        canonical = json.dumps(
            self.raw, sort_keys=True, separators=(",", ":")
        ).encode("utf-8")
        return hashlib.sha256(canonical).hexdigest()


@dataclass(frozen=True, eq=False)
class SweepResult:
    """Reflection grid plus per-column dip reports and a run manifest.

    r has shape (probe points, columns); tune_axis holds the per-column
    tune values (GHz, flux, or dB depending on tune_label; a single zero
    for plain spectra).
    """

    kind: str
    probe_axis_ghz: np.ndarray
    tune_axis: np.ndarray
    tune_label: str
    r: np.ndarray
    dips: tuple
    manifest: dict
    splitting_vs_power: np.ndarray | None = None

    def __post_init__(self) -> None:
        if self.r.shape != (self.probe_axis_ghz.size, self.tune_axis.size):
            raise ValueError(
                f"grid shape {self.r.shape} does not match axes "
                f"({self.probe_axis_ghz.size}, {self.tune_axis.size})"
            )
        if len(self.dips) != self.tune_axis.size:
            raise ValueError("one dip report list per column is required")

    @property
    def abs_r(self) -> np.ndarray:
        return np.abs(self.r)


class _ColumnEngine:
    """Generator assembly for one column, cached in its probe-independent parts.

    The full generator at probe frequency omega_p splits into a static part
    plus omega_p times the detuning response plus cos(k_p x_n) times each
    atom's drive response; only three axpy updates are needed per point.
    """

    def __init__(
        self,
        point: OperatingPoint,
        coupl: CouplingMatrices,
        v0: float,
        tol: float,
        reference: int | None,
    ) -> None:
        n_atoms = point.n_atoms
        self.point = point
        self.tol = tol
        self.n_atoms = n_atoms
        dim2 = (2**n_atoms) ** 2
        scale = RAD_S_TO_RAD_NS

        sm = [embed(SIGMA_MINUS, i, n_atoms) for i in range(n_atoms)]
        sp = [embed(SIGMA_PLUS, i, n_atoms) for i in range(n_atoms)]

        static = np.zeros((dim2, dim2), dtype=complex)
        detune = np.zeros((dim2, dim2), dtype=complex)
        drives = []
        gp = coupl.gamma_plus * scale
        gm = coupl.gamma_minus * scale
        dp = coupl.delta_plus * scale
        dm = coupl.delta_minus * scale

        for n in range(n_atoms):
            spec = point.specs[n]
            proj = sp[n] @ sm[n]
            d_n = 1j * (_lmul(proj) - _rmul(proj))
            detune += d_n
            static -= (point.omega10[n] + coupl.lamb_shifts[n]) * scale * d_n

            probe_stub = ProbeSpec(omega_p=1.0, v0=v0)
            amp = _transmon.rabi_frequency(
                spec, probe_stub, point.fluxes[n], point.wg
            ) * scale
            sx = sp[n] + sm[n]
            drives.append((spec.x, amp * 1j * (_lmul(sx) - _rmul(sx))))

            gphi = spec.gamma_phi * scale
            if gphi != 0.0:
                static += gphi * (
                    2.0 * _sandwich(proj, proj) - _lmul(proj) - _rmul(proj)
                )
            for m in range(n_atoms):
                op = sp[n] @ sm[m]
                if m != n:
                    static += -1j * (dp[n, m] - 1j * gm[n, m]) * (
                        _lmul(op) - _rmul(op)
                    )
                diss = gp[n, m] + 1j * dm[n, m]
                if diss != 0.0:
                    static += diss * (
                        2.0 * _sandwich(sm[m], sp[n]) - _lmul(op) - _rmul(op)
                    )

        self._static = static
        self._detune = detune
        self._drives = drives
        self._v = point.wg.v

        ref = n_atoms - 1 if reference is None else reference
        probe_stub = ProbeSpec(omega_p=1.0, v0=v0)
        omega_ref = _transmon.rabi_frequency(
            point.specs[ref], probe_stub, point.fluxes[ref], point.wg
        )
        if omega_ref == 0.0:
            raise ZeroDriveError(
                "reflection is undefined with zero drive on the reference atom"
            )
        self._positions = np.array([s.x for s in point.specs])
        self._sm_ops = sm
        coeffs = []
        for m in range(n_atoms):
            alpha_mm = alpha(m, m, point)
            if alpha_mm == 0.0:
                coeffs.append(0.0j)  # decoupled atom, scatters nothing
                continue
            coeffs.append(
                2j
                * (alpha(ref, m, point) / alpha_mm)
                * _transmon.bare_decay_rate(point.specs[m], point.wg, point.fluxes[m])
                / omega_ref
            )
        self._coeff = np.array(coeffs)

    def generator(self, omega_p: float) -> Superoperator:
        mat = self._static + (omega_p * RAD_S_TO_RAD_NS) * self._detune
        k_p = omega_p / self._v
        for x, drive in self._drives:
            mat = mat + np.cos(k_p * x) * drive
        return Superoperator(matrix=mat, n_atoms=self.n_atoms)

    def reflect(self, omega_p: float) -> complex:
        rho = steady_state(self.generator(omega_p))
        k_p = omega_p / self._v
        total = 1.0 + 0.0j
        for m in range(self.n_atoms):
            coherence = np.trace(rho @ self._sm_ops[m])
            total += self._coeff[m] * np.cos(k_p * self._positions[m]) * coherence
        return complex(total)


@dataclass(frozen=True)
class _ColumnTask:
    index: int
    tune_value: float
    tune_label: str
    specs: tuple[TransmonSpec, ...]
    fluxes: tuple[float, ...]
    wg: WaveguideSpec
    probe_ghz: np.ndarray
    v0: float
    tol: float
    prominence: float
    reference: int | None
    regularize: bool = False


def _solve_column(task: _ColumnTask) -> tuple[int, np.ndarray, list[DipReport]]:
    specs = list(task.specs)
    fluxes = list(task.fluxes)
    reference = task.reference
    if any(s.beta == 0.0 for s in specs):
        # a beta = 0 atom neither decays, exchanges, drives, nor scatters,
        # but its frozen populations would make the steady state degenerate;
        # it drops out of the register without changing r
        if reference is not None:
            if specs[reference].beta == 0.0:
                raise ZeroDriveError(
                    f"reference atom {specs[reference].label} has beta = 0"
                )
            reference = sum(1 for s in specs[:reference] if s.beta > 0.0)
        keep = [i for i, s in enumerate(specs) if s.beta > 0.0]
        if not keep:
            raise ZeroDriveError("every atom in the register has beta = 0")
        specs = [specs[i] for i in keep]
        fluxes = [fluxes[i] for i in keep]
    if task.regularize:
        specs = [
            replace(
                s,
                gamma_phi=s.gamma_phi
                + 1e-6 * _transmon.bare_decay_rate(s, task.wg, f),
            )
            for s, f in zip(specs, fluxes)
        ]
    point = OperatingPoint.at_fluxes(tuple(specs), tuple(fluxes), task.wg)
    coupl = symmetrize(point)
    engine = _ColumnEngine(point, coupl, task.v0, task.tol, reference)
    r = np.empty(task.probe_ghz.size, dtype=complex)
    for i, f_ghz in enumerate(task.probe_ghz):
        try:
            r[i] = engine.reflect(f_ghz * TWO_PI * 1e9)
        except SolverError as exc:
            raise type(exc)(
                f"{task.tune_label}={task.tune_value:g}, "
                f"probe={f_ghz:.9g} GHz: {exc}"
            ) from exc
    dips = _dips_from_arrays(task.probe_ghz, np.abs(r), task.prominence)
    return task.index, r, dips


def _worker_count(config: ExperimentConfig, n_columns: int) -> int:
    env = os.environ.get(WORKER_ENV_VAR)
    if env is not None:
        try:
            requested = int(env)
        except ValueError as exc:
            raise ConfigError(
                f"{WORKER_ENV_VAR} must be an integer, got {env!r}"
            ) from exc
        if requested < 1:
            raise ConfigError(f"{WORKER_ENV_VAR} must be a positive integer")
    elif config.workers is not None:
        requested = config.workers
    else:
        requested = os.cpu_count() or 1
    return max(1, min(requested, n_columns))


def _run_columns(
    tasks: list[_ColumnTask], workers: int
) -> tuple[np.ndarray, list[list[DipReport]]]:
    n_probe = tasks[0].probe_ghz.size
    r = np.empty((n_probe, len(tasks)), dtype=complex)
    dips: list[list[DipReport]] = [[] for _ in tasks]
    if workers <= 1 or len(tasks) < _SERIAL_THRESHOLD:
        results = map(_solve_column, tasks)
    else:
        pool = concurrent.futures.ProcessPoolExecutor(max_workers=workers)
        try:
            results = list(
                pool.map(_solve_column, tasks, chunksize=max(1, len(tasks) // (4 * workers)))
            )
        finally:
            pool.shutdown()
    for index, column, reports in results:
        r[:, index] = column
        dips[index] = reports
    return r, dips


def _base_manifest(config: ExperimentConfig, kind: str) -> dict:
    return {
        "kind": kind,
        "package": "mirrorqed",
        "version": __version__,
        "config": copy.deepcopy(config.raw),
        "config_sha256": config.config_sha256(),
        "created_utc": datetime.now(timezone.utc).isoformat(),
    }


def run_spectrum(config: ExperimentConfig) -> SweepResult:
    """One reflection trace over the probe axis at the fixed operating point."""
    start = time.perf_counter()
    task = _ColumnTask(
        index=0,
        tune_value=0.0,
        tune_label="none",
        specs=config.atoms,
        fluxes=config.fluxes_at_operating(),
        wg=config.wg,
        probe_ghz=config.probe_axis_ghz,
        v0=config.probe_v0(),
        tol=config.solver_tol,
        prominence=config.dip_prominence,
        reference=config.reference_atom,
        regularize=config.solver_regularize,
    )
    _idx, r, dips = _solve_column(task)
    manifest = _base_manifest(config, "spectrum")
    manifest["solver_stats"] = {
        "n_solves": int(config.probe_axis_ghz.size),
        "workers": 1,
        "wall_time_s": round(time.perf_counter() - start, 6),
    }
    return SweepResult(
        kind="spectrum",
        probe_axis_ghz=config.probe_axis_ghz.copy(),
        tune_axis=np.zeros(1),
        tune_label="none",
        r=r[:, None],
        dips=(tuple(dips),),
        manifest=manifest,
    )


def run_sweep2d(config: ExperimentConfig) -> SweepResult:
    """Probe frequency versus tuning of one atom (flux or target frequency)."""
    if config.tune_values is None:
        raise ConfigError("sweep2d requires a 'tune_axis' section")
    start = time.perf_counter()
    base_fluxes = list(config.fluxes_at_operating())
    v0 = config.probe_v0()
    tasks = []
    for j, value in enumerate(config.tune_values):
        fluxes = list(base_fluxes)
        spec = config.atoms[config.tune_atom]
        if config.tune_kind == "frequencies_ghz":
            try:
                fluxes[config.tune_atom] = _transmon.flux_for_frequency(spec, value)
            except ValueError as exc:
                raise type(exc)(f"tune value {value:g} GHz: {exc}") from exc
        else:
            fluxes[config.tune_atom] = float(value)
        tasks.append(
            _ColumnTask(
                index=j,
                tune_value=float(value),
                tune_label=config.tune_kind,
                specs=config.atoms,
                fluxes=tuple(fluxes),
                wg=config.wg,
                probe_ghz=config.probe_axis_ghz,
                v0=v0,
                tol=config.solver_tol,
                prominence=config.dip_prominence,
                reference=config.reference_atom,
                regularize=config.solver_regularize,
            )
        )
    workers = _worker_count(config, len(tasks))
    r, dips = _run_columns(tasks, workers)
    manifest = _base_manifest(config, "sweep2d")
    manifest["solver_stats"] = {
        "n_solves": int(config.probe_axis_ghz.size * config.tune_values.size),
        "workers": workers,
        "wall_time_s": round(time.perf_counter() - start, 6),
    }
    return SweepResult(
        kind="sweep2d",
        probe_axis_ghz=config.probe_axis_ghz.copy(),
        tune_axis=np.asarray(config.tune_values, dtype=float).copy(),
        tune_label=config.tune_kind,
        r=r,
        dips=tuple(tuple(d) for d in dips),
        manifest=manifest,
    )


def run_power_sweep(config: ExperimentConfig) -> SweepResult:
    """Probe frequency versus probe power in dB relative to the reference."""
    if config.power_db is None:
        raise ConfigError("power sweep requires a 'power_axis' section")
    start = time.perf_counter()
    fluxes = config.fluxes_at_operating()
    tasks = []
    for j, db in enumerate(config.power_db):
        power = config.power_reference_w * 10.0 ** (db / 10.0)
        tasks.append(
            _ColumnTask(
                index=j,
                tune_value=float(db),
                tune_label="power_db",
                specs=config.atoms,
                fluxes=fluxes,
                wg=config.wg,
                probe_ghz=config.probe_axis_ghz,
                v0=power_to_voltage(power, config.wg.z0),
                tol=config.solver_tol,
                prominence=config.dip_prominence,
                reference=config.reference_atom,
                regularize=config.solver_regularize,
            )
        )
    workers = _worker_count(config, len(tasks))
    r, dips = _run_columns(tasks, workers)

    splitting = np.full(len(tasks), np.nan)
    for j, reports in enumerate(dips):
        if len(reports) >= 2:
            ranked = sorted(reports, key=lambda d: (-d.depth, d.center_ghz))
            splitting[j] = abs(ranked[0].center_ghz - ranked[1].center_ghz)

    manifest = _base_manifest(config, "power_sweep")
    manifest["solver_stats"] = {
        "n_solves": int(config.probe_axis_ghz.size * config.power_db.size),
        "workers": workers,
        "wall_time_s": round(time.perf_counter() - start, 6),
    }
    return SweepResult(
        kind="power_sweep",
        probe_axis_ghz=config.probe_axis_ghz.copy(),
        tune_axis=np.asarray(config.power_db, dtype=float).copy(),
        tune_label="power_db",
        r=r,
        dips=tuple(tuple(d) for d in dips),
        manifest=manifest,
        splitting_vs_power=splitting,
    )


def saturation_knee(
    result: SweepResult, *, rel_tol: float = 0.025
) -> tuple[float, float]:
    """Locate the saturation knee of a power sweep.

    The weak-power plateau is the median splitting of the three lowest
    powers that resolve two dips; the knee is the highest power, scanning
    upward without interruption, whose splitting stays within rel_tol of
    the plateau. Returns (knee power in dB, plateau splitting in rad/s).
    """
    if result.splitting_vs_power is None:
        raise ValueError("saturation_knee requires a power-sweep result")
    sep = result.splitting_vs_power
    valid = np.where(np.isfinite(sep))[0]
    if valid.size == 0:
        raise SolverError("no power resolved two dips; cannot locate a knee")
    plateau = float(np.median(sep[valid[: min(3, valid.size)]]))
    knee = None
    for j in range(result.tune_axis.size):
        if not np.isfinite(sep[j]) or abs(sep[j] - plateau) > rel_tol * plateau:
            break
        knee = j
    if knee is None:
        raise SolverError("splitting departs from the plateau at the lowest power")
    return float(result.tune_axis[knee]), plateau * TWO_PI * 1e9


def calibrate_velocity(
    nodes: list[tuple[float, int]], length_mm: float
) -> tuple[float, float]:
    """Phase velocity from resonance-null frequencies of a line of length L.

    Each node is (frequency in GHz, odd quarter-wave order); L = order/4
    wavelengths gives v = 4 f L / order per node. Returns the mean v in m/s
    and the maximum relative spread; spreads above 2% raise an error.
    """
    if not nodes:
        raise ValueError("at least one node is required")
    if length_mm <= 0:
        raise ValueError(f"line length must be positive, got {length_mm}")
    velocities = []
    for freq_ghz, order in nodes:
        if order != int(order) or int(order) % 2 == 0 or order < 1:
            raise ValueError(
                f"quarter-wave order must be an odd positive integer, got {order}"
            )
        if freq_ghz <= 0:
            raise ValueError(f"node frequency must be positive, got {freq_ghz}")
        velocities.append(4.0 * freq_ghz * 1e9 * length_mm * 1e-3 / int(order))
    mean = float(np.mean(velocities))
    spread = float(np.max(np.abs(np.array(velocities) - mean)) / mean)
    if spread > 0.02:
        raise VelocityInconsistencyError(
            f"node velocities spread by {spread:.2%}, above the 2% limit"
        )
    return mean, spread


def _format_row(values) -> str:
    return "\t".join(f"{v:.17g}" for v in values)


def emit(
    result: SweepResult,
    *,
    directory: str | os.PathLike | None = None,
    stem: str | None = None,
    fmt: str = "text",
) -> list[Path]:
    """Write the result as delimited text plus a JSON manifest.

    Data files are byte-stable for identical configs; the manifest carries
    timestamps and timing and is therefore excluded from that guarantee.
    """
    if fmt != "text":
        raise ValueError(f"unsupported output format {fmt!r}")
    out_cfg = result.manifest.get("config", {}).get("output", {})
    directory = Path(directory if directory is not None else out_cfg.get("directory", "."))
    stem = stem if stem is not None else out_cfg.get("stem", "sweep")

    paths = []
    try:
        directory.mkdir(parents=True, exist_ok=True)
        if result.kind == "spectrum":
            trace_path = directory / f"{stem}_trace.txt"
            with open(trace_path, "w", encoding="utf-8", newline="\n") as fh:
                fh.write("# freq_GHz\tre_r\tim_r\tabs_r\tphase_rad\n")
                for f_ghz, r in zip(result.probe_axis_ghz, result.r[:, 0]):
                    fh.write(
                        _format_row(
                            (f_ghz, r.real, r.imag, abs(r), np.angle(r))
                        )
                        + "\n"
                    )
            paths.append(trace_path)
        else:
            map_path = directory / f"{stem}_map.txt"
            with open(map_path, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(f"# {result.tune_label}\tfreq_GHz\tabs_r\n")
                for j, tune in enumerate(result.tune_axis):
                    for i, f_ghz in enumerate(result.probe_axis_ghz):
                        fh.write(
                            _format_row((tune, f_ghz, abs(result.r[i, j]))) + "\n"
                        )
            paths.append(map_path)

        dips_path = directory / f"{stem}_dips.txt"
        with open(dips_path, "w", encoding="utf-8", newline="\n") as fh:
            if result.kind == "spectrum":
                fh.write("# center_GHz\tdepth\tfwhm_MHz\n")
                for dip in result.dips[0]:
                    fh.write(
                        _format_row((dip.center_ghz, dip.depth, dip.fwhm_mhz))
                        + "\n"
                    )
            else:
                fh.write(f"# {result.tune_label}\tcenter_GHz\tdepth\tfwhm_MHz\n")
                for j, tune in enumerate(result.tune_axis):
                    for dip in result.dips[j]:
                        fh.write(
                            _format_row(
                                (tune, dip.center_ghz, dip.depth, dip.fwhm_mhz)
                            )
                            + "\n"
                        )
        paths.append(dips_path)

        if result.splitting_vs_power is not None:
            split_path = directory / f"{stem}_splitting.txt"
            with open(split_path, "w", encoding="utf-8", newline="\n") as fh:
                fh.write("# power_db\tsplitting_MHz\n")
                for db, sep_ghz in zip(result.tune_axis, result.splitting_vs_power):
                    fh.write(_format_row((db, sep_ghz * 1e3)) + "\n")
            paths.append(split_path)

        manifest_path = directory / f"{stem}_manifest.json"
        with open(manifest_path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(result.manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")
        paths.append(manifest_path)
    except OSError as exc:
        raise OSError(f"writing output under {directory}: {exc}") from exc
    return paths
