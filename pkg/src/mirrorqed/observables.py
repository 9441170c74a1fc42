"""Reflection coefficient, dip extraction, and single-atom fitting.

The probe reflects off the mirror with unit magnitude; atoms add their
coherently scattered field on top. The complex reflection amplitude is

    r = 1 + 2i sum_m eta_Nm (gamma_m / Omega_p^N) cos(k_p x_m) <sigma-_m>

where N labels a designated reference atom, eta_Nm = alpha_Nm / alpha_mm,
gamma_m is the bare open-line decay rate at atom m's operating frequency,
and Omega_p^N is the reference atom's Rabi frequency. The computed value is
invariant under the choice of reference atom.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.optimize

from . import coupling as _coupling
from . import transmon as _transmon
from .coupling import OperatingPoint
from .errors import FitConvergenceError, InsufficientDipsError, ZeroDriveError
from .liouvillian import SIGMA_MINUS, embed
from .transmon import ProbeSpec
from .units import TWO_PI


@dataclass(frozen=True)
class ReflectionPoint:
    """One probe frequency (rad/s) and its complex reflection amplitude."""

    omega_p: float
    r: complex

    @property
    def magnitude(self) -> float:
        return abs(self.r)

    @property
    def phase(self) -> float:
        return math.atan2(self.r.imag, self.r.real)


@dataclass(frozen=True)
class DipReport:
    """A detected resonance dip: center (GHz), depth (1 - |r|), FWHM (MHz)."""

    center_ghz: float
    depth: float
    fwhm_mhz: float

    def __post_init__(self) -> None:
        if not self.fwhm_mhz > 0:
            raise ValueError(f"FWHM must be positive, got {self.fwhm_mhz}")
        if not 0.0 <= self.depth <= 1.0:
            raise ValueError(f"dip depth must lie in [0, 1], got {self.depth}")


def total_decoherence(gamma_eff: float, gamma_phi: float) -> float:
    """Coherence decay rate gamma = Gamma_eff/2 + gamma_phi (same units in/out)."""
    return 0.5 * gamma_eff + gamma_phi


def analytic_single_atom_reflection(
    gamma_eff: float, gamma_phi: float, delta: float, omega: float
) -> complex:
    """Closed-form reflection of one driven two-level atom, all rates rad/s.

    Steady state of the optical Bloch equations with radiative rate
    gamma_eff (the mirror-dressed value, up to twice the open-line rate),
    pure dephasing gamma_phi, probe detuning delta and Rabi frequency omega:

        <sigma-> = i omega / ((gamma_t - i delta) (1 + 2 S))
        S = omega^2 gamma_t / ((gamma_eff / 2) (gamma_t^2 + delta^2))
        r = 1 - gamma_eff / ((gamma_t - i delta) (1 + 2 S))

    with gamma_t = gamma_eff/2 + gamma_phi. The saturation parameter S sends
    r back to 1 at strong drive. omega = 0 gives the linear-response limit.
    """
    if gamma_eff < 0 or gamma_phi < 0:
        raise ValueError("decay and dephasing rates must be nonnegative")
    if gamma_eff == 0.0:
        return 1.0 + 0.0j
    gamma_t = total_decoherence(gamma_eff, gamma_phi)
    sat = omega * omega * gamma_t / (
        0.5 * gamma_eff * (gamma_t * gamma_t + delta * delta)
    )
    return 1.0 - gamma_eff / ((gamma_t - 1j * delta) * (1.0 + 2.0 * sat))


def reflection(
    point: OperatingPoint,
    probe: ProbeSpec,
    rho_ss: np.ndarray,
    *,
    reference: int | None = None,
) -> complex:
    """Complex reflection amplitude from a steady state at this probe.

    The reference atom (default: last listed) fixes the drive normalization;
    the result does not depend on the choice.
    """
    n_atoms = point.n_atoms
    ref = n_atoms - 1 if reference is None else reference
    if not 0 <= ref < n_atoms:
        raise IndexError(f"reference atom {ref} outside register of {n_atoms}")

    omega_ref = _transmon.rabi_frequency(
        point.specs[ref], probe, point.fluxes[ref], point.wg
    )
    if omega_ref == 0.0:
        raise ZeroDriveError(
            "reflection is undefined with zero drive on the reference atom"
        )

    k_p = probe.omega_p / point.wg.v
    alpha_ref = [_coupling.alpha(ref, m, point) for m in range(n_atoms)]
    total = 0.0 + 0.0j
    for m in range(n_atoms):
        alpha_mm = _coupling.alpha(m, m, point)
        if alpha_mm == 0.0:
            continue  # decoupled atom, scatters nothing
        eta = alpha_ref[m] / alpha_mm
        gamma_m = _transmon.bare_decay_rate(
            point.specs[m], point.wg, point.fluxes[m]
        )
        coherence = np.trace(rho_ss @ embed(SIGMA_MINUS, m, n_atoms))
        total += eta * (gamma_m / omega_ref) * np.cos(k_p * point.specs[m].x) * coherence
    return 1.0 + 2.0j * complex(total)


def _dips_from_arrays(
    freq_ghz: np.ndarray, abs_r: np.ndarray, prominence: float
) -> list[DipReport]:
    """Dip detection core shared by find_dips and the sweep pipeline."""
    freq_ghz = np.asarray(freq_ghz, dtype=float)
    abs_r = np.asarray(abs_r, dtype=float)
    if freq_ghz.size != abs_r.size:
        raise ValueError("frequency and reflection arrays differ in length")
    if freq_ghz.size < 5:
        raise ValueError(f"need at least 5 points, got {freq_ghz.size}")
    if np.any(np.diff(freq_ghz) <= 0):
        raise ValueError("trace must be sorted by strictly increasing frequency")

    depth = 1.0 - abs_r
    n = freq_ghz.size
    candidates = [
        i
        for i in range(1, n - 1)
        if depth[i] > depth[i - 1]
        and depth[i] >= depth[i + 1]
        and depth[i] > prominence
    ]
    if not candidates:
        return []

    reports: list[tuple[float, DipReport]] = []
    for j, i in enumerate(candidates):
        f0, f1, f2 = freq_ghz[i - 1], freq_ghz[i], freq_ghz[i + 1]
        y0, y1, y2 = depth[i - 1], depth[i], depth[i + 1]
        det = (f0 - f1) * (f0 - f2) * (f1 - f2)
        a = (f2 * (y1 - y0) + f1 * (y0 - y2) + f0 * (y2 - y1)) / det
        b = (f2 * f2 * (y0 - y1) + f1 * f1 * (y2 - y0) + f0 * f0 * (y1 - y2)) / det
        if a < 0.0:
            center = min(max(-b / (2.0 * a), f0), f2)
            c = y1 - a * f1 * f1 - b * f1
            peak = a * center * center + b * center + c
        else:
            center, peak = f1, y1
        peak = min(max(peak, y1), 1.0)

        half = 0.5 * peak
        lo = candidates[j - 1] if j > 0 else 0
        hi = candidates[j + 1] if j + 1 < len(candidates) else n - 1

        f_left = None
        for k in range(i - 1, lo - 1, -1):
            if depth[k] < half:
                t = (half - depth[k]) / (depth[k + 1] - depth[k])
                f_left = freq_ghz[k] + t * (freq_ghz[k + 1] - freq_ghz[k])
                break
        if f_left is None:
            # overlapping dips: clamp at the saddle between them
            k = lo + int(np.argmin(depth[lo:i]))
            f_left = freq_ghz[k]

        f_right = None
        for k in range(i + 1, hi + 1):
            if depth[k] < half:
                t = (half - depth[k]) / (depth[k - 1] - depth[k])
                f_right = freq_ghz[k] - t * (freq_ghz[k] - freq_ghz[k - 1])
                break
        if f_right is None:
            k = i + 1 + int(np.argmin(depth[i + 1 : hi + 1]))
            f_right = freq_ghz[k]

        fwhm_mhz = (f_right - f_left) * 1e3
        reports.append((center, DipReport(center, peak, fwhm_mhz)))

    reports.sort(key=lambda item: item[0])
    return [rep for _c, rep in reports]


def find_dips(
    trace: Sequence[ReflectionPoint], *, prominence: float = 0.02
) -> list[DipReport]:
    """Locate resonance dips in a reflection trace.

    A dip is a local minimum of |r| whose depth 1 - |r| exceeds the
    prominence threshold. Centers are refined by parabolic interpolation,
    widths by linear interpolation of the half-depth crossings; when two
    dips overlap the half-depth crossing is clamped at the saddle.
    """
    freq_ghz = np.array([p.omega_p for p in trace]) / (TWO_PI * 1e9)
    abs_r = np.array([abs(p.r) for p in trace])
    return _dips_from_arrays(freq_ghz, abs_r, prominence)


def splitting_from_dips(
    tune_values: Sequence[float], dip_lists: Sequence[Sequence[DipReport]]
) -> tuple[float, float]:
    """Minimum two-dip separation over a sweep.

    For every tune value with at least two detected dips, the separation of
    the two deepest dips (ties broken toward lower frequency) is computed;
    the smallest separation and the tune value where it occurs are returned.
    The separation is in rad/s.
    """
    if len(tune_values) != len(dip_lists):
        raise ValueError("tune axis and dip table differ in length")
    best: tuple[float, float] | None = None
    for tune, dips in zip(tune_values, dip_lists):
        if len(dips) < 2:
            continue
        ranked = sorted(dips, key=lambda d: (-d.depth, d.center_ghz))
        sep = abs(ranked[0].center_ghz - ranked[1].center_ghz)
        if best is None or sep < best[0]:
            best = (sep, float(tune))
    if best is None:
        raise InsufficientDipsError(
            "no tune value produced two detected dips; cannot extract a splitting"
        )
    return best[0] * TWO_PI * 1e9, best[1]


def extract_splitting(
    result, *, prominence: float | None = None
) -> tuple[float, float]:
    """Anti-crossing splitting from a 2D sweep result.

    Returns (splitting in rad/s at closest approach, tune-axis value at
    closest approach). With prominence given, dips are re-detected from the
    stored reflection grid instead of using the per-column reports.
    """
    if prominence is None:
        dip_lists = result.dips
    else:
        dip_lists = [
            _dips_from_arrays(
                np.asarray(result.probe_axis_ghz), np.abs(result.r[:, j]), prominence
            )
            for j in range(len(result.tune_axis))
        ]
    return splitting_from_dips(result.tune_axis, dip_lists)


def _fit_residual(params, omega, data, magnitude_only):
    w10, gamma_eff, gamma_phi = params
    gamma_t = 0.5 * gamma_eff + gamma_phi
    delta = omega - w10
    model = 1.0 - gamma_eff / (gamma_t - 1j * delta)
    if magnitude_only:
        return np.abs(model) - data
    return np.concatenate([(model - data).real, (model - data).imag])


def fit_single_atom(
    trace: Sequence[ReflectionPoint],
    *,
    mode: str = "auto",
    prominence: float = 0.02,
    max_nfev: int = 2000,
) -> tuple[float, float, float]:
    """Fit the weak-probe single-atom model to a trace.

    Returns (omega10, Gamma_eff, gamma_phi) in rad/s. mode is "auto",
    "magnitude" or "complex"; auto fits the complex amplitude whenever the
    trace carries phase information and the magnitude otherwise.

    Magnitude data cannot distinguish (Gamma_eff, gamma_phi) from
    (2 gamma_phi, Gamma_eff / 2): both produce identical |r|. In that
    degenerate case the radiatively dominated branch Gamma_eff >= 2 gamma_phi
    is returned; fit the complex trace to resolve the ambiguity.
    """
    if mode not in ("auto", "magnitude", "complex"):
        raise ValueError(f"unknown fit mode {mode!r}")
    omega = np.array([p.omega_p for p in trace], dtype=float)
    r = np.array([p.r for p in trace], dtype=complex)
    has_phase = np.max(np.abs(r.imag)) > 1e-9 * max(np.max(np.abs(r)), 1e-300)
    if mode == "complex" and not has_phase:
        raise ValueError("complex fit requested but the trace carries no phase")
    magnitude_only = mode == "magnitude" or (mode == "auto" and not has_phase)

    dips = _dips_from_arrays(omega / (TWO_PI * 1e9), np.abs(r), prominence)
    if not dips:
        raise ValueError("trace contains no dip above the prominence threshold")
    dip = max(dips, key=lambda d: d.depth)
    w0 = dip.center_ghz * TWO_PI * 1e9
    gamma_t0 = math.pi * dip.fwhm_mhz * 1e6
    d0 = min(max(dip.depth, 1e-6), 1.0)

    data = np.abs(r) if magnitude_only else r
    span = omega[-1] - omega[0]
    bounds = ([omega[0] - span, 0.0, 0.0], [omega[-1] + span, np.inf, np.inf])
    seeds = [
        (w0, gamma_t0 * (2.0 - d0), gamma_t0 * d0 / 2.0),  # deep: Gamma > gamma_t
        (w0, gamma_t0 * d0, gamma_t0 * (1.0 - d0 / 2.0)),  # shallow
    ]

    best = None
    for seed in seeds:
        res = scipy.optimize.least_squares(
            _fit_residual,
            np.array(seed),
            args=(omega, data, magnitude_only),
            bounds=bounds,
            x_scale=np.array([abs(w0), gamma_t0, gamma_t0]),
            max_nfev=max_nfev,
        )
        if not res.success:
            continue
        if best is None or res.cost < best.cost * (1.0 - 1e-9):
            best = res
    if best is None:
        raise FitConvergenceError(
            f"single-atom fit did not converge within {max_nfev} evaluations"
        )
    w10, gamma_eff, gamma_phi = best.x
    # magnitude data cannot separate the branches; report the documented one
    if magnitude_only and gamma_eff < 2.0 * gamma_phi:
        gamma_eff, gamma_phi = 2.0 * gamma_phi, 0.5 * gamma_eff
    return float(w10), float(gamma_eff), float(gamma_phi)
