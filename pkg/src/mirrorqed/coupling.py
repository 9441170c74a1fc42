"""Mirror-modified individual and collective rates.

The semi-infinite line with its mirror at x = 0 correlates the atoms through
the cos(kx) mode functions. Each ordered pair (n, m) gets a relaxation-type
rate gamma_nm and an exchange-type rate delta_nm, evaluated at the frequency
and wavenumber of atom m. Symmetrized combinations of these feed the master
equation; the diagonal of delta is the single-atom mirror shift.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import transmon
from .transmon import ProbeSpec, TransmonSpec, WaveguideSpec
from .units import E_CHARGE, PLANCK_H, ghz_to_rad_s


@dataclass(frozen=True)
class OperatingPoint:
    """Atoms pinned at specific fluxes in front of one waveguide.

    Derived fields: omega10[n] is the transition angular frequency in rad/s
    and k[n] = omega10[n] / v the wavenumber in 1/m, computed once at
    construction.
    """

    specs: tuple[TransmonSpec, ...]
    fluxes: tuple[float, ...]
    wg: WaveguideSpec
    omega10: tuple[float, ...] = field(init=False)
    k: tuple[float, ...] = field(init=False)

    def __post_init__(self) -> None:
        if len(self.specs) != len(self.fluxes):
            raise ValueError(
                f"{len(self.specs)} specs but {len(self.fluxes)} fluxes"
            )
        if not self.specs:
            raise ValueError("at least one atom required")
        omegas = tuple(
            ghz_to_rad_s(transmon.transition_frequency(s, f))
            for s, f in zip(self.specs, self.fluxes)
        )
        object.__setattr__(self, "omega10", omegas)
        object.__setattr__(self, "k", tuple(w / self.wg.v for w in omegas))

    @property
    def n_atoms(self) -> int:
        return len(self.specs)

    @classmethod
    def at_fluxes(
        cls,
        specs: list[TransmonSpec] | tuple[TransmonSpec, ...],
        fluxes: list[float] | tuple[float, ...],
        wg: WaveguideSpec,
    ) -> "OperatingPoint":
        return cls(tuple(specs), tuple(fluxes), wg)

    @classmethod
    def at_frequencies(
        cls,
        specs: list[TransmonSpec] | tuple[TransmonSpec, ...],
        targets_ghz: list[float] | tuple[float, ...],
        wg: WaveguideSpec,
    ) -> "OperatingPoint":
        """Convenience constructor: tune each atom to a target frequency."""
        fluxes = tuple(
            transmon.flux_for_frequency(s, t) for s, t in zip(specs, targets_ghz)
        )
        return cls(tuple(specs), fluxes, wg)


@dataclass(frozen=True)
class CouplingMatrices:
    """N x N rate collections at one operating point, all in rad/s.

    gamma_plus/delta_plus are symmetric and gamma_minus/delta_minus
    antisymmetric by construction; the dissipator matrix
    M = gamma_plus + 1j * delta_minus is Hermitian.
    """

    gamma: np.ndarray
    delta: np.ndarray
    gamma_plus: np.ndarray
    gamma_minus: np.ndarray
    delta_plus: np.ndarray
    delta_minus: np.ndarray
    lamb_shifts: np.ndarray

    @property
    def dissipator_matrix(self) -> np.ndarray:
        return self.gamma_plus + 1j * self.delta_minus


def alpha(n: int, m: int, point: OperatingPoint) -> float:
    """Dimensionless interaction strength alpha_nm.

    alpha_nm = (2 beta_n beta_m e^2 Z0 / (h pi)) *
               (EJn/8ECn)^(1/4) (EJm/8ECm)^(1/4)

    Symmetric in (n, m), with alpha_nm^2 = alpha_nn * alpha_mm exactly.
    """
    sn, sm = point.specs[n], point.specs[m]
    qn = transmon._quartic_factor(sn, point.fluxes[n])
    qm = transmon._quartic_factor(sm, point.fluxes[m])
    return (
        2.0 * sn.beta * sm.beta * E_CHARGE**2 * point.wg.z0 / (PLANCK_H * math.pi)
    ) * qn * qm


def gamma_nm(n: int, m: int, point: OperatingPoint) -> float:
    """Pairwise relaxation rate (rad/s), evaluated at atom m's frequency.

    (pi alpha_nm omega_m / 2) * {cos(k_m [x_n + x_m]) + cos(k_m |x_n - x_m|)},
    which factors as pi alpha_nm omega_m cos(k_m x_n) cos(k_m x_m).
    """
    xn, xm = point.specs[n].x, point.specs[m].x
    km, wm = point.k[m], point.omega10[m]
    pref = math.pi * alpha(n, m, point) * wm / 2.0
    return pref * (math.cos(km * (xn + xm)) + math.cos(km * abs(xn - xm)))


def delta_nm(n: int, m: int, point: OperatingPoint) -> float:
    """Pairwise exchange rate (rad/s), evaluated at atom m's frequency.

    (pi alpha_nm omega_m / 2) * {sin(k_m [x_n + x_m]) + sin(k_m |x_n - x_m|)}.
    The diagonal delta_nn = (pi alpha_nn omega_n / 2) sin(2 k_n x_n) is the
    single-atom mirror shift.
    """
    xn, xm = point.specs[n].x, point.specs[m].x
    km, wm = point.k[m], point.omega10[m]
    pref = math.pi * alpha(n, m, point) * wm / 2.0
    return pref * (math.sin(km * (xn + xm)) + math.sin(km * abs(xn - xm)))


def symmetrize(point: OperatingPoint) -> CouplingMatrices:
    """Full rate matrices and their symmetric/antisymmetric combinations."""
    n = point.n_atoms
    gamma = np.empty((n, n))
    delta = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            gamma[i, j] = gamma_nm(i, j, point)
            delta[i, j] = delta_nm(i, j, point)
    return CouplingMatrices(
        gamma=gamma,
        delta=delta,
        gamma_plus=(gamma + gamma.T) / 2.0,
        gamma_minus=(gamma - gamma.T) / 2.0,
        delta_plus=(delta + delta.T) / 2.0,
        delta_minus=(delta - delta.T) / 2.0,
        lamb_shifts=np.diag(delta).copy(),
    )


def collective_lamb_shift(point: OperatingPoint, n: int, m: int) -> float:
    """Closed-form two-atom frequency splitting 2*Delta (rad/s, signed).

    Gamma0 * {sin[w (x_n + x_m) / v] + sin[w |x_n - x_m| / v]}, where Gamma0
    is the geometric mean of the two bare open-line rates at the common
    frequency w. Meant for atoms tuned to one frequency, where it equals
    2 * delta_plus_nm exactly; for detuned atoms w is taken as the arithmetic
    mean of the two transition frequencies. The sign is preserved (it orders
    the symmetric and antisymmetric states); report magnitudes to compare
    with spectra.
    """
    if n == m:
        raise ValueError("collective shift needs two distinct atoms")
    w = 0.5 * (point.omega10[n] + point.omega10[m])
    gamma0 = math.pi * alpha(n, m, point) * w
    xn, xm = point.specs[n].x, point.specs[m].x
    kw = w / point.wg.v
    return gamma0 * (math.sin(kw * (xn + xm)) + math.sin(kw * abs(xn - xm)))


def probe_detuning(n: int, point: OperatingPoint, probe: ProbeSpec) -> float:
    """delta_n = omega_p - omega10_n - delta_nn (rad/s), with the single-atom
    mirror shift absorbed into the detuning."""
    return probe.omega_p - point.omega10[n] - delta_nm(n, n, point)
