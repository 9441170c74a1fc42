"""Per-atom circuit parameters and elementary single-atom quantities.

A transmon is described by its charging energy EC, maximum Josephson energy
EJmax (both as frequencies, E/h in GHz), the capacitance ratio beta of the
coupling capacitor to the total shunt, its distance x from the mirror, and a
pure dephasing rate. Everything else (transition frequency, coupling to the
line, bare decay rate, probe Rabi frequency) derives from these.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import TransmonRegimeError, UnreachableFrequencyError
from .units import E_CHARGE, HBAR, PLANCK_H, ghz_to_rad_s

# EJ/EC below this and the quartic-well expansion behind the transition
# frequency formula no longer applies.
REGIME_MIN_EJ_OVER_EC = 1.0


@dataclass(frozen=True)
class TransmonSpec:
    """Circuit parameters of one artificial atom.

    Parameters
    ----------
    label : str
        Identifier used in reports and error messages.
    ec : float
        Charging energy EC/h in GHz, > 0.
    ejmax : float
        Maximum Josephson energy EJmax/h in GHz, > 0.
    beta : float
        Coupling capacitance ratio Cc/Csigma, in [0, 1].
    x : float
        Distance from the mirror in meters, >= 0.
    gamma_phi : float
        Pure dephasing rate in rad/s, >= 0.
    """

    label: str
    ec: float
    ejmax: float
    beta: float
    x: float
    gamma_phi: float = 0.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.beta <= 1.0:
            raise ValueError(f"{self.label}: beta must be in [0, 1], got {self.beta}")
        if self.ec <= 0.0:
            raise ValueError(f"{self.label}: EC must be positive, got {self.ec}")
        if self.ejmax <= 0.0:
            raise ValueError(f"{self.label}: EJmax must be positive, got {self.ejmax}")
        if self.x < 0.0:
            raise ValueError(f"{self.label}: x must be nonnegative, got {self.x}")
        if self.gamma_phi < 0.0:
            raise ValueError(
                f"{self.label}: gamma_phi must be nonnegative, got {self.gamma_phi}"
            )


@dataclass(frozen=True)
class WaveguideSpec:
    """Transmission line: impedance z0 (ohm) and propagation velocity v (m/s).

    The mirror sits at x = 0 as an open boundary, so the mode functions are
    cos(kx) and every position-dependent rate inherits that cosine.
    """

    z0: float = 50.0
    v: float = 8.948e7

    def __post_init__(self) -> None:
        if self.z0 <= 0.0:
            raise ValueError(f"z0 must be positive, got {self.z0}")
        if self.v <= 0.0:
            raise ValueError(f"v must be positive, got {self.v}")


@dataclass(frozen=True)
class ProbeSpec:
    """Monochromatic probe tone.

    Exactly one of v0 (input voltage amplitude, volts) or power (input power,
    watts) is authoritative; the other is derived through the traveling-wave
    relation P = V0^2 / (2 Z0) when an impedance is supplied.
    """

    omega_p: float
    v0: float | None = None
    power: float | None = None

    def __post_init__(self) -> None:
        if self.omega_p <= 0.0:
            raise ValueError(f"probe frequency must be positive, got {self.omega_p}")
        if (self.v0 is None) == (self.power is None):
            raise ValueError("exactly one of v0 or power must be given")
        if self.v0 is not None and self.v0 < 0.0:
            raise ValueError(f"v0 must be nonnegative, got {self.v0}")
        if self.power is not None and self.power < 0.0:
            raise ValueError(f"power must be nonnegative, got {self.power}")

    def voltage(self, z0: float | None = None) -> float:
        """Input voltage amplitude in volts; needs z0 when power-specified."""
        if self.v0 is not None:
            return self.v0
        if z0 is None:
            raise ValueError("z0 required to derive voltage from power")
        return power_to_voltage(self.power, z0)


def josephson_energy(spec: TransmonSpec, flux: float) -> float:
    """Flux-tuned Josephson energy EJ(flux)/h in GHz.

    flux is the applied flux in units of the flux quantum. The SQUID
    modulation is EJmax * |cos(pi * flux)|, periodic with period 1 and even.
    """
    return spec.ejmax * abs(math.cos(math.pi * flux))


def transition_frequency(spec: TransmonSpec, flux: float) -> float:
    """Transition frequency omega10/2pi in GHz: sqrt(8 EJ EC) - EC."""
    ej = josephson_energy(spec, flux)
    if ej < REGIME_MIN_EJ_OVER_EC * spec.ec:
        raise TransmonRegimeError(
            f"{spec.label}: EJ/EC = {ej / spec.ec:.3g} at flux {flux} is below "
            f"{REGIME_MIN_EJ_OVER_EC}; the transition formula does not apply"
        )
    return math.sqrt(8.0 * ej * spec.ec) - spec.ec


def flux_for_frequency(spec: TransmonSpec, target: float) -> float:
    """Smallest nonnegative flux ratio that tunes the atom to target (GHz).

    Inverts the transition formula in closed form, so the round trip through
    transition_frequency reproduces the target to machine precision (the
    contract only requires 1e-9 relative).
    """
    ej_needed = (target + spec.ec) ** 2 / (8.0 * spec.ec)
    ratio = ej_needed / spec.ejmax
    if ratio > 1.0 + 1e-12:
        raise UnreachableFrequencyError(
            f"{spec.label}: target {target} GHz needs EJ = {ej_needed:.6g} GHz "
            f"above EJmax = {spec.ejmax:.6g} GHz"
        )
    if ej_needed < REGIME_MIN_EJ_OVER_EC * spec.ec:
        raise TransmonRegimeError(
            f"{spec.label}: target {target} GHz lies below the transmon regime"
        )
    return math.acos(min(ratio, 1.0)) / math.pi


def _quartic_factor(spec: TransmonSpec, flux: float) -> float:
    """(EJ / 8 EC)^(1/4), the zero-point spread factor of the dipole matrix
    element."""
    return (josephson_energy(spec, flux) / (8.0 * spec.ec)) ** 0.25


def coupling_strength(
    spec: TransmonSpec, wg: WaveguideSpec, omega: float, flux: float
) -> float:
    """Mode-coupling amplitude g(omega) of the atom to the line.

    g = e * beta * (EJ/8EC)^(1/4) * sqrt(2 Z0 omega / (h pi)), with omega in
    rad/s. Scales as sqrt(omega) and linearly in beta, and satisfies
    gamma_n = pi * g(omega10)^2.
    """
    if omega <= 0.0:
        raise ValueError(f"omega must be positive, got {omega}")
    return (
        E_CHARGE
        * spec.beta
        * _quartic_factor(spec, flux)
        * math.sqrt(2.0 * wg.z0 * omega / (PLANCK_H * math.pi))
    )


def bare_decay_rate(spec: TransmonSpec, wg: WaveguideSpec, flux: float) -> float:
    """Relaxation rate gamma_n (rad/s) into an open, mirrorless line.

    gamma_n = pi * alpha_nn * omega10 with the dimensionless interaction
    alpha_nn = (2 beta^2 e^2 Z0 / (h pi)) * sqrt(EJ / 8 EC). In front of the
    mirror the observable decay of an excited atom at an antinode is twice
    this value.
    """
    omega10 = ghz_to_rad_s(transition_frequency(spec, flux))
    alpha_nn = (
        2.0
        * spec.beta**2
        * E_CHARGE**2
        * wg.z0
        / (PLANCK_H * math.pi)
        * math.sqrt(josephson_energy(spec, flux) / (8.0 * spec.ec))
    )
    return math.pi * alpha_nn * omega10


def rabi_frequency(
    spec: TransmonSpec,
    probe: ProbeSpec,
    flux: float,
    wg: WaveguideSpec | None = None,
) -> float:
    """Probe Rabi amplitude Omega_p (rad/s) for this atom.

    Omega_p = 2 sqrt(2) e beta (EJ/8EC)^(1/4) V0 / hbar, linear in both V0
    and beta. wg is only needed when the probe is power-specified, to convert
    P to V0.
    """
    v0 = probe.voltage(None if wg is None else wg.z0)
    return (
        2.0
        * math.sqrt(2.0)
        * E_CHARGE
        * spec.beta
        * _quartic_factor(spec, flux)
        * v0
        / HBAR
    )


def power_to_voltage(power: float, z0: float) -> float:
    """Traveling-wave amplitude V0 = sqrt(2 Z0 P) for input power P (watts)."""
    if power < 0.0:
        raise ValueError(f"power must be nonnegative, got {power}")
    return math.sqrt(2.0 * z0 * power)


def voltage_to_power(v0: float, z0: float) -> float:
    """Inverse of power_to_voltage: P = V0^2 / (2 Z0)."""
    return v0**2 / (2.0 * z0)
