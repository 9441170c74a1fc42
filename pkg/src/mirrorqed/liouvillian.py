"""Generator of the interaction-picture master equation.

The equation of motion implemented here, term by term for atoms n, m:

    drho/dt =  sum_n  i delta_n [sp_n sm_n, rho]
             + sum_n  i Omega_n cos(k_p x_n) [sx_n, rho]
             - sum_{n != m} i (delta_plus_nm - i gamma_minus_nm) [sp_n sm_m, rho]
             + sum_{n,m} (gamma_plus_nm + i delta_minus_nm)
                         (2 sm_m rho sp_n - sp_n sm_m rho - rho sp_n sm_m)
             + sum_n gamma_phi_n (2 P_n rho P_n - P_n rho - rho P_n)

with P = sp sm the excited-state projector and sx = sp + sm. Note the
dissipator carries no 1/2, so an atom at an antinode decays at twice its
bare open-line rate.

Everything is represented densely: operators are 2^N x 2^N arrays and the
generator acts on column-stacked density matrices as a 4^N x 4^N matrix with
entries in rad/ns.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import transmon as _transmon
from .coupling import CouplingMatrices, OperatingPoint
from .errors import RegisterCapacityError
from .transmon import ProbeSpec
from .units import RAD_S_TO_RAD_NS

MAX_ATOMS = 8

SIGMA_MINUS = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)  # |g><e|
SIGMA_PLUS = SIGMA_MINUS.T.conj()
PROJ_E = SIGMA_PLUS @ SIGMA_MINUS


@dataclass(frozen=True)
class Superoperator:
    """Dense generator acting on vectorized density matrices, in rad/ns."""

    matrix: np.ndarray
    n_atoms: int
    convention: str = "column-stacking"

    @property
    def dim(self) -> int:
        return 2**self.n_atoms


def embed(op: np.ndarray, n: int, n_atoms: int) -> np.ndarray:
    """Lift a single-atom operator to the N-atom register at position n."""
    op = np.asarray(op, dtype=complex)
    if op.shape != (2, 2):
        raise ValueError(f"expected a 2x2 operator, got shape {op.shape}")
    if not 0 <= n < n_atoms:
        raise IndexError(f"atom index {n} outside register of {n_atoms}")
    out = np.eye(1, dtype=complex)
    for j in range(n_atoms):
        out = np.kron(out, op if j == n else np.eye(2, dtype=complex))
    return out


def vectorize(rho: np.ndarray) -> np.ndarray:
    """Column-stack a square matrix into a vector."""
    rho = np.asarray(rho)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {rho.shape}")
    return rho.flatten(order="F")


def devectorize(vec: np.ndarray) -> np.ndarray:
    """Inverse of vectorize."""
    vec = np.asarray(vec)
    if vec.ndim != 1:
        raise ValueError(f"expected a vector, got shape {vec.shape}")
    d = round(np.sqrt(vec.size))
    if d * d != vec.size:
        raise ValueError(f"length {vec.size} is not a perfect square")
    return vec.reshape((d, d), order="F")


def _lmul(a: np.ndarray) -> np.ndarray:
    """Superoperator of rho -> a rho under column stacking."""
    d = a.shape[0]
    return np.kron(np.eye(d, dtype=complex), a)


def _rmul(b: np.ndarray) -> np.ndarray:
    """Superoperator of rho -> rho b under column stacking."""
    d = b.shape[0]
    return np.kron(b.T, np.eye(d, dtype=complex))


def _sandwich(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Superoperator of rho -> a rho b under column stacking."""
    return np.kron(b.T, a)


def build_generator(
    point: OperatingPoint, probe: ProbeSpec, coupl: CouplingMatrices
) -> Superoperator:
    """Assemble the full master-equation generator at one probe point.

    The drive amplitude of atom n is its Rabi frequency times cos(k_p x_n)
    with k_p = omega_p / v, so a probe at an atom's node does not drive it.
    Detunings absorb the single-atom mirror shifts.
    """
    n_atoms = point.n_atoms
    if n_atoms > MAX_ATOMS:
        raise RegisterCapacityError(
            f"{n_atoms} atoms exceeds the dense-representation cap of {MAX_ATOMS}"
        )
    if coupl.gamma.shape != (n_atoms, n_atoms):
        raise ValueError(
            f"coupling matrices of shape {coupl.gamma.shape} do not match "
            f"{n_atoms} atoms"
        )

    sm = [embed(SIGMA_MINUS, i, n_atoms) for i in range(n_atoms)]
    sp = [embed(SIGMA_PLUS, i, n_atoms) for i in range(n_atoms)]

    # rad/s -> rad/ns for every rate entering the generator
    scale = RAD_S_TO_RAD_NS
    gp = coupl.gamma_plus * scale
    gm = coupl.gamma_minus * scale
    dp = coupl.delta_plus * scale
    dm = coupl.delta_minus * scale

    k_p = probe.omega_p / point.wg.v
    dim2 = (2**n_atoms) ** 2
    mat = np.zeros((dim2, dim2), dtype=complex)

    for n in range(n_atoms):
        spec = point.specs[n]
        det = (probe.omega_p - point.omega10[n] - coupl.lamb_shifts[n]) * scale
        proj = sp[n] @ sm[n]
        mat += 1j * det * (_lmul(proj) - _rmul(proj))

        omega_n = _transmon.rabi_frequency(
            spec, probe, point.fluxes[n], point.wg
        ) * scale
        sx = sp[n] + sm[n]
        mat += 1j * omega_n * np.cos(k_p * spec.x) * (_lmul(sx) - _rmul(sx))

        gphi = spec.gamma_phi * scale
        if gphi != 0.0:
            mat += gphi * (2.0 * _sandwich(proj, proj) - _lmul(proj) - _rmul(proj))

        for m in range(n_atoms):
            op = sp[n] @ sm[m]
            if m != n:
                mat += -1j * (dp[n, m] - 1j * gm[n, m]) * (_lmul(op) - _rmul(op))
            diss = gp[n, m] + 1j * dm[n, m]
            if diss != 0.0:
                mat += diss * (
                    2.0 * _sandwich(sm[m], sp[n]) - _lmul(op) - _rmul(op)
                )

    return Superoperator(matrix=mat, n_atoms=n_atoms)
