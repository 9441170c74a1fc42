"""Steady states and time evolution for the master-equation generator."""

from __future__ import annotations

import numpy as np
import scipy.integrate
import scipy.linalg

from .errors import SingularSystemError, SolverError, StepFailureError
from .liouvillian import Superoperator, devectorize, vectorize

# relative threshold on singular values when diagnosing a rank deficiency
_KERNEL_CUTOFF = 1e-10


def validate_density_matrix(
    rho: np.ndarray, *, tol: float = 1e-10, eig_floor: float = -1e-8
) -> None:
    """Raise ValueError unless rho is a unit-trace Hermitian PSD matrix."""
    rho = np.asarray(rho)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError(f"density matrix must be square, got shape {rho.shape}")
    herm = np.max(np.abs(rho - rho.conj().T))
    if herm > tol:
        raise ValueError(f"density matrix deviates from Hermitian by {herm:.3e}")
    tr = np.trace(rho)
    if abs(tr - 1.0) > tol:
        raise ValueError(f"density matrix trace {tr} differs from 1")
    lo = scipy.linalg.eigvalsh(rho)[0]
    if lo < eig_floor:
        raise ValueError(f"density matrix has negative eigenvalue {lo:.3e}")


def steady_state(gen: Superoperator, *, residual_tol: float = 1e-10) -> np.ndarray:
    """Solve L rho = 0 with unit trace.

    The trace row of the linear system is replaced by the normalization
    condition. A solution is accepted only if ||L vec(rho)|| <= residual_tol
    times ||L||; if the kernel of L is found to be multidimensional the
    failure is reported as SingularSystemError with the kernel dimension.
    """
    mat = gen.matrix
    if not np.all(np.isfinite(mat)):
        raise SolverError("generator contains non-finite entries")
    dim = gen.dim
    norm_l = np.linalg.norm(mat)
    if norm_l == 0.0:
        raise SingularSystemError(
            f"steady state is not unique: kernel dimension {dim * dim}"
        )

    # trace functional under column stacking: vec(identity)
    trace_row = vectorize(np.eye(dim, dtype=complex))
    a = mat.copy()
    a[0, :] = trace_row
    b = np.zeros(dim * dim, dtype=complex)
    b[0] = 1.0

    try:
        x = np.linalg.solve(a, b)
    except np.linalg.LinAlgError:
        x = None

    if x is not None:
        residual = np.linalg.norm(mat @ x)
        if residual <= residual_tol * norm_l:
            rho = devectorize(x)
            rho = 0.5 * (rho + rho.conj().T)
            tr = np.trace(rho).real
            return rho / tr

    svals = scipy.linalg.svdvals(mat)
    kernel_dim = int(np.sum(svals <= _KERNEL_CUTOFF * svals[0]))
    if kernel_dim != 1:
        raise SingularSystemError(
            f"steady state is not unique: kernel dimension {kernel_dim}"
        )
    raise SolverError(
        "steady-state solve failed the residual check despite a "
        "one-dimensional kernel; the system is badly conditioned"
    )


def time_evolve(
    gen: Superoperator, rho0: np.ndarray, t: float, *, tol: float = 1e-10
) -> np.ndarray:
    """Propagate rho0 for t nanoseconds under the generator.

    Adaptive Runge-Kutta with local error controlled at tol. Trace and
    Hermiticity are checked at every accepted step.
    """
    rho0 = np.asarray(rho0, dtype=complex)
    validate_density_matrix(rho0, tol=1e-8)
    if rho0.shape[0] != gen.dim:
        raise ValueError(
            f"state of dimension {rho0.shape[0]} does not match the "
            f"{gen.dim}-dimensional generator"
        )
    if t < 0:
        raise ValueError(f"evolution time must be nonnegative, got {t}")
    if t == 0:
        return rho0.copy()

    mat = gen.matrix
    # the adaptive stepper cannot recover from non-finite derivatives
    if not np.all(np.isfinite(mat)):
        raise StepFailureError("generator contains non-finite entries")
    sol = scipy.integrate.solve_ivp(
        lambda _s, y: mat @ y,
        (0.0, float(t)),
        vectorize(rho0),
        method="RK45",
        rtol=tol,
        atol=tol,
    )
    if not sol.success:
        raise StepFailureError(f"integrator stopped before t={t}: {sol.message}")

    check_tol = max(1e-10, 10.0 * tol)
    for j in range(sol.y.shape[1]):
        rho = devectorize(sol.y[:, j])
        tr_dev = abs(np.trace(rho) - 1.0)
        herm_dev = np.max(np.abs(rho - rho.conj().T))
        if tr_dev > check_tol or herm_dev > check_tol:
            raise SolverError(
                f"evolution lost trace or Hermiticity at t={sol.t[j]:.6g} ns "
                f"(trace deviation {tr_dev:.3e}, Hermiticity deviation "
                f"{herm_dev:.3e})"
            )

    rho = devectorize(sol.y[:, -1])
    return 0.5 * (rho + rho.conj().T)
