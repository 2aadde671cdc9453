"""Liouville-space TNME generator and the Laplace-domain ETE solver.

Vectorization is column stacking, vec(A X B) = (B^T kron A) vec(X): left
multiplication by A is ``kron(I, A)`` and right multiplication is
``kron(A^T, I)``.  Index ``q`` of a vectorized N x N matrix addresses row
``q % N`` and column ``q // N``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.linalg as sla

from .bath import BathSpec, ExponentialKernel, correlation_coefficients, kernel_for
from .errors import NoSinkError
from .model import ExcitonModel
from .units import DEFAULT_CONVENTION, rate_to_internal

POLE_SHIFT = 1e-6
NON_MARKOVIAN_GAMMA = 5.0


def vec(rho: np.ndarray) -> np.ndarray:
    return np.asarray(rho).reshape(-1, order="F")


def unvec(x: np.ndarray, n: int) -> np.ndarray:
    return np.asarray(x).reshape(n, n, order="F")


def pure_state(n: int, site: int) -> np.ndarray:
    """|site><site| for a 1-indexed site."""
    rho = np.zeros((n, n), dtype=complex)
    rho[site - 1, site - 1] = 1.0
    return rho


def mixed_state(n: int) -> np.ndarray:
    return np.eye(n, dtype=complex) / n


def check_density_matrix(rho: np.ndarray, n: int, tol: float = 1e-10) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (n, n):
        raise ValueError(f"initial state must be {n}x{n}")
    if np.abs(rho - rho.conj().T).max() > tol:
        raise ValueError("initial state is not Hermitian")
    if abs(np.trace(rho) - 1.0) > tol:
        raise ValueError("initial state must have unit trace")
    if np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)).min() < -tol:
        raise ValueError("initial state is not positive semidefinite")
    return rho


@dataclass(frozen=True, eq=False)
class SolverOptions:
    """Numerical options shared by the frequency and time solvers.

    ``time_convention`` selects how ps rates map to cm^-1 (see ``units``).
    The ``ohmic_*`` fields configure the exponential fit of Ohmic baths.
    """

    time_convention: str = DEFAULT_CONVENTION
    ohmic_fit_terms: int = 6
    ohmic_t_max: float | None = None
    ohmic_rel_tol: float = 1e-3


@dataclass(frozen=True, eq=False)
class TransferProblem:
    model: ExcitonModel
    bath: BathSpec = field(default_factory=BathSpec)
    initial_state: np.ndarray | None = None
    options: SolverOptions = field(default_factory=SolverOptions)

    def __post_init__(self):
        n = self.model.n_sites
        rho = self.initial_state
        rho = pure_state(n, self.model.initial_site) if rho is None else check_density_matrix(rho, n)
        rho = np.array(rho, dtype=complex)
        rho.setflags(write=False)
        object.__setattr__(self, "initial_state", rho)

    @property
    def n_sites(self) -> int:
        return self.model.n_sites

    @cached_property
    def kernel(self) -> ExponentialKernel:
        o = self.options
        return kernel_for(self.bath, o.ohmic_fit_terms, o.ohmic_t_max, o.ohmic_rel_tol)

    @cached_property
    def correlations(self) -> np.ndarray:
        return correlation_coefficients(self.model.geometry, self.bath, self.n_sites)

    @property
    def trap_rate(self) -> float:
        """r_trap in internal units."""
        return rate_to_internal(self.model.trap_rate, self.options.time_convention)

    @property
    def loss_rate(self) -> float:
        return rate_to_internal(self.model.loss_rate, self.options.time_convention)

    @cached_property
    def eig(self):
        return np.linalg.eigh(self.model.hamiltonian)


@dataclass
class TransferResult:
    ete: float
    loss_fraction: float
    solver: str
    diagnostics: dict = field(default_factory=dict)


@dataclass(frozen=True, eq=False)
class LiouvilleOperator:
    """Generator G = L_S + L_eh - M on column-stacked density matrices."""

    coherent: np.ndarray
    sinks: np.ndarray
    memory: np.ndarray
    energies: np.ndarray
    basis: np.ndarray
    flags: tuple = ()

    @property
    def dimension(self) -> int:
        return self.coherent.shape[0]

    @cached_property
    def matrix(self) -> np.ndarray:
        return self.coherent + self.sinks - self.memory


def coherent_superoperator(H: np.ndarray) -> np.ndarray:
    """L_S rho = -i [H, rho]."""
    n = H.shape[0]
    eye = np.eye(n)
    return -1j * (np.kron(eye, H) - np.kron(H.T, eye))


def sink_superoperator(n: int, trap_index: int, r_trap: float, r_loss: float) -> np.ndarray:
    """-r_loss {I, rho} - r_trap {P_trap, rho}; diagonal in Liouville space."""
    q = np.arange(n * n)
    rows, cols = q % n, q // n
    d = -2.0 * r_loss - r_trap * ((rows == trap_index).astype(float) + (cols == trap_index))
    return np.diag(d.astype(complex))


def eigenbasis_superoperator(U: np.ndarray, F: np.ndarray) -> np.ndarray:
    """Superoperator X -> U (F * (U^dag X U)) U^dag."""
    A = np.kron(U.conj(), U)
    B = np.kron(U.T, U.conj().T)
    return (A * vec(F)) @ B


def memory_superoperator(
    U: np.ndarray, F: np.ndarray, Fbar: np.ndarray, corr: np.ndarray
) -> np.ndarray:
    """M rho = sum_jk c_jk [S_j, Phi(S_k rho) - Phibar(rho S_k)].

    ``F`` and ``Fbar`` hold the eigenbasis matrix elements of Phi and Phibar,
    the kernel and conjugate-kernel resolvents.
    """
    n = U.shape[0]
    P = eigenbasis_superoperator(U, F)
    Pb = eigenbasis_superoperator(U, Fbar)
    q = np.arange(n * n)
    a, b = q % n, q // n
    return P * (corr[a[:, None], a[None, :]] - corr[b[:, None], a[None, :]]) - Pb * (
        corr[a[:, None], b[None, :]] - corr[b[:, None], b[None, :]]
    )


def resolvent_elements(kernel: ExponentialKernel, energies: np.ndarray, markovian: bool = False):
    """Eigenbasis elements of C~(-L_S) and of the conjugate kernel.

    Element (m, n) is C~(i (E_m - E_n)).  Returns (F, Fbar, shifted) where
    ``shifted`` reports whether the pole regularization was applied.
    """
    w = energies[:, None] - energies[None, :]
    s = np.zeros_like(w, dtype=complex) if markovian else 1j * w
    den = s[..., None] + kernel.decays
    denb = s[..., None] + kernel.decays.conj()
    scale = np.maximum(1.0, np.abs(kernel.decays))
    shifted = bool(
        len(kernel) and (np.any(np.abs(den) < 1e-12 * scale) or np.any(np.abs(denb) < 1e-12 * scale))
    )
    if shifted:
        den = den + POLE_SHIFT
        denb = denb + POLE_SHIFT
    F = (kernel.amplitudes / den).sum(axis=-1)
    Fbar = (kernel.amplitudes.conj() / denb).sum(axis=-1)
    return F, Fbar, shifted


def build_generator(
    problem: TransferProblem,
    markovian: bool = False,
    kernel: ExponentialKernel | None = None,
) -> LiouvilleOperator:
    kernel = problem.kernel if kernel is None else kernel
    E, U = problem.eig
    n = problem.n_sites
    F, Fbar, shifted = resolvent_elements(kernel, E, markovian)
    flags = ("pole_shift",) if shifted else ()
    return LiouvilleOperator(
        coherent=coherent_superoperator(problem.model.hamiltonian),
        sinks=sink_superoperator(n, problem.model.trap_index, problem.trap_rate, problem.loss_rate),
        memory=memory_superoperator(U, F, Fbar, problem.correlations),
        energies=E,
        basis=U,
        flags=flags,
    )


def _warn_non_markovian(problem: TransferProblem, diagnostics: dict) -> None:
    if problem.bath.gamma_cm1 < NON_MARKOVIAN_GAMMA and problem.bath.lambda_cm1 > 0:
        msg = (
            f"gamma = {problem.bath.gamma_cm1} cm^-1 is below {NON_MARKOVIAN_GAMMA} cm^-1; "
            "the second-order memory kernel is less reliable in this regime"
        )
        warnings.warn(msg, RuntimeWarning, stacklevel=3)
        diagnostics["warning"] = msg


def _clamp(eta: float, diagnostics: dict) -> float:
    if -1e-9 <= eta < 0.0 or 1.0 < eta <= 1.0 + 1e-9:
        diagnostics["clamped"] = True
        return min(max(eta, 0.0), 1.0)
    if eta < -1e-9 or eta > 1.0 + 1e-9:
        diagnostics["unphysical"] = True
    return eta


def solve_generator(op: LiouvilleOperator, rho0: np.ndarray):
    """Return (x, rcond) with G x = -vec(rho0), i.e. x = int_0^inf vec(rho) dt."""
    G = op.matrix
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", sla.LinAlgWarning)
        try:
            lu, piv = sla.lu_factor(G, check_finite=True)
        except (ValueError, np.linalg.LinAlgError) as exc:
            raise NoSinkError(f"no sink: generator is singular ({exc})") from exc
    anorm = np.abs(G).sum(axis=0).max()
    gecon = sla.get_lapack_funcs("gecon", (lu,))
    rcond, _ = gecon(lu, anorm, norm="1")
    if not rcond > 1e-14:
        raise NoSinkError(f"no sink: generator is numerically singular (rcond = {rcond:.2e})")
    x = sla.lu_solve((lu, piv), -vec(rho0))
    return x, float(rcond)


def _ete(problem: TransferProblem, markovian: bool, solver_name: str) -> TransferResult:
    diagnostics: dict = {}
    _warn_non_markovian(problem, diagnostics)
    if problem.model.trap_rate == 0.0 and problem.model.loss_rate == 0.0:
        raise NoSinkError("no sink: r_trap = r_loss = 0")
    op = build_generator(problem, markovian=markovian)
    x, rcond = solve_generator(op, problem.initial_state)
    n = problem.n_sites
    t = problem.model.trap_index
    eta = 2.0 * problem.trap_rate * float(x[t + n * t].real)
    eta = _clamp(eta, diagnostics)
    diagnostics.update(
        condition_estimate=1.0 / rcond,
        kernel_terms=len(problem.kernel),
        regularization=list(op.flags),
        loss_split_available=False,
    )
    if problem.kernel.fit_residual is not None:
        diagnostics["kernel_fit_residual"] = problem.kernel.fit_residual
    return TransferResult(eta, 1.0 - eta, solver_name, diagnostics)


def ete_frequency(problem: TransferProblem) -> TransferResult:
    """eta = 2 r_trap Re <trap| (-G^{-1} rho0) |trap>, one dense solve."""
    return _ete(problem, markovian=False, solver_name="frequency")


def ete_markovian_limit(problem: TransferProblem) -> float:
    """Same as ete_frequency with the kernel evaluated at s = 0 for every transition."""
    return _ete(problem, markovian=True, solver_name="markovian").ete


def ete(model: ExcitonModel, bath: BathSpec | None = None, initial_state=None, **options) -> float:
    """Convenience wrapper returning only eta."""
    problem = TransferProblem(
        model, bath or BathSpec(), initial_state, SolverOptions(**options)
    )
    return ete_frequency(problem).ete
