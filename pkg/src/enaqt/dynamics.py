"""Time-domain TNME propagation with auxiliary operators.

The memory integral is made local in time by one auxiliary operator per site
and kernel term,

    sigma_km(t) = int_0^t a_m exp((L_S - nu_m)(t - t')) S_k rho(t') dt',
    d sigma_km / dt = a_m S_k rho + (L_S - nu_m) sigma_km,

plus the conjugate-kernel partners for the "- h.c." half.  For real decays
the two are merged into a single operator.  Terms decaying faster than
``explicit_cutoff`` are eliminated adiabatically: they enter as the
time-local superoperator a_m (nu_m - L_S)^{-1}, which leaves the
time-integrated populations (and hence eta) unchanged.

The resulting linear system dx/dt = A x is propagated either exactly
through an eigendecomposition of A ("eig", with a matrix-exponential fallback
when the eigenvectors are ill-conditioned) or with scipy's DOP853 ("rk").
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
from scipy.integrate import solve_ivp

from .bath import ExponentialKernel
from .errors import StepUnderflowError
from .solver import (
    TransferProblem,
    TransferResult,
    _clamp,
    coherent_superoperator,
    memory_superoperator,
    resolvent_elements,
    sink_superoperator,
    vec,
)
from .units import time_from_internal, time_to_internal

EXPLICIT_CUTOFF = 1000.0


@dataclass
class Trajectory:
    t_ps: np.ndarray
    populations: np.ndarray
    """(len(t), N) site populations."""
    trace: np.ndarray
    eta_cumulative: np.ndarray
    loss_cumulative: np.ndarray
    """(len(t), N) per-site 2 r_loss int p_j dt."""
    result: TransferResult
    max_antihermitian: float


def _split_kernel(kernel: ExponentialKernel, cutoff: float):
    fast = kernel.decays.real > cutoff
    slow_k = ExponentialKernel(kernel.amplitudes[~fast], kernel.decays[~fast])
    fast_k = ExponentialKernel(kernel.amplitudes[fast], kernel.decays[fast])
    return slow_k, fast_k


def augmented_generator(problem: TransferProblem, explicit_cutoff: float = EXPLICIT_CUTOFF):
    """Dense matrix of the local-in-time augmented system; rho is the first block."""
    n = problem.n_sites
    d = n * n
    H = problem.model.hamiltonian
    E, U = problem.eig
    LS = coherent_superoperator(H)
    slow, fast = _split_kernel(problem.kernel, explicit_cutoff)
    corr = problem.correlations

    F, Fbar, _ = resolvent_elements(fast, E)
    rho_block = LS + sink_superoperator(
        n, problem.model.trap_index, problem.trap_rate, problem.loss_rate
    ) - memory_superoperator(U, F, Fbar, corr)

    q = np.arange(d)
    rows, cols = q % n, q // n
    eye = np.eye(d)
    # aux descriptors: (site k, decay, left amplitude, right amplitude, sign in memory)
    aux = []
    for a, nu in zip(slow.amplitudes, slow.decays):
        for k in range(n):
            if nu.imag == 0.0:
                aux.append((k, nu, a, -np.conj(a), 1.0))
            else:
                aux.append((k, nu, a, 0.0, 1.0))
                aux.append((k, np.conj(nu), 0.0, np.conj(a), -1.0))
    m = len(aux)
    A = np.zeros((d * (m + 1), d * (m + 1)), dtype=complex)
    A[:d, :d] = rho_block
    commutators = [
        ((rows == j).astype(float) - (cols == j).astype(float)) for j in range(n)
    ]
    for i, (k, nu, aL, aR, sgn) in enumerate(aux):
        blk = slice(d * (i + 1), d * (i + 2))
        drive = aL * (rows == k) + aR * (cols == k)
        A[blk, :d] = np.diag(drive)
        A[blk, blk] = LS - nu * eye
        # memory: -sum_j c_jk [S_j, sign * sigma]
        coupling = sum(corr[j, k] * commutators[j] for j in range(n))
        A[:d, blk] = -np.diag(sgn * coupling)
    return A


def _sample_eig(A, x0, t, d, n, pop_idx):
    lam, V = np.linalg.eig(A)
    cond = np.linalg.cond(V)
    if not np.isfinite(cond) or cond > 1e10:
        return None
    c = np.linalg.solve(V, x0)
    Vr = V[:d]
    Vp = V[pop_idx]
    tl = np.multiply.outer(t, lam)
    expo = np.exp(tl)
    small = np.abs(lam) < 1e-300
    with np.errstate(divide="ignore", invalid="ignore"):
        phi = np.where(np.abs(tl) < 1e-8, t[:, None] * (1 + tl / 2), np.expm1(tl) / np.where(small, 1, lam))
    states = (expo * c) @ Vr.T
    integrals = (phi * c) @ Vp.T
    return states, integrals.real


def _sample_expm(A, x0, t, d, pop_idx):
    dim = A.shape[0]
    npop = len(pop_idx)
    B = np.zeros((dim + npop, dim + npop), dtype=complex)
    B[:dim, :dim] = A
    B[dim + np.arange(npop), pop_idx] = 1.0
    y = np.concatenate([x0, np.zeros(npop)])
    states, integrals = [], []
    prev = 0.0
    for ti in t:
        if ti > prev:
            y = sla.expm(B * (ti - prev)) @ y
        prev = ti
        states.append(y[:d].copy())
        integrals.append(y[dim:].real.copy())
    return np.array(states), np.array(integrals)


def _sample_rk(A, x0, t, d, pop_idx, rtol, atol):
    dim = A.shape[0]
    npop = len(pop_idx)

    def rhs(_t, y):
        dy = np.empty_like(y)
        dy[:dim] = A @ y[:dim]
        dy[dim:] = y[pop_idx]
        return dy

    y0 = np.concatenate([x0, np.zeros(npop, dtype=complex)])
    sol = solve_ivp(rhs, (0.0, t[-1]), y0, method="DOP853", t_eval=t, rtol=rtol, atol=atol)
    if sol.status != 0:
        reached = sol.t[-1] if len(sol.t) else 0.0
        raise StepUnderflowError(f"time integration failed ({sol.message})", reached)
    Y = sol.y.T
    return Y[:, :d], Y[:, dim:].real


def propagate_time(
    problem: TransferProblem,
    t_max_ps: float = 1e4,
    output_grid=None,
    *,
    n_points: int = 201,
    method: str = "eig",
    explicit_cutoff: float = EXPLICIT_CUTOFF,
    rtol: float = 1e-8,
    atol: float = 1e-12,
) -> Trajectory:
    """Populations, trace and cumulative eta on a time grid (ps).

    The default grid is 0 plus ``n_points - 1`` log-spaced times from 1 fs to
    ``t_max_ps``.  The returned result's ``loss_fraction`` includes the
    residual trace at ``t_max_ps``.
    """
    conv = problem.options.time_convention
    if output_grid is None:
        if not t_max_ps > 0:
            raise ValueError("t_max_ps must be > 0")
        lo = min(1e-3, t_max_ps / 10)
        output_grid = np.concatenate([[0.0], np.geomspace(lo, t_max_ps, n_points - 1)])
    t_ps = np.asarray(output_grid, dtype=float)
    if t_ps.ndim != 1 or len(t_ps) == 0 or np.any(np.diff(t_ps) < 0) or t_ps[0] < 0:
        raise ValueError("output_grid must be non-empty, non-negative and increasing")
    t = time_to_internal(t_ps, conv)

    n = problem.n_sites
    d = n * n
    A = augmented_generator(problem, explicit_cutoff)
    x0 = np.zeros(A.shape[0], dtype=complex)
    x0[:d] = vec(problem.initial_state)
    pop_idx = np.arange(n) * (n + 1)

    used = method
    if method == "eig":
        out = _sample_eig(A, x0, t, d, n, pop_idx)
        if out is None:
            used = "expm"
            out = _sample_expm(A, x0, t, d, pop_idx)
    elif method == "expm":
        out = _sample_expm(A, x0, t, d, pop_idx)
    elif method == "rk":
        out = _sample_rk(A, x0, t, d, pop_idx, rtol, atol)
    else:
        raise ValueError(f"unknown method {method!r}")
    states, integrals = out

    rhos = states.reshape(len(t), n, n, order="F")
    pops = np.real(np.einsum("tii->ti", rhos))
    trace = pops.sum(axis=1)
    r_trap, r_loss = problem.trap_rate, problem.loss_rate
    trap = problem.model.trap_index
    eta_cum = 2.0 * r_trap * integrals[:, trap]
    loss_cum = 2.0 * r_loss * integrals
    antiherm = float(np.abs(rhos - np.conj(np.transpose(rhos, (0, 2, 1)))).max())

    diagnostics = {
        "method": used,
        "augmented_dimension": A.shape[0],
        "explicit_terms": int(np.sum(problem.kernel.decays.real <= explicit_cutoff)),
        "residual_trace": float(trace[-1]),
        "loss_by_site": loss_cum[-1].tolist(),
        "balance_error": float(abs(eta_cum[-1] + loss_cum[-1].sum() + trace[-1] - 1.0)),
        "max_antihermitian": antiherm,
    }
    eta = _clamp(float(eta_cum[-1]), diagnostics)
    result = TransferResult(
        eta, float(loss_cum[-1].sum() + trace[-1]), "time", diagnostics
    )
    return Trajectory(
        time_from_internal(t, conv), pops, trace, eta_cum, loss_cum, result, antiherm
    )
