"""Fitting sampled complex signals with a short sum of decaying exponentials."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares

from .errors import KernelFitError


@dataclass(frozen=True)
class ExpFit:
    amplitudes: np.ndarray
    decays: np.ndarray
    residual: float
    """max |fit - y| / max |y| on the evaluation grid."""

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        return np.exp(-np.multiply.outer(t, self.decays)) @ self.amplitudes


def prony(t_uniform: np.ndarray, y: np.ndarray, n_terms: int):
    """Classical Prony estimate of decay rates from uniformly spaced samples.

    Returns complex decays ``nu`` with y(t) ~ sum a_m exp(-nu_m t).  Roots
    outside the unit circle are reflected so every decay has Re nu > 0.
    """
    dt = t_uniform[1] - t_uniform[0]
    m = len(y)
    if m < 2 * n_terms + 1:
        raise ValueError("not enough samples for Prony")
    rows = m - n_terms
    A = np.column_stack([y[n_terms - k - 1 : n_terms - k - 1 + rows] for k in range(n_terms)])
    coef, *_ = np.linalg.lstsq(A, -y[n_terms:], rcond=None)
    z = np.roots(np.concatenate([[1.0], coef]))
    z = np.where(np.abs(z) < 1e-12, 1e-12, z)
    nu = -np.log(z) / dt
    nu = np.where(nu.real > 0, nu, -nu.real + 1j * nu.imag)
    floor = 1e-3 / (t_uniform[-1] - t_uniform[0])
    return np.where(nu.real < floor, floor + 1j * nu.imag, nu)


def _amplitudes(t, y, nu):
    B = np.exp(-np.multiply.outer(t, nu))
    a, *_ = np.linalg.lstsq(B, y, rcond=None)
    return a


def _pack(a, nu):
    return np.concatenate([a.real, a.imag, np.log(nu.real), nu.imag])


def _unpack(p, n):
    a = p[:n] + 1j * p[n : 2 * n]
    nu = np.exp(p[2 * n : 3 * n]) + 1j * p[3 * n :]
    return a, nu


def fit_exponentials(
    t: np.ndarray,
    y: np.ndarray,
    n_terms: int,
    *,
    t_uniform: np.ndarray | None = None,
    y_uniform: np.ndarray | None = None,
    n_starts: int = 8,
    seed: int = 0,
    target: float = 0.0,
) -> ExpFit:
    """Least-squares fit of ``y(t)`` by ``n_terms`` complex exponentials.

    The first start is a Prony estimate on the uniform samples (if given);
    further starts draw log-uniform decay rates from a fixed-seed generator so
    the result is deterministic.  Stops early once the relative max residual
    falls below ``target``.
    """
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=complex)
    scale = float(np.abs(y).max())
    if scale == 0.0:
        return ExpFit(np.zeros(n_terms, complex), np.ones(n_terms, complex), 0.0)
    span = float(t.max() - t.min())

    def residuals(p):
        a, nu = _unpack(p, n_terms)
        r = (np.exp(-np.multiply.outer(t, nu)) @ a - y) / scale
        return np.concatenate([r.real, r.imag])

    def jacobian(p):
        a, nu = _unpack(p, n_terms)
        B = np.exp(-np.multiply.outer(t, nu)) / scale
        dnu = -t[:, None] * B * a
        Jc = np.hstack([B, 1j * B, dnu * nu.real, 1j * dnu])
        return np.vstack([Jc.real, Jc.imag])

    rng = np.random.default_rng(seed)
    starts = []
    if t_uniform is not None:
        try:
            starts.append(prony(t_uniform, np.asarray(y_uniform, complex), n_terms))
        except (ValueError, np.linalg.LinAlgError):
            pass
    while len(starts) < n_starts:
        rates = np.sort(np.exp(rng.uniform(np.log(0.5 / span), np.log(2e3 / span), n_terms)))
        freqs = rng.normal(0.0, 3.0 / span, n_terms)
        starts.append(rates + 1j * freqs)

    best = None
    for nu0 in starts:
        a0 = _amplitudes(t, y, nu0)
        # trial steps may overflow; the trust region rejects them
        with np.errstate(over="ignore", invalid="ignore"):
            sol = least_squares(
                residuals, _pack(a0, nu0), jac=jacobian, x_scale="jac", max_nfev=4000
            )
            a, nu = _unpack(sol.x, n_terms)
            err = float(np.abs(np.exp(-np.multiply.outer(t, nu)) @ a - y).max() / scale)
        if not np.isfinite(err):
            continue
        if best is None or err < best.residual:
            order = np.lexsort((nu.imag, nu.real))
            best = ExpFit(a[order], nu[order], err)
        if best.residual <= target:
            break
    if best is None:
        raise KernelFitError("exponential fit failed from every start", float("inf"))
    return best
