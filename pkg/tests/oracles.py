"""Independent reference computations used only by the tests.

These deliberately avoid the package's own code paths: correlation functions
come from direct Fourier quadrature of the spectral density, Laplace
transforms from principal-value integrals, couplings from explicit loops.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.integrate import quad

KB = 0.695035


def drude(lam, gam):
    return lambda w: 2.0 * lam * gam * w / (w * w + gam * gam)


def ohmic(lam, gam):
    return lambda w: lam * (w / gam) * math.exp(-w / gam)


def correlation_quadrature(J, beta, t):
    """C(t) = (1/pi) int_0^inf J(w) [coth(beta w/2) cos wt - i sin wt] dw, t > 0."""
    if t <= 0:
        raise ValueError("quadrature oracle needs t > 0")

    def f_re(w):
        if w == 0.0:
            return 2.0 * (J(1e-12) / 1e-12) / beta
        return J(w) / math.tanh(0.5 * beta * w)

    re = quad(f_re, 0.0, np.inf, weight="cos", wvar=t, limlst=200)[0]
    im = -quad(J, 0.0, np.inf, weight="sin", wvar=t, limlst=200)[0]
    return (re + 1j * im) / math.pi


def laplace_exact(J, beta, w):
    """C~(i w) = int_0^inf exp(-i w t) C(t) dt from the spectral density.

    Real part: J(|w|)(n+1) for w < 0 (downhill), J(w) n(w) for w > 0.
    Imaginary part: -(1/pi) PV int J(x) [(n(x)+1)/(w+x) + n(x)/(w-x)] dx.
    """
    n = lambda x: 0.0 if beta * x > 700 else 1.0 / math.expm1(beta * x)
    slope = J(1e-12) / 1e-12

    def f2(x):
        return slope / beta if x == 0.0 else J(x) * n(x)

    def f1(x):
        return f2(x) + J(x)

    if w < 0:
        re = J(-w) * (n(-w) + 1.0)
    elif w > 0:
        re = J(w) * n(w)
    else:
        re = (J(1e-9) / 1e-9) / beta
    kw = dict(limit=500, epsabs=1e-12, epsrel=1e-11)
    if w > 0:
        i1 = quad(lambda x: f1(x) / (w + x), 0, np.inf, **kw)[0]
        i2 = -(
            quad(f2, 0, 2 * w, weight="cauchy", wvar=w, **kw)[0]
            + quad(lambda x: f2(x) / (x - w), 2 * w, np.inf, **kw)[0]
        )
    elif w < 0:
        a = -w
        i1 = quad(f1, 0, 2 * a, weight="cauchy", wvar=a, **kw)[0] + quad(
            lambda x: f1(x) / (x - a), 2 * a, np.inf, **kw
        )[0]
        i2 = -quad(lambda x: f2(x) / (a + x), 0, np.inf, **kw)[0]
    else:
        raise ValueError("w = 0 is not needed by the tests")
    return re - 1j * (i1 + i2) / math.pi


def dipole_coupling_loop(positions, dipoles, energies, C=134000.0):
    n = len(positions)
    H = np.zeros((n, n))
    for j in range(n):
        H[j, j] = energies[j]
        for k in range(n):
            if j == k:
                continue
            R = np.asarray(positions[j], float) - np.asarray(positions[k], float)
            r = math.sqrt(R @ R)
            mj, mk = np.asarray(dipoles[j], float), np.asarray(dipoles[k], float)
            H[j, k] = C / r**3 * (mj @ mk - 3.0 * (mj @ R) * (mk @ R) / r**2)
    return H


def enumerate_paths(n, start, end):
    """Simple paths start -> end over sites 0..n-1 by depth-first search."""
    out = []

    def walk(path):
        if path[-1] == end:
            out.append(tuple(path))
            return
        for s in range(n):
            if s not in path:
                walk(path + [s])

    walk([start])
    return out


def lindblad_dephasing_ete(H, rate, trap, init, r_trap, r_loss):
    """Pure-dephasing Haken-Strobl ETE.

    The generator is assembled column by column by applying the master
    equation to each matrix unit |a><b| (no Kronecker algebra), then
    eta = 2 r_trap int p_trap dt follows from one linear solve.
    """
    n = len(H)
    P = np.zeros((n, n))
    P[trap, trap] = 1.0

    def rhs(rho):
        d = -1j * (H @ rho - rho @ H)
        d -= rate * (rho - np.diag(np.diag(rho)))
        d -= 2 * r_loss * rho
        d -= r_trap * (P @ rho + rho @ P)
        return d

    L = np.zeros((n * n, n * n), dtype=complex)
    for a in range(n):
        for b in range(n):
            unit = np.zeros((n, n), dtype=complex)
            unit[a, b] = 1.0
            L[:, a * n + b] = rhs(unit).reshape(-1)
    rho0 = np.zeros(n * n, dtype=complex)
    rho0[init * n + init] = 1.0
    integral = np.linalg.solve(L, -rho0).reshape(n, n)
    return 2 * r_trap * integral[trap, trap].real

