"""Bath spectral densities and their exponential (Matsubara / fitted) kernels.

Every correlation function is reduced to C(t) = sum_m a_m exp(-nu_m t) with
Re nu_m > 0, so its Laplace transform is the rational function
sum_m a_m / (s + nu_m).  Frequencies are in cm^-1 with hbar = 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np
from scipy.integrate import quad

from .errors import DegenerateMatsubaraError, KernelFitError, KernelPoleError
from .expfit import fit_exponentials
from .units import kT

FAMILIES = ("lorentzian", "ohmic")
DEFAULT_MATSUBARA_TERMS = 100


@dataclass(frozen=True)
class BathSpec:
    """Harmonic bath parameters.

    ``lambda_cm1`` and ``gamma_cm1`` are the reorganization energy and cutoff,
    ``r_cor_angstrom`` the spatial correlation length (0 means independent
    site baths) and ``correlation_sign`` flips the sign of cross-site
    correlations.  ``matsubara_terms=None`` selects the default of 100.
    """

    family: str = "lorentzian"
    lambda_cm1: float = 35.0
    gamma_cm1: float = 50.0
    temperature_K: float = 298.0
    r_cor_angstrom: float = 0.0
    correlation_sign: int = 1
    matsubara_terms: int | None = None

    def __post_init__(self):
        fam = str(self.family).lower()
        if fam not in FAMILIES:
            raise ValueError(f"unknown bath family {self.family!r}")
        object.__setattr__(self, "family", fam)
        if not math.isfinite(self.lambda_cm1) or self.lambda_cm1 < 0:
            raise ValueError("lambda_cm1 must be finite and >= 0 (use correlation_sign for anticorrelation)")
        if not self.gamma_cm1 > 0:
            raise ValueError("gamma_cm1 must be > 0")
        if not self.temperature_K > 0:
            raise ValueError("temperature_K must be > 0")
        if not self.r_cor_angstrom >= 0:
            raise ValueError("r_cor_angstrom must be >= 0")
        if self.correlation_sign not in (1, -1):
            raise ValueError("correlation_sign must be +1 or -1")
        if self.matsubara_terms is not None and self.matsubara_terms < 0:
            raise ValueError("matsubara_terms must be >= 0")

    @property
    def beta(self) -> float:
        return 1.0 / kT(self.temperature_K)

    @property
    def n_matsubara(self) -> int:
        if self.matsubara_terms is None:
            return DEFAULT_MATSUBARA_TERMS
        return int(self.matsubara_terms)

    def with_(self, **changes) -> "BathSpec":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "lambda_cm1": self.lambda_cm1,
            "gamma_cm1": self.gamma_cm1,
            "temperature_K": self.temperature_K,
            "r_cor_angstrom": self.r_cor_angstrom,
            "correlation_sign": self.correlation_sign,
            "matsubara_terms": self.matsubara_terms,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "BathSpec":
        return cls(**{k: v for k, v in data.items() if k in cls.__dataclass_fields__})


def spectral_density(spec: BathSpec, w):
    """J(w) in cm^-1 for w >= 0."""
    w = np.asarray(w, dtype=float)
    lam, gam = spec.lambda_cm1, spec.gamma_cm1
    if spec.family == "lorentzian":
        return 2.0 * lam * gam * w / (w**2 + gam**2)
    return lam * (w / gam) * np.exp(-w / gam)


@dataclass(frozen=True, eq=False)
class ExponentialKernel:
    """C(t) = sum_m a_m exp(-nu_m t), Re nu_m > 0."""

    amplitudes: np.ndarray
    decays: np.ndarray
    fit_residual: float | None = field(default=None)

    def __post_init__(self):
        a = np.array(self.amplitudes, dtype=complex).reshape(-1)
        nu = np.array(self.decays, dtype=complex).reshape(-1)
        if a.shape != nu.shape:
            raise ValueError("amplitudes and decays must have equal length")
        if np.any(nu.real <= 0):
            raise ValueError("every decay must have a positive real part")
        if not np.all(np.isfinite(a)):
            raise ValueError("amplitudes must be finite")
        a.setflags(write=False)
        nu.setflags(write=False)
        object.__setattr__(self, "amplitudes", a)
        object.__setattr__(self, "decays", nu)

    def __len__(self) -> int:
        return len(self.amplitudes)

    @classmethod
    def zero(cls) -> "ExponentialKernel":
        return cls(np.zeros(0, complex), np.zeros(0, complex))

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        return np.exp(-np.multiply.outer(t, self.decays)) @ self.amplitudes

    def laplace(self, s):
        """Vectorized C~(s) without pole checking."""
        s = np.asarray(s, dtype=complex)
        return (self.amplitudes / (s[..., None] + self.decays)).sum(axis=-1)

    def conj(self) -> "ExponentialKernel":
        """Kernel of C(t)^*."""
        return ExponentialKernel(self.amplitudes.conj(), self.decays.conj(), self.fit_residual)

    def scaled(self, c: float) -> "ExponentialKernel":
        return ExponentialKernel(c * self.amplitudes, self.decays, self.fit_residual)

    def concat(self, other: "ExponentialKernel") -> "ExponentialKernel":
        return ExponentialKernel(
            np.concatenate([self.amplitudes, other.amplitudes]),
            np.concatenate([self.decays, other.decays]),
        )


def laplace_at(kernel: ExponentialKernel, s: complex, tol: float = 1e-12) -> complex:
    """Exact rational evaluation sum_m a_m / (s + nu_m)."""
    den = s + kernel.decays
    if np.any(np.abs(den) <= tol * np.maximum(1.0, np.abs(kernel.decays))):
        raise KernelPoleError(f"kernel pole at s = {s}")
    return complex((kernel.amplitudes / den).sum())


def decompose(spec: BathSpec) -> ExponentialKernel:
    """Matsubara expansion of the Drude-Lorentz correlation function.

    Term 0 is lambda*gamma*(cot(beta*gamma/2) - i) with decay gamma; terms
    k = 1..K have amplitude (4 lambda gamma / beta) nu_k / (nu_k^2 - gamma^2)
    and decay nu_k = 2 pi k / beta.
    """
    if spec.family != "lorentzian":
        raise ValueError("decompose() handles the Lorentzian family; use decompose_ohmic()")
    lam, gam, beta = spec.lambda_cm1, spec.gamma_cm1, spec.beta
    x = 0.5 * beta * gam
    if abs(math.sin(x)) < 1e-12 * max(1.0, x):
        raise DegenerateMatsubaraError("degenerate Matsubara point: cot pole at beta*gamma/2 = k*pi")
    k = np.arange(1, spec.n_matsubara + 1)
    nu_k = 2.0 * np.pi * k / beta
    if np.any(np.abs(nu_k - gam) < 1e-9 * gam):
        raise DegenerateMatsubaraError("degenerate Matsubara point: nu_k = gamma")
    a0 = lam * gam * (1.0 / math.tan(x) - 1j)
    ak = 4.0 * lam * gam / beta * nu_k / (nu_k**2 - gam**2)
    return ExponentialKernel(np.concatenate([[a0], ak]), np.concatenate([[gam], nu_k]))


def ohmic_correlation(spec: BathSpec, t) -> np.ndarray:
    """C(t) for J = lambda (w/gamma) exp(-w/gamma), any t >= 0.

    The imaginary part and the zero-temperature real part are closed-form;
    the thermal remainder (2/pi) int J n cos(wt) is done by quadrature.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    lam, gam, beta = spec.lambda_cm1, spec.gamma_cm1, spec.beta
    x = gam * t
    im = -2.0 * lam * gam * x / (np.pi * (1 + x**2) ** 2)
    re0 = lam * gam / np.pi * (1 - x**2) / (1 + x**2) ** 2

    def jn(w):
        if w == 0.0:
            return lam / (gam * beta)
        return lam * (w / gam) * math.exp(-w / gam) / math.expm1(beta * w)

    wmax = 50.0 * gam
    therm = np.empty_like(t)
    for i, ti in enumerate(t):
        if ti == 0.0:
            val = quad(jn, 0.0, wmax, epsabs=0, epsrel=1e-11, limit=400)[0]
        else:
            val = quad(jn, 0.0, wmax, weight="cos", wvar=ti, epsabs=0, epsrel=1e-11, limit=400)[0]
        therm[i] = 2.0 / np.pi * val
    return re0 + therm + 1j * im


@lru_cache(maxsize=64)
def _unit_ohmic_fit(gamma: float, temperature: float, fit_terms: int, t_max: float, target: float):
    spec = BathSpec("ohmic", 1.0, gamma, temperature)
    t_log = np.concatenate([[0.0], np.geomspace(t_max * 1e-4, t_max, 240)])
    t_uni = np.linspace(0.0, t_max, 4 * fit_terms + 80)
    fit = fit_exponentials(
        t_log,
        ohmic_correlation(spec, t_log),
        fit_terms,
        t_uniform=t_uni,
        y_uniform=ohmic_correlation(spec, t_uni),
        target=target,
    )
    return fit


def decompose_ohmic(
    spec: BathSpec,
    fit_terms: int = 6,
    t_max: float | None = None,
    rel_tol: float = 1e-3,
) -> ExponentialKernel:
    """Exponential fit of the Ohmic correlation function.

    ``t_max`` is in internal time units (cm); the default 40/gamma covers the
    decay of C(t) to well below 1e-3 of its peak.  C is linear in lambda, so
    the fit is done once per (gamma, T) at unit lambda and rescaled.
    """
    if spec.family != "ohmic":
        raise ValueError("decompose_ohmic() handles the Ohmic family")
    if not 2 <= fit_terms <= 12:
        raise ValueError("fit_terms must be in [2, 12]")
    if spec.lambda_cm1 == 0.0:
        return ExponentialKernel(np.zeros(fit_terms, complex), np.ones(fit_terms, complex), 0.0)
    if t_max is None:
        t_max = 40.0 / spec.gamma_cm1
    if not t_max > 0:
        raise ValueError("t_max must be > 0")
    fit = _unit_ohmic_fit(
        float(spec.gamma_cm1), float(spec.temperature_K), int(fit_terms), float(t_max), 0.2 * rel_tol
    )
    if fit.residual > rel_tol:
        raise KernelFitError("Ohmic exponential fit did not reach rel_tol", fit.residual)
    return ExponentialKernel(spec.lambda_cm1 * fit.amplitudes, fit.decays, fit.residual)


def kernel_for(
    spec: BathSpec, fit_terms: int = 6, t_max: float | None = None, rel_tol: float = 1e-3
) -> ExponentialKernel:
    """Dispatch on the bath family.

    A Lorentzian bath that lands exactly on a degenerate Matsubara point is
    retried with the temperature nudged by 1e-6 K.
    """
    if spec.family == "ohmic":
        return decompose_ohmic(spec, fit_terms, t_max, rel_tol)
    try:
        return decompose(spec)
    except DegenerateMatsubaraError:
        return decompose(spec.with_(temperature_K=spec.temperature_K + 1e-6))


def correlation_coefficients(geom, spec: BathSpec, n_sites: int) -> np.ndarray:
    """c_jk = lambda_jk / lambda (unit diagonal)."""
    if spec.r_cor_angstrom == 0.0:
        return np.eye(n_sites)
    if geom is None:
        raise ValueError("spatial correlations need a geometry (r_cor > 0)")
    d = geom.distances()
    with np.errstate(over="ignore"):
        c = spec.correlation_sign * np.exp(-d / spec.r_cor_angstrom)
    np.fill_diagonal(c, 1.0)
    return c


def spatial_correlation_matrix(geom, spec: BathSpec) -> np.ndarray:
    """lambda_jk: lambda on the diagonal, sign*lambda*exp(-d_jk/R_cor) off it."""
    return spec.lambda_cm1 * correlation_coefficients(geom, spec, geom.n_sites)


def mean_phonon_energy(spec: BathSpec, cutoff_factor: float = 50.0) -> float:
    """int J w n dw / int J n dw over [0, cutoff_factor*gamma]."""
    beta = spec.beta
    unit = spec.with_(lambda_cm1=1.0)

    def jn(w):
        if w == 0.0:
            return float(spectral_density(unit, 1e-300) / 1e-300) / beta
        return float(spectral_density(unit, w)) / math.expm1(beta * w)

    wmax = cutoff_factor * spec.gamma_cm1
    num = quad(lambda w: w * jn(w), 0.0, wmax, epsabs=0, epsrel=1e-8, limit=400)[0]
    den = quad(jn, 0.0, wmax, epsabs=0, epsrel=1e-8, limit=400)[0]
    return num / den
