"""Two-parameter ETE landscapes, stencil metrics and the governing parameter."""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .bath import BathSpec
from .errors import NumericalError
from .model import ExcitonModel, build_hamiltonian, energy_scale_g, rescale_compactness
from .solver import SolverOptions, TransferProblem, ete_frequency, mixed_state
from .units import kT

PARAMETERS = ("lambda", "gamma", "temperature", "r_cor", "trap_time", "loss_time", "compactness")


@dataclass(frozen=True)
class GridAxis:
    """One sweep axis.  Times are in ps, energies in cm^-1, lengths in Angstrom."""

    name: str
    min: float
    max: float
    points: int
    scale: str = "linear"

    def __post_init__(self):
        if self.name not in PARAMETERS:
            raise ValueError(f"unknown axis parameter {self.name!r}; expected one of {PARAMETERS}")
        if self.scale not in ("linear", "log"):
            raise ValueError("scale must be 'linear' or 'log'")
        if not self.min < self.max:
            raise ValueError("axis requires min < max")
        if self.points < 2:
            raise ValueError("axis requires at least 2 points")
        if self.scale == "log" and self.min <= 0:
            raise ValueError("log axis requires min > 0")

    @classmethod
    def parse(cls, text: str) -> "GridAxis":
        """``name:min:max:points[:scale]``; missing fields fall back to the defaults."""
        parts = text.split(":")
        name = parts[0]
        if name not in DEFAULT_AXES:
            raise ValueError(f"unknown axis parameter {name!r}")
        base = DEFAULT_AXES[name]
        vals = [base.min, base.max, base.points, base.scale]
        for i, p in enumerate(parts[1:5]):
            if p:
                vals[i] = p
        try:
            return cls(name, float(vals[0]), float(vals[1]), int(vals[2]), str(vals[3]))
        except (TypeError, ValueError) as exc:
            raise ValueError(f"bad axis spec {text!r}: {exc}") from None

    @property
    def values(self) -> np.ndarray:
        if self.scale == "log":
            return np.geomspace(self.min, self.max, self.points)
        return np.linspace(self.min, self.max, self.points)

    @property
    def spacing(self) -> float:
        """Step in the native coordinate (natural log on log axes)."""
        if self.scale == "log":
            return (math.log(self.max) - math.log(self.min)) / (self.points - 1)
        return (self.max - self.min) / (self.points - 1)

    def __str__(self) -> str:
        return f"{self.name}:{self.min:g}:{self.max:g}:{self.points}:{self.scale}"


DEFAULT_AXES = {
    "lambda": GridAxis("lambda", 1.0, 500.0, 60, "log"),
    "gamma": GridAxis("gamma", 5.0, 500.0, 60, "log"),
    "temperature": GridAxis("temperature", 35.0, 350.0, 60, "linear"),
    "trap_time": GridAxis("trap_time", 1e-3, 1e3, 60, "log"),
    "loss_time": GridAxis("loss_time", 10.0, 1e4, 60, "log"),
    "r_cor": GridAxis("r_cor", 0.0, 100.0, 60, "linear"),
    "compactness": GridAxis("compactness", 0.5, 5.0, 60, "log"),
}


def apply_parameter(model: ExcitonModel, bath: BathSpec, name: str, value: float):
    """Return (model, bath) with one sweep parameter set.

    ``compactness`` rescales the attached geometry and rebuilds the
    Hamiltonian from point dipoles, so it requires ``model.geometry``.
    """
    if name == "lambda":
        return model, bath.with_(lambda_cm1=value)
    if name == "gamma":
        return model, bath.with_(gamma_cm1=value)
    if name == "temperature":
        return model, bath.with_(temperature_K=value)
    if name == "r_cor":
        return model, bath.with_(r_cor_angstrom=value)
    if name == "trap_time":
        return model.with_(trap_rate=1.0 / value), bath
    if name == "loss_time":
        return model.with_(loss_rate=1.0 / value), bath
    if name == "compactness":
        if model.geometry is None:
            raise ValueError("compactness sweeps need a model with geometry")
        geom = rescale_compactness(model.geometry, value)
        return model.with_(hamiltonian=build_hamiltonian(geom), geometry=geom), bath
    raise ValueError(f"unknown parameter {name!r}")


@dataclass
class LandscapeGrid:
    """ETE on an axis1 x axis2 grid.

    Cells where the solver failed or returned eta outside [0, 1] (the
    second-order kernel breaking down at strong coupling) hold NaN and are
    flagged in ``failed``; the out-of-range values are kept in ``raw``.
    """

    axis1: GridAxis
    axis2: GridAxis
    ete: np.ndarray
    failed: np.ndarray
    metadata: dict = field(default_factory=dict)
    unphysical: np.ndarray | None = None
    raw: np.ndarray | None = None

    @property
    def gradient_norm(self) -> np.ndarray:
        return stencil_gradient_norm(self)

    @property
    def hessian_norm(self) -> np.ndarray:
        return stencil_hessian_norm(self)


def _point(args) -> tuple[float, bool]:
    """(eta, unphysical); eta is NaN when the solve fails."""
    model, bath, options, name1, v1, name2, v2 = args
    try:
        m, b = apply_parameter(model, bath, name1, v1)
        m, b = apply_parameter(m, b, name2, v2)
        res = ete_frequency(TransferProblem(m, b, options=options))
    except (NumericalError, np.linalg.LinAlgError, ValueError, FloatingPointError):
        return math.nan, False
    return res.ete, bool(res.diagnostics.get("unphysical", False))


def default_workers() -> int:
    return max(1, os.cpu_count() or 1)


def parallel_map(fn, items, threads: int | None = None, chunksize: int = 8) -> list:
    """Order-preserving map over a process pool; serial when threads == 1."""
    threads = default_workers() if threads is None else threads
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items, chunksize=chunksize))


def sweep(
    model: ExcitonModel,
    bath: BathSpec,
    axis1: GridAxis,
    axis2: GridAxis,
    options: SolverOptions | None = None,
    threads: int | None = 1,
) -> LandscapeGrid:
    """One frequency-domain ETE per grid point; failures become NaN."""
    if axis1.name == axis2.name:
        raise ValueError("axes must name distinct parameters")
    options = options or SolverOptions()
    v1, v2 = axis1.values, axis2.values
    tasks = [
        (model, bath, options, axis1.name, float(a), axis2.name, float(b)) for a in v1 for b in v2
    ]
    out = parallel_map(_point, tasks, threads)
    shape = (len(v1), len(v2))
    raw = np.array([r[0] for r in out], dtype=float).reshape(shape)
    unphysical = np.array([r[1] for r in out], dtype=bool).reshape(shape)
    vals = np.where(unphysical, math.nan, raw)
    failed = ~np.isfinite(vals)
    meta = {
        "failed_points": int(failed.sum()),
        "unphysical_points": int(unphysical.sum()),
        "bath": bath.to_dict(),
    }
    return LandscapeGrid(axis1, axis2, vals, failed, meta, unphysical, raw)


def _d1(z, h, axis):
    s = lambda k: np.roll(z, -k, axis=axis)
    return (-s(2) + 8 * s(1) - 8 * s(-1) + s(-2)) / (12 * h)


def _d2(z, h, axis):
    s = lambda k: np.roll(z, -k, axis=axis)
    return (-s(2) + 16 * s(1) - 30 * z + 16 * s(-1) - s(-2)) / (12 * h * h)


def _dxy(z, hx, hy):
    s = lambda i, j: np.roll(np.roll(z, -i, axis=0), -j, axis=1)
    return (s(1, 1) - s(1, -1) - s(-1, 1) + s(-1, -1)) / (4 * hx * hy)


def _interior(z):
    return z[2:-2, 2:-2]


def gradient_norm_array(z: np.ndarray, hx: float, hy: float) -> np.ndarray:
    """Five-point-stencil |grad z| on the interior (shape reduced by 4 per axis)."""
    z = np.asarray(z, dtype=float)
    if min(z.shape) < 5:
        raise ValueError("stencils need at least 5 points per axis")
    return _interior(np.hypot(_d1(z, hx, 0), _d1(z, hy, 1)))


def hessian_norm_array(z: np.ndarray, hx: float, hy: float, frobenius: bool = False) -> np.ndarray:
    """Spectral (or Frobenius) norm of the 2x2 stencil Hessian on the interior."""
    z = np.asarray(z, dtype=float)
    if min(z.shape) < 5:
        raise ValueError("stencils need at least 5 points per axis")
    xx = _interior(_d2(z, hx, 0))
    yy = _interior(_d2(z, hy, 1))
    xy = _interior(_dxy(z, hx, hy))
    if frobenius:
        return np.sqrt(xx**2 + yy**2 + 2 * xy**2)
    # largest |eigenvalue| of a real symmetric 2x2 matrix
    mean = 0.5 * (xx + yy)
    rad = np.sqrt((0.5 * (xx - yy)) ** 2 + xy**2)
    return np.abs(mean) + rad


def stencil_gradient_norm(grid: LandscapeGrid) -> np.ndarray:
    return gradient_norm_array(grid.ete, grid.axis1.spacing, grid.axis2.spacing)


def stencil_hessian_norm(grid: LandscapeGrid, frobenius: bool = False) -> np.ndarray:
    return hessian_norm_array(grid.ete, grid.axis1.spacing, grid.axis2.spacing, frobenius)


def governing_parameter(lam: float, temperature_K: float, gamma: float, g: float) -> float:
    """Lambda = lambda k_B T / (gamma g)."""
    if not gamma > 0 or not g > 0:
        raise ValueError("gamma and g must be positive")
    return lam * kT(temperature_K) / (gamma * g)


def model_governing_parameter(model: ExcitonModel, bath: BathSpec) -> float:
    return governing_parameter(
        bath.lambda_cm1, bath.temperature_K, bath.gamma_cm1, energy_scale_g(model.hamiltonian)
    )


def trap_site_scan(
    model: ExcitonModel, bath: BathSpec, options: SolverOptions | None = None
) -> list[float]:
    """eta for the trap placed on each site in turn, starting from I/N."""
    options = options or SolverOptions()
    n = model.n_sites
    rho = mixed_state(n)
    out = []
    for s in range(1, n + 1):
        m = model.with_(trap_site=s, allow_same_sites=True)
        out.append(ete_frequency(TransferProblem(m, bath, rho, options)).ete)
    return out
