"""Frenkel-exciton models: geometry, dipole couplings and the FMO reference data."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

DIPOLE_CONSTANT = 134000.0
"""C|mu|^2 in cm^-1 Angstrom^3."""

MIN_PAIR_DISTANCE = 5.0

# FMO monomer Hamiltonian (cm^-1); BChl 3 is the zero of energy.
FMO_HAMILTONIAN = np.array(
    [
        [280, -106, 8, -5, 6, -8, -4],
        [-106, 420, 28, 6, 2, 13, 1],
        [8, 28, 0, -62, -1, -9, 17],
        [-5, 6, -62, 175, -70, -19, -57],
        [6, 2, -1, -70, 320, 40, -2],
        [-8, 13, -9, -19, 40, 360, 32],
        [-4, 1, 17, -57, -2, 32, 260],
    ],
    dtype=float,
)
FMO_HAMILTONIAN.setflags(write=False)

# Mg positions (Angstrom) and dipole angles (rad) of the seven BChls.  phi is
# stored with the tabulated +pi offset already applied.
_FMO_TABLE = np.array(
    [
        [28.032, 163.534, 94.400, 0.3816, -0.6423],
        [17.140, 168.057, 100.162, 0.067, 0.5209],
        [5.409, 180.553, 97.621, 0.1399, 1.3616],
        [9.062, 187.635, 89.474, 0.257, -0.6098],
        [21.823, 185.260, 84.721, -0.1606, 0.6899],
        [23.815, 173.888, 82.810, -0.4214, -1.4686],
        [12.735, 174.887, 89.044, 0.578, -1.0076],
    ]
)


def _frozen(a, dtype=float) -> np.ndarray:
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


def dipole_vectors(theta, phi) -> np.ndarray:
    """Unit dipoles from elevation ``theta`` and azimuth ``phi`` (radians).

    ``theta`` is measured from the xy-plane, which is the convention that
    reproduces the coupling signs of the tabulated FMO data.
    """
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    return np.stack(
        [np.cos(theta) * np.cos(phi), np.cos(theta) * np.sin(phi), np.sin(theta)],
        axis=-1,
    )


@dataclass(frozen=True, eq=False)
class ChromophoreGeometry:
    """Positions (Angstrom), dipole angles (rad) and site energies (cm^-1)."""

    positions: np.ndarray
    theta: np.ndarray
    phi: np.ndarray
    energies: np.ndarray
    coupling_constant: float = DIPOLE_CONSTANT

    def __post_init__(self):
        pos = _frozen(self.positions)
        n = pos.shape[0]
        if pos.shape != (n, 3):
            raise ValueError(f"positions must have shape (N, 3), got {pos.shape}")
        object.__setattr__(self, "positions", pos)
        for name in ("theta", "phi", "energies"):
            arr = _frozen(getattr(self, name))
            if arr.shape != (n,):
                raise ValueError(f"{name} must have shape ({n},), got {arr.shape}")
            object.__setattr__(self, name, arr)
        if not np.all(np.isfinite(self.energies)):
            raise ValueError("site energies must be finite")

    @property
    def n_sites(self) -> int:
        return self.positions.shape[0]

    @property
    def dipoles(self) -> np.ndarray:
        return dipole_vectors(self.theta, self.phi)

    def distances(self) -> np.ndarray:
        diff = self.positions[:, None, :] - self.positions[None, :, :]
        return np.linalg.norm(diff, axis=-1)

    def min_pair_distance(self) -> float:
        d = self.distances()
        if self.n_sites < 2:
            return math.inf
        return float(d[np.triu_indices(self.n_sites, 1)].min())

    def to_dict(self) -> dict:
        return {
            "sites": [
                {
                    "position": [float(x) for x in p],
                    "theta": float(t),
                    "phi": float(f),
                    "energy": float(e),
                }
                for p, t, f, e in zip(self.positions, self.theta, self.phi, self.energies)
            ],
            "coupling_constant": float(self.coupling_constant),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ChromophoreGeometry":
        sites = data["sites"]
        return cls(
            positions=[s["position"] for s in sites],
            theta=[s["theta"] for s in sites],
            phi=[s["phi"] for s in sites],
            energies=[s["energy"] for s in sites],
            coupling_constant=data.get("coupling_constant", DIPOLE_CONSTANT),
        )


def save_geometry(geom: ChromophoreGeometry, path) -> None:
    Path(path).write_text(json.dumps(geom.to_dict(), indent=2) + "\n")


def load_geometry(path) -> ChromophoreGeometry:
    return ChromophoreGeometry.from_dict(json.loads(Path(path).read_text()))


@dataclass(frozen=True, eq=False)
class ExcitonModel:
    """Frenkel Hamiltonian plus sink placement.

    Site labels are 1-indexed.  Rates are in ps^-1; ``loss_rate`` acts on every
    site, ``trap_rate`` on ``trap_site`` only.
    """

    hamiltonian: np.ndarray
    initial_site: int = 1
    trap_site: int = 3
    trap_rate: float = 1.0
    loss_rate: float = 1e-3
    geometry: ChromophoreGeometry | None = None
    allow_same_sites: bool = False

    def __post_init__(self):
        h = _frozen(self.hamiltonian)
        if h.ndim != 2 or h.shape[0] != h.shape[1]:
            raise ValueError("hamiltonian must be square")
        if not np.allclose(h, h.T, atol=1e-10, rtol=0):
            raise ValueError("hamiltonian must be symmetric")
        object.__setattr__(self, "hamiltonian", h)
        n = h.shape[0]
        for name in ("initial_site", "trap_site"):
            s = getattr(self, name)
            if not 1 <= s <= n:
                raise ValueError(f"{name}={s} out of range 1..{n}")
        if self.trap_site == self.initial_site and not self.allow_same_sites:
            raise ValueError("trap_site equals initial_site")
        if self.trap_rate < 0 or self.loss_rate < 0:
            raise ValueError("rates must be non-negative")
        if self.geometry is not None and self.geometry.n_sites != n:
            raise ValueError("geometry size does not match hamiltonian")

    @property
    def n_sites(self) -> int:
        return self.hamiltonian.shape[0]

    @property
    def trap_index(self) -> int:
        return self.trap_site - 1

    @property
    def initial_index(self) -> int:
        return self.initial_site - 1

    def with_(self, **changes) -> "ExcitonModel":
        return replace(self, **changes)

    @classmethod
    def from_geometry(cls, geom: ChromophoreGeometry, **kwargs) -> "ExcitonModel":
        return cls(hamiltonian=build_hamiltonian(geom), geometry=geom, **kwargs)


def build_hamiltonian(geom: ChromophoreGeometry) -> np.ndarray:
    """Point-dipole Frenkel Hamiltonian in cm^-1.

    J_jk = C/R^3 (mu_j.mu_k - 3 (mu_j.R)(mu_k.R)/R^2) with unit dipoles and
    C = ``geom.coupling_constant``; the diagonal holds the site energies.
    """
    n = geom.n_sites
    if n < 2:
        raise ValueError("need at least two sites")
    R = geom.positions[:, None, :] - geom.positions[None, :, :]
    r = np.linalg.norm(R, axis=-1)
    off = ~np.eye(n, dtype=bool)
    if np.any(r[off] == 0.0):
        raise ValueError("degenerate geometry: coincident site positions")
    np.fill_diagonal(r, 1.0)
    mu = geom.dipoles
    mu_r_j = np.einsum("ja,jka->jk", mu, R)
    mu_r_k = np.einsum("ka,jka->jk", mu, R)
    J = geom.coupling_constant / r**3 * (mu @ mu.T - 3.0 * mu_r_j * mu_r_k / r**2)
    J[~off] = 0.0
    J = 0.5 * (J + J.T)
    return J + np.diag(geom.energies)


def fmo_geometry() -> ChromophoreGeometry:
    """FMO chromophore geometry with the tabulated site energies."""
    return ChromophoreGeometry(
        positions=_FMO_TABLE[:, :3],
        theta=_FMO_TABLE[:, 3],
        phi=_FMO_TABLE[:, 4] + np.pi,
        energies=np.diag(FMO_HAMILTONIAN),
    )


def fmo_canonical() -> ExcitonModel:
    """FMO monomer with the tabulated Hamiltonian.

    Initial excitation on BChl 1, trap at BChl 3, r_trap = 1 ps^-1,
    r_loss = 1/(1 ns).  The chromophore geometry is attached for distance-based
    studies but the Hamiltonian is not rebuilt from it.
    """
    return ExcitonModel(
        hamiltonian=FMO_HAMILTONIAN,
        initial_site=1,
        trap_site=3,
        trap_rate=1.0,
        loss_rate=1e-3,
        geometry=fmo_geometry(),
    )


def energy_scale_g(H) -> float:
    """Average excitonic gap g = ||H - Tr(H) I/N||_* / (N - 1)."""
    H = np.asarray(H)
    n = H.shape[0]
    if n < 2:
        return 0.0
    traceless = H - np.trace(H) / n * np.eye(n)
    return float(np.linalg.svd(traceless, compute_uv=False).sum() / (n - 1))


def rescale_compactness(geom: ChromophoreGeometry, k: float) -> ChromophoreGeometry:
    """Scale all positions by ``k`` about the centroid."""
    if not k > 0:
        raise ValueError("compactness factor must be positive")
    c = geom.positions.mean(axis=0)
    return replace(geom, positions=c + k * (geom.positions - c))


@dataclass(frozen=True)
class PerturbationSpec:
    """Disorder applied by :func:`perturb_geometry`.

    Jitters are half-widths of uniform distributions.  ``redraw_dipoles``
    replaces orientations with isotropic ones; ``energy_range`` replaces site
    energies with uniform draws instead of jittering them.
    """

    pos_jitter: float = 2.5
    angle_jitter: float = math.radians(5.0)
    energy_jitter: float = 10.0
    redraw_dipoles: bool = False
    energy_range: tuple[float, float] | None = None
    min_distance: float = MIN_PAIR_DISTANCE
    max_attempts: int = 10_000

    def __post_init__(self):
        if min(self.pos_jitter, self.angle_jitter, self.energy_jitter) < 0:
            raise ValueError("jitters must be non-negative")

    @classmethod
    def large_variation(cls, pos_jitter: float = 2.5) -> "PerturbationSpec":
        return cls(
            pos_jitter=pos_jitter,
            angle_jitter=math.pi,
            energy_jitter=0.0,
            redraw_dipoles=True,
            energy_range=(0.0, 500.0),
        )


def isotropic_angles(rng: np.random.Generator, n: int) -> tuple[np.ndarray, np.ndarray]:
    """(theta, phi) uniform on the sphere in the elevation convention."""
    theta = np.arcsin(rng.uniform(-1.0, 1.0, n))
    phi = rng.uniform(0.0, 2.0 * np.pi, n)
    return theta, phi


def perturb_geometry(
    geom: ChromophoreGeometry, spec: PerturbationSpec, rng: np.random.Generator
) -> ChromophoreGeometry:
    n = geom.n_sites
    if spec.pos_jitter > 0:
        for _ in range(spec.max_attempts):
            pos = geom.positions + rng.uniform(-spec.pos_jitter, spec.pos_jitter, (n, 3))
            d = np.linalg.norm(pos[:, None] - pos[None], axis=-1)
            if d[np.triu_indices(n, 1)].min() >= spec.min_distance:
                break
        else:
            raise ValueError(
                f"infeasible jitter: no valid positions after {spec.max_attempts} attempts"
            )
    else:
        pos = geom.positions

    if spec.redraw_dipoles:
        theta, phi = isotropic_angles(rng, n)
    elif spec.angle_jitter > 0:
        theta = geom.theta + rng.uniform(-spec.angle_jitter, spec.angle_jitter, n)
        phi = geom.phi + rng.uniform(-spec.angle_jitter, spec.angle_jitter, n)
    else:
        theta, phi = geom.theta, geom.phi

    if spec.energy_range is not None:
        energies = rng.uniform(*spec.energy_range, n)
    elif spec.energy_jitter > 0:
        energies = geom.energies + rng.uniform(-spec.energy_jitter, spec.energy_jitter, n)
        energies = np.clip(energies, 0.0, None)
    else:
        energies = geom.energies

    return replace(geom, positions=pos, theta=theta, phi=phi, energies=energies)
