"""Random chromophore ensembles and structural analytics.

Every sample draws from its own generator,
``SeedSequence(seed, spawn_key=(index,))``, so results do not depend on how
samples are distributed over workers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import permutations

import numpy as np
import scipy.linalg as sla

from .bath import BathSpec
from .errors import NumericalError
from .landscape import parallel_map
from .model import (
    ChromophoreGeometry,
    ExcitonModel,
    PerturbationSpec,
    build_hamiltonian,
    energy_scale_g,
    isotropic_angles,
    perturb_geometry,
)
from .solver import SolverOptions, TransferProblem, build_generator, ete_frequency, vec

MAX_PATH_SITES = 10
PACKING_ATTEMPTS = 100_000


def sample_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))


@dataclass(frozen=True)
class EnsembleSpec:
    n_sites: int = 7
    diameter: float = 30.0
    n_samples: int = 1000
    bath: BathSpec = field(default_factory=BathSpec)
    seed: int = 0
    energy_range: tuple[float, float] = (0.0, 500.0)
    min_distance: float = 5.0
    endpoint_mode: str = "poles"
    trap_rate: float = 1.0
    loss_rate: float = 1e-3
    options: SolverOptions = field(default_factory=SolverOptions)

    def __post_init__(self):
        if self.n_sites < 2:
            raise ValueError("n_sites must be >= 2")
        if not self.diameter > 2 * self.min_distance:
            raise ValueError(f"diameter must exceed {2 * self.min_distance} Angstrom")
        if self.n_samples < 1:
            raise ValueError("n_samples must be >= 1")
        if self.endpoint_mode not in ("poles", "free"):
            raise ValueError("endpoint_mode must be 'poles' or 'free'")
        lo, hi = self.energy_range
        if not 0 <= lo <= hi:
            raise ValueError("energy_range must satisfy 0 <= lo <= hi")


def _uniform_in_ball(rng: np.random.Generator, radius: float) -> np.ndarray:
    v = rng.normal(size=3)
    v /= np.linalg.norm(v)
    return v * radius * rng.uniform() ** (1.0 / 3.0)


def sample_positions(spec: EnsembleSpec, rng: np.random.Generator) -> np.ndarray:
    """Site 1 first, the trap last; volume-uniform with a minimum distance."""
    r = 0.5 * spec.diameter
    if spec.endpoint_mode == "poles":
        fixed = [np.array([0.0, 0.0, r]), np.array([0.0, 0.0, -r])]
        need = spec.n_sites - 2
    else:
        fixed = []
        need = spec.n_sites
    placed: list[np.ndarray] = []
    attempts = 0
    while len(placed) < need:
        if attempts >= PACKING_ATTEMPTS:
            raise ValueError(
                f"packing infeasible: {spec.n_sites} sites in d={spec.diameter} after {attempts} draws"
            )
        attempts += 1
        q = _uniform_in_ball(rng, r)
        if all(np.linalg.norm(q - p) >= spec.min_distance for p in fixed + placed):
            placed.append(q)
    if spec.endpoint_mode == "poles":
        return np.array([fixed[0], *placed, fixed[1]])
    return np.array(placed)


def sample_configuration(spec: EnsembleSpec, rng: np.random.Generator):
    """Random geometry and its model (initial site 1, trap at site N)."""
    pos = sample_positions(spec, rng)
    n = spec.n_sites
    theta, phi = isotropic_angles(rng, n)
    energies = rng.uniform(*spec.energy_range, n)
    geom = ChromophoreGeometry(pos, theta, phi, energies)
    model = ExcitonModel(
        build_hamiltonian(geom),
        initial_site=1,
        trap_site=n,
        trap_rate=spec.trap_rate,
        loss_rate=spec.loss_rate,
        geometry=geom,
    )
    return geom, model


def sample_density_matrix(n: int, rng: np.random.Generator) -> np.ndarray:
    """Hilbert-Schmidt random density matrix G G^dag / tr(G G^dag)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    G = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    rho = G @ G.conj().T
    rho /= np.trace(rho).real
    return 0.5 * (rho + rho.conj().T)


def ground_trap_overlap(model: ExcitonModel, degeneracy_tol: float = 1e-9) -> float:
    """Amplitude |<trap|psi_0>| of the trap site in the exciton ground state.

    For a degenerate ground level the norm of the trap projection onto the
    whole ground subspace is returned.
    """
    E, U = np.linalg.eigh(model.hamiltonian)
    ground = np.abs(E - E[0]) <= degeneracy_tol * max(1.0, abs(E[0]))
    return float(np.sqrt(np.sum(np.abs(U[model.trap_index, ground]) ** 2)))


def ground_state_degenerate(model: ExcitonModel, degeneracy_tol: float = 1e-9) -> bool:
    E = np.linalg.eigvalsh(model.hamiltonian)
    return bool(len(E) > 1 and abs(E[1] - E[0]) <= degeneracy_tol * max(1.0, abs(E[0])))


def path_count(m: int) -> int:
    """Number of ordered initial-to-trap site paths among m sites."""
    return sum(math.perm(m - 2, k) for k in range(m - 1))


def connectivity_paths(
    model: ExcitonModel, initial: int | None = None, trap: int | None = None
) -> list[tuple[tuple[int, ...], float]]:
    """All simple paths from initial to trap with strength (sum_links 1/|H|)^-1.

    Paths are 1-indexed site tuples.  A path through a zero coupling has
    strength 0.
    """
    n = model.n_sites
    if n > MAX_PATH_SITES:
        raise ValueError(
            f"path enumeration is limited to {MAX_PATH_SITES} sites; use a sampling approach for larger systems"
        )
    i0 = (model.initial_site if initial is None else initial) - 1
    t0 = (model.trap_site if trap is None else trap) - 1
    if i0 == t0:
        raise ValueError("initial and trap sites must differ")
    absH = np.abs(model.hamiltonian)
    with np.errstate(divide="ignore", over="ignore"):
        inv = np.where(absH > 0, 1.0 / absH, np.inf)
    middle = [s for s in range(n) if s not in (i0, t0)]
    out = []
    for k in range(len(middle) + 1):
        for mid in permutations(middle, k):
            path = (i0, *mid, t0)
            total = sum(inv[a, b] for a, b in zip(path[:-1], path[1:]))
            out.append((tuple(p + 1 for p in path), 0.0 if math.isinf(total) else 1.0 / total))
    return out


def dominant_path_count(model: ExcitonModel, threshold: float = 1000.0) -> int:
    return sum(1 for _, s in connectivity_paths(model) if s > threshold)


def z_axis_proximity(geom: ChromophoreGeometry, initial: int = 1, trap: int | None = None) -> float:
    """Mean perpendicular distance of the other sites from the initial-trap line."""
    n = geom.n_sites
    trap = n if trap is None else trap
    p0 = geom.positions[initial - 1]
    axis = geom.positions[trap - 1] - p0
    axis = axis / np.linalg.norm(axis)
    others = [s for s in range(n) if s not in (initial - 1, trap - 1)]
    if not others:
        return 0.0
    rel = geom.positions[others] - p0
    perp = rel - np.outer(rel @ axis, axis)
    return float(np.linalg.norm(perp, axis=1).mean())


def histogram(values, bins: int = 10, lo: float = 0.0, hi: float = 1.0) -> list[int]:
    v = np.clip(np.asarray(values, dtype=float), lo, hi)
    return np.histogram(v, bins=bins, range=(lo, hi))[0].tolist()


def gap_statistics(models_or_gaps, bins: int = 10) -> dict:
    """Mean, std and histogram of the energy scale g over a set of models."""
    g = np.array(
        [x if np.isscalar(x) else energy_scale_g(x.hamiltonian) for x in models_or_gaps], dtype=float
    )
    if len(g) == 0:
        return {"mean": math.nan, "std": math.nan, "histogram": [], "edges": []}
    counts, edges = np.histogram(g, bins=bins)
    return {
        "mean": float(g.mean()),
        "std": float(g.std()),
        "histogram": counts.tolist(),
        "edges": edges.tolist(),
    }


@dataclass
class EnsembleReport:
    spec: EnsembleSpec
    samples: list[dict]
    geometries: list[ChromophoreGeometry] | None = None

    @property
    def valid(self) -> list[dict]:
        return [s for s in self.samples if not s["failed"]]

    @property
    def etes(self) -> np.ndarray:
        return np.array([s["ete"] for s in self.valid], dtype=float)

    @property
    def n_failed(self) -> int:
        return len(self.samples) - len(self.valid)

    def aggregates(self) -> dict:
        e = self.etes
        return {
            "n_samples": len(self.samples),
            "n_failed": self.n_failed,
            "mean": float(e.mean()) if len(e) else math.nan,
            "std": float(e.std()) if len(e) else math.nan,
            "histogram": histogram(e),
            "fraction_above_0.9": float(np.mean(e > 0.9)) if len(e) else math.nan,
        }

    def ranked(self, m: int, top: bool = True) -> list[dict]:
        """Top (or bottom) m valid samples by ETE; ties broken by sample index."""
        key = (lambda s: (-s["ete"], s["index"])) if top else (lambda s: (s["ete"], s["index"]))
        return sorted(self.valid, key=key)[:m]

    def subset_mean(self, field_name: str, m: int, top: bool = True) -> float:
        vals = [s[field_name] for s in self.ranked(m, top) if s.get(field_name) is not None]
        return float(np.mean(vals)) if vals else math.nan

    def to_dict(self) -> dict:
        return {
            "spec": {
                "n_sites": self.spec.n_sites,
                "diameter": self.spec.diameter,
                "n_samples": self.spec.n_samples,
                "seed": self.spec.seed,
                "energy_range": list(self.spec.energy_range),
                "min_distance": self.spec.min_distance,
                "endpoint_mode": self.spec.endpoint_mode,
                "trap_rate": self.spec.trap_rate,
                "loss_rate": self.spec.loss_rate,
                "bath": self.spec.bath.to_dict(),
            },
            "aggregates": self.aggregates(),
            "samples": self.samples,
            "notes": {"gap_measure": "energy_scale_g (nuclear-norm average gap)"},
        }


def _ensemble_sample(args) -> tuple[dict, dict]:
    spec, index, analytics = args
    rng = sample_rng(spec.seed, index)
    geom, model = sample_configuration(spec, rng)
    rec: dict = {"index": index, "failed": False}
    try:
        res = ete_frequency(TransferProblem(model, spec.bath, options=spec.options))
        rec["ete"] = res.ete
        if res.diagnostics.get("unphysical"):
            rec["unphysical"] = True
    except (NumericalError, np.linalg.LinAlgError) as exc:
        rec.update(ete=None, failed=True, error=str(exc))
    if analytics:
        rec["g"] = energy_scale_g(model.hamiltonian)
        rec["ground_trap_overlap"] = ground_trap_overlap(model)
        rec["z_axis_mean_distance"] = z_axis_proximity(geom) if spec.endpoint_mode == "poles" else None
        rec["dominant_path_count"] = (
            dominant_path_count(model) if spec.n_sites <= MAX_PATH_SITES else None
        )
    return rec, geom.to_dict()


def run_ensemble(
    spec: EnsembleSpec,
    threads: int | None = 1,
    analytics: bool = True,
    keep_geometries: bool = False,
) -> EnsembleReport:
    tasks = [(spec, i, analytics) for i in range(spec.n_samples)]
    out = parallel_map(_ensemble_sample, tasks, threads, chunksize=16)
    samples = [r for r, _ in out]
    geoms = [ChromophoreGeometry.from_dict(g) for _, g in out] if keep_geometries else None
    return EnsembleReport(spec, samples, geoms)


def site_count_scan(
    diameter: float,
    n_values,
    samples_per_n: int,
    bath: BathSpec | None = None,
    seed: int = 0,
    threads: int | None = 1,
) -> list[dict]:
    """Mean and std of ETE versus the number of chromophores."""
    bath = bath or BathSpec()
    rows = []
    for n in n_values:
        spec = EnsembleSpec(n_sites=int(n), diameter=diameter, n_samples=samples_per_n, bath=bath, seed=seed)
        agg = run_ensemble(spec, threads, analytics=False).aggregates()
        rows.append({"n_sites": int(n), "mean": agg["mean"], "std": agg["std"], "n_failed": agg["n_failed"]})
    return rows


def _perturbed_sample(args) -> float:
    model, bath, pspec, seed, index, options = args
    rng = sample_rng(seed, index)
    geom = perturb_geometry(model.geometry, pspec, rng)
    m = model.with_(hamiltonian=build_hamiltonian(geom), geometry=geom)
    try:
        return ete_frequency(TransferProblem(m, bath, options=options)).ete
    except (NumericalError, np.linalg.LinAlgError):
        return math.nan


def perturbation_ensemble(
    model: ExcitonModel,
    pspec: PerturbationSpec,
    n_samples: int,
    bath: BathSpec | None = None,
    seed: int = 0,
    threads: int | None = 1,
    options: SolverOptions | None = None,
) -> np.ndarray:
    """ETE of geometric perturbations of ``model.geometry`` (couplings rebuilt)."""
    if model.geometry is None:
        raise ValueError("perturbation studies need a model with geometry")
    bath = bath or BathSpec()
    options = options or SolverOptions()
    tasks = [(model, bath, pspec, seed, i, options) for i in range(n_samples)]
    return np.array(parallel_map(_perturbed_sample, tasks, threads, chunksize=16), dtype=float)


def initial_state_ensemble(
    model: ExcitonModel,
    n_samples: int,
    bath: BathSpec | None = None,
    seed: int = 0,
    options: SolverOptions | None = None,
) -> np.ndarray:
    """ETE over Hilbert-Schmidt random initial states.

    The generator is factorized once; each state costs one back-substitution.
    """
    problem = TransferProblem(model, bath or BathSpec(), options=options or SolverOptions())
    G = build_generator(problem).matrix
    lu = sla.lu_factor(G)
    n = model.n_sites
    t = model.trap_index
    rhos = np.column_stack([vec(sample_density_matrix(n, sample_rng(seed, i))) for i in range(n_samples)])
    X = sla.lu_solve(lu, -rhos)
    return 2.0 * problem.trap_rate * X[t + n * t].real
