import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from enaqt.bath import BathSpec
from enaqt.model import ExcitonModel, fmo_canonical, fmo_geometry
from enaqt.landscape import (
    DEFAULT_AXES,
    GridAxis,
    LandscapeGrid,
    apply_parameter,
    governing_parameter,
    gradient_norm_array,
    hessian_norm_array,
    model_governing_parameter,
    stencil_gradient_norm,
    stencil_hessian_norm,
    sweep,
    trap_site_scan,
)
from enaqt.solver import SolverOptions, TransferProblem, ete, ete_frequency

FMO = fmo_canonical()
CANON = BathSpec()

# lambda k_B T / (gamma g) for the canonical FMO model, frozen from a
# plug-in evaluation with g from the singular values of H - <E>.
FMO_LAMBDA = 0.9913449917811102


def test_axis_parse_and_values():
    a = GridAxis.parse("lambda:1:500:60:log")
    assert (a.name, a.min, a.max, a.points, a.scale) == ("lambda", 1.0, 500.0, 60, "log")
    assert a.values[0] == 1.0 and a.values[-1] == pytest.approx(500.0)
    assert a.spacing == pytest.approx(math.log(500) / 59)
    b = GridAxis.parse("temperature:::5")
    assert (b.min, b.max, b.points, b.scale) == (35.0, 350.0, 5, "linear")
    assert b.spacing == pytest.approx(315 / 4)
    assert GridAxis.parse(str(a)) == a


@pytest.mark.parametrize(
    "text", ["bogus:1:2:3", "lambda:5:1:10", "lambda:1:5:1", "lambda:0:5:4:log", "lambda:1:5:4:cubic", "gamma:a:b:c"]
)
def test_axis_invalid(text):
    with pytest.raises(ValueError):
        GridAxis.parse(text)


def test_default_axes_ranges():
    assert (DEFAULT_AXES["trap_time"].min, DEFAULT_AXES["trap_time"].max) == (1e-3, 1e3)
    assert (DEFAULT_AXES["loss_time"].min, DEFAULT_AXES["loss_time"].max) == (10.0, 1e4)
    assert DEFAULT_AXES["r_cor"].scale == "linear"
    assert DEFAULT_AXES["compactness"].scale == "log"


def test_apply_parameter():
    m, b = apply_parameter(FMO, CANON, "trap_time", 0.5)
    assert m.trap_rate == 2.0 and b == CANON
    m, b = apply_parameter(FMO, CANON, "r_cor", 12.0)
    assert b.r_cor_angstrom == 12.0
    with pytest.raises(ValueError):
        apply_parameter(FMO.with_(geometry=None), CANON, "compactness", 2.0)
    g = fmo_geometry()
    m, _ = apply_parameter(FMO.with_(geometry=g), CANON, "compactness", 2.0)
    np.testing.assert_allclose(m.geometry.distances(), 2 * g.distances(), atol=1e-9)
    off = ~np.eye(7, dtype=bool)
    base = apply_parameter(FMO.with_(geometry=g), CANON, "compactness", 1.0)[0].hamiltonian
    np.testing.assert_allclose(m.hamiltonian[off], base[off] / 8, rtol=1e-9)


def test_two_by_two_sweep_matches_single_calls():
    ax1 = GridAxis("lambda", 10.0, 100.0, 2)
    ax2 = GridAxis("gamma", 30.0, 80.0, 2)
    grid = sweep(FMO, CANON, ax1, ax2)
    assert grid.ete.shape == (2, 2)
    for i, lam in enumerate(ax1.values):
        for j, gam in enumerate(ax2.values):
            single = ete_frequency(TransferProblem(FMO, CANON.with_(lambda_cm1=lam, gamma_cm1=gam))).ete
            assert grid.ete[i, j] == single
    assert not grid.failed.any()


def test_sweep_parallel_matches_serial():
    ax1 = GridAxis("lambda", 10.0, 100.0, 3)
    ax2 = GridAxis("temperature", 100.0, 300.0, 3)
    a = sweep(FMO, CANON, ax1, ax2, threads=1)
    b = sweep(FMO, CANON, ax1, ax2, threads=2)
    np.testing.assert_array_equal(a.ete, b.ete)


def test_sweep_rejects_repeated_axis():
    with pytest.raises(ValueError):
        sweep(FMO, CANON, GridAxis("lambda", 1, 2, 2), GridAxis("lambda", 1, 2, 2))


def test_sweep_flags_failures_without_aborting():
    # compactness needs a geometry, so every cell fails
    bare = FMO.with_(geometry=None)
    grid = sweep(bare, CANON, GridAxis("compactness", 1, 2, 2), GridAxis("lambda", 1, 2, 2))
    assert grid.failed.all() and np.isnan(grid.ete).all()


def test_lambda_gamma_grid_fmo_near_optimum():
    grid = sweep(FMO, CANON, GridAxis("lambda", 1, 500, 15, "log"), GridAxis("gamma", 5, 500, 15, "log"))
    finite = grid.ete[np.isfinite(grid.ete)]
    assert np.all((finite >= 0) & (finite <= 1))
    # strong coupling with slow baths pushes the second-order kernel out of range
    assert grid.unphysical.sum() == grid.metadata["unphysical_points"]
    assert np.all((grid.raw[grid.unphysical] > 1) | (grid.raw[grid.unphysical] < 0))
    assert finite.max() - ete(FMO, CANON) < 0.02


def test_quantum_zeno_on_trap_axis():
    grid = sweep(FMO, CANON, GridAxis("lambda", 35, 36, 2), GridAxis("trap_time", 1e-3, 1.0, 2, "log"))
    assert grid.ete[0, 0] < grid.ete[0, 1]


def test_enaqt_ordering():
    e = [ete(FMO, CANON.with_(lambda_cm1=v)) for v in (0.0, 35.0, 500.0)]
    assert e[1] > e[0] and e[1] > e[2]


def test_level_set_smoke():
    # eta is nearly constant along lambda = 0.7 gamma at room temperature
    vals = [ete(FMO, CANON.with_(lambda_cm1=0.7 * g, gamma_cm1=g)) for g in (30, 60, 100, 200, 300)]
    assert max(vals) - min(vals) < 0.05


def test_loss_rate_monotone():
    vals = [ete(FMO.with_(loss_rate=r)) for r in (1e-4, 1e-3, 1e-2)]
    assert vals[0] > vals[1] > vals[2]


def test_governing_parameter():
    assert governing_parameter(0.0, 298, 50, 100) == 0.0
    base = governing_parameter(35, 298, 50, 100)
    assert governing_parameter(70, 298, 50, 100) == pytest.approx(2 * base)
    assert governing_parameter(35, 298, 100, 100) == pytest.approx(base / 2)
    assert model_governing_parameter(FMO, CANON) == pytest.approx(FMO_LAMBDA, rel=1e-12)
    with pytest.raises(ValueError):
        governing_parameter(35, 298, 0, 100)


def test_trap_site_scan_fmo():
    etas = trap_site_scan(FMO, CANON)
    assert len(etas) == 7
    assert int(np.argmax(etas)) + 1 in (3, 4)
    assert etas[2] - etas[0] > 0.01


def test_trap_site_scan_symmetric_dimer():
    m = ExcitonModel(np.array([[100.0, 30.0], [30.0, 100.0]]), 1, 2)
    a, b = trap_site_scan(m, CANON)
    assert abs(a - b) < 1e-10


# ---------------------------------------------------------------- stencils


def _mesh(nx=9, ny=11, hx=0.3, hy=0.7):
    x = np.arange(nx) * hx
    y = np.arange(ny) * hy
    X, Y = np.meshgrid(x, y, indexing="ij")
    return X, Y, hx, hy


def test_stencil_constant():
    z = np.full((7, 8), 0.4)
    np.testing.assert_allclose(gradient_norm_array(z, 0.1, 0.2), 0.0, atol=1e-12)
    np.testing.assert_allclose(hessian_norm_array(z, 0.1, 0.2), 0.0, atol=1e-12)


def test_stencil_linear():
    X, Y, hx, hy = _mesh()
    g = gradient_norm_array(X, hx, hy)
    assert g.shape == (5, 7)
    np.testing.assert_allclose(g, 1.0, atol=1e-10)
    np.testing.assert_allclose(hessian_norm_array(X, hx, hy), 0.0, atol=1e-10)


def test_stencil_paraboloid():
    X, Y, hx, hy = _mesh()
    np.testing.assert_allclose(hessian_norm_array(X**2 + Y**2, hx, hy), 2.0, atol=1e-9)
    np.testing.assert_allclose(hessian_norm_array(X**2 + Y**2, hx, hy, frobenius=True), 2 * math.sqrt(2), atol=1e-9)


def test_stencil_saddle_and_cross_term():
    X, Y, hx, hy = _mesh()
    # [[2, 3], [3, -4]] has eigenvalues -1 +- sqrt(18)
    z = X**2 + 3 * X * Y - 2 * Y**2
    np.testing.assert_allclose(hessian_norm_array(z, hx, hy), 1 + math.sqrt(18), atol=1e-8)


def test_stencil_needs_five_points():
    with pytest.raises(ValueError):
        gradient_norm_array(np.zeros((4, 9)), 1, 1)


def test_grid_wrappers_use_log_coordinate():
    ax1 = GridAxis("lambda", 1.0, math.e**4, 5, "log")
    ax2 = GridAxis("gamma", 1.0, 5.0, 5)
    u = np.log(ax1.values)[:, None] + 0 * ax2.values[None, :]
    grid = LandscapeGrid(ax1, ax2, u, np.zeros_like(u, bool))
    assert stencil_gradient_norm(grid)[0, 0] == pytest.approx(1.0)
    assert stencil_hessian_norm(grid)[0, 0] == pytest.approx(0.0, abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(
    st.lists(st.floats(-3, 3), min_size=15, max_size=15),
    st.floats(0.05, 2.0),
    st.floats(0.05, 2.0),
)
def test_stencils_exact_for_quartics(coef, hx, hy):
    X, Y, _, _ = _mesh(9, 9, hx, hy)
    powers = [(i, j) for i in range(5) for j in range(5 - i)]
    z = sum(c * X**i * Y**j for c, (i, j) in zip(coef, powers))
    # first derivatives of a quartic are exact with the five-point stencil
    zx = sum(c * i * X ** max(i - 1, 0) * Y**j for c, (i, j) in zip(coef, powers) if i)
    zy = sum(c * j * X**i * Y ** max(j - 1, 0) for c, (i, j) in zip(coef, powers) if j)
    ref = np.hypot(zx + 0 * X, zy + 0 * X)[2:-2, 2:-2]
    scale = 1 + np.abs(z).max() / min(hx, hy)
    np.testing.assert_allclose(gradient_norm_array(z, hx, hy), ref, atol=1e-9 * scale)
