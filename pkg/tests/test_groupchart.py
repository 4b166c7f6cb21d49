import numpy as np
import pytest
import scipy.linalg

from ncidirac.groupchart import (
    ChartError,
    ChartSpec,
    GroupEngine,
    MatrixRep,
    chart_invert,
    chart_to_matrix,
    left_invariant_field,
    right_invariant_field,
)
from ncidirac.liecore import LieAlgebra


@pytest.fixture(scope="module")
def heisenberg():
    # [e1, e2] = e3
    C = np.zeros((3, 3, 3))
    C[0, 1, 2] = 1.0
    C[1, 0, 2] = -1.0
    alg = LieAlgebra(3, C)
    mats = np.zeros((3, 3, 3))
    mats[0][0, 1] = 1.0
    mats[1][1, 2] = 1.0
    mats[2][0, 2] = 1.0
    rep = MatrixRep(alg, mats)
    chart = ChartSpec([("a", 0), ("b", 1), ("c", 2)])
    return alg, rep, chart


def test_rep_homomorphism_enforced(heisenberg):
    alg, rep, _ = heisenberg
    assert rep.hom_residual < 1e-14
    bad = rep.matrices.copy()
    bad[2] *= 2.0
    with pytest.raises(ValueError):
        MatrixRep(alg, bad)


def test_chart_identity_at_zero(heisenberg):
    _, rep, chart = heisenberg
    assert np.allclose(chart_to_matrix(chart, rep, [0, 0, 0]), np.eye(3))


def test_single_factor_is_expm(five_dim):
    # only the first chart coordinate nonzero: one exponential factor
    coords = np.zeros(five_dim.chart.dim)
    coords[0] = 0.37
    g = chart_to_matrix(five_dim.chart, five_dim.rep, coords)
    idx = five_dim.chart.factors[0][1]
    assert np.allclose(
        g, scipy.linalg.expm(0.37 * five_dim.rep.matrices[idx]), atol=1e-13)


def test_invert_roundtrip(five_dim, ads3):
    rng = np.random.default_rng(1)
    for model in (five_dim, ads3):
        for _ in range(4):
            c = rng.uniform(-0.5, 0.5, model.chart.dim)
            g = chart_to_matrix(model.chart, model.rep, c)
            back = chart_invert(model.chart, model.rep, g)
            assert np.max(np.abs(back - c)) < 1e-9


def test_invert_identity_is_zero(five_dim):
    c = chart_invert(five_dim.chart, five_dim.rep, np.eye(five_dim.rep.size))
    assert np.max(np.abs(c)) < 1e-12


def test_invert_fails_outside_domain(five_dim):
    with pytest.raises(ChartError) as err:
        chart_invert(five_dim.chart, five_dim.rep,
                     1e3 * np.eye(five_dim.rep.size), max_iter=10)
    assert err.value.residual is not None


def test_group_multiplication_roundtrip(heisenberg):
    # multiplying two chart points and re-inverting lands on a chart point
    # whose matrix is the product
    _, rep, chart = heisenberg
    rng = np.random.default_rng(2)
    c1, c2 = rng.uniform(-0.3, 0.3, (2, 3))
    g = chart_to_matrix(chart, rep, c1) @ chart_to_matrix(chart, rep, c2)
    c = chart_invert(chart, rep, g)
    assert np.max(np.abs(chart_to_matrix(chart, rep, c) - g)) < 1e-11


def test_fields_at_identity(heisenberg):
    alg, rep, chart = heisenberg
    for A in range(3):
        xi = left_invariant_field(chart, rep, alg, A, [0.0, 0.0, 0.0])
        eta = right_invariant_field(chart, rep, alg, A, [0.0, 0.0, 0.0])
        unit = np.eye(3)[A]
        assert np.max(np.abs(xi - unit)) < 1e-12
        assert np.max(np.abs(eta + unit)) < 1e-12


def test_left_field_matches_flow_finite_difference(five_dim):
    alg, rep, chart = five_dim.alg, five_dim.rep, five_dim.chart
    rng = np.random.default_rng(3)
    pt = rng.uniform(-0.3, 0.3, chart.dim)
    h = 1e-6
    g = chart_to_matrix(chart, rep, pt)
    for A in (0, 2, 4):
        xi = left_invariant_field(chart, rep, alg, A, pt)
        plus = chart_invert(
            chart, rep, g @ scipy.linalg.expm(h * rep.matrices[A]), guess=pt)
        minus = chart_invert(
            chart, rep, g @ scipy.linalg.expm(-h * rep.matrices[A]), guess=pt)
        fd = (plus - minus) / (2 * h)
        assert np.max(np.abs(xi - fd)) < 1e-7


def test_five_dim_special_fields(five_dim):
    # eta_5 = -d_h1 everywhere; xi_5 carries the exp(-2 x4) isotropy component
    rng = np.random.default_rng(4)
    pt = rng.uniform(-0.3, 0.3, 5)
    fr = five_dim.engine.frames(pt, 0)
    names = five_dim.chart.coord_names
    eta5 = fr.values("eta")[4]
    expect = np.array([-1.0 if n == "h1" else 0.0 for n in names])
    assert np.max(np.abs(eta5 - expect)) < 1e-12
    xi5 = fr.values("xi")[4]
    x3, x4 = pt[names.index("x3")], pt[names.index("x4")]
    x1 = pt[names.index("x1")]
    expect = {"x2": x1, "x3": -x3**2, "x4": x3, "h1": np.exp(-2 * x4)}
    for k, n in enumerate(names):
        assert xi5[k] == pytest.approx(expect.get(n, 0.0), abs=1e-12)


def test_ads3_eta3_is_shift(ads3):
    rng = np.random.default_rng(5)
    pt = np.zeros(6)
    pt[3:] = rng.uniform(-0.3, 0.3, 3)
    fr = ads3.engine.frames(pt, 0)
    eta3 = fr.values("eta")[2]
    names = ads3.chart.coord_names
    expect = np.array([-1.0 if n == "y" else 0.0 for n in names])
    assert np.max(np.abs(eta3 - expect)) < 1e-12


def test_frame_structure_relations(five_dim, ads3):
    rng = np.random.default_rng(6)
    for model in (five_dim, ads3):
        pt = rng.uniform(-0.25, 0.25, model.chart.dim)
        fr = model.engine.frames(pt, 1)
        assert fr.duality_residual() < 1e-10
        assert fr.commutator_residual("eta") < 1e-8
        assert fr.commutator_residual("xi") < 1e-8
        assert fr.mixed_commutator_residual() < 1e-8
        assert fr.maurer_cartan_residual() < 1e-8


def test_abelian_sigma_sign_convention(abelian3):
    alg, _ = abelian3
    rep = MatrixRep(alg, [np.diag([0, 0, 1.0]), np.diag([0, 1.0, 0]),
                          np.diag([1.0, 0, 0])])
    chart = ChartSpec([("a", 0), ("b", 1), ("c", 2)])
    eng = GroupEngine(alg, rep, chart)
    fr = eng.frames(np.array([0.2, -0.1, 0.3]), 1)
    # eta_A = -d_A for an abelian chart, so sigma = -identity
    assert np.max(np.abs(fr.values("sigma") + np.eye(3))) < 1e-12
    assert fr.maurer_cartan_residual() < 1e-14


def test_declared_fields_match_numeric(five_dim, ads3):
    rng = np.random.default_rng(7)
    for model in (five_dim, ads3):
        worst = 0.0
        for _ in range(5):
            x = rng.uniform(-0.3, 0.3, len(model.m_coords))
            dec = model.declared_source.frames(x, 0)
            num = model.numeric_source.frames(x, 0)
            for which in ("eta", "xi", "sigma"):
                worst = max(worst, float(np.max(np.abs(
                    dec.values(which) - num.values(which)))))
        assert worst < 1e-8


def test_deliberate_sign_flip_is_flagged(five_dim):
    import copy

    from ncidirac.geometry import DeclaredFrameSource

    eta = [row[:] for row in five_dim.declared_source.eta_exprs]
    flipped = copy.copy(five_dim.declared_source)
    # flip the sign of eta_1 by negating its only nonzero component
    from ncidirac.exprs import CompiledExpr, SymbolTable

    st = SymbolTable(variables=five_dim.m_coords, parameters=list(five_dim.params))
    eta[0][0] = CompiledExpr("exp(-x4)", st)
    bad = DeclaredFrameSource(eta, five_dim.params, len(five_dim.m_coords))
    x = np.array([0.1, 0.2, -0.1, 0.15])
    dev = np.max(np.abs(bad.frames(x, 0).values("eta")
                        - five_dim.numeric_source.frames(x, 0).values("eta")))
    assert dev > 0.5
