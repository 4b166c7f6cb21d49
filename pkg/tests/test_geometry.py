import numpy as np
import pytest

from ncidirac import geometry as geo
from ncidirac.groupchart import ChartSpec, GroupEngine, MatrixRep
from ncidirac.jets import Jet, space
from ncidirac.liecore import BilinearForm, LieAlgebra, SubalgebraSplit


@pytest.fixture(scope="module")
def flat_model(abelian3_module):
    return abelian3_module


@pytest.fixture(scope="module")
def abelian3_module():
    alg = LieAlgebra(3, np.zeros((3, 3, 3)))
    split = SubalgebraSplit(alg, [2], [0, 1])
    rep = MatrixRep(alg, [np.diag([0, 0, 1.0]), np.diag([0, 1.0, 0]),
                          np.diag([1.0, 0, 0])])
    chart = ChartSpec([("x1", 0), ("x2", 1), ("h1", 2)])
    eng = GroupEngine(alg, rep, chart)
    src = geo.NumericFrameSource(eng, split, [0, 1], [2])
    form = BilinearForm(np.eye(2))
    return alg, split, form, src


def test_flat_metric_everywhere(flat_model):
    alg, split, form, src = flat_model
    rng = np.random.default_rng(0)
    for _ in range(3):
        x = rng.uniform(-0.4, 0.4, 2)
        mp = geo.metric_at(form, split, src, x)
        assert np.max(np.abs(mp.g - np.eye(2))) < 1e-12
        gam = geo.christoffel_at(alg, split, form, src, x)
        assert np.max(np.abs(gam)) < 1e-12
        assert geo.scalar_curvature_at(alg, split, form, src, x) == pytest.approx(
            0.0, abs=1e-10)


def test_abelian_algebraic_christoffels(flat_model):
    alg, split, form, _ = flat_model
    assert np.max(np.abs(geo.christoffel_algebraic(alg, split, form))) == 0.0


def test_levi_civita_oracle_conformal_1d():
    # g = e^{2x} in one dimension: Gamma^x_xx = 1
    sp = space(1, 1)
    x = Jet.variable(sp, 0, 0.3)
    from ncidirac.jets import jfun

    g = np.empty((1, 1), dtype=object)
    g[0, 0] = jfun("exp", 2.0 * x)
    gam = geo.levi_civita_oracle(g)
    assert gam[0, 0, 0] == pytest.approx(1.0, abs=1e-12)


def test_constant_metric_oracle_zero():
    sp = space(2, 1)
    g = np.empty((2, 2), dtype=object)
    for i in range(2):
        for j in range(2):
            g[i, j] = Jet.constant(sp, 1.0 if i == j else 0.0)
    assert np.max(np.abs(geo.levi_civita_oracle(g))) == 0.0


def test_algebraic_antisymmetrized_part(five_dim, ads3):
    # Gamma^a_bc - Gamma^a_cb = -C^a_bc restricted to m
    for model in (five_dim, ads3):
        gam = geo.christoffel_algebraic(model.alg, model.split, model.form)
        m = model.split.m
        n = len(m)
        for a in range(n):
            for b in range(n):
                for c in range(n):
                    want = -model.alg.C[m[b], m[c], m[a]]
                    assert gam[a, b, c] - gam[a, c, b] == pytest.approx(
                        want, abs=1e-12)


def test_metric_at_origin_ads3(ads3):
    mp = geo.metric_at(ads3.form, ads3.split, ads3.frame_source(), [0.0, 0.0, 0.0])
    assert np.max(np.abs(mp.g - np.diag([1.0, -1.0, -1.0]))) < 1e-12


def test_five_dim_metric_display_expansion(five_dim):
    # the published line-element expansion, coefficient by coefficient
    c1 = five_dim.real_param("c1")
    c2 = five_dim.real_param("c2")
    c3 = five_dim.real_param("c3")
    c4 = five_dim.real_param("c4")
    rng = np.random.default_rng(1)
    x = rng.uniform(-0.3, 0.3, 4)
    x1, x2, x3, x4 = x
    mp = geo.metric_at(five_dim.form, five_dim.split, five_dim.frame_source(), x)
    e = np.exp
    ds = np.zeros((4, 4))

    def add(i, j, v):
        ds[i - 1, j - 1] += v / 2
        ds[j - 1, i - 1] += v / 2

    pref = e(x4) / c3**2
    add(1, 3, pref * 2 * c2 * e(2 * x4))
    add(2, 3, pref * (-2 * c2 * e(2 * x4)) * x3)
    add(1, 1, pref * (-c1 * e(x4)))
    add(1, 2, pref * 2 * c1 * e(x4) * x3)
    add(2, 2, pref * (-c1 * e(x4) * x3**2))
    add(3, 3, pref * (-c4 * e(3 * x4)))
    add(2, 3, pref * 2 * c3)
    add(2, 4, pref * 2 * c3 * x3)
    add(1, 4, pref * (-2 * c3))
    assert np.max(np.abs(ds - mp.g)) < 1e-12


def test_christoffel_matches_oracle(five_dim, ads3):
    rng = np.random.default_rng(2)
    for model in (five_dim, ads3):
        src = model.frame_source()
        for _ in range(20):
            x = rng.uniform(-0.3, 0.3, len(model.m_coords))
            gam = geo.christoffel_at(model.alg, model.split, model.form, src, x)
            gj, _ = geo.metric_jets(model.form, model.split, src, x, 1)
            oracle = geo.levi_civita_oracle(gj)
            assert np.max(np.abs(gam - oracle)) < 1e-7
            assert np.max(np.abs(gam - np.swapaxes(gam, 1, 2))) < 1e-10


def test_scalar_curvature_values(five_dim, ads3):
    rng = np.random.default_rng(3)
    for _ in range(3):
        x = rng.uniform(-0.3, 0.3, 4)
        R = geo.scalar_curvature_at(five_dim.alg, five_dim.split, five_dim.form,
                                    five_dim.frame_source(), x)
        assert R == pytest.approx(6 * five_dim.real_param("c1"), abs=1e-6)
    for _ in range(3):
        x = rng.uniform(-0.25, 0.25, 3)
        R = geo.scalar_curvature_at(ads3.alg, ads3.split, ads3.form,
                                    ads3.frame_source(), x)
        assert R == pytest.approx(6 * ads3.real_param("eps") ** 2, abs=1e-6)


def test_metricity_and_killing(five_dim, ads3):
    rng = np.random.default_rng(4)
    for model in (five_dim, ads3):
        src = model.frame_source()
        x = rng.uniform(-0.25, 0.25, len(model.m_coords))
        assert geo.metricity_residual(model.alg, model.split, model.form,
                                      src, x) < 1e-8
        assert geo.killing_residual(model.form, model.split, src, x) < 1e-7
