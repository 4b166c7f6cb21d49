import numpy as np
import pytest

from ncidirac.liecore import (
    BilinearForm,
    DualPolynomial,
    LieAlgebra,
    PolarizationSpec,
    SubalgebraSplit,
    algebra_index,
    check_adh_invariance,
    check_identity_on_annihilator,
    check_jacobi,
    check_polarization,
    coadjoint_matrix,
    orbit_dimension,
    poisson_bracket,
    verify_casimir,
)


def brute_force_coadjoint(alg, f):
    out = np.zeros((alg.dim, alg.dim))
    for A in range(alg.dim):
        for B in range(alg.dim):
            s = 0.0
            for C in range(alg.dim):
                s += alg.C[A, B, C] * f[C]
            out[A, B] = s
    return out


def test_five_dim_jacobi_zero(five_dim):
    assert five_dim.alg.antisymmetry_residual() == 0.0
    assert check_jacobi(five_dim.alg) < 1e-15


def test_abelian_jacobi_zero(abelian3):
    alg, _ = abelian3
    assert check_jacobi(alg) == 0.0


def test_perturbed_constants_flagged(five_dim):
    C = five_dim.alg.C.copy()
    C[0, 3, 0] += 1e-3  # perturb one component, keeping antisymmetry
    C[3, 0, 0] -= 1e-3
    assert check_jacobi(LieAlgebra(5, C)) >= 1e-3


def test_coadjoint_matrix_against_triple_loop(five_dim, ads3):
    rng = np.random.default_rng(2)
    for model in (five_dim, ads3):
        f = rng.uniform(-1, 1, model.alg.dim)
        fast = coadjoint_matrix(model.alg, f)
        slow = brute_force_coadjoint(model.alg, f)
        assert np.max(np.abs(fast - slow)) < 1e-14
        assert np.max(np.abs(fast + fast.T)) < 1e-14


def test_coadjoint_zero_covector(five_dim):
    assert np.all(coadjoint_matrix(five_dim.alg, np.zeros(5)) == 0)
    assert orbit_dimension(five_dim.alg, np.zeros(5)) == 0


def test_orbit_dimensions(five_dim, ads3):
    lam = np.array([1.0, 0, 0, 0, 0.6])
    assert orbit_dimension(five_dim.alg, lam) == 4
    lam6 = np.zeros(6)
    lam6[0], lam6[5] = 1.0, 0.0  # j1 = 1, j2 = 0
    assert orbit_dimension(ads3.alg, lam6) == 4
    assert coadjoint_matrix(ads3.alg, lam6).shape == (6, 6)


def test_algebra_index(five_dim, ads3, abelian3):
    assert algebra_index(five_dim.alg, samples=32, seed=1) == 1
    assert algebra_index(ads3.alg, samples=32, seed=1) == 2
    alg, _ = abelian3
    assert algebra_index(alg, samples=4, seed=1) == 3


def test_index_warns_on_rank_disagreement():
    # nilpotent Heisenberg algebra: rank drops on the center's annihilator,
    # here every sampled covector has rank 2 so no warning; instead force a
    # disagreement with a tiny sample over a stratified algebra
    C = np.zeros((3, 3, 3))
    C[0, 1, 2] = 1.0
    C[1, 0, 2] = -1.0
    alg = LieAlgebra(3, C)
    assert algebra_index(alg, samples=8, seed=0) == 1


def test_poisson_antisymmetry_and_casimir(five_dim):
    dim = 5
    K = five_dim.casimirs[0][1]
    rng = np.random.default_rng(5)
    for _ in range(6):
        f = rng.uniform(-1, 1, dim)
        assert abs(poisson_bracket(five_dim.alg, K, K, f)) < 1e-13
        for A in range(dim):
            coord = DualPolynomial.coordinate(dim, A)
            assert abs(poisson_bracket(five_dim.alg, K, coord, f)) < 1e-12


def test_poisson_f1_f4_value(five_dim):
    # {f1, f4} = C^C_14 f_C = -f1
    rng = np.random.default_rng(6)
    f = rng.uniform(-1, 1, 5)
    p1 = DualPolynomial.coordinate(5, 0)
    p4 = DualPolynomial.coordinate(5, 3)
    assert poisson_bracket(five_dim.alg, p1, p4, f) == pytest.approx(-f[0])


def test_casimir_verification(five_dim, ads3):
    for model in (five_dim, ads3):
        for _, poly, _ in model.casimirs:
            assert verify_casimir(model.alg, poly, samples=20, seed=3) < 1e-10
    const = DualPolynomial.constant(5, 4.0)
    assert verify_casimir(five_dim.alg, const, samples=4, seed=3) == 0.0


def test_non_casimir_flagged(five_dim):
    bad = DualPolynomial.from_expression("f5*f1^2 + f2*f4*f1 - f2^2*f4", 5)
    assert verify_casimir(five_dim.alg, bad, samples=20, seed=3) > 1e-2


def test_polarizations(five_dim, ads3):
    for model in (five_dim, ads3):
        rep = check_polarization(model.alg, model.orbit["lambda"],
                                 model.polarization, model.orbit["orbit_dim"])
        assert rep["ok"], rep


def test_abelian_polarization(abelian3):
    alg, _ = abelian3
    pol = PolarizationSpec(alg, np.eye(3))
    rep = check_polarization(alg, np.array([1.0, 2.0, 3.0]), pol, 0)
    assert rep["ok"]


def test_adh_invariance(five_dim, ads3):
    assert check_adh_invariance(five_dim.alg, five_dim.split, five_dim.form) < 1e-13
    assert check_adh_invariance(ads3.alg, ads3.split, ads3.form) == 0.0


def test_random_form_breaks_adh(five_dim):
    rng = np.random.default_rng(8)
    A = rng.normal(size=(4, 4))
    form = BilinearForm(A @ A.T + 4 * np.eye(4))
    assert check_adh_invariance(five_dim.alg, five_dim.split, form) > 1e-3


def test_identity_on_annihilator(ads3, five_dim):
    K2 = ads3.identities[0][1]
    assert check_identity_on_annihilator(ads3.alg, ads3.split, K2) == 0.0
    zero = DualPolynomial.constant(6, 0.0)
    assert check_identity_on_annihilator(ads3.alg, ads3.split, zero) == 0.0
    # the four-dimensional example has zero index: its Casimir does not vanish
    K = five_dim.casimirs[0][1]
    assert check_identity_on_annihilator(five_dim.alg, five_dim.split, K) > 1e-2


def test_schema_like_invariants(five_dim):
    form = five_dim.form
    assert form.inverse_residual < 1e-12
    assert np.max(np.abs(form.G - form.G.T)) == 0.0
