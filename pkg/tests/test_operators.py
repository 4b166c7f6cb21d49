import numpy as np
import pytest

from ncidirac.exprs import CompiledExpr, SymbolTable
from ncidirac.jets import Jet
from ncidirac.operators import (
    FirstOrderOperator,
    OperatorPolynomial,
    VarFrame,
    assemble_dirac,
    assemble_symmetry,
    commutator_residual,
    expr_provider,
    monomial_spinors,
    random_spinors,
    scalar_expr_operator,
    spinor_norm,
)


@pytest.fixture
def frame2():
    return VarFrame(("x", "y"))


def partial_op(frame, name):
    st = SymbolTable(variables=list(frame.names), parameters=[])
    return scalar_expr_operator(frame.names, [
        CompiledExpr("1", st) if n == name else None for n in frame.names
    ], None, {}, label=f"d_{name}")


def test_partial_on_constant_is_zero(frame2):
    dx = partial_op(frame2, "x")
    psi = [Jet.constant(frame2.space(3), 4.2)]
    out = dx.apply(psi, frame2, {"x": 0.1, "y": 0.2})
    assert spinor_norm(out) == 0.0


def test_partials_commute(frame2):
    dx = partial_op(frame2, "x")
    dy = partial_op(frame2, "y")
    tests = random_spinors(frame2, frame2.names, 1, 2, 3, seed=0)
    res = commutator_residual(dx, dy, frame2, [{"x": 0.3, "y": -0.2}], tests, 3)
    assert res == 0.0


def test_symmetrized_square_is_second_derivative(frame2):
    dx = partial_op(frame2, "x")
    poly = OperatorPolynomial([(1.0, (0, 0))])
    point = {"x": 0.5, "y": 0.1}
    sp = frame2.space(3)
    x = Jet.variable(sp, 0, 0.5)
    psi = [x * x * x]
    out = poly.apply({0: dx}, psi, frame2, point)
    # d^2/dx^2 x^3 = 6x
    assert out[0].value == pytest.approx(6 * 0.5, abs=1e-13)


def test_operator_linearity(frame2):
    st = SymbolTable(variables=["x", "y"], parameters=[])
    op = scalar_expr_operator(
        frame2.names,
        [CompiledExpr("sin(x)", st), CompiledExpr("x*y", st)],
        CompiledExpr("exp(y)", st), {})
    rng = np.random.default_rng(1)
    point = {"x": 0.4, "y": -0.3}
    f1, f2 = random_spinors(frame2, frame2.names, 1, 2, 2, seed=2)
    a, b = 1.3 - 0.2j, 0.5 + 1j
    psi1, psi2 = f1(point, 3), f2(point, 3)
    combo = [a * u + b * v for u, v in zip(psi1, psi2)]
    lhs = op.apply(combo, frame2, point)
    rhs = [a * u + b * v for u, v in zip(op.apply(psi1, frame2, point),
                                         op.apply(psi2, frame2, point))]
    assert spinor_norm([u - v for u, v in zip(lhs, rhs)]) < 1e-12


def test_apply_matches_finite_difference(frame2):
    st = SymbolTable(variables=["x", "y"], parameters=[])
    op = scalar_expr_operator(
        frame2.names,
        [CompiledExpr("cos(y)", st), CompiledExpr("x", st)],
        CompiledExpr("x*y", st), {})
    point = {"x": 0.35, "y": -0.15}

    def f(x, y):
        return np.sin(x) * np.exp(0.5 * y)

    def field(pt, order):
        sp = frame2.space(order)
        from ncidirac.jets import jfun

        xj = Jet.variable(sp, 0, pt["x"])
        yj = Jet.variable(sp, 1, pt["y"])
        return [jfun("sin", xj) * jfun("exp", 0.5 * yj)]

    out = op.apply(field(point, 2), frame2, point)
    h = 1e-5
    x0, y0 = point["x"], point["y"]
    fd = (np.cos(y0) * (f(x0 + h, y0) - f(x0 - h, y0)) / (2 * h)
          + x0 * (f(x0, y0 + h) - f(x0, y0 - h)) / (2 * h)
          + x0 * y0 * f(x0, y0))
    assert abs(out[0].value - fd) < 1e-6


def test_first_order_reconstruction(five_dim):
    # applying to degree-0 spinors isolates B; degree-1 then isolates A^i
    m = five_dim
    xnames = tuple(m.m_coords)
    frame = VarFrame(xnames)
    src = m.frame_source()
    dirac = assemble_dirac(m.alg, m.split, m.gammas, m.gamma_consts, m.lambdas,
                           src, xnames, m.real_param("hbar"))
    rng = np.random.default_rng(3)
    pt = dict(zip(xnames, rng.uniform(-0.2, 0.2, 4)))
    A, B = dirac.coefficients(frame, pt, 1)
    dim = m.gammas.dim
    for col in range(dim):
        sp = frame.space(2)
        zero = Jet.constant(sp, 0.0)
        one = Jet.constant(sp, 1.0)
        psi = [one if c == col else zero for c in range(dim)]
        out = dirac.apply(psi, frame, pt)
        for c in range(dim):
            want = B[c][col].value if B[c][col] is not None else 0.0
            assert abs(out[c].value - want) < 1e-10


def test_symmetry_operators_commute_with_dirac(ads3):
    m = ads3
    xnames = tuple(m.m_coords)
    frame = VarFrame(xnames)
    src = m.frame_source()
    hbar = m.real_param("hbar")
    dirac = assemble_dirac(m.alg, m.split, m.gammas, m.gamma_consts, m.lambdas,
                           src, xnames, hbar)
    sym = [assemble_symmetry(m.alg, m.split, m.lambdas, src, xnames, A,
                             m.gammas.dim) for A in range(m.alg.dim)]
    tests = monomial_spinors(frame, xnames, m.gammas.dim, 1)[:6]
    rng = np.random.default_rng(4)
    pts = [dict(zip(xnames, rng.uniform(-0.25, 0.25, 3))) for _ in range(3)]
    for A in range(m.alg.dim):
        assert commutator_residual(sym[A], dirac, frame, pts, tests, 3) < 1e-8


def test_ads3_symmetry_operator_closed_forms(ads3):
    # spot-check the spin parts of two symmetry operators against their
    # published closed forms
    m = ads3
    xnames = tuple(m.m_coords)
    frame = VarFrame(xnames)
    src = m.frame_source()
    eps, s = m.real_param("eps"), m.real_param("s")
    g = m.gammas.gammas
    rng = np.random.default_rng(5)
    pt = dict(zip(xnames, rng.uniform(-0.25, 0.25, 3)))
    t = pt["t"]
    xx = pt["x"]
    X2 = assemble_symmetry(m.alg, m.split, m.lambdas, src, xnames, 1, 2)
    _, B = X2.coefficients(frame, pt, 0)
    B_mat = np.array([[B[c][e].value if B[c][e] is not None else 0.0
                       for e in range(2)] for c in range(2)])
    want = -(1j * s * eps / 2) * np.sinh(eps * t) / np.cos(eps * xx) * g[2]
    assert np.max(np.abs(B_mat - want)) < 1e-12
    X1 = assemble_symmetry(m.alg, m.split, m.lambdas, src, xnames, 0, 2)
    A, B = X1.coefficients(frame, pt, 0)
    assert B is None or all(
        B[c][e] is None or abs(B[c][e].value) < 1e-14
        for c in range(2) for e in range(2))
    assert A[0][0][0].value == pytest.approx(1.0)


def test_polynomial_symmetrization_counts():
    poly = OperatorPolynomial([(2.0, (0, 1, 1))])
    assert poly.max_word_length() == 3
    # three distinct orderings of (0,1,1)
    frame = VarFrame(("x", "y"))
    dx = partial_op(frame, "x")
    dy = partial_op(frame, "y")
    sp = frame.space(4)
    x = Jet.variable(sp, 0, 0.3)
    y = Jet.variable(sp, 1, 0.2)
    psi = [x * y * y]
    out = poly.apply({0: dx, 1: dy}, psi, frame, {"x": 0.3, "y": 0.2})
    # 2 * d^3/(dx dy dy) (x y^2) = 2 * 2 = 4
    assert out[0].value == pytest.approx(4.0, abs=1e-13)
