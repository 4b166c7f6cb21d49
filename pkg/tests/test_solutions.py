import numpy as np
import pytest
import scipy.linalg

from ncidirac.exprs import CompiledExpr, SymbolTable
from ncidirac.jets import Jet, space
from ncidirac.operators import VarFrame, assemble_dirac, spinor_norm
from ncidirac.solutions import (
    MatrixOde,
    OdeTrajectory,
    build_flow_factors,
    build_q_side_field,
    build_solution_field,
    build_trajectory,
    flow_group_law_residual,
    solution_norm_floor,
    transport_oracle,
    verify_dirac_residual,
)


def test_constant_matrix_ode_is_exponential():
    st = SymbolTable(variables=["u"], parameters=[])
    M = np.array([[0.0, 1.0], [-1.0, 0.5]])
    ode = MatrixOde([(CompiledExpr("1", st), M)], hbar=1.0, u_name="u")
    psi0 = np.array([1.0, 0.5j])
    traj = OdeTrajectory(ode, 1.0, psi0, (0.5, 2.0))
    for u in (0.7, 1.0, 1.6):
        want = scipy.linalg.expm(-1j * M * (u - 1.0)) @ psi0
        assert np.max(np.abs(traj.value(u) - want)) < 1e-10


def test_trajectory_taylor_matches_ode():
    st = SymbolTable(variables=["u"], parameters=[])
    M = np.array([[0.2, 1.0], [0.3, -0.4]])
    ode = MatrixOde([(CompiledExpr("u", st), M)], hbar=1.0, u_name="u")
    traj = OdeTrajectory(ode, 1.0, np.array([1.0, -1.0j]), (0.6, 1.8))
    assert traj.ode_residual(np.linspace(0.7, 1.7, 6)) < 1e-10
    # second Taylor coefficient equals the derivative of the rhs
    ys = traj.taylor(1.2, 3)
    h = 1e-5
    fd = (traj.value(1.2 + h) - 2 * traj.value(1.2) + traj.value(1.2 - h)) / h**2
    assert np.max(np.abs(2 * ys[2] - fd)) < 1e-5


def test_pole_crossing_rejected():
    st = SymbolTable(variables=["u"], parameters=[])
    ode = MatrixOde([(CompiledExpr("1/u", st), np.eye(1))], hbar=1.0)
    with pytest.raises(ValueError):
        OdeTrajectory(ode, 0.5, np.array([1.0]), (-1.0, 1.0))


def test_five_dim_ode_residual_and_noncommutativity(five_dim):
    traj = build_trajectory(five_dim)
    assert traj.ode_residual(np.linspace(0.7, 2.5, 9)) < 1e-8
    # the coefficient family does not commute along the path, so the naive
    # closed exponential is not available; the diagnostic must say so
    assert traj.commutativity_along_path(np.linspace(0.7, 2.5, 5)) > 0.1


def test_five_dim_solution_certified(five_dim):
    m = five_dim
    traj = build_trajectory(m)
    rng = np.random.default_rng(0)
    xnames = tuple(m.m_coords)
    frame = VarFrame(xnames)
    dirac = assemble_dirac(m.alg, m.split, m.gammas, m.gamma_consts, m.lambdas,
                           m.frame_source(), xnames, m.real_param("hbar"))
    mass = m.real_param("m")
    sigma = {"q1": 1.1, "q2": 1.4}
    field = build_solution_field(m, sigma, trajectory=traj)
    pts = [dict(zip(xnames, rng.uniform(-0.25, 0.25, 4))) for _ in range(5)]
    res, _ = verify_dirac_residual(dirac, field, frame, pts, mass, order=2)
    assert res < 1e-6
    bad, _ = verify_dirac_residual(dirac, field, frame, pts, mass + 0.1, order=2)
    assert bad > 1e-2
    assert solution_norm_floor(field, pts) > 1e-6


def test_ads3_solution_certified_both_pseudospins(ads3):
    rng = np.random.default_rng(1)
    for s in (1.0, -1.0):
        mod = ads3 if s == 1.0 else ads3.with_params(s=s)
        xnames = tuple(mod.m_coords)
        frame = VarFrame(xnames)
        dirac = assemble_dirac(mod.alg, mod.split, mod.gammas, mod.gamma_consts,
                               mod.lambdas, mod.frame_source(), xnames,
                               mod.real_param("hbar"))
        sigma = {"q1": rng.uniform(0.5, 0.9), "q2": rng.uniform(0.5, 0.9)}
        field = build_solution_field(mod, sigma)
        pts = [dict(zip(xnames, rng.uniform(-0.25, 0.25, 3))) for _ in range(4)]
        res, _ = verify_dirac_residual(dirac, field, frame, pts,
                                       mod.real_param("m"), order=2)
        assert res < 1e-6


def test_ads3_solution_at_origin_is_seed(ads3):
    sigma = {"q1": 0.7, "q2": 0.8}
    field = build_solution_field(ads3, sigma)
    origin = {n: 0.0 for n in ads3.m_coords}
    psi = field(origin, 0)
    seed = build_q_side_field(ads3)(sigma, 0)
    assert max(abs(a.value - b.value) for a, b in zip(psi, seed)) < 1e-12


def test_flow_identity_and_shift(ads3):
    factors = build_flow_factors(ads3)
    by_name = {f.amount_name: f for f in factors}
    frame = VarFrame(("q1", "q2"))
    sp = space(2, 0)
    st = SymbolTable(variables=["q1", "q2"], parameters=[])
    probe = CompiledExpr("exp(0.2*q1)*(q2 + 2)", st)
    q = {"q1": 0.7, "q2": 0.8}
    # zero amounts act as the identity
    for f in factors:
        env = frame.seed(q, 0)
        env.update(ads3.params)
        env[f.amount_name] = Jet.constant(sp, 0.0)
        out = f.apply(lambda e: [probe.eval_env(e)])(env)
        assert abs(out[0].value - probe.eval_env(frame.seed(q, 0)).value) < 1e-12
    # the shift flow acts exactly
    yf = by_name["y"]
    env = frame.seed(q, 0)
    env.update(ads3.params)
    env["y"] = Jet.constant(sp, 0.15)
    out = yf.apply(lambda e: [probe.eval_env(e)])(env)
    shifted = probe.eval_env(frame.seed({"q1": 0.7, "q2": 0.65}, 0))
    assert abs(out[0].value - shifted.value) < 1e-13


def test_flows_match_transport_oracle(ads3):
    factors = build_flow_factors(ads3)
    rng = np.random.default_rng(2)
    frame = VarFrame(("q1", "q2"))
    sp = space(2, 0)
    st = SymbolTable(variables=["q1", "q2"], parameters=[])
    probe = CompiledExpr("exp(0.3*q1 - 0.2*q2)*(1 + 0.5*i*q1*q2)", st)
    coord_to_basis = dict(zip(ads3.m_coords, ads3.split.m))
    for f in factors:
        op = ads3.lambda_rep.operator(coord_to_basis[f.amount_name])
        for _ in range(4):
            q = {"q1": rng.uniform(0.5, 0.9), "q2": rng.uniform(0.5, 0.9)}
            amt = rng.uniform(-0.2, 0.2)
            env = frame.seed(q, 0)
            env.update(ads3.params)
            env[f.amount_name] = Jet.constant(sp, amt)
            closed = f.apply(lambda e: [probe.eval_env(e)])(env)[0].value
            oracle = transport_oracle(
                op, lambda e: [probe.eval_env({**e, **ads3.params})], q, amt)
            assert abs(closed - oracle) < 1e-8


def test_flow_group_law(ads3):
    factors = build_flow_factors(ads3)
    rng = np.random.default_rng(3)
    st = SymbolTable(variables=["q1", "q2"], parameters=[])
    probe = CompiledExpr("exp(0.2*q1 + 0.1*q2)", st)
    for f in factors:
        for _ in range(3):
            q = {"q1": rng.uniform(0.55, 0.9), "q2": rng.uniform(0.55, 0.9)}
            t1, t2 = rng.uniform(-0.12, 0.12, 2)
            assert flow_group_law_residual(f, probe, q, (t1, t2),
                                           ads3.params) < 1e-7


def test_solution_eigenvalue_relation(five_dim):
    # the third-order operator acts on the solution family by i j / hbar^3
    from ncidirac.operators import OperatorPolynomial, assemble_symmetry

    m = five_dim
    traj = build_trajectory(m)
    xnames = tuple(m.m_coords)
    qnames = tuple(m.lambda_rep.q_names)
    joint = VarFrame(xnames + qnames)
    sym = [assemble_symmetry(m.alg, m.split, m.lambdas, m.frame_source(),
                             xnames, A, m.gammas.dim) for A in range(m.alg.dim)]
    spec = m.symmetry_polynomials[0]
    poly = OperatorPolynomial(spec["words"])
    j = complex(m.params["j"])
    hbar = m.real_param("hbar")
    eig = 1j * j / hbar**3
    sigma = {"q1": 1.05, "q2": 1.35}
    field = build_solution_field(m, sigma, joint=True, trajectory=traj)
    rng = np.random.default_rng(4)
    pt = dict(zip(xnames, rng.uniform(-0.2, 0.2, 4)))
    full = {**pt, **sigma}
    psi = field(full, 4)
    out = poly.apply({k: sym[k] for k in range(m.alg.dim)}, psi, joint, full)
    k_out = out[0].space.order
    diff = [o - eig * p.truncate(k_out) for o, p in zip(out, psi)]
    assert spinor_norm(diff) / spinor_norm(psi) < 1e-6
