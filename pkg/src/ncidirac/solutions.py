"""Explicit solution construction and certification.

Two construction routes are supported: integrating the reduced ordinary
differential equation in the orbit variable and assembling the spinor on the
base manifold (the four-dimensional example), and composing closed-form flow
pullbacks of the lambda-representation operators (the anti-de-Sitter
example).  Every construction is certified by the residual of the Dirac
operator applied through jets, plus a transport-PDE characteristics oracle
for the closed-form flows.
"""

import numpy as np
import scipy.integrate

from .jets import Jet, space
from .operators import VarFrame, spinor_norm


class FlowDomainError(ArithmeticError):
    pass


class FlowFactor:
    """(e^{-tau ell} f)(q) = P(q, tau) * f(Q1(q, tau), Q2(q, tau)).

    prefactor / maps are CompiledExpr over the q variables plus the flow
    amount variable; params supplies the pinned orbit parameters.  locals is
    an ordered list of (name, CompiledExpr) helper bindings evaluated first,
    so the long closed forms stay readable.
    """

    def __init__(self, q_names, amount_name, prefactor, maps, params,
                 local_defs=()):
        self.q_names = tuple(q_names)
        self.amount_name = amount_name
        self.prefactor = prefactor
        self.maps = maps
        self.params = dict(params)
        self.local_defs = list(local_defs)

    def pull_env(self, env):
        """New q values (jets) and the prefactor under the given environment."""
        full = dict(env)
        full.update({k: v for k, v in self.params.items() if k not in full})
        for name, expr in self.local_defs:
            full[name] = expr.eval_env(full)
        new_q = [m.eval_env(full) for m in self.maps]
        pref = self.prefactor.eval_env(full) if self.prefactor is not None else 1.0
        return new_q, pref

    def apply(self, f):
        """Transport a callable f(env over q_names) -> spinor jets."""

        def g(env):
            new_q, pref = self.pull_env(env)
            inner = dict(env)
            for name, val in zip(self.q_names, new_q):
                inner[name] = val
            out = f(inner)
            return [pref * c for c in out]

        return g


class FlowSolutionField:
    """Spinor field on M built by composing flow factors on a seed function.

    factors are applied right to left (the last factor acts on the seed
    first), mirroring the operator product e^{-t l1} e^{-x l2} e^{-y l3}.
    var_names lists the jet variables of an evaluation (base coordinates, and
    the sigma labels too when the field is differentiated jointly); defaults
    supplies constant values for names not passed at call time.
    """

    def __init__(self, var_names, q_names, factors, seed_exprs, params,
                 defaults=None):
        self.var_names = tuple(var_names)
        self.q_names = tuple(q_names)
        self.factors = list(factors)
        self.seed_exprs = seed_exprs
        self.params = dict(params)
        self.defaults = dict(defaults or {})

    def __call__(self, point, order):
        frame = VarFrame(self.var_names)
        full = dict(self.defaults)
        full.update(point)
        env = frame.seed(full, order)
        sp = frame.space(order)
        for k, v in self.params.items():
            env.setdefault(k, v)
        for k, v in full.items():
            if k not in env:
                env[k] = Jet.constant(sp, complex(v))

        def seed(e):
            return [expr.eval_env(e) for expr in self.seed_exprs]

        f = seed
        for factor in reversed(self.factors):
            f = factor.apply(f)
        out = f(env)
        return [c if isinstance(c, Jet) else Jet.constant(sp, c) for c in out]


def flow_group_law_residual(factor, f_probe, q_point, amounts, params, order=0):
    """|flow(t1)(flow(t2) f) - flow(t1 + t2) f| at a point (one-parameter group)."""
    frame = VarFrame(factor.q_names)
    t1, t2 = amounts
    sp = frame.space(order)

    def env_with(amount):
        env = frame.seed(q_point, order)
        env.update(params)
        env[factor.amount_name] = Jet.constant(sp, amount)
        return env

    def probe(env):
        return [f_probe.eval_env(env)]

    # flow by t2 first, then t1
    def staged(env):
        new_q, pref = factor.pull_env(env)
        inner = dict(env)
        for name, val in zip(factor.q_names, new_q):
            inner[name] = val
        inner[factor.amount_name] = Jet.constant(sp, t2)
        out = factor.apply(probe)(inner)
        return [pref * c for c in out]

    lhs = staged(env_with(t1))
    rhs = factor.apply(probe)(env_with(t1 + t2))
    return spinor_norm([a - b for a, b in zip(lhs, rhs)])


def transport_oracle(op, f0, q_point, amount, rtol=1e-11, atol=1e-12):
    """(e^{-amount * op} f0)(q) by the method of characteristics.

    op is a scalar first-order operator c^i(q) d_i + p(q); the characteristic
    system dQ/ds = c(Q), dphi/ds = p(Q) is integrated backwards and
    u = f0(Q(0)) exp(-int p).
    """
    q_names = op.deriv_names
    n = len(q_names)
    frame = VarFrame(q_names)

    def rhs(_, y):
        point = {name: y[k] for k, name in enumerate(q_names)}
        A, B = op.coefficients(frame, point, 0)
        vel = [complex(A[i][0][0].value) if A[i][0][0] is not None else 0.0
               for i in range(n)]
        pot = complex(B[0][0].value) if B is not None and B[0][0] is not None else 0.0
        return np.array(vel + [pot], dtype=complex)

    y0 = np.array([complex(q_point[name]) for name in q_names] + [0.0],
                  dtype=complex)
    sol = scipy.integrate.solve_ivp(
        rhs, (amount, 0.0), y0, method="DOP853", rtol=rtol, atol=atol,
        dense_output=False,
    )
    if not sol.success:
        raise FlowDomainError(f"characteristic integration failed: {sol.message}")
    qe = sol.y[:n, -1]
    # d phi/ds = p(Q) integrated from s=amount down to 0 gives
    # phi(0) = -int_0^amount p, and u = f0(Q(0)) exp(-int_0^amount p).
    phase = sol.y[n, -1] - y0[n]
    sp = space(n, 0)
    env = {name: Jet.constant(sp, qe[k]) for k, name in enumerate(q_names)}
    return f0(env)[0].value * np.exp(phase)


# -- reduced ODE route ---------------------------------------------------------


class MatrixOde:
    """i hbar d psi / du = M(u) psi with M given as sum_k w_k(u) * M_k."""

    def __init__(self, terms, hbar, u_name="u"):
        # terms: list of (CompiledExpr weight in u, constant matrix)
        self.terms = terms
        self.hbar = hbar
        self.u_name = u_name
        self.dim = terms[0][1].shape[0]

    def matrix(self, u_jet):
        sp = u_jet.space
        out = np.empty((self.dim, self.dim), dtype=object)
        for i in range(self.dim):
            for j in range(self.dim):
                out[i, j] = Jet.constant(sp, 0.0)
        env = {self.u_name: u_jet}
        for w_expr, mat in self.terms:
            w = w_expr.eval_env(env)
            for i in range(self.dim):
                for j in range(self.dim):
                    if mat[i, j] != 0:
                        out[i, j] = out[i, j] + w * mat[i, j]
        return out

    def matrix_value(self, u):
        sp = space(1, 0)
        m = self.matrix(Jet.constant(sp, u))
        return np.array([[m[i, j].value for j in range(self.dim)]
                         for i in range(self.dim)])


class OdeTrajectory:
    """Dense solution of the reduced ODE with Taylor jets from the equation.

    The interval (lo, hi) must contain the initial argument u0 and stay on
    one side of the pole at u = 0; integration runs outward in both
    directions from u0 so any argument in the interval can be evaluated.
    """

    def __init__(self, ode, u0, psi0, u_span, rtol=1e-12, atol=1e-13):
        self.ode = ode
        self.u0 = u0
        lo, hi = u_span
        if lo <= 0.0 <= hi:
            raise ValueError("integration interval crosses the pole at u = 0")
        if not lo <= u0 <= hi:
            raise ValueError("initial argument outside the integration interval")
        d = ode.dim
        y0 = np.asarray(psi0, dtype=complex)

        def rhs(u, y):
            return (-1j / ode.hbar) * (ode.matrix_value(u) @ y)

        def integrate(span):
            if abs(span[1] - span[0]) < 1e-14:
                return None
            sol = scipy.integrate.solve_ivp(
                rhs, span, y0, method="DOP853", rtol=rtol, atol=atol,
                dense_output=True,
            )
            if not sol.success:
                raise RuntimeError(f"ODE integration failed: {sol.message}")
            return sol

        self.sol_up = integrate((u0, hi))
        self.sol_down = integrate((u0, lo))
        self.dim = d

    def value(self, u):
        if u >= self.u0:
            sol = self.sol_up if self.sol_up is not None else self.sol_down
        else:
            sol = self.sol_down if self.sol_down is not None else self.sol_up
        return sol.sol(u)

    def taylor(self, u0, order):
        """Coefficients y_m with psi(u0 + h) = sum y_m h^m, from the ODE."""
        usp = space(1, max(order - 1, 0))
        ujet = Jet.variable(usp, 0, u0) if order >= 1 else Jet.constant(usp, u0)
        M = self.ode.matrix(ujet)
        A = np.zeros((usp.n_terms, self.dim, self.dim), dtype=complex)
        for i in range(self.dim):
            for j in range(self.dim):
                A[:, i, j] = (-1j / self.ode.hbar) * M[i, j].coeffs
        ys = [self.value(u0)]
        for m in range(order):
            acc = np.zeros(self.dim, dtype=complex)
            for r in range(min(m, usp.n_terms - 1) + 1):
                acc += A[r] @ ys[m - r]
            ys.append(acc / (m + 1))
        return ys

    def eval_jet(self, u_jet):
        """psi(u(x)) as spinor jets, composing the Taylor series with u_jet."""
        order = u_jet.space.order
        ys = self.taylor(complex(u_jet.value).real, order)
        h = Jet(u_jet.space, u_jet.coeffs.copy())
        h.coeffs[0] = 0.0
        out = [Jet.constant(u_jet.space, ys[order][c]) for c in range(self.dim)]
        for m in range(order - 1, -1, -1):
            out = [o * h + ys[m][c] for c, o in enumerate(out)]
        return out

    def ode_residual(self, points):
        """|i hbar psi' - M psi| by jet re-differentiation along the path."""
        worst = 0.0
        for u in points:
            ys = self.taylor(u, 1)
            lhs = 1j * self.ode.hbar * ys[1]
            rhs = self.ode.matrix_value(u) @ ys[0]
            worst = max(worst, float(np.max(np.abs(lhs - rhs))) /
                        max(1.0, float(np.max(np.abs(ys[0])))))
        return worst

    def commutativity_along_path(self, points):
        """max |[M(u), M(u')]| over sample pairs (diagnostic for the closed
        exponential form, which requires a commuting family)."""
        mats = [self.ode.matrix_value(u) for u in points]
        worst = 0.0
        for a in range(len(mats)):
            for b in range(a + 1, len(mats)):
                worst = max(worst, float(np.max(np.abs(
                    mats[a] @ mats[b] - mats[b] @ mats[a]))))
        return worst


class OdeSolutionField:
    """Spinor field psi_sigma(x) assembled from the reduced-ODE trajectory.

    The construction is: a scalar phase expression, a nilpotent matrix
    exponent N(x) applied as exp(N) = E + N (N^2 = 0 is certified by the
    caller), and the trajectory evaluated at the orbit argument u(x).
    var_names / defaults work as in FlowSolutionField.
    """

    def __init__(self, var_names, phase_expr, nilpotent_weight_expr, nilpotent_mat,
                 argument_expr, trajectory, params, defaults=None):
        self.var_names = tuple(var_names)
        self.phase_expr = phase_expr
        self.nil_weight = nilpotent_weight_expr
        self.nil_mat = nilpotent_mat
        self.argument_expr = argument_expr
        self.trajectory = trajectory
        self.params = dict(params)
        self.defaults = dict(defaults or {})

    def __call__(self, point, order):
        frame = VarFrame(self.var_names)
        full = dict(self.defaults)
        full.update(point)
        env = frame.seed(full, order)
        sp = frame.space(order)
        for k, v in self.params.items():
            env.setdefault(k, v)
        for k, v in full.items():
            if k not in env:
                env[k] = Jet.constant(sp, complex(v))
        u_jet = self.argument_expr.eval_env(env)
        if not isinstance(u_jet, Jet):
            u_jet = Jet.constant(sp, u_jet)
        psi = self.trajectory.eval_jet(u_jet)
        d = len(psi)
        w = self.nil_weight.eval_env(env)
        out = []
        for c in range(d):
            acc = psi[c]
            for e in range(d):
                if self.nil_mat[c, e] != 0:
                    acc = acc + w * (self.nil_mat[c, e] * psi[e])
            out.append(acc)
        phase = self.phase_expr.eval_env(env)
        ph = jexp(phase)
        return [ph * c for c in out]


def jexp(j):
    from .jets import jfun

    return jfun("exp", j)


def verify_dirac_residual(dirac, field, frame, points, mass, order=2, floor=1e-6):
    """max over points of |(D_M - m) psi| / max(|psi|, floor)."""
    worst = 0.0
    worst_point = None
    for point in points:
        psi = field(point, order)
        out = dirac.apply(psi, frame, point)
        k = out[0].space.order
        diff = [o - mass * p.truncate(k) for o, p in zip(out, psi)]
        scale = max(spinor_norm(psi), floor)
        r = spinor_norm(diff) / scale
        if r > worst:
            worst, worst_point = r, point
    return worst, worst_point


def solution_norm_floor(field, points, order=0):
    return min(spinor_norm(field(p, order)) for p in points)


# -- model-driven assembly -----------------------------------------------------


def named_matrix(model, name):
    """Resolve a matrix word letter: g<k>, Gamma, Lambda_<k>, E."""
    import numpy as np

    if name == "E":
        return np.eye(model.gammas.dim, dtype=complex)
    if name == "Gamma":
        return np.einsum("aij,ajk->ik", model.gammas.gammas, model.gamma_consts)
    if name.startswith("g") and name[1:].isdigit():
        return model.gammas.gammas[int(name[1:]) - 1]
    if name.startswith("Lambda_"):
        return model.lambdas[int(name.split("_")[1]) - 1]
    raise ValueError(f"unknown matrix name {name!r}")


def word_matrix(model, word):
    import numpy as np

    out = np.eye(model.gammas.dim, dtype=complex)
    for name in word:
        out = out @ named_matrix(model, name)
    return out


class _BoundExpr:
    """CompiledExpr with parameters pre-merged into every evaluation env."""

    def __init__(self, expr, params):
        self.expr = expr
        self.params = dict(params)

    def eval_env(self, env):
        full = dict(env)
        for k, v in self.params.items():
            full.setdefault(k, v)
        return self.expr.eval_env(full)


def build_trajectory(model, params=None):
    """OdeTrajectory for a reduced_ode solution section."""
    from .exprs import CompiledExpr, SymbolTable

    params = dict(params or model.params)
    spec = model.solutions
    if spec is None or spec.get("type") != "reduced_ode":
        raise ValueError("model has no reduced_ode solution section")
    ode_spec = spec["ode"]
    u_name = ode_spec.get("var", "u")
    st = SymbolTable(variables=[u_name], parameters=list(params))
    terms = [
        (_BoundExpr(CompiledExpr(t["coeff"], st), params),
         word_matrix(model, t["word"]))
        for t in ode_spec["terms"]
    ]
    hbar = float(params.get("hbar", 1.0).real if isinstance(params.get("hbar"), complex)
                 else params.get("hbar", 1.0))
    ode = MatrixOde(terms, hbar, u_name)
    psi0 = [complex(c[0], c[1]) if isinstance(c, list) else complex(c)
            for c in ode_spec["initial_spinor"]]
    traj = OdeTrajectory(ode, ode_spec["u0"], psi0, tuple(ode_spec["u_range"]))
    return traj


def build_solution_field(model, sigma, joint=False, params=None, trajectory=None):
    """SpinorField on M for either solution type of a model.

    sigma maps the orbit-variable names to their fixed values; with
    joint=True those names become jet variables instead, so the field can be
    differentiated in them (the transported-system checks need this).
    """
    from .exprs import CompiledExpr, SymbolTable

    params = dict(params or model.params)
    spec = model.solutions
    if spec is None:
        raise ValueError("model has no solutions section")
    q_names = list(model.lambda_rep.q_names)
    var_names = list(model.m_coords) + (q_names if joint else [])
    if spec["type"] == "reduced_ode":
        st = SymbolTable(variables=model.m_coords + q_names,
                         parameters=list(params))
        on_m = spec["on_m"]
        traj = trajectory if trajectory is not None else build_trajectory(model, params)
        nil = named_matrix(model, on_m.get("nilpotent", "Lambda_1"))
        return OdeSolutionField(
            var_names,
            phase_expr=_BoundExpr(CompiledExpr(on_m["phase"], st), params),
            nilpotent_weight_expr=_BoundExpr(CompiledExpr(on_m["nilpotent_weight"], st), params),
            nilpotent_mat=nil,
            argument_expr=_BoundExpr(CompiledExpr(on_m["argument"], st), params),
            trajectory=traj,
            params=params,
            defaults=sigma,
        )
    if spec["type"] == "flows":
        factors = build_flow_factors(model, params)
        st = SymbolTable(variables=model.m_coords + q_names,
                         parameters=list(params))
        seed = [_BoundExpr(CompiledExpr(e, st), params) for e in spec["seed_spinor"]]
        return FlowSolutionField(var_names, q_names, factors, seed, params,
                                 defaults=sigma)
    raise ValueError(f"unknown solution type {spec['type']!r}")


def build_q_side_field(model, params=None, trajectory=None):
    """The solution as a function on Q (for constraint and reduced checks)."""
    from .exprs import CompiledExpr, SymbolTable

    params = dict(params or model.params)
    spec = model.solutions
    q_names = list(model.lambda_rep.q_names)
    if spec["type"] == "reduced_ode":
        on_q = spec["on_q"]
        st = SymbolTable(variables=q_names, parameters=list(params))
        traj = trajectory if trajectory is not None else build_trajectory(model, params)
        nil = named_matrix(model, on_q.get("nilpotent", "Lambda_1"))
        return OdeSolutionField(
            q_names,
            phase_expr=_BoundExpr(CompiledExpr(on_q["phase"], st), params),
            nilpotent_weight_expr=_BoundExpr(CompiledExpr(on_q["nilpotent_weight"], st), params),
            nilpotent_mat=nil,
            argument_expr=_BoundExpr(CompiledExpr(on_q["argument"], st), params),
            trajectory=traj,
            params=params,
        )
    if spec["type"] == "flows":
        st = SymbolTable(variables=q_names, parameters=list(params))
        seed = [_BoundExpr(CompiledExpr(e, st), params) for e in spec["seed_spinor"]]

        def field(point, order):
            frame = VarFrame(q_names)
            env = frame.seed(point, order)
            env.update(params)
            return [e.eval_env(env) for e in seed]

        return field
    raise ValueError(f"unknown solution type {spec['type']!r}")


def build_flow_factors(model, params=None):
    from .exprs import CompiledExpr, SymbolTable

    params = dict(params or model.params)
    spec = model.solutions
    q_names = list(model.lambda_rep.q_names)
    factors = []
    for fs in spec["factors"]:
        amount = fs["amount"]
        local_names = [name for name, _ in fs.get("locals", [])]
        st = SymbolTable(variables=q_names + [amount] + local_names,
                         parameters=list(params))
        local_defs = [(name, CompiledExpr(text, st))
                      for name, text in fs.get("locals", [])]
        pref = fs.get("prefactor")
        factors.append(FlowFactor(
            q_names, amount,
            CompiledExpr(pref, st) if pref else None,
            [CompiledExpr(mtext, st) for mtext in fs["maps"]],
            params, local_defs,
        ))
    return factors
