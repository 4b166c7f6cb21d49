"""Verification suites: every identity and solution of a model, checked
numerically at sampled points and collected into a report.

Each check draws its own deterministic RNG stream from (seed, crc32(id)), so
reports are byte-identical across reruns and insensitive to check order.
"""

import time
import zlib

import numpy as np

from . import clifford, geometry, liecore, solutions
from .groupchart import ChartError, chart_invert, chart_to_matrix
from .lambdarep import beta_vector, casimir_value, constraint_residual
from .operators import (
    OperatorPolynomial,
    VarFrame,
    assemble_dirac,
    assemble_symmetry,
    commutator_residual,
    monomial_spinors,
    polynomial_relation_residual,
    random_spinors,
    spinor_norm,
)
from .report import Check, VerificationReport

SUITES = ("algebra", "geometry", "clifford", "dirac", "lambda", "solutions")


class SuiteConfig:
    def __init__(self, seed=7, points=None, jet_order=None, tolerance_scale=1.0):
        self.seed = seed
        self.points = points
        self.jet_order = jet_order
        self.tolerance_scale = tolerance_scale


def run_suite(model, suites, config=None):
    config = config or SuiteConfig(seed=model.verification.get("seed", 7))
    if isinstance(suites, str):
        suites = list(SUITES) if suites == "all" else [suites]
    unknown = set(suites) - set(SUITES)
    if unknown:
        raise ValueError(f"unknown suites: {sorted(unknown)}")
    report = VerificationReport(model.name, suites, config.seed)
    runner = _Runner(model, config, report)
    for name in SUITES:
        if name in suites:
            getattr(runner, f"suite_{name}")()
    return report


class _Runner:
    def __init__(self, model, config, report):
        self.model = model
        self.config = config
        self.report = report
        self.points = config.points or model.verification.get("points", 25)
        self.jet_order = config.jet_order or model.verification.get("jet_order", 4)

    # -- infrastructure -----------------------------------------------------

    def rng(self, check_id):
        return np.random.default_rng(
            [self.config.seed, zlib.crc32(check_id.encode())]
        )

    def add(self, check_id, anchor, fn, tolerance, mode="le"):
        t0 = time.perf_counter()
        detail = {}
        try:
            out = fn(self.rng(check_id), detail)
        except Exception as exc:  # a crashed check is a failed check
            check = Check(check_id, anchor, float("inf"), tolerance, mode=mode,
                          detail={"error": f"{type(exc).__name__}: {exc}"},
                          wall_time=time.perf_counter() - t0)
            return self.report.add(check)
        residual, samples, worst = out if isinstance(out, tuple) else (out, None, None)
        check = Check(
            check_id, anchor, float(residual),
            tolerance * self.config.tolerance_scale if (
                tolerance is not None and mode == "le") else tolerance,
            mode=mode, detail=detail, samples=samples, worst_sample=worst,
            wall_time=time.perf_counter() - t0,
        )
        return self.report.add(check)

    def box_points(self, rng, n=None, box=None):
        box = box or self.model.verification_box()
        n = n or self.points
        return [
            dict(zip(self.model.m_coords,
                     [rng.uniform(lo, hi) for lo, hi in box]))
            for _ in range(n)
        ]

    def q_points(self, rng, n=8):
        dom = getattr(self.model, "q_domain", None) or {}
        out = []
        for _ in range(n):
            out.append({
                q: rng.uniform(*dom.get(q, (0.5, 1.0)))
                for q in self.model.lambda_rep.q_names
            })
        return out

    def param_draws(self, rng, names=None, count=1):
        ranges = self.model.verification.get("parameter_draws", {})
        draws = []
        for _ in range(count):
            d = {}
            for name, (lo, hi) in ranges.items():
                if names is None or name in names:
                    d[name] = rng.uniform(lo, hi)
            draws.append(d)
        return draws

    # -- algebra suite ------------------------------------------------------

    def suite_algebra(self):
        m = self.model
        self.add("algebra.antisymmetry", "structure-constants",
                 lambda rng, d: m.alg.antisymmetry_residual(), 1e-12)
        self.add("algebra.jacobi", "jacobi",
                 lambda rng, d: liecore.check_jacobi(m.alg), 1e-12)
        self.add("algebra.isotropy_closure", "h-subalgebra",
                 lambda rng, d: m.split.closure_residual(), 1e-12)

        def adh(rng, d):
            worst = 0.0
            for draw in [dict()] + self.param_draws(rng, count=10):
                mod = m.with_params(**draw) if draw else m
                worst = max(worst, liecore.check_adh_invariance(
                    mod.alg, mod.split, mod.form))
            d["draws"] = 10
            return worst
        self.add("algebra.adh_invariance", "conds_AdH", adh, 1e-13)

        for name, poly, section_value in m.casimirs:
            self.add(f"algebra.casimir.{name}", "pl1",
                     lambda rng, d, poly=poly: liecore.verify_casimir(
                         m.alg, poly, samples=24,
                         seed=int(rng.integers(2**31))), 1e-10)
            if section_value is not None and m.orbit is not None:
                def sec_val(rng, d, poly=poly, expect=section_value):
                    got = poly(m.orbit["lambda"])
                    d["value"] = got
                    d["expected"] = expect
                    return abs(got - expect)
                self.add(f"algebra.casimir_on_section.{name}", "orbit-section",
                         sec_val, 1e-10)

        if m.orbit is not None and m.orbit.get("index") is not None:
            def index_check(rng, d):
                est = liecore.algebra_index(m.alg, samples=40,
                                            seed=int(rng.integers(2**31)))
                d["estimated"] = est
                d["declared"] = m.orbit["index"]
                return abs(est - m.orbit["index"])
            self.add("algebra.index", "ind-g", index_check, 0.0)
        if m.orbit is not None and m.orbit.get("orbit_dim") is not None:
            def odim(rng, d):
                got = liecore.orbit_dimension(m.alg, m.orbit["lambda"])
                d["computed"] = got
                return abs(got - m.orbit["orbit_dim"])
            self.add("algebra.orbit_dimension", "rank-CAB", odim, 0.0)

        def orbit_even(rng, d):
            worst = 0
            for _ in range(12):
                f = rng.uniform(-1, 1, m.alg.dim)
                worst = max(worst, liecore.orbit_dimension(m.alg, f) % 2)
            return worst
        self.add("algebra.orbit_dimension_even", "rank-CAB", orbit_even, 0.0)

        def coad_linear(rng, d):
            worst = 0.0
            for _ in range(8):
                f, g = rng.uniform(-1, 1, (2, m.alg.dim))
                a, b = rng.uniform(-2, 2, 2)
                lhs = liecore.coadjoint_matrix(m.alg, a * f + b * g)
                rhs = (a * liecore.coadjoint_matrix(m.alg, f)
                       + b * liecore.coadjoint_matrix(m.alg, g))
                worst = max(worst, float(np.max(np.abs(lhs - rhs))))
            return worst
        self.add("algebra.coadjoint_linearity", "rank-CAB", coad_linear, 1e-12)

        def poisson_props(rng, d):
            dim = m.alg.dim
            worst = 0.0
            for _ in range(6):
                f = rng.uniform(-1, 1, dim)
                pa = _random_poly(rng, dim)
                pb = _random_poly(rng, dim)
                pc = _random_poly(rng, dim)
                ab = liecore.poisson_bracket(m.alg, pa, pb, f)
                ba = liecore.poisson_bracket(m.alg, pb, pa, f)
                worst = max(worst, abs(ab + ba))
                lhs = liecore.poisson_bracket(m.alg, pa * pb, pc, f)
                rhs = (pa(f) * liecore.poisson_bracket(m.alg, pb, pc, f)
                       + pb(f) * liecore.poisson_bracket(m.alg, pa, pc, f))
                worst = max(worst, abs(lhs - rhs))
            return worst
        self.add("algebra.poisson_properties", "pl1", poisson_props, 1e-10)

        if m.polarization is not None and m.orbit is not None:
            def pol(rng, d):
                rep = liecore.check_polarization(
                    m.alg, m.orbit["lambda"], m.polarization,
                    m.orbit["orbit_dim"])
                d.update({k: v for k, v in rep.items() if k != "ok"})
                return max(rep["closure_residual"], rep["isotropy_residual"],
                           0.0 if rep["dimension_ok"] else 1.0)
            self.add("algebra.polarization", "defp", pol, 1e-12)

        for name, poly, _ in m.identities:
            self.add(f"algebra.identity_on_annihilator.{name}", "defG",
                     lambda rng, d, poly=poly: liecore.check_identity_on_annihilator(
                         m.alg, m.split, poly, samples=32,
                         seed=int(rng.integers(2**31))), 1e-12)
        if not m.identities and m.casimirs:
            # zero homogeneous-space index: Casimirs must NOT vanish on the
            # annihilator (guards against silently dropped identities)
            name, poly, _ = m.casimirs[0]
            self.add("algebra.no_identity_generically", "i_M",
                     lambda rng, d: liecore.check_identity_on_annihilator(
                         m.alg, m.split, poly, samples=32,
                         seed=int(rng.integers(2**31))), 1e-2, mode="ge")

    # -- geometry suite ------------------------------------------------------

    def suite_geometry(self):
        m = self.model

        def chart_identity(rng, d):
            g = chart_to_matrix(m.chart, m.rep, np.zeros(m.chart.dim))
            return float(np.max(np.abs(g - np.eye(m.rep.size))))
        self.add("geometry.chart_identity", "can-coords", chart_identity, 1e-14)

        def roundtrip(rng, d):
            worst = 0.0
            for _ in range(6):
                c = rng.uniform(-0.4, 0.4, m.chart.dim)
                g = chart_to_matrix(m.chart, m.rep, c)
                c2 = chart_invert(m.chart, m.rep, g)
                worst = max(worst, float(np.max(np.abs(c - c2))))
            return worst
        self.add("geometry.chart_roundtrip", "can-coords", roundtrip, 1e-9)

        def chart_failure(rng, d):
            target = 1e3 * np.eye(m.rep.size)
            try:
                chart_invert(m.chart, m.rep, target, max_iter=12)
            except ChartError:
                return 0.0
            return 1.0
        self.add("geometry.chart_invert_failure_mode", "can-coords",
                 chart_failure, 0.0)

        def frame_props(rng, d):
            worst = {"duality": 0.0, "eta": 0.0, "xi": 0.0, "mixed": 0.0,
                     "maurer_cartan": 0.0}
            for _ in range(4):
                pt = rng.uniform(-0.3, 0.3, m.chart.dim)
                fr = m.engine.frames(pt, 1)
                worst["duality"] = max(worst["duality"], fr.duality_residual())
                worst["eta"] = max(worst["eta"], fr.commutator_residual("eta"))
                worst["xi"] = max(worst["xi"], fr.commutator_residual("xi"))
                worst["mixed"] = max(worst["mixed"], fr.mixed_commutator_residual())
                worst["maurer_cartan"] = max(worst["maurer_cartan"],
                                             fr.maurer_cartan_residual())
            d.update(worst)
            return max(worst.values())
        self.add("geometry.frame_relations", "maurer-cartan", frame_props, 1e-8)

        if m.declared_source is not None:
            def crosscheck(rng, d):
                worst = 0.0
                for pt in self.box_points(rng, n=max(10, self.points // 2)):
                    x = [pt[n] for n in m.m_coords]
                    dec = m.declared_source.frames(np.asarray(x), 0)
                    num = m.numeric_source.frames(np.asarray(x), 0)
                    for which in ("eta", "sigma", "xi"):
                        a = getattr(dec, which)
                        b = getattr(num, which)
                        if a is None:
                            continue
                        dev = float(np.max(np.abs(dec.values(which)
                                                  - num.values(which))))
                        worst = max(worst, dev)
                        d[which] = max(d.get(which, 0.0), dev)
                return worst
            self.add("geometry.declared_vs_numeric_frames", "frame-crosscheck",
                     crosscheck, 1e-8)

        src = m.frame_source()

        def metric_inverse(rng, d):
            worst = 0.0
            for pt in self.box_points(rng, n=6):
                x = [pt[n] for n in m.m_coords]
                worst = max(worst, geometry.metric_at(
                    m.form, m.split, src, x).inverse_residual)
            return worst
        self.add("geometry.metric_inverse", "gij_loc", metric_inverse, 1e-10)

        def christoffel(rng, d):
            worst = 0.0
            for pt in self.box_points(rng, n=6):
                x = [pt[n] for n in m.m_coords]
                gam = geometry.christoffel_at(m.alg, m.split, m.form, src, x)
                gj, _ = geometry.metric_jets(m.form, m.split, src, x, 1)
                oracle = geometry.levi_civita_oracle(gj)
                worst = max(worst, float(np.max(np.abs(gam - oracle))))
                d["torsion"] = max(d.get("torsion", 0.0), float(
                    np.max(np.abs(gam - np.swapaxes(gam, 1, 2)))))
            return worst
        self.add("geometry.christoffel_vs_levi_civita", "gamma_P_IJK",
                 christoffel, 1e-7)

        def torsion(rng, d):
            worst = 0.0
            for pt in self.box_points(rng, n=4):
                x = [pt[n] for n in m.m_coords]
                gam = geometry.christoffel_at(m.alg, m.split, m.form, src, x)
                worst = max(worst, float(np.max(np.abs(
                    gam - np.swapaxes(gam, 1, 2)))))
            return worst
        self.add("geometry.torsion_free", "gamma_P", torsion, 1e-10)

        def metricity(rng, d):
            worst = 0.0
            for pt in self.box_points(rng, n=4):
                x = [pt[n] for n in m.m_coords]
                worst = max(worst, geometry.metricity_residual(
                    m.alg, m.split, m.form, src, x))
            return worst
        self.add("geometry.metricity", "nabla-g", metricity, 1e-8)

        def killing(rng, d):
            source = src if src.frames([0.0] * len(m.m_coords), 1).xi is not None \
                else m.numeric_source
            worst = 0.0
            for pt in self.box_points(rng, n=4):
                x = [pt[n] for n in m.m_coords]
                worst = max(worst, geometry.killing_residual(
                    m.form, m.split, source, x))
            return worst
        self.add("geometry.killing_invariance", "Minv", killing, 1e-7)

        expected = m.doc.get("geometry_expected", {}).get("scalar_curvature")

        def curvature(rng, d):
            draws = [dict()]
            if expected is not None:
                draws += self.param_draws(rng, count=4)
            worst = 0.0
            values = []
            for draw in draws:
                mod = m.with_params(**draw) if draw else m
                msrc = mod.frame_source()
                rs = []
                for pt in self.box_points(rng, n=10):
                    x = [pt[n] for n in mod.m_coords]
                    rs.append(geometry.scalar_curvature_at(
                        mod.alg, mod.split, mod.form, msrc, x))
                values.append((min(rs), max(rs)))
                d["constancy"] = max(d.get("constancy", 0.0), max(rs) - min(rs))
                if expected is not None:
                    from .model import _param_expr
                    want = _param_expr(expected, mod.params, "geometry_expected").real
                    worst = max(worst, max(abs(r - want) for r in rs))
                    d["expected"] = want
                else:
                    worst = max(worst, max(rs) - min(rs))
            return worst
        self.add("geometry.scalar_curvature", "R-const", curvature, 1e-6)

    # -- clifford suite ------------------------------------------------------

    def suite_clifford(self):
        m = self.model
        self.add("clifford.anticommutation", "sys_gamma2",
                 lambda rng, d: m.gammas.anticommutator_residual(), 1e-12)
        self.add("clifford.anticommutation_lowered", "gamma_down",
                 lambda rng, d: m.gammas.lowered_anticommutator_residual(), 1e-12)
        self.add("clifford.isotropy_representation", "genH4",
                 lambda rng, d: clifford.isotropy_rep_residual(
                     m.alg, m.split, m.lambdas), 1e-11)
        self.add("clifford.gamma_commutation", "comm1",
                 lambda rng, d: clifford.gamma_commutation_residual(
                     m.alg, m.split, m.gammas, m.lambdas), 1e-11)
        self.add("clifford.gamma_commutation_lowered", "comm2",
                 lambda rng, d: clifford.gamma_commutation_residual(
                     m.alg, m.split, m.gammas, m.lambdas, lowered=True), 1e-11)
        self.add("clifford.spin_generators_traceless", "sp_gamma_x",
                 lambda rng, d: clifford.trace_residual(m.lambdas), 1e-12)

        def projectivity(rng, d):
            hbar = m.real_param("hbar", 1.0)
            rep = clifford.projectivity_report(
                m.alg, m.split, m.form, m.gammas, m.lambdas, m.gamma_consts,
                hbar=hbar)
            d.update(rep)
            return max(rep.values())
        self.add("clifford.projectivity", "sysBa", projectivity, 1e-11)

        if m.pseudospin is not None and "s" in m.params:
            def pseudo(rng, d):
                d["computed"] = m.pseudospin
                return abs(m.pseudospin - m.real_param("s"))
            self.add("clifford.pseudospin", "pseudospin", pseudo, 1e-12)

        def trace_gamma_x(rng, d):
            src = m.frame_source()
            worst = 0.0
            for pt in self.box_points(rng, n=4):
                x = [pt[n] for n in m.m_coords]
                G = clifford.spin_connection_at(
                    m.alg, m.split, m.gammas, m.gamma_consts, m.lambdas, src, x)
                worst = max(worst, abs(np.trace(G)))
            return worst
        self.add("clifford.spin_connection_traceless", "sp_gamma_x",
                 trace_gamma_x, 1e-10)

        if m.doc.get("clifford_expected", {}).get("gamma_consts_zero"):
            self.add("clifford.constant_part_vanishes", "Gamma_a",
                     lambda rng, d: float(np.max(np.abs(m.gamma_consts))), 1e-12)

    # -- dirac suite ---------------------------------------------------------

    def suite_dirac(self):
        m = self.model
        src = m.frame_source()
        xnames = tuple(m.m_coords)
        frame = VarFrame(xnames)
        hbar = m.real_param("hbar", 1.0)
        dirac = assemble_dirac(m.alg, m.split, m.gammas, m.gamma_consts,
                               m.lambdas, src, xnames, hbar)
        sym = [assemble_symmetry(m.alg, m.split, m.lambdas, src, xnames, A,
                                 m.gammas.dim) for A in range(m.alg.dim)]
        tests = monomial_spinors(frame, xnames, m.gammas.dim, 2)

        def sym_comm(rng, d):
            pts = self.box_points(rng, n=min(6, self.points))
            sel = _spread(tests, 8)
            worst = 0.0
            for A in range(m.alg.dim):
                worst = max(worst, commutator_residual(
                    sym[A], dirac, frame, pts, sel, order=3))
            return worst, len(tests), None
        self.add("dirac.symmetry_commutators", "killX0", sym_comm, 1e-8)

        def closure(rng, d):
            pts = self.box_points(rng, n=4)
            sel = _spread(tests, 6)
            worst = 0.0
            for A in range(m.alg.dim):
                for B in range(A + 1, m.alg.dim):
                    expected = [(m.alg.C[A, B, Cc], sym[Cc])
                                for Cc in range(m.alg.dim)
                                if m.alg.C[A, B, Cc] != 0]
                    worst = max(worst, commutator_residual(
                        sym[A], sym[B], frame, pts, sel, order=3,
                        expected=expected))
            return worst
        self.add("dirac.symmetry_closure", "xiX", closure, 1e-8)

        def reconstruction(rng, d):
            # degree-0 tests isolate B; degree-1 tests then isolate A^i
            pts = self.box_points(rng, n=3)
            worst = 0.0
            dim = m.gammas.dim
            d0 = monomial_spinors(frame, xnames, dim, 0)
            for pt in pts:
                A, B = dirac.coefficients(frame, pt, 1)
                for comp, test in enumerate(d0):
                    psi = test(pt, 2)
                    out = dirac.apply(psi, frame, pt)
                    col = comp % dim
                    for c in range(dim):
                        b_val = B[c][col].value if B[c][col] is not None else 0.0
                        worst = max(worst, abs(out[c].value - b_val))
                for i, name in enumerate(xnames):
                    for col in range(dim):
                        def lin(point, order, i=i, col=col):
                            sp = frame.space(order)
                            from .jets import Jet
                            mono = Jet.variable(sp, frame.index[name], point[name])
                            zero = Jet.constant(sp, 0.0)
                            return [mono if c == col else zero for c in range(dim)]
                        out = dirac.apply(lin(pt, 2), frame, pt)
                        for c in range(dim):
                            a_val = (A[i][c][col].value
                                     if A[i][c][col] is not None else 0.0)
                            b_val = (B[c][col].value
                                     if B[c][col] is not None else 0.0)
                            want = a_val + b_val * pt[name]
                            worst = max(worst, abs(out[c].value - want))
            return worst
        self.add("dirac.first_order_reconstruction", "R1form",
                 reconstruction, 1e-10)

        for spec in m.symmetry_polynomials:
            poly = OperatorPolynomial([(c, w) for c, w in spec["words"]])
            bindings = {k: sym[k] for k in range(m.alg.dim)}
            order_needed = poly.max_word_length() + 1
            tol = 1e-6 if poly.max_word_length() >= 3 else 1e-8

            if spec.get("commutes_with_dirac"):
                def poly_comm(rng, d, poly=poly, bindings=bindings,
                              order_needed=order_needed):
                    pts = self.box_points(rng, n=3)
                    sel = _spread(tests, 6)
                    worst = 0.0
                    for pt in pts:
                        for test in sel:
                            psi = test(pt, order_needed + 1)
                            a = poly.apply(bindings, dirac.apply(psi, frame, pt),
                                           frame, pt)
                            b = dirac.apply(poly.apply(bindings, psi, frame, pt),
                                            frame, pt)
                            diff = [x - y for x, y in zip(a, b)]
                            worst = max(worst, spinor_norm(diff)
                                        / max(1.0, spinor_norm(psi)))
                    return worst
                self.add(f"dirac.polynomial_commutes.{spec['name']}", "kas11",
                         poly_comm, tol)

            if spec.get("dirac_multiple") is not None:
                from .model import _param_expr
                mult = _param_expr(spec["dirac_multiple"], m.params, "dirac_multiple")

                def poly_mult(rng, d, poly=poly, bindings=bindings, mult=mult,
                              order_needed=order_needed):
                    pts = self.box_points(rng, n=4)
                    sel = _spread(tests, 8)
                    d["multiple"] = mult
                    return polynomial_relation_residual(
                        poly, bindings, frame, pts, sel, order_needed,
                        rhs=[(mult, dirac)])
                self.add(f"dirac.polynomial_dirac_multiple.{spec['name']}",
                         "K2-dirac", poly_mult, 1e-8)

    # -- lambda suite --------------------------------------------------------

    def suite_lambda(self):
        m = self.model
        if m.lambda_rep is None:
            return
        rep = m.lambda_rep
        frame = VarFrame(rep.q_names)
        hbar = m.real_param("hbar", 1.0)

        def commutators(rng, d):
            pts = self.q_points(rng, n=5)
            tests = random_spinors(frame, rep.q_names, 1, 2, 4,
                                   seed=int(rng.integers(2**31)))
            return rep.commutator_residual(frame, pts, tests, order=4)
        self.add("lambda.commutators", "defL0", commutators, 1e-9)

        for k, (name, poly, _) in enumerate(m.casimirs):
            expect = m.doc.get("casimirs", [{}])[k].get("lambda_rep_value")
            if expect is None:
                continue
            from .model import _param_expr
            want = _param_expr(expect, m.params, "lambda_rep_value")

            def kappa_check(rng, d, poly=poly, want=want):
                pts = self.q_points(rng, n=5)
                tests = random_spinors(frame, rep.q_names, 1, 2, 4,
                                       seed=int(rng.integers(2**31)))
                kappa, spread, res = casimir_value(
                    rep, poly, frame, pts, tests, order=poly.degree() + 1,
                    hbar=hbar)
                d["kappa"] = kappa
                d["expected"] = want
                d["spread"] = spread
                d["proportionality"] = res
                return max(abs(kappa - want), spread)
            self.add(f"lambda.casimir_constant.{name}", "kappa", kappa_check, 1e-9)

        if m.polarization is not None:
            def beta(rng, d):
                b = beta_vector(m.alg, m.polarization)
                d["beta"] = list(b)
                return 0.0
            self.add("lambda.beta_vector", "beta", beta, None, mode="info")

        if m.measure is not None:
            def measure(rng, d):
                return _measure_symmetry(m, frame, self.q_points(rng, n=6))
            self.add("lambda.measure_symmetry", "scQ", measure, 1e-10)

        for name, poly, kappa_expected in m.identities:
            def ident(rng, d, poly=poly, want=kappa_expected):
                pts = self.q_points(rng, n=5)
                tests = random_spinors(frame, rep.q_names, 1, 2, 4,
                                       seed=int(rng.integers(2**31)))
                kappa, spread, res = casimir_value(
                    rep, poly, frame, pts, tests, order=poly.degree() + 1,
                    hbar=hbar)
                d["kappa"] = kappa
                d["spread"] = spread
                if want is not None:
                    d["expected"] = want
                    return max(abs(kappa - want), spread)
                return spread
            self.add(f"lambda.identity_constant.{name}", "tl2", ident, 1e-9)

    # -- solutions suite -----------------------------------------------------

    def suite_solutions(self):
        m = self.model
        if m.solutions is None:
            return
        if m.solutions["type"] == "reduced_ode":
            self._solutions_ode()
        else:
            self._solutions_flows()

    def _sigma_draws(self, rng, count):
        dom = self.model.solutions.get("sigma_domain", {})
        out = []
        for _ in range(count):
            out.append({q: rng.uniform(*dom.get(q, (0.6, 1.0)))
                        for q in self.model.lambda_rep.q_names})
        return out

    def _certify_field(self, check_id, anchor, make_field, mass, n_sigma=5,
                       n_points=6, tol=1e-6, model=None):
        m = model if model is not None else self.model
        src = m.frame_source()
        xnames = tuple(m.m_coords)
        frame = VarFrame(xnames)
        hbar = m.real_param("hbar", 1.0)
        dirac = assemble_dirac(m.alg, m.split, m.gammas, m.gamma_consts,
                               m.lambdas, src, xnames, hbar)

        def fn(rng, d):
            worst = 0.0
            worst_pt = None
            floor = np.inf
            for sigma in self._sigma_draws(rng, n_sigma):
                field = make_field(sigma)
                pts = self.box_points(rng, n=n_points)
                r, wp = solutions.verify_dirac_residual(
                    dirac, field, frame, pts, mass, order=2)
                if r > worst:
                    worst, worst_pt = r, wp
                floor = min(floor, solutions.solution_norm_floor(field, pts))
            d["norm_floor"] = floor
            worst_sample = ([worst_pt[n] for n in xnames] if worst_pt else None)
            return worst, n_sigma * n_points, worst_sample

        return self.add(check_id, anchor, fn, tol)

    def _solutions_ode(self):
        m = self.model
        rep = m.lambda_rep
        frameQ = VarFrame(rep.q_names)
        hbar = m.real_param("hbar", 1.0)
        mass = m.real_param("m")
        traj = solutions.build_trajectory(m)
        nil = solutions.named_matrix(
            m, m.solutions["on_q"].get("nilpotent", "Lambda_1"))
        self.add("solutions.nilpotency", "ww3",
                 lambda rng, d: float(np.max(np.abs(nil @ nil))), 1e-12)

        def ode_res(rng, d):
            lo, hi = m.solutions["ode"]["u_range"]
            us = np.linspace(lo + 0.02 * (hi - lo), hi - 0.02 * (hi - lo), 7)
            d["matrix_commutativity"] = traj.commutativity_along_path(us[::2])
            return traj.ode_residual(us)
        self.add("solutions.ode_residual", "sol1", ode_res, 1e-8)

        qfield = solutions.build_q_side_field(m, trajectory=traj)

        def constraint(rng, d):
            pts = self._q_interval_points(rng, 6)
            return constraint_residual(rep, m.split, m.lambdas, qfield,
                                       frameQ, pts, order=2)
        self.add("solutions.isotropy_constraint", "Dl", constraint, 1e-8)

        def reduced(rng, d):
            Dl = rep.reduced_dirac(m.split, m.gammas, m.gamma_consts, hbar)
            worst = 0.0
            for pt in self._q_interval_points(rng, 6):
                psi = qfield(pt, 2)
                out = Dl.apply(psi, frameQ, pt)
                diff = [o - mass * p.truncate(1) for o, p in zip(out, psi)]
                worst = max(worst, spinor_norm(diff) / max(1.0, spinor_norm(psi)))
            return worst
        self.add("solutions.reduced_dirac", "Dll3", reduced, 1e-8)

        self._certify_field(
            "solutions.dirac_residual", "sol2",
            lambda sigma: solutions.build_solution_field(m, sigma, trajectory=traj),
            mass)

        def wrong_mass(rng, d):
            src = m.frame_source()
            xnames = tuple(m.m_coords)
            frame = VarFrame(xnames)
            dirac = assemble_dirac(m.alg, m.split, m.gammas, m.gamma_consts,
                                   m.lambdas, src, xnames, hbar)
            sigma = self._sigma_draws(rng, 1)[0]
            field = solutions.build_solution_field(m, sigma, trajectory=traj)
            r, _ = solutions.verify_dirac_residual(
                dirac, field, frame, self.box_points(rng, n=4), mass + 0.1,
                order=2)
            return r
        self.add("solutions.wrong_mass_control", "sol2", wrong_mass, 1e-2,
                 mode="ge")

        def norm_floor(rng, d):
            sigma = self._sigma_draws(rng, 1)[0]
            field = solutions.build_solution_field(m, sigma, trajectory=traj)
            return solutions.solution_norm_floor(field, self.box_points(rng, n=6))
        self.add("solutions.norm_floor", "sol2", norm_floor, 1e-6, mode="ge")

        self._xlp_check(lambda sigma: solutions.build_solution_field(
            m, sigma, joint=True, trajectory=traj))

        for spec in m.symmetry_polynomials:
            if spec.get("solution_eigenvalue") is None:
                continue
            from .model import _param_expr
            eig = _param_expr(spec["solution_eigenvalue"], m.params,
                              "solution_eigenvalue")

            def eigen(rng, d, spec=spec, eig=eig):
                src = m.frame_source()
                xnames = tuple(m.m_coords)
                joint = VarFrame(tuple(xnames) + tuple(rep.q_names))
                sym = [assemble_symmetry(m.alg, m.split, m.lambdas, src,
                                         xnames, A, m.gammas.dim)
                       for A in range(m.alg.dim)]
                poly = OperatorPolynomial(spec["words"])
                bindings = {k: sym[k] for k in range(m.alg.dim)}
                d["eigenvalue"] = eig
                worst = 0.0
                for sigma in self._sigma_draws(rng, 2):
                    field = solutions.build_solution_field(
                        m, sigma, joint=True, trajectory=traj)
                    for pt in self.box_points(rng, n=2):
                        full = {**pt, **sigma}
                        psi = field(full, poly.max_word_length() + 1)
                        out = poly.apply(bindings, psi, joint, full)
                        k_out = out[0].space.order
                        diff = [o - eig * p.truncate(k_out)
                                for o, p in zip(out, psi)]
                        worst = max(worst, spinor_norm(diff)
                                    / max(1.0, spinor_norm(psi)))
                return worst
            self.add(f"solutions.eigenvalue.{spec['name']}", "XLp", eigen, 1e-6)

    def _q_interval_points(self, rng, n):
        dom = getattr(self.model, "q_domain", None) or {}
        lo, hi = self.model.solutions["ode"]["u_range"]
        pts = []
        for _ in range(n):
            pt = {q: rng.uniform(*dom.get(q, (0.6, 1.0)))
                  for q in self.model.lambda_rep.q_names}
            # keep the trajectory argument inside the integrated interval
            arg = self.model.solutions["on_q"]["argument"]
            if arg in self.model.lambda_rep.q_names:
                pt[arg] = rng.uniform(lo + 0.05, hi - 0.05)
            pts.append(pt)
        return pts

    def _xlp_check(self, make_joint_field):
        m = self.model
        rep = m.lambda_rep
        src = m.frame_source()
        xnames = tuple(m.m_coords)
        joint = VarFrame(tuple(xnames) + tuple(rep.q_names))
        sym = [assemble_symmetry(m.alg, m.split, m.lambdas, src, xnames, A,
                                 m.gammas.dim) for A in range(m.alg.dim)]

        def xlp(rng, d):
            worst = 0.0
            for sigma in self._sigma_draws(rng, 2):
                field = make_joint_field(sigma)
                for pt in self.box_points(rng, n=2):
                    full = {**pt, **sigma}
                    psi = field(full, 2)
                    scale = max(1.0, spinor_norm(psi))
                    for A in range(m.alg.dim):
                        a = sym[A].apply(psi, joint, full)
                        b = rep.operator(A).apply(psi, joint, full)
                        worst = max(worst, spinor_norm(
                            [x + y for x, y in zip(a, b)]) / scale)
            return worst
        self.add("solutions.transported_system", "XLp", xlp, 1e-7)

    def _solutions_flows(self):
        m = self.model
        rep = m.lambda_rep
        frameQ = VarFrame(rep.q_names)
        hbar = m.real_param("hbar", 1.0)
        mass = m.real_param("m")
        qfield = solutions.build_q_side_field(m)

        def constraint(rng, d):
            pts = self.q_points(rng, n=6)
            return constraint_residual(rep, m.split, m.lambdas, qfield,
                                       frameQ, pts, order=2)
        self.add("solutions.isotropy_constraint", "Dl", constraint, 1e-8)

        def constraint_neg(rng, d):
            bad = m.with_params(j2=m.params["j2"] + 0.4)
            badfield = solutions.build_q_side_field(bad)
            pts = self.q_points(rng, n=4)
            return constraint_residual(bad.lambda_rep, bad.split, bad.lambdas,
                                       badfield, frameQ, pts, order=2)
        self.add("solutions.wrong_j2_control", "Dl", constraint_neg, 1e-2,
                 mode="ge")

        def reduced(rng, d):
            Dl = rep.reduced_dirac(m.split, m.gammas, m.gamma_consts, hbar)
            worst = 0.0
            for pt in self.q_points(rng, n=6):
                psi = qfield(pt, 2)
                out = Dl.apply(psi, frameQ, pt)
                diff = [o - mass * p.truncate(1) for o, p in zip(out, psi)]
                worst = max(worst, spinor_norm(diff) / max(1.0, spinor_norm(psi)))
            return worst
        self.add("solutions.reduced_dirac", "Dll3", reduced, 1e-8)

        def scan(rng, d):
            cfg = m.verification.get("reduction_scan", {})
            half1 = cfg.get("j1_halfwidth", 0.5)
            half2 = cfg.get("j2_halfwidth", 0.5)
            n = cfg.get("grid", 21)
            j1s = np.linspace(-mass - half1, -mass + half1, n)
            s_val = m.real_param("s")
            j2s = np.linspace(s_val / 2 - half2, s_val / 2 + half2, n)
            pts = self.q_points(rng, n=2)
            best = (np.inf, None, None)
            for j1 in j1s:
                for j2 in j2s:
                    mod = m.with_params(j1=j1, j2=j2)
                    badfield = solutions.build_q_side_field(mod)
                    r = constraint_residual(mod.lambda_rep, mod.split,
                                            mod.lambdas, badfield, frameQ,
                                            pts, order=1)
                    Dl = mod.lambda_rep.reduced_dirac(
                        mod.split, mod.gammas, mod.gamma_consts, hbar)
                    for pt in pts:
                        psi = badfield(pt, 1)
                        out = Dl.apply(psi, frameQ, pt)
                        diff = [o - mass * p.truncate(0)
                                for o, p in zip(out, psi)]
                        r += spinor_norm(diff) / max(1.0, spinor_norm(psi))
                    if r < best[0]:
                        best = (r, j1, j2)
            d["minimizer_j1"] = best[1]
            d["minimizer_j2"] = best[2]
            d["expected_j1"] = -mass
            d["expected_j2"] = s_val / 2
            step = max(half1, half2) * 2 / (n - 1)
            return max(abs(best[1] + mass), abs(best[2] - s_val / 2)) / step
        self.add("solutions.reduction_scan", "tl1", scan, 0.5)

        factors = solutions.build_flow_factors(m)
        from .exprs import CompiledExpr, SymbolTable
        st = SymbolTable(variables=list(rep.q_names), parameters=list(m.params))
        probe = solutions._BoundExpr(
            CompiledExpr("exp(0.3*q1 - 0.2*q2)*(1 + 0.5*i*q1*q2)", st), m.params)
        amounts = m.verification.get("flow_amounts", [-0.25, 0.25])

        def flow_identity(rng, d):
            from .jets import Jet, space
            worst = 0.0
            sp = space(len(rep.q_names), 0)
            for factor in factors:
                q = self.q_points(rng, n=1)[0]
                env = frameQ.seed(q, 0)
                env.update(m.params)
                env[factor.amount_name] = Jet.constant(sp, 0.0)
                out = factor.apply(lambda e: [probe.eval_env(e)])(env)
                direct = probe.eval_env({**frameQ.seed(q, 0), **m.params})
                worst = max(worst, abs(out[0].value - direct.value))
            return worst
        self.add("solutions.flow_identity_at_zero", "expl", flow_identity, 1e-12)

        def flow_oracle(rng, d):
            from .jets import Jet, space
            sp = space(len(rep.q_names), 0)
            worst = 0.0
            for factor in factors:
                A = next(k for k, name in enumerate(m.m_coords)
                         if name == factor.amount_name)
                op = rep.operator(m.split.m[A])
                for _ in range(max(4, self.points // 5)):
                    q = self.q_points(rng, n=1)[0]
                    amt = rng.uniform(*amounts)
                    env = frameQ.seed(q, 0)
                    env.update(m.params)
                    env[factor.amount_name] = Jet.constant(sp, amt)
                    closed = factor.apply(lambda e: [probe.eval_env(e)])(env)[0].value
                    oracle = solutions.transport_oracle(
                        op, lambda e: [probe.eval_env({**e, **m.params})], q, amt)
                    worst = max(worst, abs(closed - oracle) / max(1.0, abs(oracle)))
                d[f"flow_{factor.amount_name}"] = worst
            return worst
        self.add("solutions.flow_vs_transport_oracle", "expl", flow_oracle, 1e-6)

        def group_law(rng, d):
            worst = 0.0
            for factor in factors:
                for _ in range(4):
                    q = self.q_points(rng, n=1)[0]
                    t1, t2 = rng.uniform(amounts[0] / 2, amounts[1] / 2, 2)
                    worst = max(worst, solutions.flow_group_law_residual(
                        factor, probe, q, (t1, t2), m.params))
            return worst
        self.add("solutions.flow_group_law", "expl", group_law, 1e-7)

        for s_val in (m.real_param("s"), -m.real_param("s")):
            mod = m if s_val == m.real_param("s") else m.with_params(s=s_val)
            self._certify_field(
                f"solutions.dirac_residual.s{'+' if s_val > 0 else '-'}",
                "solads3",
                lambda sigma, mod=mod: solutions.build_solution_field(mod, sigma),
                mass, n_sigma=5, n_points=4, model=mod)

        def wrong_mass(rng, d):
            src = m.frame_source()
            xnames = tuple(m.m_coords)
            frame = VarFrame(xnames)
            dirac = assemble_dirac(m.alg, m.split, m.gammas, m.gamma_consts,
                                   m.lambdas, src, xnames, hbar)
            sigma = self._sigma_draws(rng, 1)[0]
            field = solutions.build_solution_field(m, sigma)
            r, _ = solutions.verify_dirac_residual(
                dirac, field, frame, self.box_points(rng, n=4), mass + 0.1,
                order=2)
            return r
        self.add("solutions.wrong_mass_control", "solads3", wrong_mass, 1e-2,
                 mode="ge")

        def norm_floor(rng, d):
            sigma = self._sigma_draws(rng, 1)[0]
            field = solutions.build_solution_field(m, sigma)
            return solutions.solution_norm_floor(field, self.box_points(rng, n=6))
        self.add("solutions.norm_floor", "solads3", norm_floor, 1e-6, mode="ge")

        self._xlp_check(lambda sigma: solutions.build_solution_field(
            m, sigma, joint=True))


def _spread(items, count):
    if len(items) <= count:
        return items
    idx = np.linspace(0, len(items) - 1, count).astype(int)
    return [items[i] for i in idx]


def _random_poly(rng, dim, degree=2):
    poly = liecore.DualPolynomial.constant(dim, rng.normal())
    for _ in range(3):
        term = liecore.DualPolynomial.constant(dim, rng.normal())
        for _ in range(rng.integers(1, degree + 1)):
            term = term * liecore.DualPolynomial.coordinate(
                dim, int(rng.integers(dim)))
        poly = poly + term
    return poly


def _measure_symmetry(model, frame, points):
    """Formal symmetry of -i hbar ell w.r.t. the declared measure density:
    d_i(rho c^i) = rho (p + conj p) for every operator."""
    rep = model.lambda_rep
    worst = 0.0
    n = len(rep.q_names)
    for point in points:
        env = frame.seed(point, 1)
        env.update(model.params)
        rho = model.measure.eval_env(env)
        from .jets import Jet

        if not isinstance(rho, Jet):
            rho = Jet.constant(frame.space(1), rho)
        for A in range(model.alg.dim):
            div = 0.0
            for i in range(n):
                expr = rep.coeff_exprs[A][i]
                if expr is None:
                    continue
                c = expr.eval_env(env)
                if not isinstance(c, Jet):
                    continue
                div += (rho * c).derivative(i).value
            p_expr = rep.potential_exprs[A]
            p = p_expr.eval_env(env) if p_expr is not None else 0.0
            p_val = p.value if isinstance(p, Jet) else complex(p)
            worst = max(worst, abs(div - rho.value * (p_val + np.conj(p_val))))
    return float(worst)
