"""First-order matrix-coefficient differential operators acting on spinor jets.

An operator is A^i(x) d_i + B(x) with d x d matrix coefficients.  It acts on
spinors represented as lists of jets over an evaluation frame (an ordered set
of jet variables), so the same operator can be applied in a pure coordinate
frame or in a joint frame that also carries solution parameters.  Commutators
and operator polynomials are evaluated extensionally, by double application
on polynomial test spinors, never by symbolic coefficient calculus.
"""

import itertools
import math

import numpy as np

from .jets import Jet, embed_jet, space


class VarFrame:
    """Ordered jet-variable axes for one evaluation."""

    def __init__(self, names):
        self.names = tuple(names)
        self.index = {n: k for k, n in enumerate(self.names)}

    def space(self, order):
        return space(len(self.names), order)

    def seed(self, point, order):
        sp = self.space(order)
        return {
            name: Jet.variable(sp, k, complex(point[name]))
            for k, name in enumerate(self.names)
        }

    def __len__(self):
        return len(self.names)


def spinor_norm(psi):
    return max(float(np.max(np.abs(j.coeffs))) for j in psi)


def spinor_sub(a, b):
    return [x - y for x, y in zip(a, b)]


class FirstOrderOperator:
    """deriv_names: coordinates the operator differentiates; provider supplies
    the matrix coefficients as jets in the evaluation frame."""

    def __init__(self, deriv_names, dim, provider, label=""):
        self.deriv_names = tuple(deriv_names)
        self.dim = dim
        self.provider = provider
        self.label = label
        self._cache = {}

    def coefficients(self, frame, point, order):
        key = (frame.names, tuple(sorted((n, complex(v)) for n, v in point.items())), order)
        hit = self._cache.get(key)
        if hit is None:
            hit = self.provider(frame, point, order)
            self._cache[key] = hit
            if len(self._cache) > 4096:
                self._cache.clear()
        return hit

    def apply(self, psi, frame, point):
        """(A^i d_i + B) psi; input jets of order k give output of order k-1."""
        k = psi[0].space.order
        if k == 0:
            raise ValueError("cannot apply a first-order operator to an order-0 jet")
        A, B = self.coefficients(frame, point, k - 1)
        d = self.dim
        sp = frame.space(k - 1)
        out = [Jet.constant(sp, 0.0) for _ in range(d)]
        for name, mat in zip(self.deriv_names, A):
            v = frame.index[name]
            dpsi = [psi_e.derivative(v) for psi_e in psi]
            for c in range(d):
                for e in range(d):
                    entry = mat[c][e]
                    if _is_zero(entry):
                        continue
                    out[c] = out[c] + entry * dpsi[e]
        if B is not None:
            tpsi = [p.truncate(k - 1) for p in psi]
            for c in range(d):
                for e in range(d):
                    entry = B[c][e]
                    if _is_zero(entry):
                        continue
                    out[c] = out[c] + entry * tpsi[e]
        return out

    def __repr__(self):
        return f"FirstOrderOperator({self.label or 'anonymous'}, d={self.dim})"


def _is_zero(entry):
    if entry is None:
        return True
    if isinstance(entry, Jet):
        return not entry.coeffs.any()
    return entry == 0


def expr_provider(deriv_names, A_exprs, B_exprs, params, dim):
    """Coefficients from CompiledExpr grids, evaluated in the frame env.

    A_exprs: one d x d grid per deriv name (entries CompiledExpr, scalar, or
    None); B_exprs: a d x d grid or None.
    """

    def provider(frame, point, order):
        env = frame.seed(point, order)
        env.update(params)
        sp = frame.space(order)

        def ev(entry):
            if entry is None:
                return None
            if not hasattr(entry, "eval_env"):
                return Jet.constant(sp, complex(entry)) if entry != 0 else None
            out = entry.eval_env(env)
            if not isinstance(out, Jet):
                out = Jet.constant(sp, out)
            return out.lift(order) if out.space.order < order else out.truncate(order)

        A = [[[ev(A_exprs[i][c][e]) for e in range(dim)] for c in range(dim)]
             for i in range(len(deriv_names))]
        B = None
        if B_exprs is not None:
            B = [[ev(B_exprs[c][e]) for e in range(dim)] for c in range(dim)]
        return A, B

    return provider


def scalar_expr_operator(deriv_names, coeff_exprs, potential_expr, params, label=""):
    """A scalar (d=1) operator sum_i c^i(q) d_i + p(q) from expressions."""
    A = [[[coeff_exprs[i]]] for i in range(len(deriv_names))]
    B = [[potential_expr]] if potential_expr is not None else None
    return FirstOrderOperator(
        deriv_names, 1, expr_provider(deriv_names, A, B, params, 1), label=label
    )


def frame_provider(source, split, x_names, build):
    """Coefficients computed from frame jets at h = e_H and embedded into the
    evaluation frame.  build(frame_block, trunc) returns (A, B) with entries
    jets over the x-subspace; trunc truncates to the requested order."""

    def provider(frame, point, order):
        x = [float(np.real(point[n])) for n in x_names]
        block = source.frames(np.asarray(x), order)
        positions = [frame.index[n] for n in x_names]
        tsp = frame.space(order)

        def embed(entry):
            if entry is None or (not isinstance(entry, Jet) and entry == 0):
                return None
            if not isinstance(entry, Jet):
                return Jet.constant(tsp, complex(entry))
            return embed_jet(entry.truncate(order), positions, tsp)

        A, B = build(block)
        A = [[[embed(e) for e in row] for row in mat] for mat in A]
        B = [[embed(e) for e in row] for row in B] if B is not None else None
        return A, B

    return provider


def assemble_dirac(alg, split, gammas, gamma_consts, lambdas, source, x_names,
                   hbar=1.0):
    """D_M = i hbar gamma^a [eta_a^i d_i + Gamma_a + eta_a^alpha Lambda_alpha]."""
    m, h = split.m, split.h
    d = gammas.dim
    n = len(x_names)
    const = 1j * hbar * sum(
        gammas.gammas[a] @ gamma_consts[a] for a in range(len(m))
    )

    def build(block):
        A = []
        for i in range(n):
            mat = [[None] * d for _ in range(d)]
            for a in range(len(m)):
                eta = block.eta[m[a], i]
                coef = 1j * hbar * gammas.gammas[a]
                for c in range(d):
                    for e in range(d):
                        if coef[c, e] != 0:
                            t = eta * coef[c, e]
                            mat[c][e] = t if mat[c][e] is None else mat[c][e] + t
            A.append(mat)
        B = [[complex(const[c, e]) if const[c, e] != 0 else None
              for e in range(d)] for c in range(d)]
        for a in range(len(m)):
            for al in range(len(h)):
                eta_h = block.eta[m[a], n + al]
                coef = 1j * hbar * gammas.gammas[a] @ lambdas[al]
                for c in range(d):
                    for e in range(d):
                        if coef[c, e] != 0:
                            t = eta_h * coef[c, e]
                            B[c][e] = t if B[c][e] is None else B[c][e] + t
        return A, B

    return FirstOrderOperator(
        x_names, d, frame_provider(source, split, x_names, build), label="D_M"
    )


def assemble_symmetry(alg, split, lambdas, source, x_names, A_index, dim):
    """X~_A = xi_A^a(x) d_a + xi_A^alpha(x, e_H) Lambda_alpha."""
    n = len(x_names)
    h = split.h

    def build(block):
        if block.xi is None:
            raise ValueError("frame source provides no xi fields")
        A = []
        for i in range(n):
            xi = block.xi[A_index, i]
            mat = [[xi if c == e else None for e in range(dim)] for c in range(dim)]
            A.append(mat)
        B = [[None] * dim for _ in range(dim)]
        for al in range(len(h)):
            xi_h = block.xi[A_index, n + al]
            for c in range(dim):
                for e in range(dim):
                    if lambdas[al][c, e] != 0:
                        t = xi_h * lambdas[al][c, e]
                        B[c][e] = t if B[c][e] is None else B[c][e] + t
        return A, B

    return FirstOrderOperator(
        x_names, dim, frame_provider(source, split, x_names, build),
        label=f"X~_{A_index + 1}",
    )


# -- test spinor families -----------------------------------------------------


def monomial_spinors(frame, active_names, dim, max_degree):
    """All (monomial, component) pairs up to max_degree in the active vars.

    Returns a list of callables (point, order) -> spinor jets.
    """
    idx = [frame.index[n] for n in active_names]
    fields = []
    for deg in range(max_degree + 1):
        for combo in itertools.combinations_with_replacement(range(len(idx)), deg):
            for comp in range(dim):
                def make(combo=combo, comp=comp):
                    def field(point, order):
                        sp = frame.space(order)
                        mono = Jet.constant(sp, 1.0)
                        for k in combo:
                            mono = mono * Jet.variable(
                                sp, idx[k], complex(point[frame.names[idx[k]]])
                            )
                        zero = Jet.constant(sp, 0.0)
                        return [mono if c == comp else zero for c in range(dim)]
                    return field
                fields.append(make())
    return fields


def random_spinors(frame, active_names, dim, max_degree, count, seed):
    """Seeded random complex polynomial spinors (sums of monomials)."""
    rng = np.random.default_rng(seed)
    idx = [frame.index[n] for n in active_names]
    monos = []
    for deg in range(max_degree + 1):
        monos.extend(itertools.combinations_with_replacement(range(len(idx)), deg))
    fields = []
    for _ in range(count):
        coef = rng.normal(size=(len(monos), dim)) + 1j * rng.normal(size=(len(monos), dim))

        def make(coef=coef):
            def field(point, order):
                sp = frame.space(order)
                out = [Jet.constant(sp, 0.0) for _ in range(dim)]
                for w, combo in enumerate(monos):
                    mono = Jet.constant(sp, 1.0)
                    for k in combo:
                        mono = mono * Jet.variable(
                            sp, idx[k], complex(point[frame.names[idx[k]]])
                        )
                    for c in range(dim):
                        out[c] = out[c] + mono * coef[w, c]
                return out
            return field

        fields.append(make())
    return fields


# -- extensional operator algebra ----------------------------------------------


def commutator_apply(op1, op2, psi, frame, point):
    a = op1.apply(op2.apply(psi, frame, point), frame, point)
    b = op2.apply(op1.apply(psi, frame, point), frame, point)
    return spinor_sub(a, b)


def commutator_residual(op1, op2, frame, points, tests, order, expected=None):
    """max over tests/points of |([op1,op2] - expected) psi| / |psi|-scale.

    expected: None, or a list of (coefficient, operator) pairs.
    """
    worst = 0.0
    for point in points:
        for test in tests:
            psi = test(point, order)
            scale = max(1.0, spinor_norm(psi))
            res = commutator_apply(op1, op2, psi, frame, point)
            if expected:
                for coef, op in expected:
                    if coef == 0:
                        continue
                    term = op.apply(psi, frame, point)
                    res = [r - coef * t.truncate(r.space.order)
                           for r, t in zip(res, term)]
            worst = max(worst, spinor_norm(res) / scale)
    return worst


class OperatorPolynomial:
    """Linear combination of fully symmetrized words in named operators."""

    def __init__(self, words):
        # words: list of (coefficient, tuple of operator keys)
        self.words = [(complex(c), tuple(w)) for c, w in words]

    def apply(self, bindings, psi, frame, point):
        out = None
        for coef, word in self.words:
            perms = sorted(set(itertools.permutations(word)))
            acc = None
            for perm in perms:
                cur = psi
                for key in reversed(perm):
                    cur = bindings[key].apply(cur, frame, point)
                acc = cur if acc is None else [a + c for a, c in zip(acc, cur)]
            w = coef / len(perms)
            term = [a * w for a in acc]
            out = term if out is None else [o + t.truncate(o.space.order)
                                            for o, t in zip(out, term)]
        return out

    def max_word_length(self):
        return max((len(w) for _, w in self.words), default=0)

    @staticmethod
    def from_dual_polynomial(poly, scale=1.0):
        """Monomial f_A f_B ... maps to the symmetrized word (A, B, ...) with
        each operator letter multiplied by `scale` (e.g. -i hbar)."""
        words = []
        for expo, coef in poly.monomials():
            word = []
            for k, p in enumerate(expo):
                word.extend([k] * p)
            words.append((coef * scale ** len(word), tuple(word)))
        return OperatorPolynomial(words)


def polynomial_relation_residual(poly, bindings, frame, points, tests, order,
                                 rhs=None):
    """max |poly(ops) psi - rhs psi| / scale on the test family.

    rhs: None, a complex constant, or a list of (coefficient, operator) pairs.
    """
    worst = 0.0
    for point in points:
        for test in tests:
            psi = test(point, order)
            scale = max(1.0, spinor_norm(psi))
            res = poly.apply(bindings, psi, frame, point)
            if rhs is not None:
                if isinstance(rhs, (int, float, complex)):
                    res = [r - rhs * p.truncate(r.space.order)
                           for r, p in zip(res, psi)]
                else:
                    for coef, op in rhs:
                        term = op.apply(psi, frame, point)
                        res = [r - coef * t.truncate(r.space.order)
                               for r, t in zip(res, term)]
            worst = max(worst, spinor_norm(res) / scale)
    return worst
