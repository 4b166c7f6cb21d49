"""Irreducible first-order realizations of the algebra on the orbit space Q,
Casimir constants, identity constraints, and the reduced Dirac operator."""

import numpy as np

from .liecore import DualPolynomial
from .operators import (
    FirstOrderOperator,
    OperatorPolynomial,
    expr_provider,
    scalar_expr_operator,
    spinor_norm,
)


def beta_vector(alg, pol):
    """beta_a = 1/2 [Tr(ad_a) - Tr(ad_a|_p)] over the polarization basis."""
    rows = pol.rows
    out = np.zeros(pol.dim, dtype=complex)
    for abar in range(pol.dim):
        ad = alg.ad_vector(rows[abar])
        tr_full = np.trace(ad)
        brackets = np.array([alg.bracket(rows[abar], rows[j]) for j in range(pol.dim)])
        coef, *_ = np.linalg.lstsq(rows.T, brackets.T, rcond=None)
        rebuilt = rows.T @ coef
        if np.max(np.abs(rebuilt - brackets.T)) > 1e-10:
            raise ValueError("polarization is not closed under the bracket")
        out[abar] = 0.5 * (tr_full - np.trace(coef))
    return out


class LambdaRep:
    """Operators ell_A(q, d_q, lambda) given as expression grids.

    coeff_exprs[A][i] is the coefficient of d_{q_i} (CompiledExpr or 0),
    potential_exprs[A] the zero-order part; params binds (j, hbar, ...).
    """

    def __init__(self, alg, q_names, coeff_exprs, potential_exprs, params):
        self.alg = alg
        self.q_names = tuple(q_names)
        self.coeff_exprs = coeff_exprs
        self.potential_exprs = potential_exprs
        self.params = dict(params)
        self._ops = {}

    def with_params(self, **updates):
        params = dict(self.params)
        params.update(updates)
        return LambdaRep(self.alg, self.q_names, self.coeff_exprs,
                         self.potential_exprs, params)

    def operator(self, A):
        op = self._ops.get(A)
        if op is None:
            op = scalar_expr_operator(
                self.q_names,
                [self.coeff_exprs[A][i] for i in range(len(self.q_names))],
                self.potential_exprs[A],
                self.params,
                label=f"ell_{A + 1}",
            )
            self._ops[A] = op
        return op

    def operators(self):
        return [self.operator(A) for A in range(self.alg.dim)]

    def commutator_residual(self, frame, points, tests, order):
        """max |[ell_A, ell_B] - ell_[A,B]| on scalar test jets."""
        from .operators import commutator_residual

        worst = 0.0
        ops = self.operators()
        for A in range(self.alg.dim):
            for B in range(A + 1, self.alg.dim):
                expected = [
                    (self.alg.C[A, B, Cc], ops[Cc])
                    for Cc in range(self.alg.dim)
                    if self.alg.C[A, B, Cc] != 0
                ]
                worst = max(
                    worst,
                    commutator_residual(ops[A], ops[B], frame, points, tests,
                                        order, expected=expected),
                )
        return worst

    def isotropy_constraint_op(self, A, lam_matrix):
        """(ell_A + Lambda) as a matrix operator acting componentwise."""
        dim = lam_matrix.shape[0]
        n = len(self.q_names)
        A_grids = []
        for i in range(n):
            grid = [[self.coeff_exprs[A][i] if c == e else None for e in range(dim)]
                    for c in range(dim)]
            A_grids.append(grid)
        B_grid = [[_Affine(
            [(1.0, self.potential_exprs[A])] if c == e and self.potential_exprs[A] is not None else [],
            complex(lam_matrix[c, e]),
        ) for e in range(dim)] for c in range(dim)]
        return FirstOrderOperator(
            self.q_names, dim,
            expr_provider(self.q_names, A_grids, B_grid, self.params, dim),
            label=f"ell_{A + 1}+Lambda",
        )

    def reduced_dirac(self, split, gammas, gamma_consts, hbar):
        """D_ell = i hbar gamma^a [ell_a + Gamma_a] on spinor functions of q."""
        m = split.m
        dim = gammas.dim
        n = len(self.q_names)
        A_grids = []
        for i in range(n):
            grid = [[None] * dim for _ in range(dim)]
            for a_loc, A in enumerate(m):
                expr = self.coeff_exprs[A][i]
                if expr is None or expr == 0:
                    continue
                coefmat = 1j * hbar * gammas.gammas[a_loc]
                for c in range(dim):
                    for e in range(dim):
                        if coefmat[c, e] != 0:
                            cur = grid[c][e]
                            term = (complex(coefmat[c, e]), expr)
                            grid[c][e] = _Affine([term], 0.0) if cur is None else cur.plus(term)
            A_grids.append(grid)
        const = 1j * hbar * sum(
            gammas.gammas[a_loc] @ gamma_consts[a_loc] for a_loc in range(len(m))
        )
        B_grid = [[None] * dim for _ in range(dim)]
        for c in range(dim):
            for e in range(dim):
                terms = []
                for a_loc, A in enumerate(m):
                    expr = self.potential_exprs[A]
                    if expr is None:
                        continue
                    coef = 1j * hbar * gammas.gammas[a_loc][c, e]
                    if coef != 0:
                        terms.append((complex(coef), expr))
                if terms or const[c, e] != 0:
                    B_grid[c][e] = _Affine(terms, complex(const[c, e]))
        return FirstOrderOperator(
            self.q_names, dim,
            expr_provider(self.q_names, A_grids, B_grid, self.params, dim),
            label="D_ell",
        )


class _Affine:
    """sum_k c_k * expr_k + const, evaluable like a CompiledExpr."""

    def __init__(self, terms, const):
        self.terms = list(terms)
        self.const = complex(const)

    def plus(self, term):
        return _Affine(self.terms + [term], self.const)

    def eval_env(self, env):
        out = self.const
        for coef, expr in self.terms:
            out = out + coef * expr.eval_env(env)
        return out


def casimir_value(rep, poly, frame, points, tests, order, hbar=1.0):
    """Apply K(-i hbar ell) to tests; returns (kappa, spread, residual)."""
    op_poly = OperatorPolynomial.from_dual_polynomial(poly, scale=-1j * hbar)
    bindings = rep.operators()
    estimates = []
    pairs = []
    for point in points:
        for test in tests:
            psi = test(point, order)
            out = op_poly.apply(bindings, psi, frame, point)
            k_out = out[0].space.order
            tr = psi[0].truncate(k_out)
            top = int(np.argmax(np.abs(tr.coeffs)))
            if abs(tr.coeffs[top]) < 1e-12:
                continue
            estimates.append(complex(out[0].coeffs[top] / tr.coeffs[top]))
            pairs.append((psi, out, point))
    kappa = complex(np.mean(estimates))
    spread = max(abs(e - kappa) for e in estimates)
    residual = 0.0
    for (psi, out, point) in pairs:
        k_out = out[0].space.order
        diff = [o - kappa * p.truncate(k_out) for o, p in zip(out, psi)]
        residual = max(residual, spinor_norm(diff) / max(1.0, spinor_norm(psi)))
    return kappa, spread, residual


def constraint_residual(rep, split, lambdas, field, frame, points, order):
    """max over isotropy indices and points of |(ell_alpha + Lambda_alpha) psi|."""
    worst = 0.0
    for al, A in enumerate(split.h):
        op = rep.isotropy_constraint_op(A, lambdas[al])
        for point in points:
            psi = field(point, order)
            out = op.apply(psi, frame, point)
            worst = max(worst, spinor_norm(out) / max(1.0, spinor_norm(psi)))
    return worst
