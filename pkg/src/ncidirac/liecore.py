"""Structure-constant level algebra: Jacobi checks, coadjoint orbits,
Casimir verification, polarizations, Ad(H)-invariant bilinear forms.

Index convention: structure_constants[A, B, C] is the coefficient of e_C in
[e_A, e_B].  All indices are 0-based internally; model files use the 1-based
labels of the underlying basis and are shifted on load.
"""

import warnings

import numpy as np

from . import exprs


class LieAlgebra:
    def __init__(self, dim, structure_constants, basis_labels=None):
        C = np.asarray(structure_constants, dtype=float)
        if C.shape != (dim, dim, dim):
            raise ValueError(f"structure constants must be {dim}^3, got {C.shape}")
        self.dim = dim
        self.C = C
        self.basis_labels = list(basis_labels) if basis_labels else [
            f"e{k + 1}" for k in range(dim)
        ]

    def antisymmetry_residual(self):
        return float(np.max(np.abs(self.C + np.swapaxes(self.C, 0, 1))))

    def bracket(self, u, v):
        """Coefficients of [u, v] for coefficient vectors u, v."""
        return np.einsum("a,b,abc->c", u, v, self.C)

    def ad(self, index):
        """Matrix of ad_{e_index} acting on coefficient vectors: v -> [e_i, v]."""
        return self.C[index].T.copy()

    def ad_vector(self, u):
        return np.einsum("a,abc->cb", u, self.C)


class SubalgebraSplit:
    """Partition of the basis into isotropy (h) and complement (m) indices."""

    def __init__(self, alg, h_indices, m_indices):
        h, m = sorted(h_indices), sorted(m_indices)
        if sorted(h + m) != list(range(alg.dim)):
            raise ValueError("h and m indices must partition the basis")
        self.alg = alg
        self.h = h
        self.m = m

    def closure_residual(self):
        """h must be a subalgebra: no m-component in [h, h]."""
        worst = 0.0
        for a in self.h:
            for b in self.h:
                worst = max(worst, float(np.max(np.abs(self.alg.C[a, b, self.m]))))
        return worst


class BilinearForm:
    """Symmetric non-degenerate form G_ab on the m-subspace (local m indices)."""

    def __init__(self, matrix):
        G = np.asarray(matrix, dtype=float)
        if G.ndim != 2 or G.shape[0] != G.shape[1]:
            raise ValueError("bilinear form must be square")
        if np.max(np.abs(G - G.T)) > 1e-12 * max(1.0, np.max(np.abs(G))):
            raise ValueError("bilinear form must be symmetric")
        self.G = 0.5 * (G + G.T)
        try:
            self.Ginv = np.linalg.inv(self.G)
        except np.linalg.LinAlgError as exc:
            raise ValueError("bilinear form is degenerate") from exc
        self.inverse_residual = float(
            np.max(np.abs(self.G @ self.Ginv - np.eye(G.shape[0])))
        )

    @property
    def dim(self):
        return self.G.shape[0]


class DualPolynomial:
    """Sparse polynomial on the dual space, variables f_1..f_dim."""

    def __init__(self, dim, terms=None):
        self.dim = dim
        self.terms = dict(terms or {})

    @staticmethod
    def constant(dim, value):
        return DualPolynomial(dim, {(0,) * dim: complex(value)} if value else {})

    @staticmethod
    def coordinate(dim, index):
        e = [0] * dim
        e[index] = 1
        return DualPolynomial(dim, {tuple(e): 1.0 + 0j})

    @staticmethod
    def from_expression(text, dim, params=None):
        """Parse a polynomial in f1..f<dim>; parameters fold to their values."""
        params = params or {}
        st = exprs.SymbolTable(
            variables=[f"f{k + 1}" for k in range(dim)],
            parameters=list(params),
        )
        ast = exprs.parse(text, st)
        return _ast_to_poly(ast, dim, params)

    def __add__(self, other):
        other = self._coerce(other)
        out = dict(self.terms)
        for e, c in other.terms.items():
            out[e] = out.get(e, 0.0) + c
        return DualPolynomial(self.dim, _prune(out))

    def __sub__(self, other):
        return self + (self._coerce(other) * -1.0)

    def __mul__(self, other):
        if not isinstance(other, DualPolynomial):
            return DualPolynomial(
                self.dim, _prune({e: c * other for e, c in self.terms.items()})
            )
        out = {}
        for ea, ca in self.terms.items():
            for eb, cb in other.terms.items():
                e = tuple(x + y for x, y in zip(ea, eb))
                out[e] = out.get(e, 0.0) + ca * cb
        return DualPolynomial(self.dim, _prune(out))

    __rmul__ = __mul__

    def __pow__(self, n):
        if n < 0 or n != int(n):
            raise ValueError("polynomial powers must be non-negative integers")
        out = DualPolynomial.constant(self.dim, 1.0)
        for _ in range(int(n)):
            out = out * self
        return out

    def _coerce(self, other):
        if isinstance(other, DualPolynomial):
            return other
        return DualPolynomial.constant(self.dim, other)

    def degree(self):
        return max((sum(e) for e in self.terms), default=0)

    def __call__(self, f):
        f = np.asarray(f)
        total = 0.0 + 0j
        for e, c in self.terms.items():
            total += c * np.prod([f[k] ** p for k, p in enumerate(e) if p])
        return total

    def grad(self, f):
        """Gradient vector at the point f."""
        f = np.asarray(f)
        out = np.zeros(self.dim, dtype=complex)
        for e, c in self.terms.items():
            for k, p in enumerate(e):
                if p:
                    rest = c * p * f[k] ** (p - 1)
                    for l, q in enumerate(e):
                        if l != k and q:
                            rest = rest * f[l] ** q
                    out[k] += rest
        return out

    def monomials(self):
        """(exponent tuple, coefficient) pairs, deterministic order."""
        return sorted(self.terms.items())


def _prune(terms):
    return {e: c for e, c in terms.items() if c != 0}


def _ast_to_poly(node, dim, params):
    E = exprs
    if isinstance(node, E.Num):
        return DualPolynomial.constant(dim, node.value)
    if isinstance(node, E.Sym):
        if node.name in params:
            return DualPolynomial.constant(dim, complex(params[node.name]))
        return DualPolynomial.coordinate(dim, int(node.name[1:]) - 1)
    if isinstance(node, E.Neg):
        return _ast_to_poly(node.arg, dim, params) * -1.0
    if isinstance(node, E.Bin):
        a = _ast_to_poly(node.left, dim, params)
        if node.op == "^":
            if not isinstance(node.right, E.Num):
                raise ValueError("polynomial exponent must be a constant")
            return a ** int(node.right.value.real)
        b = _ast_to_poly(node.right, dim, params)
        if node.op == "+":
            return a + b
        if node.op == "-":
            return a - b
        if node.op == "*":
            return a * b
        if node.op == "/":
            if b.degree() > 0:
                raise ValueError("cannot divide a polynomial by a non-constant")
            return a * (1.0 / b((0,) * dim))
    raise ValueError("expression is not polynomial in f1..fn")


class PolarizationSpec:
    """Subalgebra basis given as coefficient rows over the algebra basis."""

    def __init__(self, alg, rows):
        P = np.asarray(rows, dtype=complex)
        if P.ndim != 2 or P.shape[1] != alg.dim:
            raise ValueError("polarization rows must have algebra dimension")
        self.alg = alg
        self.rows = P

    @property
    def dim(self):
        return self.rows.shape[0]

    def closure_residual(self):
        """Distance of each bracket [p_i, p_j] from span(p rows)."""
        P = self.rows
        worst = 0.0
        for a in range(self.dim):
            for b in range(a + 1, self.dim):
                w = np.einsum("a,b,abc->c", P[a], P[b], self.alg.C)
                coef, *_ = np.linalg.lstsq(P.T, w, rcond=None)
                worst = max(worst, float(np.max(np.abs(P.T @ coef - w))))
        return worst


# -- operations ---------------------------------------------------------------


def check_jacobi(alg):
    """Max |sum_E C^E_AB C^D_EC + cyclic| over all index triples."""
    C = alg.C
    jac = (
        np.einsum("abe,ecd->abcd", C, C)
        + np.einsum("bce,ead->abcd", C, C)
        + np.einsum("cae,ebd->abcd", C, C)
    )
    return float(np.max(np.abs(jac)))


def coadjoint_matrix(alg, f):
    """C_AB(f) = C^C_AB f_C; antisymmetric, linear in f."""
    return np.einsum("abc,c->ab", alg.C, np.asarray(f))


def orbit_dimension(alg, f, rel_threshold=1e-9):
    M = coadjoint_matrix(alg, f)
    s = np.linalg.svd(M, compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return 0
    return int(np.sum(s > rel_threshold * s[0]))


def algebra_index(alg, samples=32, seed=0):
    """dim - generic rank of C_AB(f), estimated on random covectors."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = np.random.default_rng(seed)
    ranks = [
        orbit_dimension(alg, rng.uniform(-1.0, 1.0, alg.dim)) for _ in range(samples)
    ]
    top = max(ranks)
    if any(r != top for r in ranks):
        warnings.warn(
            "sampled coadjoint ranks disagree; index estimate may sit on a "
            "singular stratum", stacklevel=2,
        )
    return alg.dim - top


def poisson_bracket(alg, phi, psi, f):
    """{phi, psi}(f) = C^C_AB f_C dphi/df_A dpsi/df_B."""
    M = coadjoint_matrix(alg, f)
    return complex(phi.grad(f) @ M @ psi.grad(f))


def verify_casimir(alg, K, samples=24, seed=0):
    """Max |C_AB(f) dK/df_B| over samples: 0 certifies a Casimir."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(samples):
        f = rng.uniform(-1.0, 1.0, alg.dim)
        worst = max(worst, float(np.max(np.abs(coadjoint_matrix(alg, f) @ K.grad(f)))))
    return worst


def check_polarization(alg, lam, pol, orbit_dim, tol=1e-12):
    """Closure, isotropy <lam,[p,p]> = 0, and the dimension count."""
    lam = np.asarray(lam)
    closure = pol.closure_residual()
    isotropy = 0.0
    P = pol.rows
    for a in range(pol.dim):
        for b in range(pol.dim):
            w = np.einsum("a,b,abc->c", P[a], P[b], alg.C)
            isotropy = max(isotropy, abs(complex(w @ lam)))
    expected = alg.dim - orbit_dim // 2
    report = {
        "closure_residual": closure,
        "isotropy_residual": isotropy,
        "dim_p": pol.dim,
        "dim_expected": expected,
        "closure_ok": closure <= tol,
        "isotropy_ok": isotropy <= tol,
        "dimension_ok": pol.dim == expected,
    }
    report["ok"] = report["closure_ok"] and report["isotropy_ok"] and report["dimension_ok"]
    return report


def check_adh_invariance(alg, split, form):
    """Max |G_ab C^a_{c alpha} + G_ac C^a_{b alpha}| (Ad(H)-condition)."""
    m, h = split.m, split.h
    loc = {g: k for k, g in enumerate(m)}
    worst = 0.0
    for b in m:
        for c in m:
            for al in h:
                s = 0.0
                for a in m:
                    s += form.G[loc[a], loc[b]] * alg.C[c, al, a]
                    s += form.G[loc[a], loc[c]] * alg.C[b, al, a]
                worst = max(worst, abs(s))
    return worst


def check_identity_on_annihilator(alg, split, poly, samples=32, seed=0):
    """Max |Gamma(f)| over random f in the annihilator of h (f_alpha = 0)."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(samples):
        f = rng.uniform(-1.0, 1.0, alg.dim)
        f[split.h] = 0.0
        worst = max(worst, abs(poly(f)))
    return worst
