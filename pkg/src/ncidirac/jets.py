"""Truncated multivariate Taylor arithmetic with complex coefficients.

A Jet stores the Taylor coefficients c_alpha = (d^alpha f / alpha!) of a
function at a base point, for all multi-indices |alpha| <= order.  Sums,
products (truncated Cauchy product), quotients and the elementary functions
are exact in this algebra, so jets evaluate derivatives of composite
expressions without any finite-difference error.

Terms are ordered by total degree and, within a degree, by the order
itertools.combinations_with_replacement produces.  This makes the term list
of order k-1 a prefix of the order-k list, so truncation is a slice.
"""

import cmath
import itertools
import math

import numpy as np

from ._accel import mul_acc, mul_acc_batch


class JetDomainError(ArithmeticError):
    """A function was evaluated outside its domain (log 0, 1/0, |0|, ...)."""


_SPACES = {}


def space(n_vars, order):
    key = (n_vars, order)
    sp = _SPACES.get(key)
    if sp is None:
        sp = _SPACES[key] = JetSpace(n_vars, order)
    return sp


def _exponents(n_vars, order):
    rows = []
    for deg in range(order + 1):
        for combo in itertools.combinations_with_replacement(range(n_vars), deg):
            row = [0] * n_vars
            for v in combo:
                row[v] += 1
            rows.append(row)
    if not rows:  # n_vars == 0 still has the constant term
        rows = [[]]
    return np.array(rows, dtype=np.int64).reshape(len(rows), n_vars)


class JetSpace:
    """Shared tables for all jets with a given variable count and order."""

    def __init__(self, n_vars, order):
        if n_vars < 0 or order < 0:
            raise ValueError("n_vars and order must be non-negative")
        self.n_vars = n_vars
        self.order = order
        self.exponents = _exponents(n_vars, order)
        self.n_terms = self.exponents.shape[0]
        self.degrees = self.exponents.sum(axis=1)
        self._index = {tuple(e): i for i, e in enumerate(self.exponents)}
        self._mul_table = None
        self._deriv_maps = None

    def index_of(self, alpha):
        return self._index[tuple(alpha)]

    @property
    def mul_table(self):
        if self._mul_table is None:
            t_out, t_a, t_b = [], [], []
            for a in range(self.n_terms):
                da = self.degrees[a]
                for b in range(self.n_terms):
                    if da + self.degrees[b] > self.order:
                        continue
                    out = self._index[tuple(self.exponents[a] + self.exponents[b])]
                    t_out.append(out)
                    t_a.append(a)
                    t_b.append(b)
            self._mul_table = (
                np.array(t_out, dtype=np.int64),
                np.array(t_a, dtype=np.int64),
                np.array(t_b, dtype=np.int64),
            )
        return self._mul_table

    @property
    def deriv_maps(self):
        """(idx, scale): for term t of the order-1-lower prefix and variable v,
        coefficient of d/dx_v at t is scale[t, v] * coeffs[idx[t, v]]."""
        if self._deriv_maps is None:
            n_low = space(self.n_vars, self.order - 1).n_terms if self.order else 0
            idx = np.zeros((n_low, max(self.n_vars, 1)), dtype=np.int64)
            scale = np.zeros((n_low, max(self.n_vars, 1)))
            for t in range(n_low):
                alpha = self.exponents[t].copy()
                for v in range(self.n_vars):
                    alpha[v] += 1
                    idx[t, v] = self._index[tuple(alpha)]
                    scale[t, v] = alpha[v]
                    alpha[v] -= 1
            self._deriv_maps = (idx, scale)
        return self._deriv_maps

    def factorials(self):
        return np.array(
            [math.prod(math.factorial(int(e)) for e in row) for row in self.exponents]
        )


class Jet:
    __slots__ = ("space", "coeffs")

    def __init__(self, sp, coeffs):
        self.space = sp
        self.coeffs = coeffs

    # -- constructors -------------------------------------------------------

    @staticmethod
    def constant(sp, value):
        c = np.zeros(sp.n_terms, dtype=np.complex128)
        c[0] = value
        return Jet(sp, c)

    @staticmethod
    def variable(sp, var_index, value):
        c = np.zeros(sp.n_terms, dtype=np.complex128)
        c[0] = value
        if sp.order >= 1:
            c[1 + var_index] = 1.0
        return Jet(sp, c)

    # -- views --------------------------------------------------------------

    @property
    def value(self):
        return self.coeffs[0]

    def coeff(self, alpha):
        return self.coeffs[self.space.index_of(alpha)]

    def partial_at(self, alpha):
        """Value of the partial derivative d^alpha at the base point."""
        fact = math.prod(math.factorial(int(a)) for a in alpha)
        return self.coeffs[self.space.index_of(alpha)] * fact

    def gradient(self):
        if self.space.order < 1:
            raise ValueError("order-0 jet has no gradient")
        return self.coeffs[1 : 1 + self.space.n_vars].copy()

    def truncate(self, order):
        if order >= self.space.order:
            return self
        sp = space(self.space.n_vars, order)
        return Jet(sp, self.coeffs[: sp.n_terms].copy())

    def lift(self, order):
        if order <= self.space.order:
            return self.truncate(order)
        sp = space(self.space.n_vars, order)
        c = np.zeros(sp.n_terms, dtype=np.complex128)
        c[: self.space.n_terms] = self.coeffs
        return Jet(sp, c)

    def derivative(self, var_index):
        sp = self.space
        if sp.order == 0:
            raise ValueError("cannot differentiate an order-0 jet")
        low = space(sp.n_vars, sp.order - 1)
        idx, scale = sp.deriv_maps
        return Jet(low, self.coeffs[idx[:, var_index]] * scale[:, var_index])

    # -- arithmetic ---------------------------------------------------------

    def _align(self, other):
        if isinstance(other, Jet):
            if other.space.n_vars != self.space.n_vars:
                raise ValueError("jets live in different variable spaces")
            if other.space.order < self.space.order:
                return self.truncate(other.space.order), other
            if other.space.order > self.space.order:
                return self, other.truncate(self.space.order)
            return self, other
        return self, Jet.constant(self.space, other)

    def __add__(self, other):
        a, b = self._align(other)
        return Jet(a.space, a.coeffs + b.coeffs)

    __radd__ = __add__

    def __sub__(self, other):
        a, b = self._align(other)
        return Jet(a.space, a.coeffs - b.coeffs)

    def __rsub__(self, other):
        a, b = self._align(other)
        return Jet(a.space, b.coeffs - a.coeffs)

    def __neg__(self):
        return Jet(self.space, -self.coeffs)

    def __mul__(self, other):
        if not isinstance(other, Jet):
            return Jet(self.space, self.coeffs * other)
        a, b = self._align(other)
        sp = a.space
        if sp.n_terms == 1:
            return Jet(sp, a.coeffs * b.coeffs)
        out = np.zeros(sp.n_terms, dtype=np.complex128)
        t_out, t_a, t_b = sp.mul_table
        mul_acc(out, a.coeffs, b.coeffs, t_out, t_a, t_b)
        return Jet(sp, out)

    __rmul__ = __mul__

    def reciprocal(self):
        b0 = self.coeffs[0]
        if b0 == 0:
            raise JetDomainError("division by a jet with zero value")
        sp = self.space
        u = Jet(sp, -self.coeffs / b0)
        u.coeffs[0] += 1.0  # u = 1 - self/b0, nilpotent to order+1
        r = Jet.constant(sp, 1.0)
        for _ in range(sp.order):
            r = r * u + 1.0
        return Jet(sp, r.coeffs / b0)

    def __truediv__(self, other):
        if not isinstance(other, Jet):
            if other == 0:
                raise JetDomainError("division by zero")
            return Jet(self.space, self.coeffs / other)
        a, b = self._align(other)
        return a * b.reciprocal()

    def __rtruediv__(self, other):
        return Jet.constant(self.space, other) / self

    def __pow__(self, w):
        if isinstance(w, Jet):
            if np.count_nonzero(w.coeffs[1:]) == 0:
                w = w.coeffs[0]
            else:
                return jfun("exp", w * jfun("log", self))
        if isinstance(w, (complex, np.complexfloating)) and w.imag == 0:
            w = w.real
        if isinstance(w, (int, np.integer)) or (
            isinstance(w, (float, np.floating)) and w == int(w)
        ):
            n = int(w)
            if n < 0:
                return self.reciprocal() ** (-n)
            result = Jet.constant(self.space, 1.0)
            base = self
            while n:
                if n & 1:
                    result = result * base
                base = base * base
                n >>= 1
            return result
        return jfun("exp", w * jfun("log", self))

    def __repr__(self):
        return f"Jet(n={self.space.n_vars}, k={self.space.order}, value={self.value})"


# -- elementary functions ----------------------------------------------------


def _binom_half(m):
    out, num = 1.0, 0.5
    for _ in range(m):
        out *= num
        num -= 1.0
    return out / math.factorial(m)


def _series_exp(z0, k):
    e = cmath.exp(z0)
    return np.array([e / math.factorial(m) for m in range(k + 1)], dtype=np.complex128)


def _series_log(z0, k):
    if z0 == 0:
        raise JetDomainError("log of zero")
    c = [cmath.log(z0)]
    for m in range(1, k + 1):
        c.append((-1) ** (m + 1) / (m * z0**m))
    return np.array(c, dtype=np.complex128)


def _series_sqrt(z0, k):
    if z0 == 0:
        raise JetDomainError("sqrt of zero has no Taylor expansion")
    s = cmath.sqrt(z0)
    return np.array(
        [_binom_half(m) * s / z0**m for m in range(k + 1)], dtype=np.complex128
    )


def _series_trig(z0, k, fn):
    # fn in {sin, cos, sinh, cosh}; derivatives cycle between the pair
    if fn == "sin":
        vals = [cmath.sin(z0), cmath.cos(z0), -cmath.sin(z0), -cmath.cos(z0)]
    elif fn == "cos":
        vals = [cmath.cos(z0), -cmath.sin(z0), -cmath.cos(z0), cmath.sin(z0)]
    elif fn == "sinh":
        vals = [cmath.sinh(z0), cmath.cosh(z0)]
    else:
        vals = [cmath.cosh(z0), cmath.sinh(z0)]
    return np.array(
        [vals[m % len(vals)] / math.factorial(m) for m in range(k + 1)],
        dtype=np.complex128,
    )


def compose_series(coeffs, h):
    """Evaluate sum_m coeffs[m] * h^m for a jet h (Horner)."""
    r = Jet.constant(h.space, coeffs[-1])
    for m in range(len(coeffs) - 2, -1, -1):
        r = r * h + coeffs[m]
    return r


def _primitive(name, g):
    k = g.space.order
    z0 = complex(g.value)
    if name == "exp":
        c = _series_exp(z0, k)
    elif name == "log":
        c = _series_log(z0, k)
    elif name == "sqrt":
        c = _series_sqrt(z0, k)
    else:
        c = _series_trig(z0, k, name)
    h = Jet(g.space, g.coeffs.copy())
    h.coeffs[0] = 0.0
    return compose_series(c, h)


_I = 1j


def jfun(name, g):
    """Apply an elementary function to a jet (principal branches)."""
    if not isinstance(g, Jet):
        g = Jet.constant(space(0, 0), g)
    if name in ("exp", "log", "sqrt", "sin", "cos", "sinh", "cosh"):
        return _primitive(name, g)
    if name == "tan":
        return _primitive("sin", g) / _primitive("cos", g)
    if name == "sec":
        return _primitive("cos", g).reciprocal()
    if name == "cot":
        return _primitive("cos", g) / _primitive("sin", g)
    if name == "csc":
        return _primitive("sin", g).reciprocal()
    if name == "tanh":
        return _primitive("sinh", g) / _primitive("cosh", g)
    if name in ("atan", "arctan"):
        # atan(z) = (i/2) [log(1 - i z) - log(1 + i z)]
        return (_I / 2) * (jfun("log", 1.0 - _I * g) - jfun("log", 1.0 + _I * g))
    if name in ("acos", "arccos"):
        # acos(z) = -i log(z + i sqrt(1 - z^2))
        return -_I * jfun("log", g + _I * jfun("sqrt", 1.0 - g * g))
    if name in ("asin", "arcsin"):
        return -_I * jfun("log", _I * g + jfun("sqrt", 1.0 - g * g))
    if name in ("asec", "arcsec"):
        return jfun("acos", g.reciprocal())
    if name in ("acot", "arccot"):
        # continuous (0, pi) convention on the real axis
        return math.pi / 2 - jfun("atan", g)
    if name == "abs":
        if np.max(np.abs(g.coeffs.imag)) > 1e-12 * max(1.0, np.max(np.abs(g.coeffs))):
            raise JetDomainError("abs of a non-real jet is not differentiable")
        if g.value.real == 0:
            raise JetDomainError("abs is not differentiable at zero")
        return g if g.value.real > 0 else -g
    raise ValueError(f"unknown function {name!r}")


FUNCTION_NAMES = frozenset(
    [
        "sin", "cos", "tan", "sec", "cot", "csc", "sinh", "cosh", "tanh",
        "exp", "log", "sqrt",
        "atan", "arctan", "acos", "arccos", "asin", "arcsin",
        "asec", "arcsec", "acot", "arccot", "abs",
    ]
)


def spinor_mul_batch(matrix_jet, spinor_coeffs):
    """Multiply a scalar jet into a (n_terms, d) coefficient block."""
    sp = matrix_jet.space
    out = np.zeros_like(spinor_coeffs)
    t_out, t_a, t_b = sp.mul_table
    mul_acc_batch(out, spinor_coeffs, matrix_jet.coeffs, t_out, t_a, t_b)
    return out


# -- object-matrix helpers (matrices with jet entries) ------------------------


def obj_eye(sp, n):
    out = np.empty((n, n), dtype=object)
    for i in range(n):
        for j in range(n):
            out[i, j] = Jet.constant(sp, 1.0 if i == j else 0.0)
    return out


def obj_zeros(sp, shape):
    out = np.empty(shape, dtype=object)
    flat = out.reshape(-1)
    for k in range(flat.size):
        flat[k] = Jet.constant(sp, 0.0)
    return out


def objmat_mul(A, B):
    n, m, inner = A.shape[0], B.shape[1], A.shape[1]
    out = np.empty((n, m), dtype=object)
    for i in range(n):
        for j in range(m):
            acc = A[i, 0] * B[0, j]
            for l in range(1, inner):
                acc = acc + A[i, l] * B[l, j]
            out[i, j] = acc
    return out


def jet_lu_solve(A, B):
    """Solve A X = B over the jet ring, pivoting on constant-term magnitude."""
    n = A.shape[0]
    m = B.shape[1]
    A = A.copy()
    B = B.copy()
    for col in range(n):
        piv = max(range(col, n), key=lambda r: abs(A[r, col].value))
        if abs(A[piv, col].value) == 0:
            raise np.linalg.LinAlgError("singular jet matrix")
        if piv != col:
            A[[col, piv]] = A[[piv, col]]
            B[[col, piv]] = B[[piv, col]]
        inv = A[col, col].reciprocal()
        for r in range(col + 1, n):
            factor = A[r, col] * inv
            for cc in range(col + 1, n):
                A[r, cc] = A[r, cc] - factor * A[col, cc]
            for cc in range(m):
                B[r, cc] = B[r, cc] - factor * B[col, cc]
    X = np.empty((n, m), dtype=object)
    for cc in range(m):
        for r in range(n - 1, -1, -1):
            acc = B[r, cc]
            for k in range(r + 1, n):
                acc = acc - A[r, k] * X[k, cc]
            X[r, cc] = acc * A[r, r].reciprocal()
    return X


def jet_inverse(A):
    return jet_lu_solve(A.copy(), obj_eye(A[0, 0].space, A.shape[0]))


_EMBED_MAPS = {}


def embed_jet(jet, positions, target_sp):
    """Embed a jet into a larger variable space.

    positions[k] is the index in the target space of the source variable k;
    the new variables do not appear in any coefficient.
    """
    src = jet.space
    key = (src.n_vars, src.order, tuple(positions), target_sp.n_vars, target_sp.order)
    idx = _EMBED_MAPS.get(key)
    if idx is None:
        idx = np.empty(src.n_terms if src.order <= target_sp.order else 0, dtype=np.int64)
        n_src = space(src.n_vars, min(src.order, target_sp.order)).n_terms
        idx = np.empty(n_src, dtype=np.int64)
        for t in range(n_src):
            alpha = np.zeros(target_sp.n_vars, dtype=np.int64)
            alpha[list(positions)] = src.exponents[t]
            idx[t] = target_sp.index_of(alpha)
        _EMBED_MAPS[key] = idx
    out = np.zeros(target_sp.n_terms, dtype=np.complex128)
    out[idx] = jet.coeffs[: idx.size]
    return Jet(target_sp, out)


_RESTRICT_MAPS = {}


def restrict_jet(jet, keep_positions, target_sp):
    """Project a jet onto the subspace of variables at keep_positions.

    Coefficients whose exponent touches any dropped variable are discarded
    (evaluation on the slice where those variables stay at their base point).
    """
    src = jet.space
    key = (src.n_vars, src.order, tuple(keep_positions), target_sp.order)
    idx = _RESTRICT_MAPS.get(key)
    if idx is None:
        idx = np.empty(target_sp.n_terms, dtype=np.int64)
        for t in range(target_sp.n_terms):
            alpha = np.zeros(src.n_vars, dtype=np.int64)
            alpha[list(keep_positions)] = target_sp.exponents[t]
            idx[t] = src.index_of(alpha)
        _RESTRICT_MAPS[key] = idx
    return Jet(target_sp, jet.coeffs[idx].copy())
