"""Numeric Lie-group engine.

Group elements are realized as ordered products of matrix exponentials in
canonical coordinates of the second kind.  Charts are inverted by damped
Newton iteration on the matrix entries, and the invariant frame fields are
obtained by solving the chart Jacobian system over the jet ring, which gives
their coordinate derivatives to any order without finite differences.
"""

import numpy as np
import scipy.linalg

from .jets import Jet, jet_lu_solve, obj_eye, objmat_mul, space


class ChartError(RuntimeError):
    """Newton inversion failed to converge inside the chart domain."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class MatrixRep:
    """Matrices rho(e_A) realizing the algebra; checked on construction."""

    def __init__(self, alg, matrices, tol=1e-10):
        mats = np.asarray(matrices, dtype=complex)
        if mats.ndim != 3 or mats.shape[0] != alg.dim or mats.shape[1] != mats.shape[2]:
            raise ValueError("need one square matrix per basis element")
        self.alg = alg
        self.matrices = mats
        self.size = mats.shape[1]
        self.hom_residual = self._hom_residual()
        if self.hom_residual > tol:
            raise ValueError(
                f"matrices do not represent the algebra (residual {self.hom_residual:.3e})"
            )
        flat = mats.reshape(alg.dim, -1)
        if np.linalg.matrix_rank(flat, tol=1e-10) < alg.dim:
            raise ValueError("representation is not faithful: matrices are dependent")

    def _hom_residual(self):
        worst = 0.0
        m = self.matrices
        for a in range(self.alg.dim):
            for b in range(self.alg.dim):
                comm = m[a] @ m[b] - m[b] @ m[a]
                expect = np.einsum("c,cij->ij", self.alg.C[a, b], m)
                worst = max(worst, float(np.max(np.abs(comm - expect))))
        return worst

    @staticmethod
    def adjoint(alg):
        """Adjoint representation fallback (faithful iff the center is trivial)."""
        mats = np.array([alg.ad(a) for a in range(alg.dim)])
        return MatrixRep(alg, mats)


class ChartSpec:
    """g(c) = exp(c_1 rho_{A_1}) ... exp(c_r rho_{A_r}), factors left to right."""

    def __init__(self, factors):
        self.factors = [(str(name), int(idx)) for name, idx in factors]
        names = [name for name, _ in self.factors]
        if len(set(names)) != len(names):
            raise ValueError("chart coordinate names must be unique")
        self.coord_names = names

    @property
    def dim(self):
        return len(self.factors)

    def coord_index(self, name):
        return self.coord_names.index(name)


def chart_to_matrix(chart, rep, coords):
    """Numeric product of exponentials; identity at coords = 0."""
    coords = np.asarray(coords, dtype=float)
    out = np.eye(rep.size, dtype=complex)
    for c, (_, idx) in zip(coords, chart.factors):
        out = out @ scipy.linalg.expm(c * rep.matrices[idx])
    return out


def _factor_jet(rep, idx, cjet):
    """exp(c * rho_idx) for a jet coordinate c, exact to the jet order."""
    rho = rep.matrices[idx]
    c0 = complex(cjet.value)
    base = scipy.linalg.expm(c0 * rho)
    k = cjet.space.order
    h = Jet(cjet.space, cjet.coeffs.copy())
    h.coeffs[0] = 0.0
    n = rep.size
    out = np.empty((n, n), dtype=object)
    for i in range(n):
        for j in range(n):
            out[i, j] = Jet.constant(cjet.space, base[i, j])
    if k == 0:
        return out
    power = np.eye(n, dtype=complex)
    hm = Jet.constant(cjet.space, 1.0)
    fact = 1.0
    series = np.empty((n, n), dtype=object)
    for i in range(n):
        for j in range(n):
            series[i, j] = Jet.constant(cjet.space, 1.0 if i == j else 0.0)
    for m in range(1, k + 1):
        power = power @ rho
        hm = hm * h
        fact *= m
        for i in range(n):
            for j in range(n):
                if power[i, j] != 0:
                    series[i, j] = series[i, j] + hm * (power[i, j] / fact)
    return objmat_mul(out, series)




def chart_to_matrix_jets(chart, rep, coord_jets):
    out = _factor_jet(rep, chart.factors[0][1], coord_jets[0])
    for c, (_, idx) in zip(coord_jets[1:], chart.factors[1:]):
        out = objmat_mul(out, _factor_jet(rep, idx, c))
    return out


def chart_jacobian(chart, rep, coords):
    """d vec(g)/d coords as a (size^2, dim) complex matrix."""
    sp = space(chart.dim, 1)
    jets = [Jet.variable(sp, k, coords[k]) for k in range(chart.dim)]
    g = chart_to_matrix_jets(chart, rep, jets)
    J = np.empty((rep.size**2, chart.dim), dtype=complex)
    for e, entry in enumerate(g.reshape(-1)):
        J[e, :] = entry.gradient()
    return J


def chart_invert(chart, rep, target, guess=None, tol=1e-12, max_iter=50):
    """Newton iteration on the matrix entries with step halving."""
    target = np.asarray(target, dtype=complex)
    c = np.zeros(chart.dim) if guess is None else np.array(guess, dtype=float)
    res = chart_to_matrix(chart, rep, c) - target
    norm = np.linalg.norm(res)
    for _ in range(max_iter):
        if norm < tol:
            return c
        J = chart_jacobian(chart, rep, c)
        step, *_ = np.linalg.lstsq(J, -res.reshape(-1), rcond=None)
        step = step.real
        scale = 1.0
        for _ in range(30):
            trial = c + scale * step
            tres = chart_to_matrix(chart, rep, trial) - target
            tnorm = np.linalg.norm(tres)
            if tnorm < norm:
                c, res, norm = trial, tres, tnorm
                break
            scale *= 0.5
        else:
            raise ChartError(
                f"Newton stalled at residual {norm:.3e}", residual=norm
            )
    if norm < tol:
        return c
    raise ChartError(f"no convergence after {max_iter} iterations "
                     f"(residual {norm:.3e})", residual=norm)




class GroupEngine:
    """Frame fields of a chart, evaluated as jets in all chart coordinates."""

    def __init__(self, alg, rep, chart):
        if chart.dim != alg.dim:
            raise ValueError("chart must cover the full group dimension")
        self.alg = alg
        self.rep = rep
        self.chart = chart

    def _point_jets(self, point, order):
        sp = space(self.chart.dim, order)
        return [Jet.variable(sp, k, point[k]) for k in range(self.chart.dim)]

    def _rows(self, coords):
        """Row selection making the Jacobian square and well conditioned."""
        J0 = chart_jacobian(self.chart, self.rep, np.asarray(coords, dtype=float))
        _, _, piv = scipy.linalg.qr(J0.T.conj(), pivoting=True)
        return np.sort(piv[: self.chart.dim]), J0

    def frames(self, point, order):
        """eta, xi (rows A, columns coords) and sigma = eta^{-1} at a point.

        Conventions: eta_A = -(d/dt) coords(exp(t e_A) g), xi_A = +(d/dt)
        coords(g exp(t e_A)); sigma rows satisfy sigma^A(eta_B) = delta^A_B.
        """
        point = np.asarray(point, dtype=float)
        dim = self.chart.dim
        rows, _ = self._rows(point)
        pj = self._point_jets(point, order + 1)
        g = chart_to_matrix_jets(self.chart, self.rep, pj)
        gflat = g.reshape(-1)
        sp_low = space(dim, order)
        J = np.empty((dim, dim), dtype=object)
        for r, e in enumerate(rows):
            entry = gflat[e]
            for v in range(dim):
                J[r, v] = entry.derivative(v)
        rhs_eta = np.empty((dim, dim), dtype=object)
        rhs_xi = np.empty((dim, dim), dtype=object)
        for A in range(dim):
            rho = self.rep.matrices[A]
            left = _scalar_objmat(rho, g)     # d/dt exp(t rho_A) g = rho_A g
            right = _objmat_scalar(g, rho)    # d/dt g exp(t rho_A) = g rho_A
            lflat, rflat = left.reshape(-1), right.reshape(-1)
            for r, e in enumerate(rows):
                rhs_eta[r, A] = -lflat[e].truncate(order)
                rhs_xi[r, A] = rflat[e].truncate(order)
        sol = jet_lu_solve(J, np.concatenate([rhs_eta, rhs_xi], axis=1))
        eta = sol[:, :dim].T  # [A][coord]
        xi = sol[:, dim:].T
        sigma = jet_lu_solve(eta.copy(), obj_eye(sp_low, dim)).T
        return FrameJets(self, point, order, eta, xi, sigma)




def _scalar_objmat(M, A):
    n = A.shape[0]
    out = np.empty((n, n), dtype=object)
    for i in range(n):
        for j in range(n):
            acc = None
            for l in range(n):
                if M[i, l] != 0:
                    term = A[l, j] * M[i, l]
                    acc = term if acc is None else acc + term
            out[i, j] = acc if acc is not None else A[0, 0] * 0.0
    return out


def _objmat_scalar(A, M):
    n = A.shape[0]
    out = np.empty((n, n), dtype=object)
    for i in range(n):
        for j in range(n):
            acc = None
            for l in range(n):
                if M[l, j] != 0:
                    term = A[i, l] * M[l, j]
                    acc = term if acc is None else acc + term
            out[i, j] = acc if acc is not None else A[0, 0] * 0.0
    return out


class FrameJets:
    """Frames at a point: eta[A][I], xi[A][I], sigma[A][I] as jets.

    Index I runs over chart coordinates in chart order; A over the basis.
    """

    def __init__(self, engine, point, order, eta, xi, sigma):
        self.engine = engine
        self.point = point
        self.order = order
        self.eta = eta
        self.xi = xi
        self.sigma = sigma

    def values(self, which):
        mat = getattr(self, which)
        dim = mat.shape[0]
        return np.array(
            [[complex(mat[a, i].value) for i in range(dim)] for a in range(dim)]
        )

    def duality_residual(self):
        """max |sigma^A(eta_B) - delta^A_B| at the base point."""
        s = self.values("sigma")
        e = self.values("eta")
        return float(np.max(np.abs(s @ e.T - np.eye(s.shape[0]))))

    def commutator_residual(self, which="eta"):
        """Structure relations: [eta_A,eta_B] = C^C_AB eta_C (same for xi)."""
        mat = getattr(self, which)
        C = self.engine.alg.C
        dim = mat.shape[0]
        vals = self.values(which)
        worst = 0.0
        for A in range(dim):
            for B in range(A + 1, dim):
                for I in range(dim):
                    comm = 0.0
                    for J in range(dim):
                        comm += vals[A, J] * mat[B, I].derivative(J).value
                        comm -= vals[B, J] * mat[A, I].derivative(J).value
                    expect = sum(C[A, B, Cc] * vals[Cc, I] for Cc in range(dim))
                    worst = max(worst, abs(comm - expect))
        return worst

    def mixed_commutator_residual(self):
        """Left- and right-invariant fields commute: [xi_A, eta_B] = 0."""
        dim = self.eta.shape[0]
        xv, ev = self.values("xi"), self.values("eta")
        worst = 0.0
        for A in range(dim):
            for B in range(dim):
                for I in range(dim):
                    comm = 0.0
                    for J in range(dim):
                        comm += xv[A, J] * self.eta[B, I].derivative(J).value
                        comm -= ev[B, J] * self.xi[A, I].derivative(J).value
                    worst = max(worst, abs(comm))
        return worst

    def maurer_cartan_residual(self):
        """max |d sigma^C(X_I, X_J) + C^C_AB sigma^A_I sigma^B_J|."""
        dim = self.sigma.shape[0]
        C = self.engine.alg.C
        sv = self.values("sigma")
        worst = 0.0
        for Cc in range(dim):
            for I in range(dim):
                for J in range(dim):
                    d = (
                        self.sigma[Cc, J].derivative(I).value
                        - self.sigma[Cc, I].derivative(J).value
                    )
                    quad = complex(np.einsum("ab,a,b->", C[:, :, Cc], sv[:, I], sv[:, J]))
                    worst = max(worst, abs(d + quad))
        return worst


def left_invariant_field(chart, rep, alg, A, point):
    """Components of xi_A at a chart point (values only)."""
    eng = GroupEngine(alg, rep, chart)
    return eng.frames(np.asarray(point, dtype=float), 0).values("xi")[A]


def right_invariant_field(chart, rep, alg, A, point):
    """Components of eta_A = -(R_g)_* e_A at a chart point (values only)."""
    eng = GroupEngine(alg, rep, chart)
    return eng.frames(np.asarray(point, dtype=float), 0).values("eta")[A]
