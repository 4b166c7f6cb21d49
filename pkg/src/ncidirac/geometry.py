"""Invariant metric, Christoffel symbols and scalar curvature.

All geometry lives at the isotropy-trivial section (h = e_H) and is driven
by frame fields eta_A, sigma^A supplied either as declared closed-form
expressions or by the numeric group engine.  Frames arrive as jets in the
base coordinates, so curvature needs no finite differencing anywhere.
"""

import numpy as np

from .jets import Jet, jet_inverse, jet_lu_solve, obj_eye, restrict_jet, space


class FrameBlock:
    """Frames at (x, e_H) as jets in the base coordinates.

    eta / sigma / xi are (dim_g, dim_g) object arrays indexed [A][I] where A
    runs over the algebra basis and I over base coordinates first (metric
    order), isotropy coordinates after.
    """

    def __init__(self, eta, sigma, xi, dim_m, order):
        self.eta = eta
        self.sigma = sigma
        self.xi = xi
        self.dim_m = dim_m
        self.order = order

    def values(self, which):
        mat = getattr(self, which)
        return np.array([[e.value for e in row] for row in mat])


class NumericFrameSource:
    """Frames from the group engine, restricted to the h = 0 slice."""

    def __init__(self, engine, split, x_chart_positions, h_chart_positions):
        self.engine = engine
        self.split = split
        self.x_pos = list(x_chart_positions)
        self.h_pos = list(h_chart_positions)
        self._cache = {}

    def frames(self, x, order):
        key = (tuple(np.asarray(x, dtype=float)), order)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        dim = self.engine.chart.dim
        point = np.zeros(dim)
        for k, pos in enumerate(self.x_pos):
            point[pos] = x[k]
        fr = self.engine.frames(point, order)
        target = space(len(self.x_pos), order)
        cols = self.x_pos + self.h_pos

        def build(mat):
            out = np.empty((dim, dim), dtype=object)
            for A in range(dim):
                for I, pos in enumerate(cols):
                    out[A, I] = restrict_jet(mat[A, pos], self.x_pos, target)
            return out

        block = FrameBlock(build(fr.eta), build(fr.sigma), build(fr.xi),
                           len(self.x_pos), order)
        self._cache[key] = block
        if len(self._cache) > 512:
            self._cache.clear()
        return block


class DeclaredFrameSource:
    """Frames from closed-form component expressions of eta (and optionally xi).

    eta_exprs is a (dim_g, dim_g) nested list of CompiledExpr over the base
    coordinates; sigma is obtained by inverting the eta matrix over the jet
    ring, which is exact to the jet order.
    """

    def __init__(self, eta_exprs, params, dim_m, xi_exprs=None):
        self.eta_exprs = eta_exprs
        self.xi_exprs = xi_exprs
        self.params = params
        self.dim_m = dim_m
        self._cache = {}

    def frames(self, x, order):
        key = (tuple(np.asarray(x, dtype=float)), order)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        dim = len(self.eta_exprs)
        sp = space(self.dim_m, order)

        def ev(entry):
            if entry is None:
                return Jet.constant(sp, 0.0)
            return entry(x, self.params, order)

        eta = np.empty((dim, dim), dtype=object)
        for A in range(dim):
            for I in range(dim):
                eta[A, I] = ev(self.eta_exprs[A][I])
        sigma = jet_lu_solve(eta.copy(), obj_eye(sp, dim)).T
        xi = None
        if self.xi_exprs is not None:
            xi = np.empty((dim, dim), dtype=object)
            for A in range(dim):
                for I in range(dim):
                    xi[A, I] = ev(self.xi_exprs[A][I])
        block = FrameBlock(eta, sigma, xi, self.dim_m, order)
        self._cache[key] = block
        if len(self._cache) > 512:
            self._cache.clear()
        return block


class MetricAtPoint:
    def __init__(self, g, ginv):
        self.g = g
        self.ginv = ginv
        self.inverse_residual = float(
            np.max(np.abs(g @ ginv - np.eye(g.shape[0])))
        )


def metric_jets(form, split, source, x, order):
    """g_ij and g^ij as (dim_m, dim_m) jet matrices at x."""
    fr = source.frames(x, order)
    n = fr.dim_m
    m = split.m
    g = np.empty((n, n), dtype=object)
    ginv = np.empty((n, n), dtype=object)
    for i in range(n):
        for j in range(n):
            acc = None
            acci = None
            for a in range(len(m)):
                for b in range(len(m)):
                    if form.G[a, b] != 0:
                        t = fr.sigma[m[a], i] * fr.sigma[m[b], j] * form.G[a, b]
                        acc = t if acc is None else acc + t
                    if form.Ginv[a, b] != 0:
                        t = fr.eta[m[a], i] * fr.eta[m[b], j] * form.Ginv[a, b]
                        acci = t if acci is None else acci + t
            g[i, j] = acc
            ginv[i, j] = acci
    return g, ginv


def metric_at(form, split, source, x):
    g, ginv = metric_jets(form, split, source, x, 0)
    gv = np.array([[e.value.real for e in row] for row in g])
    gi = np.array([[e.value.real for e in row] for row in ginv])
    return MetricAtPoint(gv, gi)


def christoffel_algebraic(alg, split, form):
    """Gamma^a_{bc} = -1/2 C^a_bc - 1/2 G^{ad} (G_ec C^e_bd + G_eb C^e_cd)."""
    m = split.m
    n = len(m)
    C = np.zeros((n, n, n))
    for a in range(n):
        for b in range(n):
            for c in range(n):
                C[a, b, c] = alg.C[m[b], m[c], m[a]]
    out = -0.5 * C
    for a in range(n):
        for b in range(n):
            for c in range(n):
                s = 0.0
                for d in range(n):
                    for e in range(n):
                        s += form.Ginv[a, d] * (
                            form.G[e, c] * C[e, b, d] + form.G[e, b] * C[e, c, d]
                        )
                out[a, b, c] -= 0.5 * s
    return out


def christoffel_jets(alg, split, form, source, x, order):
    """Coordinate Christoffels as jets: the algebraic term, the frame
    derivative term, and the isotropy mixing term."""
    fr = source.frames(x, order + 1)
    n = fr.dim_m
    m, h = split.m, split.h
    gam_alg = christoffel_algebraic(alg, split, form)
    sp = space(n, order)
    eta = fr.eta
    sig = fr.sigma

    def trunc(j):
        return j.truncate(order)

    out = np.empty((n, n, n), dtype=object)
    for i in range(n):
        for j in range(n):
            for k in range(n):
                acc = Jet.constant(sp, 0.0)
                for a in range(len(m)):
                    for b in range(len(m)):
                        for c in range(len(m)):
                            coef = gam_alg[a, b, c]
                            if coef != 0:
                                acc = acc + coef * (
                                    trunc(sig[m[b], j]) * trunc(sig[m[c], k])
                                    * trunc(eta[m[a], i])
                                )
                for b in range(len(m)):
                    acc = acc - trunc(sig[m[b], j]) * eta[m[b], i].derivative(k).truncate(order)
                for a in range(len(m)):
                    for b in range(len(m)):
                        for al in range(len(h)):
                            coef = alg.C[m[b], h[al], m[a]]
                            if coef != 0:
                                acc = acc - coef * (
                                    trunc(sig[m[b], j])
                                    * trunc(sig[h[al], k])
                                    * trunc(eta[m[a], i])
                                )
                out[i, j, k] = acc
    return out


def christoffel_at(alg, split, form, source, x):
    jets = christoffel_jets(alg, split, form, source, x, 0)
    n = jets.shape[0]
    return np.array(
        [[[jets[i, j, k].value.real for k in range(n)] for j in range(n)]
         for i in range(n)]
    )


def levi_civita_oracle(g_jets):
    """Gamma^i_jk = 1/2 g^{il} (d_j g_lk + d_k g_lj - d_l g_jk) from metric jets."""
    n = g_jets.shape[0]
    gv = np.array([[e.value.real for e in row] for row in g_jets])
    ginv = np.linalg.inv(gv)
    out = np.zeros((n, n, n))
    for i in range(n):
        for j in range(n):
            for k in range(n):
                s = 0.0
                for l in range(n):
                    s += ginv[i, l] * (
                        g_jets[l, k].derivative(j).value.real
                        + g_jets[l, j].derivative(k).value.real
                        - g_jets[j, k].derivative(l).value.real
                    )
                out[i, j, k] = 0.5 * s
    return out


def scalar_curvature_at(alg, split, form, source, x):
    """R from the Riemann contraction of jet-differentiated Christoffels.

    Sign convention: R_{jl} = d_l Gamma^k_{kj} - d_k Gamma^k_{lj}
    + Gamma^k_{lm} Gamma^m_{kj} - Gamma^k_{km} Gamma^m_{lj}, under which both
    bundled constant-curvature spaces come out positive.
    """
    gam = christoffel_jets(alg, split, form, source, x, 1)
    n = gam.shape[0]
    gv = np.array([[e.value.real for e in row]
                   for row in metric_jets(form, split, source, x, 0)[0]])
    ginv = np.linalg.inv(gv)
    val = np.array([[[gam[i, j, k].value for k in range(n)] for j in range(n)]
                    for i in range(n)])
    ricci = np.zeros((n, n), dtype=complex)
    for j in range(n):
        for l in range(n):
            s = 0.0
            for k in range(n):
                s += gam[k, k, j].derivative(l).value
                s -= gam[k, l, j].derivative(k).value
                for mm in range(n):
                    s += val[k, l, mm] * val[mm, k, j]
                    s -= val[k, k, mm] * val[mm, l, j]
            ricci[j, l] = s
    R = complex(np.einsum("jl,jl->", ginv, ricci))
    return float(R.real)


def metricity_residual(alg, split, form, source, x):
    """max |nabla_k g_ij| with jet-differentiated metric and Christoffels."""
    g_jets, _ = metric_jets(form, split, source, x, 1)
    gam = christoffel_at(alg, split, form, source, x)
    n = g_jets.shape[0]
    worst = 0.0
    for k in range(n):
        for i in range(n):
            for j in range(n):
                s = g_jets[i, j].derivative(k).value
                for l in range(n):
                    s -= gam[l, k, i] * g_jets[l, j].value
                    s -= gam[l, k, j] * g_jets[i, l].value
                worst = max(worst, abs(s))
    return worst


def killing_residual(form, split, source, x):
    """Lie derivative of the metric along each generator X_A (values at x)."""
    g_jets, _ = metric_jets(form, split, source, x, 1)
    fr = source.frames(x, 1)
    if fr.xi is None:
        raise ValueError("frame source provides no xi fields")
    n = fr.dim_m
    worst = 0.0
    for A in range(fr.eta.shape[0]):
        X = [fr.xi[A, i] for i in range(n)]
        for i in range(n):
            for j in range(n):
                s = 0.0
                for k in range(n):
                    s += X[k].value * g_jets[i, j].derivative(k).value
                    s += g_jets[k, j].value * X[k].derivative(i).value
                    s += g_jets[i, k].value * X[k].derivative(j).value
                worst = max(worst, abs(s))
    return float(worst)
