"""Constant gamma matrices for an arbitrary non-degenerate quadratic form,
isotropy spin generators, and the constant part of the spinor connection.

The builder takes the contravariant form G^{ab}, eigendecomposes it, and
transforms a canonical signature set (Jordan-Wigner tensor products of Pauli
matrices) by the congruence S |D|^{1/2}.  Models may instead pin explicit
gamma matrices; the same residual checks certify either choice.
"""

import itertools
import math

import numpy as np

from .geometry import christoffel_algebraic

_PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
_PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
_PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)


def _kron_chain(mats):
    out = mats[0]
    for m in mats[1:]:
        out = np.kron(out, m)
    return out


def _euclidean_gammas(n):
    """{Gamma_a, Gamma_b} = 2 delta_ab on 2^floor(n/2) dimensions."""
    half = n // 2
    eye = np.eye(2, dtype=complex)
    gammas = []
    for k in range(half):
        pre = [_PAULI_Z] * k
        post = [eye] * (half - k - 1)
        gammas.append(_kron_chain(pre + [_PAULI_X] + post))
        gammas.append(_kron_chain(pre + [_PAULI_Y] + post))
    if n % 2:
        gammas.append(_kron_chain([_PAULI_Z] * half) if half else np.array([[1.0 + 0j]]))
    return np.array(gammas[:n])


class GammaSet:
    def __init__(self, gammas, form):
        self.gammas = np.asarray(gammas, dtype=complex)
        self.form = form
        self.n = self.gammas.shape[0]
        self.dim = self.gammas.shape[1]
        self.lowered = np.einsum("ab,bij->aij", form.G, self.gammas)

    def anticommutator_residual(self):
        """max |{gamma^a, gamma^b} - 2 G^{ab} E|."""
        E = np.eye(self.dim)
        worst = 0.0
        for a in range(self.n):
            for b in range(self.n):
                anti = self.gammas[a] @ self.gammas[b] + self.gammas[b] @ self.gammas[a]
                worst = max(worst, float(np.max(np.abs(anti - 2 * self.form.Ginv[a, b] * E))))
        return worst

    def lowered_anticommutator_residual(self):
        E = np.eye(self.dim)
        worst = 0.0
        for a in range(self.n):
            for b in range(self.n):
                anti = self.lowered[a] @ self.lowered[b] + self.lowered[b] @ self.lowered[a]
                worst = max(worst, float(np.max(np.abs(anti - 2 * self.form.G[a, b] * E))))
        return worst

    def pseudoscalar(self):
        """Antisymmetrized product of all gammas (proportional to E for odd n)."""
        acc = np.zeros((self.dim, self.dim), dtype=complex)
        for perm in itertools.permutations(range(self.n)):
            sign = _perm_sign(perm)
            prod = self.gammas[perm[0]]
            for p in perm[1:]:
                prod = prod @ self.gammas[p]
            acc += sign * prod
        return acc / math.factorial(self.n)

    def pseudospin(self):
        """s with gamma^1 gamma^2 gamma^3 (antisymmetrized) = -i s E (3d)."""
        P = self.pseudoscalar()
        off = P - np.diag(np.diag(P))
        if np.max(np.abs(off)) > 1e-10 or abs(P[0, 0] - P[-1, -1]) > 1e-10:
            raise ValueError("pseudoscalar is not proportional to the identity")
        return float((1j * P[0, 0]).real)


def _perm_sign(perm):
    sign = 1
    seen = [False] * len(perm)
    for start in range(len(perm)):
        if seen[start]:
            continue
        length = 0
        j = start
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


def build_gammas(form, pseudospin=None, cond_limit=1e12):
    """Solve {gamma^a, gamma^b} = 2 G^{ab} E by congruence from a canonical set."""
    Gup = form.Ginv
    n = Gup.shape[0]
    evals, S = np.linalg.eigh(Gup)
    if np.min(np.abs(evals)) == 0 or np.max(np.abs(evals)) / np.min(np.abs(evals)) > cond_limit:
        raise ValueError("quadratic form is numerically degenerate")
    base = _euclidean_gammas(n)
    signed = np.array([
        base[c] if evals[c] > 0 else 1j * base[c] for c in range(n)
    ])
    T = S @ np.diag(np.sqrt(np.abs(evals)))
    gammas = np.einsum("ac,cij->aij", T, signed)
    gs = GammaSet(gammas, form)
    if pseudospin is not None and n % 2:
        if abs(gs.pseudospin() - pseudospin) > 1e-9:
            gammas = gammas.copy()
            gammas[-1] = -gammas[-1]
            gs = GammaSet(gammas, form)
        if abs(gs.pseudospin() - pseudospin) > 1e-9:
            raise ValueError("could not match the requested pseudospin")
    return gs


def spin_generators(alg, split, gammas):
    """Lambda_alpha = -1/8 G_ac C^a_{alpha b} [gamma^b, gamma^c]."""
    m, h = split.m, split.h
    G = gammas.form.G
    out = np.zeros((len(h), gammas.dim, gammas.dim), dtype=complex)
    for al in range(len(h)):
        for a in range(len(m)):
            for b in range(len(m)):
                coef = alg.C[h[al], m[b], m[a]]
                if coef == 0:
                    continue
                for c in range(len(m)):
                    if G[a, c] == 0:
                        continue
                    comm = (gammas.gammas[b] @ gammas.gammas[c]
                            - gammas.gammas[c] @ gammas.gammas[b])
                    out[al] -= G[a, c] * coef * comm / 8.0
    return out


def isotropy_rep_residual(alg, split, lambdas):
    """max |[Lambda_a, Lambda_b] - C^c_{ab} Lambda_c| over h pairs."""
    h = split.h
    worst = 0.0
    for i in range(len(h)):
        for j in range(len(h)):
            comm = lambdas[i] @ lambdas[j] - lambdas[j] @ lambdas[i]
            expect = np.zeros_like(comm)
            for k in range(len(h)):
                expect += alg.C[h[i], h[j], h[k]] * lambdas[k]
            worst = max(worst, float(np.max(np.abs(comm - expect))))
    return worst


def gamma_commutation_residual(alg, split, gammas, lambdas, lowered=False):
    """[Lambda_alpha, gamma^a] = C^a_{b alpha} gamma^b (and the lowered twin)."""
    m, h = split.m, split.h
    mats = gammas.lowered if lowered else gammas.gammas
    worst = 0.0
    for al in range(len(h)):
        for a in range(len(m)):
            comm = lambdas[al] @ mats[a] - mats[a] @ lambdas[al]
            expect = np.zeros_like(comm)
            for b in range(len(m)):
                if lowered:
                    expect += alg.C[h[al], m[a], m[b]] * mats[b]
                else:
                    expect += alg.C[m[b], h[al], m[a]] * mats[b]
            worst = max(worst, float(np.max(np.abs(comm - expect))))
    return worst


def spin_connection_constants(alg, split, form, gammas):
    """Gamma_a = -1/4 Gamma^d_{ba} gamma^b gamma_d."""
    gam = christoffel_algebraic(alg, split, form)
    n = len(split.m)
    out = np.zeros((n, gammas.dim, gammas.dim), dtype=complex)
    for a in range(n):
        for b in range(n):
            for d in range(n):
                coef = gam[d, b, a]
                if coef != 0:
                    out[a] -= 0.25 * coef * gammas.gammas[b] @ gammas.lowered[d]
    return out


def spin_connection_at(alg, split, gammas, gamma_consts, lambdas, source, x):
    """Gamma(x) = gamma^a (Gamma_a + eta_a^alpha(x, e_H) Lambda_alpha)."""
    fr = source.frames(np.asarray(x, dtype=float), 0)
    m, h = split.m, split.h
    n_m = len(m)
    out = np.zeros((gammas.dim, gammas.dim), dtype=complex)
    for a in range(n_m):
        inner = gamma_consts[a].copy()
        for al in range(len(h)):
            eta_comp = fr.eta[m[a], fr.dim_m + al].value
            if eta_comp != 0:
                inner = inner + eta_comp * lambdas[al]
        out += gammas.gammas[a] @ inner
    return out


def trace_residual(lambdas):
    return float(max((abs(np.trace(L)) for L in lambdas), default=0.0))


def projectivity_report(alg, split, form, gammas, lambdas, gamma_consts, hbar=1.0):
    """Residuals of the invariance conditions for B^a = i hbar gamma^a,
    B = i hbar gamma^a Gamma_a, plus the spin-connection commutation rule."""
    m, h = split.m, split.h
    n_m = len(m)
    Ba = 1j * hbar * gammas.gammas
    B = 1j * hbar * np.einsum("aij,ajk->ik", gammas.gammas, gamma_consts)
    res_a = 0.0
    for al in range(len(h)):
        for a in range(n_m):
            expr = Ba[a] @ lambdas[al] - lambdas[al] @ Ba[a]
            for b in range(n_m):
                expr += Ba[b] * alg.C[m[b], h[al], m[a]]
            res_a = max(res_a, float(np.max(np.abs(expr))))
    res_b = 0.0
    for al in range(len(h)):
        expr = B @ lambdas[al] - lambdas[al] @ B
        for a in range(n_m):
            for be in range(len(h)):
                expr -= Ba[a] @ lambdas[be] * alg.C[m[a], h[al], h[be]]
        res_b = max(res_b, float(np.max(np.abs(expr))))
    Gam = np.einsum("aij,ajk->ik", gammas.gammas, gamma_consts)
    res_c = 0.0
    for al in range(len(h)):
        expr = Gam @ lambdas[al] - lambdas[al] @ Gam
        for a in range(n_m):
            for be in range(len(h)):
                expr -= gammas.gammas[a] @ lambdas[be] * alg.C[m[a], h[al], h[be]]
        res_c = max(res_c, float(np.max(np.abs(expr))))
    return {
        "field_coefficients": res_a,
        "potential": res_b,
        "spin_connection_rule": res_c,
    }
