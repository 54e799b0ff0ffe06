"""Geometry of N = G/K in the positive-definite matrix model.

Points are SPD (resp. Hermitian positive definite) matrices with det 1 for
SL-type groups; for GL(1,C) they are 1x1 positive reals.  The group acts by
P -> g P g^†.  Edge logarithms follow the exact-transport convention

    mc_edge(P,Q) = (1/2) log(Q P^{-1}),

which is selfadjoint at P and satisfies exp_point(P, mc_edge(P,Q)) = Q.
With this normalization ||mc_edge(P,Q)||_P = dist(P,Q)/2.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg

from .liealg import ad_action, norm_at

#: ||mc_edge(P,Q)||_P / dist(P,Q); fixed by the half-log normalization.
MC_EDGE_NORM_RATIO = 0.5

_EIG_FLOOR = 1e-14


def _eigh_spd(P):
    w, U = np.linalg.eigh(np.asarray(P, dtype=complex))
    w = np.maximum(w, _EIG_FLOOR)
    return w, U


def check_point(P, tol_det=1e-9, require_det_one=True):
    """Positive definiteness, Hermitian symmetry and the det-1 constraint."""
    P = np.asarray(P, dtype=complex)
    if np.abs(P - np.conj(P).T).max() > 1e-10 * max(1.0, np.abs(P).max()):
        raise ValueError("symmetric-space point is not Hermitian")
    w = np.linalg.eigvalsh(P)
    if w.min() <= 0:
        raise ValueError("symmetric-space point is not positive definite")
    if require_det_one and P.shape[0] > 1:
        d = np.prod(w)
        if abs(d - 1.0) > tol_det:
            raise ValueError(f"det {d} differs from 1")


def sqrt_spd(P):
    w, U = _eigh_spd(P)
    return (U * np.sqrt(w)) @ np.conj(U).T


def inv_sqrt_spd(P):
    w, U = _eigh_spd(P)
    return (U / np.sqrt(w)) @ np.conj(U).T


def log_spd(P):
    w, U = _eigh_spd(P)
    return (U * np.log(w)) @ np.conj(U).T


def power_spd(P, t):
    w, U = _eigh_spd(P)
    return (U * np.power(w, t)) @ np.conj(U).T


def exp_hermitian(H):
    H = 0.5 * (H + np.conj(H).T)
    w, U = np.linalg.eigh(H)
    return (U * np.exp(w)) @ np.conj(U).T


def _expm(X):
    X = np.asarray(X, dtype=complex)
    n = X.shape[0]
    if n == 1:
        return np.exp(X)
    if n == 2 and abs(np.trace(X)) < 1e-13:
        # traceless 2x2: X^2 = -det(X) I, so e^X = cosh(s) I + sinh(s)/s X
        q = -np.linalg.det(X)
        s = np.sqrt(q + 0j)
        if abs(s) < 1e-12:
            coef = 1.0 + q / 6.0
            return np.cosh(s) * np.eye(2) + coef * X
        return np.cosh(s) * np.eye(2) + (np.sinh(s) / s) * X
    return scipy.linalg.expm(X)


def act(g, P):
    """Isometric action P -> g P g^†."""
    g = np.asarray(g, dtype=complex)
    Q = g @ P @ np.conj(g).T
    return 0.5 * (Q + np.conj(Q).T)


def dist(P, Q):
    """Invariant distance ||log(P^{-1/2} Q P^{-1/2})||_F."""
    S = inv_sqrt_spd(P)
    M = S @ Q @ S
    w, _ = _eigh_spd(0.5 * (M + np.conj(M).T))
    return float(np.linalg.norm(np.log(w)))


def geodesic(P, Q, t):
    """Geodesic from P (t=0) to Q (t=1)."""
    R = sqrt_spd(P)
    S = inv_sqrt_spd(P)
    M = S @ Q @ S
    G = R @ power_spd(0.5 * (M + np.conj(M).T), t) @ R
    return 0.5 * (G + np.conj(G).T)


def exp_point(P, X):
    """exp_point(P, X) = e^X P e^{X^†}; X should be selfadjoint at P."""
    E = _expm(X)
    Q = E @ P @ np.conj(E).T
    return 0.5 * (Q + np.conj(Q).T)


def mc_edge(P, Q):
    """Edge logarithm (1/2) log(Q P^{-1}), selfadjoint at P.

    Computed through the symmetric eigendecomposition of P^{-1/2} Q P^{-1/2}
    and conjugated back, which keeps the selfadjointness exact.
    """
    R = sqrt_spd(P)
    S = inv_sqrt_spd(P)
    M = S @ Q @ S
    L = log_spd(0.5 * (M + np.conj(M).T))
    return 0.5 * (R @ L @ S)


def random_point(group, rng, scale=0.5):
    """Random symmetric-space point for the given group."""
    n = group.n
    if n == 1:
        return np.array([[np.exp(scale * rng.standard_normal())]], dtype=complex)
    if group.field == "C":
        A = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    else:
        A = rng.standard_normal((n, n)).astype(complex)
    H = scale * 0.5 * (A + np.conj(A).T)
    H = H - (np.trace(H) / n) * np.eye(n)
    return exp_hermitian(H)


def project_det_one(P):
    """Rescale an SPD matrix to determinant 1 (guards float drift)."""
    n = P.shape[0]
    if n == 1:
        return P
    w = np.linalg.eigvalsh(P)
    d = float(np.sum(np.log(w)))
    return P * np.exp(-d / n)


def translation_length(g, *, tol=1e-8, max_iter=20000, radius=50.0, rng=None,
                       n_restarts=2):
    """Infimum of dist(P, g P g^†) over the symmetric space.

    Riemannian gradient descent on the squared displacement from the identity
    with restarts.  Returns (L, attained); attained is False when the gradient
    stalls while the basepoint escapes a ball of the given radius, the
    signature of a non-semisimple g.
    """
    g = np.asarray(g, dtype=complex)
    n = g.shape[0]
    if rng is None:
        rng = np.random.default_rng(0)
    ginv = np.linalg.inv(g)

    def displacement_sq(P):
        return dist(P, act(g, P)) ** 2

    best = None
    for start in range(n_restarts):
        if start == 0:
            P = np.eye(n, dtype=complex)
        else:
            H = 0.1 * rng.standard_normal((n, n))
            H = 0.5 * (H + H.T) - np.trace(H) / n * np.eye(n)
            P = exp_hermitian(H.astype(complex))
        val = displacement_sq(P)
        step = 0.25
        attained = False
        for _ in range(max_iter):
            Q = act(g, P)
            beta = mc_edge(P, Q)
            # gradient of d(P, gPg†)^2 in the <.,.>_P metric is -4*dirn
            dirn = beta + ad_action(ginv, -beta)
            gnorm = norm_at(P, dirn)
            drift = dist(np.eye(n, dtype=complex), P)
            if gnorm < tol:
                attained = drift <= radius
                break
            if drift > radius:
                attained = False
                break
            # Armijo backtracking on the squared displacement
            accepted = False
            while step > 1e-14:
                P_new = exp_point(P, step * dirn)
                val_new = displacement_sq(P_new)
                if val_new <= val - 0.25 * step * gnorm ** 2:
                    P, val = P_new, val_new
                    step = min(step * 1.5, 64.0)
                    accepted = True
                    break
                step *= 0.5
            if not accepted:
                attained = gnorm < 1e-6 and drift <= radius
                break
        cand = (float(np.sqrt(max(val, 0.0))), attained)
        if best is None or cand[0] < best[0] - 1e-12 or (abs(cand[0] - best[0]) <= 1e-12 and cand[1]):
            best = cand
    return best
