"""Matrix Lie group/algebra kernel.

Supported groups: SL(n,R), SL(n,C) and GL(1,C) = C*.  The Lie algebra is
handled as a real vector space with a fixed basis that is orthonormal for
the base-point trace form <X,Y> = Re tr(X Y^†).  All pointwise Cartan data
(adjoints, k/p projections, fiber metrics) is taken at a symmetric-space
point P, i.e. a positive definite matrix, via  X* = P X^† P^{-1}.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np
import scipy.linalg


class MatrixGroup:
    """Group descriptor plus real-basis bookkeeping for its Lie algebra.

    kind "sl": SL(n, field) with field "R" or "C"; kind "gl1c": GL(1,C).
    """

    def __init__(self, kind="sl", n=2, field="R"):
        if kind not in ("sl", "gl1c"):
            raise ValueError(f"unknown group kind {kind!r}")
        if kind == "gl1c":
            n, field = 1, "C"
        if field not in ("R", "C"):
            raise ValueError(f"field must be 'R' or 'C', got {field!r}")
        if kind == "sl" and n < 2:
            raise ValueError("sl requires n >= 2")
        self.kind = kind
        self.n = int(n)
        self.field = field
        self.basis = self._build_basis()
        self.dim = len(self.basis)
        # flattened basis for vectorized coordinate maps
        self._basis_flat = self.basis.reshape(self.dim, -1)

    # ------------------------------------------------------------------
    @property
    def is_complex(self):
        return self.field == "C"

    @property
    def is_sl(self):
        return self.kind == "sl"

    def __repr__(self):
        if self.kind == "gl1c":
            return "MatrixGroup(GL(1,C))"
        return f"MatrixGroup(SL({self.n},{self.field}))"

    def __eq__(self, other):
        return (isinstance(other, MatrixGroup)
                and (self.kind, self.n, self.field) == (other.kind, other.n, other.field))

    def __hash__(self):
        return hash((self.kind, self.n, self.field))

    # ------------------------------------------------------------------
    def _build_basis(self):
        n = self.n
        if self.kind == "gl1c":
            return np.array([[[1.0 + 0j]], [[1j]]])
        mats = []
        # off-diagonal units, norm 1 for tr(X X^T)
        for i in range(n):
            for j in range(n):
                if i != j:
                    m = np.zeros((n, n), dtype=complex)
                    m[i, j] = 1.0
                    mats.append(m)
        # trace-free diagonals, Gram-Schmidt is explicit
        for k in range(1, n):
            d = np.zeros(n)
            d[:k] = 1.0
            d[k] = -k
            mats.append(np.diag(d).astype(complex) / np.sqrt(k + k * k))
        if self.field == "C":
            mats = mats + [1j * m for m in mats]
        return np.array(mats)

    # ------------------------------------------------------------------
    def to_coords(self, X):
        """Real coordinates of X (leading axes broadcast over a stack)."""
        X = np.asarray(X, dtype=complex)
        flat = X.reshape(X.shape[:-2] + (-1,))
        # <X, B_k>_I = Re tr(X B_k^†) = Re sum_ij X_ij conj(B_k)_ij
        return np.real(flat @ np.conj(self._basis_flat).T)

    def from_coords(self, v):
        v = np.asarray(v, dtype=float)
        return np.tensordot(v, self.basis, axes=([-1], [0]))

    # ------------------------------------------------------------------
    def check_algebra(self, X, tol=1e-12):
        """Trace and realness constraints for algebra elements."""
        X = np.asarray(X)
        if X.shape != (self.n, self.n):
            raise ValueError(f"expected {self.n}x{self.n} matrix, got {X.shape}")
        if self.is_sl and abs(np.trace(X)) > tol * max(1.0, np.abs(X).max()):
            raise ValueError(f"trace {np.trace(X)} not zero for sl element")
        if self.field == "R" and np.abs(np.imag(X)).max() > tol:
            raise ValueError("sl(n,R) element has imaginary part")

    def check_group(self, g, tol=1e-9):
        g = np.asarray(g)
        if g.shape != (self.n, self.n):
            raise ValueError(f"expected {self.n}x{self.n} matrix, got {g.shape}")
        if not np.all(np.isfinite(g.real)) or not np.all(np.isfinite(np.imag(g))):
            raise ValueError("non-finite entries in group element")
        d = np.linalg.det(g)
        if self.is_sl and abs(d - 1.0) > tol:
            raise ValueError(f"determinant {d} not 1 for SL element")
        if abs(d) < 1e-12:
            raise ValueError("singular matrix is not a group element")

    def identity(self):
        return np.eye(self.n, dtype=complex)

    def exp(self, X):
        if self.n == 1:
            return np.exp(np.asarray(X, dtype=complex))
        return scipy.linalg.expm(np.asarray(X, dtype=complex))

    def random_alg(self, rng, scale=1.0):
        v = rng.standard_normal(self.dim) * scale
        return self.from_coords(v)

    def project_algebra(self, X):
        """Nearest algebra element (kills trace part / imaginary part)."""
        return self.from_coords(self.to_coords(X))


# ----------------------------------------------------------------------
# pointwise operations

def bracket(X, Y):
    """Matrix commutator [X,Y] = XY - YX."""
    X = np.asarray(X)
    Y = np.asarray(Y)
    if X.shape != Y.shape:
        raise ValueError("bracket of mismatched shapes")
    return X @ Y - Y @ X


def ad_action(g, X):
    """Adjoint action g X g^{-1}."""
    g = np.asarray(g, dtype=complex)
    return g @ X @ np.linalg.inv(g)


def adjoint_at(P, X):
    """Metric adjoint X* = P X^† P^{-1} at the point P."""
    P = np.asarray(P, dtype=complex)
    return P @ np.conj(X).T @ np.linalg.inv(P)


def cartan_project(P, X):
    """Split X = Xk + Xp into anti-selfadjoint and selfadjoint parts at P."""
    Xs = adjoint_at(P, X)
    Xp = 0.5 * (X + Xs)
    Xk = 0.5 * (X - Xs)
    return Xk, Xp


def inner_at(P, X, Y):
    """Fiber metric <X,Y>_P = Re tr(X (P Y^† P^{-1}))."""
    return float(np.real(np.trace(np.asarray(X) @ adjoint_at(P, Y))))


def norm_at(P, X):
    v = inner_at(P, X, X)
    return float(np.sqrt(max(v, 0.0)))


def gram_at(group, P):
    """Gram matrix of the fiber metric at P in the group's real basis."""
    Pinv = np.linalg.inv(np.asarray(P, dtype=complex))
    # adj(B_k) stacked, then G[j,k] = Re tr(B_j adj(B_k))
    adj = np.einsum("ab,kbc,cd->kad", np.asarray(P, dtype=complex), np.conj(self_transpose(group.basis)), Pinv)
    G = np.real(np.einsum("jab,kba->jk", group.basis, adj))
    return 0.5 * (G + G.T)


def self_transpose(basis):
    # conjugate-transpose of a stacked basis, helper for gram_at
    return np.transpose(basis, (0, 2, 1))


def ad_matrix(group, g):
    """Real coordinate matrix of X -> g X g^{-1}."""
    g = np.asarray(g, dtype=complex)
    ginv = np.linalg.inv(g)
    conj = np.einsum("ab,kbc,cd->kad", g, group.basis, ginv)
    return group.to_coords(conj).T.copy()


# ----------------------------------------------------------------------
# second jets of the group: right-trivialized J^2 G = G x g x g

class Jet2(NamedTuple):
    """Right-trivialized 2-jet (g, xi, mu): g_t = (1 + t xi + t^2(mu+xi^2)/2) g."""
    g: np.ndarray
    xi: np.ndarray
    mu: np.ndarray


def jet2_identity(group):
    z = np.zeros((group.n, group.n), dtype=complex)
    return Jet2(group.identity(), z.copy(), z.copy())


def jet2_mul(a, b):
    """(g,xi,mu)(h,eta,nu) = (gh, xi + Ad_g eta, mu + Ad_g nu + [xi, Ad_g eta])."""
    if a.g.shape != b.g.shape:
        raise ValueError("jet2_mul of mismatched groups")
    ad_eta = ad_action(a.g, b.xi)
    return Jet2(a.g @ b.g,
                a.xi + ad_eta,
                a.mu + ad_action(a.g, b.mu) + bracket(a.xi, ad_eta))


def jet2_inv(a):
    """Inverse solved from the product law: (g^{-1}, -Ad_{g^{-1}} xi, -Ad_{g^{-1}} mu)."""
    ginv = np.linalg.inv(a.g)
    return Jet2(ginv, -(ginv @ a.xi @ a.g), -(ginv @ a.mu @ a.g))
