"""Representations of the mesh group and their first/second order jets.

A first-order deformation is a cocycle c with c(gh) = c(g) + Ad_{rho(g)} c(h);
a second-order deformation is a pair (c, k).  Both are validated by evaluating
the relator words in the 2-jet group G x g x g with product

    (g, xi, mu) (h, eta, nu) = (gh, xi + Ad_g eta, mu + Ad_g nu + [xi, Ad_g eta]),

so a jet datum is valid exactly when every relator evaluates to (I, 0, 0).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import hyperbolic as hyp
from .liealg import MatrixGroup, Jet2, ad_action, bracket, jet2_mul, jet2_inv
from .meshcover import parse_word, token_is_inverse, token_base, word_text


def _matrix_to_json(M, complex_entries):
    M = np.asarray(M)
    if complex_entries:
        return [[[float(z.real), float(z.imag)] for z in row] for row in M]
    return [[float(z.real) for z in row] for row in M]


def _matrix_from_json(data):
    arr = np.asarray(data, dtype=float)
    if arr.ndim == 3:
        return arr[..., 0] + 1j * arr[..., 1]
    return arr.astype(complex)


@dataclass
class Representation:
    group: MatrixGroup
    generators: tuple
    images: dict
    relations: tuple = ()

    def __post_init__(self):
        self.images = {k: np.asarray(v, dtype=complex) for k, v in self.images.items()}
        for name in self.generators:
            if name not in self.images:
                raise ValueError(f"missing image for generator {name!r}")
            self.group.check_group(self.images[name])

    def eval_word(self, word):
        g = self.group.identity()
        for tok in word:
            m = self.images.get(token_base(tok))
            if m is None:
                raise KeyError(f"unknown generator {tok!r}")
            g = g @ (np.linalg.inv(m) if token_is_inverse(tok) else m)
        return g

    def relator_residuals(self):
        eye = self.group.identity()
        return [float(np.abs(self.eval_word(r) - eye).max()) for r in self.relations]

    def validate(self, tol=1e-8):
        res = self.relator_residuals()
        return max(res, default=0.0) <= tol

    def conjugate(self, h):
        hinv = np.linalg.inv(h)
        return Representation(self.group, self.generators,
                              {k: h @ m @ hinv for k, m in self.images.items()},
                              self.relations)

    def is_unitary(self, tol=1e-9):
        return all(np.abs(m @ np.conj(m).T - np.eye(self.group.n)).max() <= tol
                   for m in self.images.values())

    @classmethod
    def for_mesh(cls, group, mesh, images):
        return cls(group, mesh.generators, images, mesh.relations)

    def to_json(self):
        return json.dumps({
            "group": {"kind": self.group.kind, "n": self.group.n,
                      "field": self.group.field},
            "generators": list(self.generators),
            "relations": [word_text(r) for r in self.relations],
            "images": {k: _matrix_to_json(m, self.group.is_complex)
                       for k, m in self.images.items()},
        }, sort_keys=True)

    @classmethod
    def from_json(cls, text):
        data = json.loads(text)
        group = MatrixGroup(**data["group"])
        return cls(group, tuple(data["generators"]),
                   {k: _matrix_from_json(v) for k, v in data["images"].items()},
                   tuple(parse_word(r) for r in data["relations"]))


# ----------------------------------------------------------------------

@dataclass
class Cocycle:
    rep: Representation
    values: dict

    def __post_init__(self):
        self.values = {k: np.asarray(v, dtype=complex) for k, v in self.values.items()}
        for name in self.rep.generators:
            if name not in self.values:
                raise ValueError(f"missing cocycle value for generator {name!r}")
            self.rep.group.check_algebra(self.values[name])

    def _tg_generator(self, tok):
        base = token_base(tok)
        g = self.rep.images[base]
        c = self.values[base]
        if token_is_inverse(tok):
            ginv = np.linalg.inv(g)
            return ginv, -(ginv @ c @ g)
        return g, c

    def eval_word(self, word):
        """Cocycle extension c(word) through the TG product law."""
        g = self.rep.group.identity()
        c = np.zeros((self.rep.group.n, self.rep.group.n), dtype=complex)
        for tok in word:
            h, d = self._tg_generator(tok)
            c = c + g @ d @ np.linalg.inv(g)
            g = g @ h
        return c

    def relator_residuals(self):
        return [float(np.abs(self.eval_word(r)).max()) for r in self.rep.relations]

    def validate(self, tol=1e-8):
        return max(self.relator_residuals(), default=0.0) <= tol

    def scaled(self, s):
        return Cocycle(self.rep, {k: s * v for k, v in self.values.items()})

    def __add__(self, other):
        return Cocycle(self.rep, {k: self.values[k] + other.values[k]
                                  for k in self.values})

    def norm(self):
        return float(np.sqrt(sum(float(np.sum(np.abs(v) ** 2))
                                 for v in self.values.values())))

    def to_json(self):
        return json.dumps({
            "values": {k: _matrix_to_json(v, self.rep.group.is_complex)
                       for k, v in self.values.items()}}, sort_keys=True)

    @classmethod
    def from_json(cls, text, rep):
        data = json.loads(text)
        return cls(rep, {k: _matrix_from_json(v)
                         for k, v in data["values"].items()})


def coboundary(rep, xi):
    """delta(xi): gamma -> xi - Ad_rho(gamma) xi, always a cocycle."""
    return Cocycle(rep, {name: xi - ad_action(rep.images[name], xi)
                         for name in rep.generators})


@dataclass
class Jet2Cocycle:
    c: Cocycle
    k: dict

    def __post_init__(self):
        self.k = {key: np.asarray(v, dtype=complex) for key, v in self.k.items()}
        rep = self.c.rep
        for name in rep.generators:
            if name not in self.k:
                raise ValueError(f"missing second-order value for {name!r}")
            rep.group.check_algebra(self.k[name])

    def _jet_generator(self, tok):
        base = token_base(tok)
        j = Jet2(self.c.rep.images[base], self.c.values[base], self.k[base])
        return jet2_inv(j) if token_is_inverse(tok) else j

    def eval_word(self, word):
        j = Jet2(self.c.rep.group.identity(),
                 np.zeros((self.c.rep.group.n,) * 2, dtype=complex),
                 np.zeros((self.c.rep.group.n,) * 2, dtype=complex))
        for tok in word:
            j = jet2_mul(j, self._jet_generator(tok))
        return j

    def relator_residuals(self):
        eye = self.c.rep.group.identity()
        out = []
        for r in self.c.rep.relations:
            j = self.eval_word(r)
            out.append(float(max(np.abs(j.g - eye).max(),
                                 np.abs(j.xi).max(), np.abs(j.mu).max())))
        return out

    def validate(self, tol=1e-8):
        return max(self.relator_residuals(), default=0.0) <= tol


def validation_report(rep, c=None, k=None, tol=1e-8):
    """Per-relator residuals at each jet level; pass iff all below tol."""
    report = {"tol": tol, "levels": {}}
    report["levels"]["rep"] = rep.relator_residuals()
    ok = max(report["levels"]["rep"], default=0.0) <= tol
    if c is not None:
        report["levels"]["cocycle"] = c.relator_residuals()
        ok = ok and max(report["levels"]["cocycle"], default=0.0) <= tol
        if k is not None:
            jet = Jet2Cocycle(c, k)
            report["levels"]["jet2"] = jet.relator_residuals()
            ok = ok and max(report["levels"]["jet2"], default=0.0) <= tol
    report["pass"] = bool(ok)
    return report


# ----------------------------------------------------------------------
# analytic representation paths and their jets

@dataclass
class RepPath:
    """Closed-form family t -> rho_t with analytic first and second jets."""
    kind: str
    rep0: Representation
    data: dict = field(default_factory=dict)

    def at(self, t):
        if t == 0.0:
            return self.rep0
        images = {}
        if self.kind == "commuting_exp":
            for name in self.rep0.generators:
                A = self.data["A"][name]
                B = self.data["B"][name]
                C = self.data.get("C", {}).get(name, 0.0 * A)
                images[name] = self.rep0.group.exp(A + t * B + 0.5 * t * t * C)
        elif self.kind in ("conjugation", "bending"):
            xi = self.data["xi"]
            moved = self.data.get("moved", set(self.rep0.generators))
            g = self.rep0.group.exp(t * xi)
            ginv = np.linalg.inv(g)
            for name in self.rep0.generators:
                m = self.rep0.images[name]
                images[name] = g @ m @ ginv if name in moved else m
        else:
            raise ValueError(f"unknown path kind {self.kind!r}")
        return Representation(self.rep0.group, self.rep0.generators, images,
                              self.rep0.relations)

    def jets(self):
        """(c, k) of the path in the right trivialization:
        c = drho rho^-1, k = d2rho rho^-1 - c^2, at t = 0."""
        cvals, kvals = {}, {}
        if self.kind == "commuting_exp":
            for name in self.rep0.generators:
                B = self.data["B"][name]
                C = self.data.get("C", {}).get(name, 0.0 * B)
                cvals[name] = B
                kvals[name] = C
        elif self.kind in ("conjugation", "bending"):
            xi = self.data["xi"]
            moved = self.data.get("moved", set(self.rep0.generators))
            for name in self.rep0.generators:
                if name in moved:
                    adx = ad_action(self.rep0.images[name], xi)
                    cvals[name] = xi - adx
                    kvals[name] = bracket(adx, xi)
                else:
                    z = np.zeros_like(xi)
                    cvals[name] = z
                    kvals[name] = z.copy()
        else:
            raise ValueError(f"unknown path kind {self.kind!r}")
        c = Cocycle(self.rep0, cvals)
        return c, kvals


def commuting_exp_path(rep0, B, C=None):
    """rho_t(gen) = exp(A + tB + t^2 C/2); all A, B, C must commute."""
    group = rep0.group
    A = {name: np.asarray(v, dtype=complex) for name, v in rep0.meta_logs.items()} \
        if hasattr(rep0, "meta_logs") else None
    if A is None:
        raise ValueError("commuting_exp_path needs a rep built by exp_family")
    data = {"A": A, "B": {k: np.asarray(v, dtype=complex) for k, v in B.items()}}
    if C:
        data["C"] = {k: np.asarray(v, dtype=complex) for k, v in C.items()}
    path = RepPath("commuting_exp", rep0, data)
    _check_commuting(group, data)
    return path


def _check_commuting(group, data):
    mats = list(data["A"].values()) + list(data["B"].values()) \
        + list(data.get("C", {}).values())
    for i, X in enumerate(mats):
        for Y in mats[i + 1:]:
            if np.abs(bracket(X, Y)).max() > 1e-10:
                raise ValueError("commuting_exp family requires commuting data")


def exp_family(group, mesh, logs):
    """Representation gen -> exp(A_gen); remembers the logs for paths."""
    rep = Representation.for_mesh(group, mesh,
                                  {k: group.exp(np.asarray(v, dtype=complex))
                                   for k, v in logs.items()})
    rep.meta_logs = {k: np.asarray(v, dtype=complex) for k, v in logs.items()}
    return rep


def conjugation_path(rep0, xi):
    return RepPath("conjugation", rep0, {"xi": np.asarray(xi, dtype=complex)})


def bending_path(rep0, scale=0.5, imaginary=True):
    """Bend a genus-2 representation along the separating curve [a1,b1].

    Conjugates a2, b2 by exp(t xi) with xi in the centralizer of the
    commutator h = [rho(a1), rho(b1)]; for Fuchsian reps in SL(2,C) the
    imaginary axis direction gives the classical bending family.
    """
    rep = rep0
    a1, b1 = rep.images["a1"], rep.images["b1"]
    h = a1 @ b1 @ np.linalg.inv(a1) @ np.linalg.inv(b1)
    n = rep.group.n
    axis = h - (np.trace(h) / n) * np.eye(n)
    nrm = np.abs(axis).max()
    if nrm < 1e-12:
        raise ValueError("commutator is central, no bending axis")
    xi = scale * axis / nrm
    if imaginary:
        if not rep.group.is_complex:
            raise ValueError("imaginary bending requires a complex group")
        xi = 1j * xi
    return RepPath("bending", rep, {"xi": xi, "moved": {"a2", "b2"}})


# ----------------------------------------------------------------------
# built-in representations

def circle_rep(group, mesh, matrix):
    return Representation.for_mesh(group, mesh, {"a": np.asarray(matrix, dtype=complex)})


def hyperbolic_circle_rep(group, mesh, lam=2.0):
    return circle_rep(group, mesh, np.diag([lam, 1.0 / lam]).astype(complex))


def parabolic_circle_rep(group, mesh):
    return circle_rep(group, mesh, np.array([[1.0, 1.0], [0.0, 1.0]], dtype=complex))


def elliptic_circle_rep(group, mesh, theta=0.7):
    c, s = np.cos(theta), np.sin(theta)
    return circle_rep(group, mesh, np.array([[c, -s], [s, c]], dtype=complex))


def torus_diag_rep(group, mesh, alpha, beta):
    """Z^2 -> SL(2,C), rho(a) = exp(diag(alpha,-alpha)), same for b."""
    return exp_family(group, mesh, {
        "a": np.diag([alpha, -alpha]),
        "b": np.diag([beta, -beta]),
    })


def torus_gl1c_rep(group, mesh, z1, z2):
    return exp_family(group, mesh, {
        "a": np.array([[z1]]),
        "b": np.array([[z2]]),
    })


def trivial_rep(group, mesh):
    eye = group.identity()
    return Representation.for_mesh(group, mesh,
                                   {name: eye.copy() for name in mesh.generators})


def torus_unitary_rep(group, mesh, theta1=0.6, theta2=-0.35):
    """Commuting rotations; fixes the basepoint of the symmetric space."""
    return exp_family(group, mesh, {
        "a": np.array([[1j * theta1, 0], [0, -1j * theta1]]) if group.n == 2
        else np.array([[1j * theta1]]),
        "b": np.array([[1j * theta2, 0], [0, -1j * theta2]]) if group.n == 2
        else np.array([[1j * theta2]]),
    })


def genus2_fuchsian_rep(group, mesh):
    """Side-pairing generators of the regular octagon in SL(2,R) or SL(2,C)."""
    gens = hyp.fuchsian_generators()
    return Representation.for_mesh(group, mesh, gens)


# ----------------------------------------------------------------------

def cocycle_space_basis(rep, rtol=1e-9):
    """Basis of Z^1(Gamma, g) by SVD of the linearized relator map.

    The map c -> (relator values of the TG extension) is linear in the
    generator values; its nullspace is the cocycle space.
    """
    group = rep.group
    gens = list(rep.generators)
    dim = group.dim
    ncols = dim * len(gens)
    if not rep.relations:
        basis_vecs = np.eye(ncols)
    else:
        rows = []
        for ridx in range(len(rep.relations)):
            for col in range(ncols):
                gi, bi = divmod(col, dim)
                vals = {name: np.zeros((group.n, group.n), dtype=complex)
                        for name in gens}
                vals[gens[gi]] = group.basis[bi]
                c = Cocycle(rep, vals)
                rows.append((ridx, col, group.to_coords(
                    c.eval_word(rep.relations[ridx]))))
        L = np.zeros((dim * len(rep.relations), ncols))
        for ridx, col, coords in rows:
            L[ridx * dim:(ridx + 1) * dim, col] = coords
        u, s, vt = np.linalg.svd(L)
        cutoff = rtol * (max(s[0], 1.0) if len(s) else 1.0)
        null_dim = int(np.sum(s <= cutoff)) + max(0, ncols - len(s))
        basis_vecs = vt[ncols - null_dim:].T if null_dim else np.zeros((ncols, 0))
    out = []
    for j in range(basis_vecs.shape[1]):
        vec = basis_vecs[:, j]
        vals = {}
        for gi, name in enumerate(gens):
            vals[name] = group.from_coords(vec[gi * dim:(gi + 1) * dim])
        out.append(Cocycle(rep, vals))
    return out
