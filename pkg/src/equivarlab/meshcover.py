"""Fundamental-domain cell complexes with deck-transformation labels.

A CoverMesh stores the quotient complex of a closed manifold: weighted
vertices, oriented weighted edges carrying a deck word (empty for interior
edges), and faces given by boundary walks of signed edge steps.  An edge
u -> v with word w means that the lift of the edge at the chosen lift of u
ends at w . (chosen lift of v).

Builders: the circle (Gamma = Z), the flat torus (Z^2) and the genus-2
surface discretized as a subdivided regular hyperbolic octagon.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import hyperbolic as hyp

# ----------------------------------------------------------------------
# words over the generator alphabet: tuples of tokens, capitalized first
# letter means inverse ("A1" is the inverse of "a1")


def flip_token(tok):
    return (tok[0].upper() if tok[0].islower() else tok[0].lower()) + tok[1:]


def token_base(tok):
    return tok[0].lower() + tok[1:]


def token_is_inverse(tok):
    return tok[0].isupper()


def parse_word(text):
    if not text:
        return ()
    return tuple(text.split())


def word_text(word):
    return " ".join(word)


def invert_word(word):
    return tuple(flip_token(t) for t in reversed(word))


def reduce_word(word):
    out = []
    for tok in word:
        if out and out[-1] == flip_token(tok):
            out.pop()
        else:
            out.append(tok)
    return tuple(out)


def cyclic_reduce(word):
    word = reduce_word(word)
    while len(word) >= 2 and word[0] == flip_token(word[-1]):
        word = word[1:-1]
    return word


def is_relator_or_identity(word, relations):
    """True if the freely reduced word is empty or a cyclic rotation of a
    relator or of an inverse relator."""
    w = cyclic_reduce(word)
    if not w:
        return True
    for rel in relations:
        for r in (tuple(rel), invert_word(rel)):
            if len(r) == len(w):
                doubled = r + r
                for k in range(len(r)):
                    if doubled[k:k + len(w)] == w:
                        return True
    return False


# ----------------------------------------------------------------------

class Edge(NamedTuple):
    src: int
    dst: int
    label: tuple
    weight: float


class Face(NamedTuple):
    steps: tuple          # ((edge_id, sign), ...)
    weight: float


@dataclass
class CoverMesh:
    generators: tuple
    relations: tuple
    vertex_weights: np.ndarray
    edges: list
    faces: list
    meta: dict = field(default_factory=dict)

    @property
    def nv(self):
        return len(self.vertex_weights)

    @property
    def ne(self):
        return len(self.edges)

    @property
    def nf(self):
        return len(self.faces)

    def face_word(self, face):
        """Deck word read along the boundary walk of a face."""
        word = []
        for eid, sign in face.steps:
            lab = self.edges[eid].label
            word.extend(lab if sign > 0 else invert_word(lab))
        return tuple(word)

    def check(self):
        """Structural invariants: weights, step chains, face words."""
        if abs(float(np.sum(self.vertex_weights)) - 1.0) > 1e-9:
            raise ValueError("vertex weights do not sum to 1")
        if np.any(self.vertex_weights <= 0):
            raise ValueError("non-positive vertex weight")
        for e in self.edges:
            if e.weight <= 0:
                raise ValueError("non-positive edge weight")
        for f in self.faces:
            for (eid, sign), (eid2, sign2) in zip(f.steps, f.steps[1:] + f.steps[:1]):
                a = self.edges[eid]
                b = self.edges[eid2]
                end = a.dst if sign > 0 else a.src
                start = b.src if sign2 > 0 else b.dst
                if end != start:
                    raise ValueError("face boundary walk is not a closed chain")
            if not is_relator_or_identity(self.face_word(f), self.relations):
                raise ValueError(f"face word {self.face_word(f)} is not a relator")
        return True

    def edges_at(self, v):
        """(edge_id, +-1) pairs of edges leaving (+) or entering (-) v."""
        out = []
        for i, e in enumerate(self.edges):
            if e.src == v:
                out.append((i, +1))
            if e.dst == v:
                out.append((i, -1))
        return out

    # ------------------------------------------------------------------
    def to_json(self):
        return json.dumps({
            "generators": list(self.generators),
            "relations": [word_text(r) for r in self.relations],
            "vertex_weights": [float(w) for w in self.vertex_weights],
            "edges": [{"src": e.src, "dst": e.dst,
                       "label": word_text(e.label), "weight": e.weight}
                      for e in self.edges],
            "faces": [{"steps": [[eid, sign] for eid, sign in f.steps],
                       "weight": f.weight} for f in self.faces],
        }, sort_keys=True)

    @classmethod
    def from_json(cls, text):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ValueError(f"mesh JSON does not parse: {exc}") from exc
        try:
            mesh = cls(
                generators=tuple(data["generators"]),
                relations=tuple(parse_word(r) for r in data["relations"]),
                vertex_weights=np.asarray(data["vertex_weights"], dtype=float),
                edges=[Edge(int(e["src"]), int(e["dst"]),
                            parse_word(e["label"]), float(e["weight"]))
                       for e in data["edges"]],
                faces=[Face(tuple((int(a), int(b)) for a, b in f["steps"]),
                            float(f["weight"])) for f in data["faces"]],
            )
        except (KeyError, TypeError) as exc:
            raise ValueError(f"mesh JSON has wrong shape: {exc}") from exc
        mesh.check()
        return mesh


# ----------------------------------------------------------------------

class GramData(NamedTuple):
    """Diagonal mass data of the discrete integral over the base manifold."""
    vertex: np.ndarray
    edge: np.ndarray
    face: np.ndarray


def gram_data(mesh):
    g = GramData(np.asarray(mesh.vertex_weights, dtype=float),
                 np.array([e.weight for e in mesh.edges]),
                 np.array([f.weight for f in mesh.faces]))
    for arr in g:
        if arr.size and arr.min() <= 0:
            raise ValueError("mass data must have strictly positive diagonals")
    return g


def build_circle(n):
    """Cycle mesh for Gamma = Z at unit circumference: w0 = 1/n, w1 = n."""
    if n < 3:
        raise ValueError("circle mesh needs n >= 3")
    edges = []
    for i in range(n):
        label = ("a",) if i == n - 1 else ()
        edges.append(Edge(i, (i + 1) % n, label, float(n)))
    return CoverMesh(
        generators=("a",),
        relations=(),
        vertex_weights=np.full(n, 1.0 / n),
        edges=edges,
        faces=[],
        meta={"kind": "circle", "n": n},
    )


def build_torus(n, m):
    """Flat unit-square torus, n x m grid; relator a b a^-1 b^-1."""
    if n < 3 or m < 3:
        raise ValueError("torus mesh needs n, m >= 3")

    def vid(i, j):
        return (i % n) + n * (j % m)

    edges = []
    # horizontal edges first (ids i + n*j), then vertical (n*m + i + n*j)
    for j in range(m):
        for i in range(n):
            label = ("a",) if i == n - 1 else ()
            edges.append(Edge(vid(i, j), vid(i + 1, j), label, n / m))
    for j in range(m):
        for i in range(n):
            label = ("b",) if j == m - 1 else ()
            edges.append(Edge(vid(i, j), vid(i, j + 1), label, m / n))

    def h_eid(i, j):
        return (i % n) + n * (j % m)

    def v_eid(i, j):
        return n * m + (i % n) + n * (j % m)

    faces = []
    for j in range(m):
        for i in range(n):
            steps = ((h_eid(i, j), +1), (v_eid(i + 1, j), +1),
                     (h_eid(i, j + 1), -1), (v_eid(i, j), -1))
            faces.append(Face(steps, float(n * m)))

    return CoverMesh(
        generators=("a", "b"),
        relations=(("a", "b", "A", "B"),),
        vertex_weights=np.full(n * m, 1.0 / (n * m)),
        edges=edges,
        faces=faces,
        meta={"kind": "torus", "n": n, "m": m},
    )


# ----------------------------------------------------------------------
# genus 2: subdivided regular hyperbolic octagon

class _DomainVertex(NamedTuple):
    z: complex
    kind: str          # "interior" | "boundary" | "corner"
    side: int          # boundary: side index; corner: corner index
    t: float           # boundary: dyadic parameter along the side


def _corner_words():
    """Deck word of every octagon corner relative to corner 0 (BFS)."""
    words = {0: ()}
    rels = hyp.corner_relations()
    frontier = [0]
    while frontier:
        nxt = []
        for tok, s, d in rels:
            if s in words and d not in words:
                words[d] = (tok,) + words[s]
                nxt.append(d)
            if d in words and s not in words:
                words[s] = (flip_token(tok),) + words[d]
                nxt.append(s)
        if not nxt:
            break
        frontier = nxt
    assert len(words) == 8
    return {k: reduce_word(w) for k, w in words.items()}


_SECONDARY_OF = {p: q for p, q in hyp.PAIR_OF.items()}
_PRIMARY_OF = {q: p for p, q in hyp.PAIR_OF.items()}


def _side_of_pair(s):
    return _PRIMARY_OF.get(s, s)


class _OctagonComplex:
    """Geometric octagon triangulation plus quotient bookkeeping."""

    def __init__(self, depth):
        self.verts = []          # _DomainVertex records
        self._by_key = {}
        corners = hyp.octagon_corners()
        self.corner_ids = [self._add(_DomainVertex(z, "corner", k, 0.0))
                           for k, z in enumerate(corners)]
        center = self._add(_DomainVertex(0j, "interior", -1, 0.0))
        mids = [self._interp_side(k, 0.5) for k in range(8)]
        tris = []
        for k in range(8):
            tris.append((center, self.corner_ids[k], mids[k]))
            tris.append((center, mids[k], self.corner_ids[(k + 1) % 8]))
        for _ in range(depth - 1):
            tris = self._subdivide(tris)
        self.triangles = tris

    # -- vertex store ---------------------------------------------------
    def _key(self, v):
        if v.kind == "corner":
            return ("corner", v.side)
        if v.kind == "boundary":
            return ("boundary", v.side, v.t)
        return ("interior", round(v.z.real, 9), round(v.z.imag, 9))

    def _add(self, v):
        k = self._key(v)
        if k in self._by_key:
            return self._by_key[k]
        self.verts.append(v)
        idx = len(self.verts) - 1
        self._by_key[k] = idx
        return idx

    def _interp_side(self, side, t):
        """Boundary point of side `side` at dyadic parameter t.

        Secondary-side points are constructed as deck images of the primary
        ones, so paired parameters match exactly."""
        p = _side_of_pair(side)
        corners = hyp.octagon_corners()
        if side == p:
            z = self._dyadic_geodesic_point(corners[side], corners[(side + 1) % 8], t)
        else:
            zp = self._dyadic_geodesic_point(corners[p], corners[(p + 1) % 8], 1.0 - t)
            g = hyp.side_pairings()[hyp.SIDE_LABELS[p]]
            name = hyp.SIDE_LABELS[p]
            M = np.linalg.inv(g) if name.startswith("a") else g
            z = hyp.mobius_apply(M, zp)
        return self._add(_DomainVertex(z, "boundary", side, t))

    @staticmethod
    def _dyadic_geodesic_point(a, b, t):
        # repeated geodesic bisection; t must be dyadic
        lo, hi = 0.0, 1.0
        za, zb = a, b
        while True:
            if t == lo:
                return za
            if t == hi:
                return zb
            mid = 0.5 * (lo + hi)
            zm = hyp.geodesic_midpoint(za, zb)
            if t <= mid:
                hi, zb = mid, zm
            else:
                lo, za = mid, zm
            if hi - lo < 1e-12:
                return zm

    # -- subdivision ----------------------------------------------------
    def _shared_side(self, i, j):
        a, b = self.verts[i], self.verts[j]

        def sides_of(v):
            if v.kind == "corner":
                return {v.side, (v.side - 1) % 8}
            if v.kind == "boundary":
                return {v.side}
            return set()

        common = sides_of(a) & sides_of(b)
        return common.pop() if common else None

    def _t_on_side(self, i, side):
        v = self.verts[i]
        if v.kind == "corner":
            return 0.0 if v.side == side else 1.0
        return v.t

    def _midpoint(self, i, j):
        side = self._shared_side(i, j)
        if side is not None:
            t = 0.5 * (self._t_on_side(i, side) + self._t_on_side(j, side))
            return self._interp_side(side, t)
        z = hyp.geodesic_midpoint(self.verts[i].z, self.verts[j].z)
        return self._add(_DomainVertex(z, "interior", -1, 0.0))

    def _subdivide(self, tris):
        out = []
        for (p, q, r) in tris:
            mpq = self._midpoint(p, q)
            mqr = self._midpoint(q, r)
            mrp = self._midpoint(r, p)
            out.extend([(p, mpq, mrp), (mpq, q, mqr),
                        (mrp, mqr, r), (mpq, mqr, mrp)])
        return out

    # -- quotient -------------------------------------------------------
    def quotient_class_key(self, i):
        v = self.verts[i]
        if v.kind == "corner":
            return ("corner",)
        if v.kind == "boundary":
            p = _side_of_pair(v.side)
            t = v.t if v.side == p else 1.0 - v.t
            return ("boundary", p, t)
        return ("interior", i)

    def delta_word(self, i, corner_words):
        """Deck word w with  position(i) = w . position(representative)."""
        v = self.verts[i]
        if v.kind == "corner":
            return corner_words[v.side]
        if v.kind == "boundary" and v.side != _side_of_pair(v.side):
            return hyp.secondary_point_word(_side_of_pair(v.side))
        return ()


def build_genus2(k=1):
    """Genus-2 mesh from the regular hyperbolic octagon, subdivided k-1 times.

    Vertex and edge weights come from hyperbolic triangle areas and edge
    lengths (length-squared weights), normalized to total measure 1.
    """
    if k < 1:
        raise ValueError("subdivision depth must be >= 1")
    octo = _OctagonComplex(k)
    corner_words = _corner_words()

    # quotient vertices
    class_of = {}
    classes = []
    for i in range(len(octo.verts)):
        key = octo.quotient_class_key(i)
        if key not in class_of:
            class_of[key] = len(classes)
            classes.append(key)
    nv = len(classes)

    def qv(i):
        return class_of[octo.quotient_class_key(i)]

    deltas = [octo.delta_word(i, corner_words) for i in range(len(octo.verts))]

    # quotient edges; identified boundary edges share a key
    def edge_key(i, j):
        side = octo._shared_side(i, j)
        if side is not None:
            p = _side_of_pair(side)
            ti = octo._t_on_side(i, side)
            tj = octo._t_on_side(j, side)
            if side != p:
                ti, tj = 1.0 - ti, 1.0 - tj
            return ("boundary", p, min(ti, tj), max(ti, tj))
        return ("interior", min(i, j), max(i, j))

    edge_ids = {}
    edge_rep = {}
    edges = []
    directed = {}

    def register(i, j):
        key = edge_key(i, j)
        if key not in edge_ids:
            label = reduce_word(invert_word(deltas[i]) + deltas[j])
            eid = len(edges)
            edge_ids[key] = eid
            edge_rep[key] = (i, j)
            edges.append([qv(i), qv(j), label, 0.0, 0.0])  # src,dst,label,area,len
            directed[(i, j)] = (eid, +1)
            directed[(j, i)] = (eid, -1)
            return
        eid = edge_ids[key]
        if (i, j) in directed:
            return
        # secondary copy: orient by matched side parameters
        side = octo._shared_side(i, j)
        ri, rj = edge_rep[key]
        rep_side = octo._shared_side(ri, rj)
        ti = octo._t_on_side(i, side)
        tri = octo._t_on_side(ri, rep_side)
        p = _side_of_pair(side)
        ti_p = ti if side == p else 1.0 - ti
        tri_p = tri if rep_side == p else 1.0 - tri
        sign = +1 if abs(ti_p - tri_p) < 1e-12 else -1
        directed[(i, j)] = (eid, sign)
        directed[(j, i)] = (eid, -sign)

    for (p, q, r) in octo.triangles:
        for (i, j) in ((p, q), (q, r), (r, p)):
            register(i, j)

    # faces and weights
    vertex_area = np.zeros(nv)
    faces = []
    total_area = 0.0
    for (p, q, r) in octo.triangles:
        zp, zq, zr = octo.verts[p].z, octo.verts[q].z, octo.verts[r].z
        A = hyp.triangle_area(zp, zq, zr)
        total_area += A
        for i in (p, q, r):
            vertex_area[qv(i)] += A / 3.0
        steps = []
        for (i, j) in ((p, q), (q, r), (r, p)):
            eid, sign = directed[(i, j)]
            edges[eid][3] += A / 3.0
            steps.append((eid, sign))
        faces.append([tuple(steps), A])

    for key, (i, j) in edge_rep.items():
        eid = edge_ids[key]
        edges[eid][4] = hyp.dist_disk(octo.verts[i].z, octo.verts[j].z)

    edge_list = [Edge(s, d, lab, (area / (length ** 2)) / total_area)
                 for (s, d, lab, area, length) in edges]
    face_list = [Face(steps, total_area / A) for steps, A in faces]

    mesh = CoverMesh(
        generators=("a1", "b1", "a2", "b2"),
        relations=(("a1", "b1", "A1", "B1", "a2", "b2", "A2", "B2"),),
        vertex_weights=vertex_area / total_area,
        edges=edge_list,
        faces=face_list,
        meta={"kind": "genus2", "k": k, "total_area": total_area,
              "side_labels": hyp.SIDE_LABELS,
              "corner_words": corner_words},
    )
    return mesh
