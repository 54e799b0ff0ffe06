"""First- and second-order deformation pipelines.

First order: the harmonic representative omega of a cocycle class and its
equivariant primitive F give the tangent field v = F^[p].  Second order: a
valid jet (c, k) seeds a closed jet 1-cochain (omega, omega2^0); the 1-form

    psi = omega2^0 - [F^0, omega] + d eta,   J(eta) = -omega* -| omega - d* psi0

solves  d psi = -[omega, omega]  and  d* psi = -omega* -| omega  exactly when
the contraction omega* -| omega is orthogonal to the kernel fields; the
kernel component is the obstruction defect with its projection direction as
witness.  The pair (F, F2) is completed by a second twisted-primitive solve.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .twistedhodge import TwistedCochain, _vals


class ObstructedDeformationError(RuntimeError):
    """Second-order deformation refused: carries the defect and witness."""

    def __init__(self, defect, scale, witness):
        super().__init__(
            f"obstructed: kernel component of omega* -| omega has norm "
            f"{defect:.3e} (threshold scale {scale:.3e})")
        self.defect = defect
        self.scale = scale
        self.witness = witness


@dataclass
class ObstructionReport:
    orthogonal: bool
    defect: float
    scale: float
    witness: TwistedCochain | None

    def to_dict(self):
        return {"orthogonal": self.orthogonal, "defect": self.defect,
                "scale": self.scale}


@dataclass
class FirstOrderDeformation:
    omega: TwistedCochain
    F: TwistedCochain
    v: np.ndarray
    residuals: dict = field(default_factory=dict)


@dataclass
class PsiSolution:
    omega: TwistedCochain
    xi: TwistedCochain
    F0: TwistedCochain
    omega2: TwistedCochain
    psi0: TwistedCochain
    psi: TwistedCochain
    eta: TwistedCochain
    obstruction: ObstructionReport
    residuals: dict = field(default_factory=dict)


@dataclass
class SecondOrderDeformation:
    F: TwistedCochain
    F2: TwistedCochain
    psi: TwistedCochain
    v: np.ndarray
    w_beta: np.ndarray
    omega: TwistedCochain
    omega2: TwistedCochain
    residuals: dict = field(default_factory=dict)


# ----------------------------------------------------------------------

def cartan_split_at(points, vals):
    """Pointwise (k, p) split of per-vertex values at the metric points."""
    star = points @ np.conj(np.swapaxes(vals, -1, -2)) @ np.linalg.inv(points)
    return 0.5 * (vals - star), 0.5 * (vals + star)


def first_order(ctx, c, tol=1e-8):
    """Harmonic first-order deformation data for the cocycle c."""
    omega, _ = ctx.harmonic_rep(c)
    F, defect = ctx.primitive(omega, c)
    _, v = cartan_split_at(ctx.points, F.values)
    residuals = {
        "equivariance": defect,
        "d_omega": ctx.norm(ctx.d(omega), 2) if ctx.mesh.nf else 0.0,
        "dstar_omega": ctx.norm(ctx.codiff(omega), 0),
        "jacobi_F": ctx.norm(ctx.codiff(omega), 0),
    }
    return FirstOrderDeformation(omega, F, v, residuals)


def obstruction_check(ctx, omega, rel_tol=1e-7):
    """Is omega* -| omega orthogonal to the kernel fields?

    The defect is the weighted norm of the kernel projection, compared
    against rel_tol * ||omega||^2; the witness is the projection direction.
    """
    q = ctx.contract_star(omega, omega)
    flat = ctx.to_flat(q.values)
    proj = ctx.kernel_project_flat(flat)
    defect = float(np.sqrt(max(proj @ (ctx.G0 @ proj), 0.0)))
    scale = max(ctx.inner(omega, omega, 1), 1e-300)
    # absolute floor keeps near-zero omega from flipping on float noise
    threshold = rel_tol * scale + 1e-12 * (1.0 + scale)
    witness = None
    if defect > 0:
        wit = ctx.from_flat(proj, ctx.mesh.nv)
        nrm = np.abs(wit).max()
        if nrm > 0:
            witness = TwistedCochain(0, wit / nrm)
    return ObstructionReport(defect <= threshold, defect, scale, witness)


def jet_seed_second(ctx, c, k, xi):
    """Second component omega2^0 of the jet-closed seed, gauge-fixed by xi:
    omega2_0(e) = k(w_e) - [c(w_e), Ad_{rho(w_e)} xi(dst)]."""
    vals = np.zeros((ctx.mesh.ne, ctx.n, ctx.n), dtype=complex)
    xiv = _vals(xi)
    for i, e in enumerate(ctx.mesh.edges):
        w = ctx.edge_words[i]
        ad_xi = ctx.edge_g[i] @ xiv[e.dst] @ np.linalg.inv(ctx.edge_g[i])
        if w:
            cw = c.eval_word(w)
            kw = _eval_k_word(ctx, c, k, w)
            vals[i] = kw - (cw @ ad_xi - ad_xi @ cw)
    return TwistedCochain(1, vals)


def _eval_k_word(ctx, c, k, word):
    """Second jet component of the word in the 2-jet group."""
    from .repvar import Jet2Cocycle
    return Jet2Cocycle(c, k).eval_word(word).mu


def solve_psi(ctx, c, k, *, rel_tol=1e-7, require_unobstructed=True):
    """Solve  d psi = -[omega, omega],  d* psi = -omega* -| omega.

    Follows the constructive route: omega2^0 from the (c,k)-seeded jet
    cochain, psi0 = omega2^0 - [F^0, omega], then a kernel-deflated Jacobi
    solve for eta and psi = psi0 + d eta.
    """
    omega, xi = ctx.harmonic_rep(c)
    F0, equiv_defect = ctx.primitive(omega, c)
    obstruction = obstruction_check(ctx, omega, rel_tol)
    if require_unobstructed and not obstruction.orthogonal:
        raise ObstructedDeformationError(
            obstruction.defect, rel_tol * obstruction.scale, obstruction.witness)

    omega2_0 = jet_seed_second(ctx, c, k, xi)
    psi0 = TwistedCochain(1, omega2_0.values - ctx.bracket_section(omega, F0).values)
    contr = ctx.contract_star(omega, omega)
    rhs = TwistedCochain(0, -contr.values - ctx.codiff(psi0).values)
    eta = ctx.solve_jacobi(rhs)
    d_eta = ctx.d(eta)
    psi = TwistedCochain(1, psi0.values + d_eta.values)
    omega2 = TwistedCochain(1, omega2_0.values + d_eta.values)

    wedge = ctx.bracket_wedge(omega, omega)
    res_closed = ctx.norm(TwistedCochain(2, ctx.d(psi).values + wedge.values), 2) \
        if ctx.mesh.nf else 0.0
    res_coclosed = ctx.norm(
        TwistedCochain(0, ctx.codiff(psi).values + contr.values), 0)
    residuals = {
        "d_psi_plus_wedge": res_closed,
        "dstar_psi_plus_contract": res_coclosed,
        "equivariance_F0": equiv_defect,
    }
    return PsiSolution(omega, xi, F0, omega2, psi0, psi, eta,
                       obstruction, residuals)


def second_order(ctx, c, k, *, rel_tol=1e-7, tol=1e-7):
    """Equivariant pair (F, F2) of harmonic type and its tangent data.

    Raises ObstructedDeformationError when the contraction defect blocks the
    psi equations (the structured refusal carries the witness direction).
    """
    sol = solve_psi(ctx, c, k, rel_tol=rel_tol)
    omega, omega2, F0 = sol.omega, sol.omega2, sol.F0

    # second component: Ad_w F2(v) - F2(u) = omega2 - k-seed - [c, Ad_w F0(v)]
    target = np.array(omega2.values, copy=True)
    F0v = F0.values
    for i, e in enumerate(ctx.mesh.edges):
        w = ctx.edge_words[i]
        if w:
            cw = c.eval_word(w)
            kw = _eval_k_word(ctx, c, k, w)
            adF = ctx.edge_g[i] @ F0v[e.dst] @ np.linalg.inv(ctx.edge_g[i])
            target[i] -= kw + (cw @ adF - adF @ cw)
    flat_target = ctx.to_flat(target)
    x = ctx.solve_deflated(ctx.d0.T @ (ctx.G1 @ flat_target))
    resid = ctx.d0 @ x - flat_target
    defect2 = float(np.sqrt(max(resid @ (ctx.G1 @ resid), 0.0)))
    F2 = TwistedCochain(0, ctx.from_flat(x, ctx.mesh.nv))

    Fk, Fp = cartan_split_at(ctx.points, F0.values)
    F2k, F2p = cartan_split_at(ctx.points, F2.values)
    v = Fp
    w_beta = F2p + (Fk @ Fp - Fp @ Fk)

    residuals = dict(sol.residuals)
    residuals["equivariance_F2"] = defect2
    residuals["w_projection"] = _w_equivariance_residual(ctx, c, k, F0, F2, w_beta)
    so = SecondOrderDeformation(F0, F2, sol.psi, v, w_beta, omega, omega2,
                                residuals)
    return so, sol


def _w_equivariance_residual(ctx, c, k, F, F2, w_beta):
    """Pointwise check of the labeled-edge transformation rule for the
    second-order tangent field (commuting-diagram projection)."""
    worst = 0.0
    Fv, F2v = F.values, F2.values
    for i, e in enumerate(ctx.mesh.edges):
        w = ctx.edge_words[i]
        if not w:
            continue
        g = ctx.edge_g[i]
        ginv = np.linalg.inv(g)
        Q = g @ ctx.points[e.dst] @ np.conj(g).T      # metric at the far lift
        cw = c.eval_word(w)
        kw = _eval_k_word(ctx, c, k, w)
        A = g @ Fv[e.dst] @ ginv
        B = g @ F2v[e.dst] @ ginv

        def split(X):
            star = Q @ np.conj(X).T @ np.linalg.inv(Q)
            return 0.5 * (X - star), 0.5 * (X + star)

        ck, cp = split(cw)
        Ak, Ap = split(A)
        kk, kp = split(kw)
        lhs = g @ w_beta[e.dst] @ ginv + kp \
            + 2.0 * (ck @ Ap - Ap @ ck) + (ck @ cp - cp @ ck)
        Ft = A + cw
        F2t = B + (cw @ A - A @ cw) + kw
        Ftk, Ftp = split(Ft)
        _, F2tp = split(F2t)
        rhs = F2tp + (Ftk @ Ftp - Ftp @ Ftk)
        worst = max(worst, float(np.abs(lhs - rhs).max()))
    return worst


# ----------------------------------------------------------------------
# transformations used by the uniqueness and complex-symmetry laws

def shifted_pair(ctx, F, F2, xi_kernel, eta_kernel):
    """(F', F2') = (F + xi, F2 + [F, xi] + eta) for kernel sections xi, eta."""
    xiv = _vals(xi_kernel)
    etav = _vals(eta_kernel)
    Fv = _vals(F)
    return (TwistedCochain(0, Fv + xiv),
            TwistedCochain(0, _vals(F2) + (Fv @ xiv - xiv @ Fv) + etav))


def companion_pair(ctx, so, require_unobstructed=True):
    """Companion (iF, -F2 - eta) with J(eta) = 2 omega* -| omega, valid along
    the jet (i c, -k) for complex groups."""
    if not ctx.group.is_complex:
        raise ValueError("companion pair needs a complex group")
    contr = ctx.contract_star(so.omega, so.omega)
    eta = ctx.solve_jacobi(TwistedCochain(0, 2.0 * contr.values))
    F_t = TwistedCochain(0, 1j * so.F.values)
    F2_t = TwistedCochain(0, -so.F2.values - eta.values)
    psi_t = TwistedCochain(1, -so.psi.values - ctx.d(eta).values)
    return F_t, F2_t, psi_t, eta


def validate_pair(ctx, c, k, F, F2, psi_expected=None):
    """Residuals of an explicit pair (F, F2) against the defining relations.

    Reconstructs omega, omega2 and psi from the pair and checks harmonic-type
    and equivariance equations.
    """
    Fv, F2v = _vals(F), _vals(F2)
    ne = ctx.mesh.ne
    omega = np.zeros((ne, ctx.n, ctx.n), dtype=complex)
    omega2 = np.zeros_like(omega)
    for i, e in enumerate(ctx.mesh.edges):
        g = ctx.edge_g[i]
        ginv = np.linalg.inv(g)
        A = g @ Fv[e.dst] @ ginv
        B = g @ F2v[e.dst] @ ginv
        w = ctx.edge_words[i]
        cw = c.eval_word(w) if w else 0.0 * Fv[0]
        kw = _eval_k_word(ctx, c, k, w) if w else 0.0 * Fv[0]
        omega[i] = A + cw - Fv[e.src]
        omega2[i] = B + (cw @ A - A @ cw) + kw - F2v[e.src]
    om = TwistedCochain(1, omega)
    psi = TwistedCochain(1, omega2 - ctx.bracket_section(om, TwistedCochain(0, Fv)).values)
    res = {
        "d_omega": ctx.norm(ctx.d(om), 2) if ctx.mesh.nf else 0.0,
        "dstar_omega": ctx.norm(ctx.codiff(om), 0),
        "dstar_psi_plus_contract": ctx.norm(TwistedCochain(
            0, ctx.codiff(psi).values + ctx.contract_star(om, om).values), 0),
        "d_psi_plus_wedge": ctx.norm(TwistedCochain(
            2, ctx.d(psi).values + ctx.bracket_wedge(om, om).values), 2)
        if ctx.mesh.nf else 0.0,
    }
    if psi_expected is not None:
        res["psi_match"] = float(np.abs(psi.values - _vals(psi_expected)).max())
    return res, om, psi


def deformation_report(ctx, c, k=None, rel_tol=1e-7):
    """JSON-friendly summary of the deformation pipeline on (c) or (c, k)."""
    out = {"kernel_dim": ctx.kernel_dim}
    fo = first_order(ctx, c)
    out["first_order_residuals"] = fo.residuals
    obs = obstruction_check(ctx, fo.omega, rel_tol)
    out["obstruction"] = obs.to_dict()
    if k is not None:
        if obs.orthogonal:
            so, sol = second_order(ctx, c, k, rel_tol=rel_tol)
            out["second_order_residuals"] = so.residuals
            out["obstructed"] = False
        else:
            out["obstructed"] = True
    return out
