"""First and second variation of the energy, with finite-difference oracles.

With the half-log edge convention (mc_edge = log(QP^{-1})/2, so the edge
displacement is twice the mc norm) the exact discrete derivatives of the
energy along a representation path carry one model constant:

    dE/dt   = 4 sum_e w1 <omega_e, beta_e>
    d2E/dt2 = 4 sum_e w1 ( <psi_e, beta_e> + ||omega_e^[p]||^2 )

which is the L2 pairing of mc-normalized cochains rescaled by 4.  Analytic
values are checked against central finite differences of re-solved harmonic
maps with Richardson extrapolation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import harmonicflow as hf
from .deform import companion_pair, second_order, solve_psi
from .twistedhodge import TwistedCochain

#: pairing scale from the mc_edge normalization (displacement = 2 mc values)
EDGE_PAIRING_SCALE = 4.0


def first_variation(ctx, omega):
    """dE/dt along the harmonic direction omega at the harmonic metric."""
    return EDGE_PAIRING_SCALE * ctx.inner(omega, ctx.beta(), 1)


def second_variation(ctx, psi, omega):
    """d2E/dt2 from the psi 1-form and the p-part of omega."""
    _, om_p = ctx.cartan_split_edges(omega)
    pairing = ctx.inner(psi, ctx.beta(), 1)
    return EDGE_PAIRING_SCALE * (pairing + ctx.inner(om_p, om_p, 1))


def omega_l2sq(ctx, omega):
    """Squared L2 norm of a 1-cochain in the energy normalization."""
    return EDGE_PAIRING_SCALE * ctx.inner(omega, omega, 1)


# ----------------------------------------------------------------------

@dataclass
class PshReport:
    secvar: float
    secvar_conj: float
    omega_sq: float
    defect: float
    relative: float
    residuals: dict = field(default_factory=dict)

    def to_dict(self):
        return {"secvar": self.secvar, "secvar_conj": self.secvar_conj,
                "omega_sq": self.omega_sq, "defect": self.defect,
                "relative": self.relative}


def psh_defect(ctx, c, k, rel_tol=1e-7):
    """| d2E(c) + d2E(ic) - ||omega||^2 |, the potential identity defect.

    The conjugate direction uses the companion construction
    (iF, -F2 - eta) with J(eta) = 2 omega* -| omega along (ic, -k).
    """
    if not ctx.group.is_complex:
        raise ValueError("plurisubharmonicity defect needs a complex group")
    so, sol = second_order(ctx, c, k, rel_tol=rel_tol)
    _, _, psi_t, _ = companion_pair(ctx, so)
    omega_i = TwistedCochain(1, 1j * so.omega.values)
    s1 = second_variation(ctx, so.psi, so.omega)
    s2 = second_variation(ctx, psi_t, omega_i)
    osq = omega_l2sq(ctx, so.omega)
    defect = abs(s1 + s2 - osq)
    return PshReport(s1, s2, osq, defect, defect / max(osq, 1e-300),
                     dict(so.residuals))


def psh_defect_independent(ctx, c, k, rel_tol=1e-7):
    """Same identity with the conjugate side solved independently of the
    companion construction (a second full psi-solve along (ic, -k))."""
    so, _ = second_order(ctx, c, k, rel_tol=rel_tol)
    c_i = c.scaled(1j)
    k_neg = {name: -np.asarray(v) for name, v in k.items()}
    so_i, _ = second_order(ctx, c_i, k_neg, rel_tol=rel_tol)
    s1 = second_variation(ctx, so.psi, so.omega)
    s2 = second_variation(ctx, so_i.psi, so_i.omega)
    osq = omega_l2sq(ctx, so.omega)
    defect = abs(s1 + s2 - osq)
    return PshReport(s1, s2, osq, defect, defect / max(osq, 1e-300))


# ----------------------------------------------------------------------

@dataclass
class ScanReport:
    max_normalized: float
    per_direction: list
    basis_size: int

    def to_dict(self):
        return {"max_normalized": self.max_normalized,
                "per_direction": self.per_direction,
                "basis_size": self.basis_size}


def critical_scan(ctx, basis=None, floor=1e-12):
    """max over cocycle directions of |dE/dt| / (||omega|| ||beta||).

    Vanishing scan value characterizes critical points of the energy on the
    representation variety.
    """
    from .repvar import cocycle_space_basis
    if basis is None:
        basis = cocycle_space_basis(ctx.rep)
    beta = ctx.beta()
    bnorm = np.sqrt(omega_l2sq(ctx, beta))
    vals = []
    for c in basis:
        omega, _ = ctx.harmonic_rep(c)
        onorm = np.sqrt(omega_l2sq(ctx, omega))
        fv = first_variation(ctx, omega)
        vals.append(abs(fv) / max(onorm * bnorm, floor))
    return ScanReport(max(vals, default=0.0), vals, len(basis))


# ----------------------------------------------------------------------
# finite-difference oracles along representation paths

@dataclass
class FDReport:
    first: float
    second: float
    table: list
    steps: tuple

    def to_dict(self):
        return {"first": self.first, "second": self.second,
                "steps": list(self.steps), "table": self.table}


def fd_energy_derivatives(path, mesh, *, steps=(1e-2, 5e-3, 2.5e-3),
                          tol=1e-10, max_iter=60000, f0=None):
    """Central finite differences of t -> E(rho_t) with Richardson
    extrapolation; each sample re-solves the harmonic map (warm started)."""
    rep0 = path.rep0
    if f0 is None:
        f0, _ = hf.flow(rep0, hf.constant_map(mesh, rep0), tol=tol,
                        max_iter=max_iter)
    E0 = hf.energy(f0)
    cache = {0.0: E0}

    def energy_at(t):
        if t not in cache:
            rep_t = path.at(t)
            f_t, rpt = hf.flow(rep_t, hf.EquivariantMap(mesh, rep_t,
                                                        f0.points.copy()),
                               tol=tol, max_iter=max_iter)
            cache[t] = rpt.energy
        return cache[t]

    table = []
    firsts, seconds = [], []
    for h in steps:
        ep, em = energy_at(h), energy_at(-h)
        d1 = (ep - em) / (2.0 * h)
        d2 = (ep - 2.0 * E0 + em) / (h * h)
        firsts.append(d1)
        seconds.append(d2)
        table.append({"h": h, "first": d1, "second": d2})
    # Richardson on the last pair (central differences are O(h^2))
    if len(steps) >= 2:
        first = (4.0 * firsts[-1] - firsts[-2]) / 3.0
        second = (4.0 * seconds[-1] - seconds[-2]) / 3.0
    else:
        first, second = firsts[-1], seconds[-1]
    return FDReport(first, second, table, tuple(steps))


def variation_report(ctx, path, mesh, *, with_second=True, fd_steps=(1e-2, 5e-3, 2.5e-3),
                     rel_tol=1e-7, fd_tol=1e-10):
    """Analytic versus finite-difference variations along one path."""
    c, k = path.jets()
    omega, _ = ctx.harmonic_rep(c)
    analytic1 = first_variation(ctx, omega)
    out = {
        "analytic_first": analytic1,
        "omega_sq": omega_l2sq(ctx, omega),
    }
    if with_second:
        sol = solve_psi(ctx, c, k, rel_tol=rel_tol)
        out["analytic_second"] = second_variation(ctx, sol.psi, omega)
        out["psi_residuals"] = sol.residuals
    f0 = hf.EquivariantMap(mesh, ctx.rep, ctx.points.copy())
    fd = fd_energy_derivatives(path, mesh, steps=fd_steps, tol=fd_tol, f0=f0)
    out["fd_first"] = fd.first
    out["fd_second"] = fd.second
    out["fd_table"] = fd.table
    scale1 = max(abs(analytic1), 1e-12)
    out["first_rel_err"] = abs(analytic1 - fd.first) / scale1
    if with_second:
        scale2 = max(abs(out["analytic_second"]), 1e-12)
        out["second_rel_err"] = abs(out["analytic_second"] - fd.second) / scale2
    return out
