import numpy as np

from equivarlab import harmonicflow as hf
from equivarlab import meshcover as mc
from equivarlab import repvar as rv
from equivarlab.symspace import act, dist, exp_point, geodesic


def test_energy_constant_trivial(sl2r, torus66):
    rep = rv.trivial_rep(sl2r, torus66)
    f = hf.constant_map(torus66, rep)
    assert hf.energy(f) < 1e-30
    assert np.abs(hf.tension(f)).max() < 1e-14


def test_energy_circle_axis_sampling(sl2r, circle8):
    # equally spaced points on the axis of diag(2, 1/2): E = 4 ln(2)^2
    rep = rv.hyperbolic_circle_rep(sl2r, circle8, 2.0)
    n = circle8.nv
    s = np.log(2.0)
    pts = np.stack([np.diag([np.exp(2 * s * i / n), np.exp(-2 * s * i / n)])
                    for i in range(n)]).astype(complex)
    f = hf.EquivariantMap(circle8, rep, pts)
    assert abs(hf.energy(f) - 4.0 * np.log(2.0) ** 2) < 1e-12
    assert hf.tension_norm(f) < 1e-9      # geodesically equispaced -> harmonic


def test_energy_conjugation_invariance(sl2c, torus66):
    rng = np.random.default_rng(0)
    rep = rv.torus_diag_rep(sl2c, torus66, 0.4 + 0.3j, -0.2 + 0.5j)
    f = hf.random_map(torus66, rep, rng, 0.4)
    h = sl2c.exp(sl2c.random_alg(rng, 0.5))
    rep2 = rep.conjugate(h)
    f2 = hf.EquivariantMap(torus66, rep2, np.stack([act(h, P) for P in f.points]))
    assert abs(hf.energy(f) - hf.energy(f2)) < 1e-9 * max(1.0, hf.energy(f))


def test_tension_is_descent_direction(sl2r, circle8):
    # after a random perturbation of a harmonic map the tension is nonzero
    # and stepping along +tau decreases the energy (along -tau it increases)
    rng = np.random.default_rng(1)
    rep = rv.hyperbolic_circle_rep(sl2r, circle8, 2.0)
    f, rpt = hf.flow(rep, hf.constant_map(circle8, rep))
    assert rpt.converged
    pts = f.points.copy()
    for v in range(circle8.nv):
        pts[v] = exp_point(pts[v], 0.05 * sl2r.random_alg(rng, 1.0)
                           + 0.05 * sl2r.random_alg(rng, 1.0).conj().T)
    # symmetrize the perturbation direction at each point
    g = hf.EquivariantMap(circle8, rep, np.stack(
        [0.5 * (P + np.conj(P).T) for P in pts]))
    tau = hf.tension(g)
    assert hf.tension_norm(g) > 1e-6
    eps = 1e-4
    E0 = hf.energy(g)
    up = hf.EquivariantMap(circle8, rep, np.stack(
        [exp_point(g.points[v], eps * tau[v]) for v in range(circle8.nv)]))
    down = hf.EquivariantMap(circle8, rep, np.stack(
        [exp_point(g.points[v], -eps * tau[v]) for v in range(circle8.nv)]))
    assert hf.energy(up) < E0
    assert hf.energy(down) > E0


def test_flow_hyperbolic_circle(sl2r, circle8):
    rng = np.random.default_rng(2)
    rep = rv.hyperbolic_circle_rep(sl2r, circle8, 2.0)
    f, rpt = hf.flow(rep, hf.random_map(circle8, rep, rng, 0.4))
    assert rpt.converged
    exact = 4.0 * np.log(2.0) ** 2
    assert abs(rpt.energy - exact) < 1e-6 * exact
    assert rpt.reductive_suspected


def test_flow_parabolic_plateau(sl2r):
    circle = mc.build_circle(4)
    rep = rv.parabolic_circle_rep(sl2r, circle)
    f, rpt = hf.flow(rep, hf.constant_map(circle, rep), max_iter=40000)
    assert not rpt.converged
    assert rpt.energy < 1e-3
    assert not rpt.reductive_suspected


def test_flow_trivial_rep(sl2r, torus66):
    rng = np.random.default_rng(3)
    rep = rv.trivial_rep(sl2r, torus66)
    f, rpt = hf.flow(rep, hf.random_map(torus66, rep, rng, 0.3))
    assert rpt.converged
    assert rpt.energy < 1e-12
    base = f.points[0]
    assert max(dist(base, f.points[v]) for v in range(torus66.nv)) < 1e-4


def test_flow_energy_monotone(sl2c, torus66):
    rng = np.random.default_rng(4)
    rep = rv.torus_diag_rep(sl2c, torus66, 0.4 + 0.3j, -0.2 + 0.5j)
    _, rpt = hf.flow(rep, hf.random_map(torus66, rep, rng, 0.4))
    hist = np.asarray(rpt.energy_history)
    assert np.all(np.diff(hist) <= 1e-12 * np.maximum(1.0, hist[:-1]))


def test_flow_uniqueness_after_normalization(sl2r, genus2):
    rng = np.random.default_rng(5)
    rep = rv.genus2_fuchsian_rep(sl2r, genus2)
    f1, r1 = hf.flow(rep, hf.constant_map(genus2, rep))
    f2, r2 = hf.flow(rep, hf.random_map(genus2, rep, rng, 0.3))
    assert r1.converged and r2.converged
    assert hf.map_distance(hf.normalize_basepoint(f1),
                           hf.normalize_basepoint(f2)) < 1e-5


def test_energy_of_rep_unitary(sl2c, torus66):
    rep = rv.torus_unitary_rep(sl2c, torus66)
    E, reductive, _ = hf.energy_of_rep(rep, torus66, n_starts=2)
    assert E < 1e-10
    assert reductive


def test_energy_of_rep_parabolic(sl2r):
    circle = mc.build_circle(4)
    rep = rv.parabolic_circle_rep(sl2r, circle)
    E, reductive, _ = hf.energy_of_rep(rep, circle, n_starts=1, max_iter=40000)
    assert E < 1e-3
    assert not reductive


def test_energy_of_rep_gl1c_closed_form(gl1c, torus66):
    # rho(a) = e^{z1}, rho(b) = e^{z2}: the linear harmonic map gives
    # E = 2((Re z1)^2 + (Re z2)^2) in this discretization
    z1, z2 = 0.5 + 1.0j, -0.3 + 0.2j
    rep = rv.torus_gl1c_rep(gl1c, torus66, z1, z2)
    E, reductive, _ = hf.energy_of_rep(rep, torus66, n_starts=1)
    exact = 2.0 * (z1.real ** 2 + z2.real ** 2)
    assert abs(E - exact) < 1e-9
    assert reductive


def test_curved_torus_map_is_equivariant(sl2c):
    mesh = mc.build_torus(6, 6)
    rep = rv.torus_diag_rep(sl2c, mesh, 0.4, -0.2)
    f = hf.curved_torus_map(mesh, rep, 0.3)
    kern = hf.FlowKernel(mesh, rep)
    beta, d2 = kern.edge_data(f.points)
    assert np.isfinite(d2).all()
    # wrap-around edges see the transported points, so all distances are O(1/n)
    assert np.sqrt(d2.max()) < 10.0 / 6.0


def test_map_json_roundtrip(sl2c, torus66):
    rng = np.random.default_rng(11)
    rep = rv.torus_diag_rep(sl2c, torus66, 0.4 + 0.3j, -0.2 + 0.5j)
    f = hf.random_map(torus66, rep, rng, 0.4)
    f2 = hf.EquivariantMap.from_json(f.to_json(), torus66, rep)
    assert np.abs(f.points - f2.points).max() < 1e-15
    report = hf.FlowReport(energy=1.0, tension=1e-9, iterations=3,
                           converged=True)
    import json
    payload = json.loads(json.dumps(report.to_dict()))
    assert payload["converged"] is True
