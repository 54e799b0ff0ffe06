import numpy as np
import pytest

from equivarlab.liealg import MatrixGroup
from equivarlab import meshcover as mc
from equivarlab import repvar as rv
from equivarlab import harmonicflow as hf
from equivarlab.twistedhodge import TwistedComplex

ALPHA = 0.4 + 0.3j
BETA = -0.2 + 0.5j


@pytest.fixture(scope="session")
def sl2r():
    return MatrixGroup("sl", 2, "R")


@pytest.fixture(scope="session")
def sl2c():
    return MatrixGroup("sl", 2, "C")


@pytest.fixture(scope="session")
def sl3r():
    return MatrixGroup("sl", 3, "R")


@pytest.fixture(scope="session")
def gl1c():
    return MatrixGroup("gl1c")


@pytest.fixture(scope="session")
def circle8():
    return mc.build_circle(8)


@pytest.fixture(scope="session")
def torus66():
    return mc.build_torus(6, 6)


@pytest.fixture(scope="session")
def genus2():
    return mc.build_genus2(2)


def converged(mesh, rep, tol=1e-10):
    f, rpt = hf.flow(rep, hf.constant_map(mesh, rep), tol=tol, max_iter=60000)
    assert rpt.converged, f"fixture flow failed: tension {rpt.tension}"
    return TwistedComplex(mesh, rep, f)


@pytest.fixture(scope="session")
def diag_ctx(sl2c, torus66):
    rep = rv.torus_diag_rep(sl2c, torus66, ALPHA, BETA)
    return converged(torus66, rep)


@pytest.fixture(scope="session")
def gl1c_ctx(gl1c, torus66):
    rep = rv.torus_gl1c_rep(gl1c, torus66, 0.5 + 1.0j, -0.3 + 0.2j)
    return converged(torus66, rep)


@pytest.fixture(scope="session")
def unitary_ctx(sl2c, torus66):
    rep = rv.torus_unitary_rep(sl2c, torus66)
    return converged(torus66, rep)


@pytest.fixture(scope="session")
def trivial_ctx(sl2r, torus66):
    rep = rv.trivial_rep(sl2r, torus66)
    return TwistedComplex(torus66, rep, hf.constant_map(torus66, rep))


@pytest.fixture(scope="session")
def trivialC_ctx(sl2c, torus66):
    rep = rv.trivial_rep(sl2c, torus66)
    return TwistedComplex(torus66, rep, hf.constant_map(torus66, rep))


@pytest.fixture(scope="session")
def fuchsian_ctx(sl2r, genus2):
    rep = rv.genus2_fuchsian_rep(sl2r, genus2)
    return converged(genus2, rep)


@pytest.fixture(scope="session")
def fuchsianC_ctx(sl2c, genus2):
    rep = rv.genus2_fuchsian_rep(sl2c, genus2)
    return converged(genus2, rep)


def random_cochain(ctx, degree, rng, scale=1.0):
    from equivarlab.twistedhodge import TwistedCochain
    ncells = (ctx.mesh.nv, ctx.mesh.ne, ctx.mesh.nf)[degree]
    vals = np.stack([ctx.group.random_alg(rng, scale) for _ in range(ncells)])
    return TwistedCochain(degree, vals)
