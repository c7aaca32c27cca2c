import numpy as np
import pytest

from maxsim.mechanism import WORLD, Body, ContactPoint, JointConstraint, build_mechanism
from maxsim.quaternion import quat_normalize


def random_quat(rng) -> np.ndarray:
    return quat_normalize(rng.normal(size=4))


def central_difference(f, x, h=1e-6):
    """Jacobian of ``f`` at ``x`` by central differences (columns = inputs)."""
    x = np.asarray(x, dtype=float)
    f0 = np.atleast_1d(f(x))
    J = np.zeros((f0.size, x.size))
    for k in range(x.size):
        e = np.zeros_like(x)
        e[k] = h
        J[:, k] = (np.atleast_1d(f(x + e)) - np.atleast_1d(f(x - e))) / (2 * h)
    return J


def rel_err(a, b) -> float:
    a, b = np.asarray(a), np.asarray(b)
    return float(np.abs(a - b).max() / max(1.0, np.abs(b).max()))


def random_mechanism(rng, n_bodies=None, n_contacts=None, world_joint=None):
    """Random tree of bodies with random joint kinds and a few contacts."""
    nb = int(rng.integers(1, 4)) if n_bodies is None else n_bodies
    nc = int(rng.integers(0, 3)) if n_contacts is None else n_contacts
    kinds = ["spherical", "revolute", "prismatic", "fixed"]
    bodies = []
    for i in range(nb):
        J = np.diag(rng.uniform(0.05, 0.3, 3))
        Q = np.linalg.qr(rng.normal(size=(3, 3)))[0]
        bodies.append(Body(f"b{i}", rng.uniform(0.5, 2.0), Q @ J @ Q.T, x=rng.normal(size=3),
                           q=random_quat(rng)))
    joints = []
    if (rng.random() < 0.5) if world_joint is None else world_joint:
        joints.append(JointConstraint("jw", WORLD, "b0", kinds[int(rng.integers(4))],
                                      anchor_parent=rng.normal(size=3), anchor_child=rng.normal(size=3),
                                      axis=rng.normal(size=3), rest_offset=random_quat(rng)))
    for i in range(1, nb):
        parent = f"b{int(rng.integers(i))}"
        joints.append(JointConstraint(f"j{i}", parent, f"b{i}", kinds[int(rng.integers(4))],
                                      anchor_parent=rng.normal(size=3), anchor_child=rng.normal(size=3),
                                      axis=rng.normal(size=3), rest_offset=random_quat(rng)))
    contacts = [ContactPoint(f"c{k}", f"b{int(rng.integers(nb))}", p=rng.normal(size=3),
                             normal=rng.normal(size=3), offset=rng.normal(), friction=rng.uniform(0.1, 1.0),
                             n_pairs=int(rng.integers(1, 4)))
                for k in range(nc)]
    return build_mechanism(bodies, joints, contacts, gravity=rng.normal(size=3))


def random_state(mech, rng):
    st = mech.initial_state()
    st.v[:] = rng.normal(size=st.v.shape)
    st.omega[:] = rng.normal(size=st.omega.shape)
    return st


def random_unknowns(mech, rng):
    """Unknown vector with small velocities and strictly positive contact variables."""
    a = rng.normal(size=mech.plan.n_vars)
    a[mech.packed.positive] = rng.uniform(0.1, 2.0, int(mech.packed.positive.sum()))
    for i in range(mech.n_bodies):
        o = mech.plan.var_off[i]
        a[o + 3:o + 6] *= 5.0  # |omega dt / 2| stays well inside the unit ball at dt = 0.01
    return a


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
