import pytest

from curveflow import catalog, curvekit, flowsim


def make_curve(name, samples):
    return curvekit.sample(catalog.curve(name, samples))


def run_flow(curve_name, flow_name, samples, dt, steps, frame_vectors=None):
    curve = make_curve(curve_name, samples)
    flow = catalog.flow(flow_name, curve.n)
    state = flowsim.initial_state(curve, flow, frame_vectors)
    return flowsim.evolve(state, flow, dt, steps)


@pytest.fixture(scope="session")
def circle_256():
    return make_curve("circle", 256)


@pytest.fixture(scope="session")
def hyperbola_256():
    return make_curve("hyperbola", 256)


@pytest.fixture(scope="session")
def rigid_traj_short():
    """Rigid rotation of the circle, t in [0, 0.1]."""
    return run_flow("circle", "rigid_rotation", 256, 1e-3, 100)


@pytest.fixture(scope="session")
def shrink_traj():
    """Unit normal speed on the circle, t in [0, 0.1]."""
    return run_flow("circle", "normal_shrink", 256, 1e-3, 100)


@pytest.fixture(scope="session")
def sine_traj_short():
    """Synthesized inextensible sine flow on the circle, t in [0, 0.1]."""
    return run_flow("circle", "inextensible_sine", 256, 1e-3, 100)


@pytest.fixture(scope="session")
def helix_traj():
    """Inextensible twist of the timelike helix (short window)."""
    return run_flow("timelike_helix", "helix_twist", 128, 5e-4, 8)


@pytest.fixture(scope="session")
def zero_traj():
    return run_flow("circle", "zero", 128, 1e-3, 10)
