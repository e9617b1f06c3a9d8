import pytest

from aoclab.model import Geometry, GeometryKind, GridSpec, PhysicsConfig, PotentialSpec, SquareBarrier


def make_config(
    v=1.0,
    R=0.5,
    h=0.05,
    E=(2.0,),
    Ls=(50.0, 100.0, 200.0),
    radial=False,
    **kw,
):
    geo = Geometry(GeometryKind.RADIAL_3D if radial else GeometryKind.INTERVAL_1D)
    return PhysicsConfig(
        geometry=geo,
        potentials=PotentialSpec(SquareBarrier(v, R)),
        grid=GridSpec(h),
        fermi_energies=tuple(E),
        L_schedule=tuple(Ls),
        **kw,
    )


@pytest.fixture
def cfg1d():
    return make_config()


@pytest.fixture
def cfg3d():
    return make_config(E=(1.0,), Ls=(20.0, 30.0, 40.0), radial=True)


# acceptance lines, echoed in the terminal summary so they survive output capture
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
