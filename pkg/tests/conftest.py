import pytest

from waterplan.engine import Masterplan
from waterplan.instance import demo_instance, parse_instance


@pytest.fixture(scope="session")
def demo():
    """The bundled 12-municipality, 4-source demo world (parsed)."""
    return parse_instance(demo_instance())


@pytest.fixture(scope="session")
def empty_plan(demo):
    return Masterplan(
        name="empty",
        utilities=tuple(demo.utilities),
        horizon_years=30,
        interventions=(),
    )


@pytest.fixture(scope="session")
def small_instance():
    """A 3-municipality, 1-source world for fast engine tests."""
    from waterplan.instance import generate_instance

    return parse_instance(generate_instance(n_munis=3, n_sources=1, seed=5))
