import pytest

from swarmchain.crypto import provision_swarm
from swarmchain.sim import AdversaryProfile, SimConfig, run_simulation


@pytest.fixture(scope="session")
def swarm5():
    """Five provisioned identities plus the central verify key."""
    central_vk, identities = provision_swarm(5, seed=99)
    return central_vk, identities


@pytest.fixture(scope="session")
def honest_trace_25():
    """One all-honest reference run at the n=25, p=0.33 operating point."""
    return run_simulation(SimConfig(n=25, p=0.33, intervals=3, delta=3, seed=1234))


@pytest.fixture(scope="session")
def refuse_record_trace_25():
    """Reference operating point with a third of the swarm refusing to record."""
    adv = AdversaryProfile(behavior="refuse_record", robots=frozenset(range(1, 9)))
    return run_simulation(
        SimConfig(n=25, p=0.33, intervals=3, delta=3, alpha=1 / 3, seed=4321, adversaries=(adv,))
    )


@pytest.fixture(scope="session")
def colluder_trace_25():
    """A pair fabricating co-meetings every interval."""
    adv = AdversaryProfile(behavior="collude", robots=frozenset({3, 7}))
    return run_simulation(
        SimConfig(n=25, p=0.33, intervals=3, delta=3, alpha=0.1, seed=777, adversaries=(adv,))
    )
