"""Shared helpers for driving protocol phases in tests."""

import pytest

from mbasim.adversaries import make_adversary
from mbasim.core import PayloadKind
from mbasim.crypto import KeyRegistry, common_string
from mbasim.mba import adversary_rng
from mbasim.mgc import MgcState
from mbasim.netsim import Adversary, NetworkConfig, SyncNetwork


def run_mgc_phase(config: NetworkConfig, initial_vectors, adversary=None):
    """Drive only the graded-consensus steps; returns per-honest-node outputs."""
    n, t, m = config.n, config.t, config.m
    honest = list(range(n - t))
    registry = KeyRegistry.from_seed(config.seed, n)
    common = common_string(config.seed)
    if adversary is None:
        adversary = Adversary()
    adversary.setup(config, registry, common, initial_vectors, adversary_rng(config.seed))
    net = SyncNetwork(config, adversary)
    states = {i: MgcState(i, n, m, tuple(initial_vectors[i])) for i in honest}
    out1 = {i: st.step1_outgoing() for i, st in states.items()}
    d1 = net.run_step(out1[honest[0]].step_id, out1, PayloadKind.VALUES, states)
    t1 = net.tallies(d1, PayloadKind.VALUES)
    out2 = {i: st.step2_compute(t1[i]) for i, st in states.items()}
    d2 = net.run_step(out2[honest[0]].step_id, out2, PayloadKind.VALUES, states)
    t2 = net.tallies(d2, PayloadKind.VALUES)
    return {i: st.output_determination(t2[i]) for i, st in states.items()}


def build_adversary(name: str, params=()):
    return make_adversary(name, params)


@pytest.fixture(scope="session")
def monitor_ledger():
    """Violation counts accumulated by the acceptance campaigns."""
    return {"violations": 0, "trials": 0, "sources": []}
