"""Shared builders for driving rounds over hand-constructed topologies."""

import random

from privagg import (
    KeyBank,
    KeyBankConfig,
    KeyDirectory,
    Network,
    RoundRunner,
    SourceNode,
    Topology,
)


def path_topology(n, server_links=(1,)):
    edges = tuple((i, i + 1) for i in range(1, n))
    return Topology(n, edges, frozenset(server_links))


def complete_topology(n, server_links=(1,)):
    edges = tuple((a, b) for a in range(1, n + 1) for b in range(a + 1, n + 1))
    return Topology(n, edges, frozenset(server_links))


def build_round(
    topology,
    values,
    modulus,
    mode="direct",
    seed=0,
    total_keys=20,
    source_source_keys=8,
    **runner_kwargs,
):
    """Wire up directory, network, and a ready-to-run RoundRunner."""
    config = KeyBankConfig(total_keys, source_source_keys)
    bank = KeyBank.generate(config, random.Random(f"{seed}:bank"))
    directory = KeyDirectory(config, bank)
    provision_rng = random.Random(f"{seed}:provision")
    for sid in topology.sources():
        directory.provision_source(sid, provision_rng)
    network = Network(topology, directory)
    nodes = {
        sid: SourceNode(
            node_id=sid,
            value=values[sid - 1],
            neighbors=topology.neighbors(sid),
        )
        for sid in topology.sources()
    }
    runner = RoundRunner(
        network=network,
        directory=directory,
        nodes=nodes,
        modulus=modulus,
        mode=mode,
        rng=random.Random(f"{seed}:round"),
        keying_rng=random.Random(f"{seed}:keying"),
        **runner_kwargs,
    )
    return runner, network
