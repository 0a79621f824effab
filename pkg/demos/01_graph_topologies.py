"""Tour of the five synapse-graph generators.

Each network is a directed graph over computational neurons; this script
prints the edge lists, degree profiles, and whether each digraph contains a
cycle (chains are the only acyclic family here).
"""

from cyclicff.graph import GeneratorSpec, generate, has_cycle, predecessors, to_edge_list

for spec in [
    GeneratorSpec("chain", 4),
    GeneratorSpec("cycle", 4),
    GeneratorSpec("complete", 4),
    GeneratorSpec("ws", 8, ws_k=4, ws_p=0.3, seed=1),
    GeneratorSpec("ba", 8, ba_m=2, seed=1),
]:
    topo = generate(spec)
    print(f"=== {spec.kind} (n={spec.n}) ===")
    print(to_edge_list(topo), end="")
    degs = [len(predecessors(topo, j)) for j in range(topo.n_neurons)]
    print(f"in-degrees: {degs}")
    print(f"cyclic: {has_cycle(topo)}")
    print()
