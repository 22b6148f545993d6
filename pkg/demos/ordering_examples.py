"""Simulation, bijection and sum-reduction criteria on the bundled graphs."""
from pathcomplete import fixtures
from pathcomplete.ordering import compare, find_bijection, sum_reduction

g1, g2 = fixtures.load_graph("simulation_g1"), fixtures.load_graph("simulation_g2")
print("G1 vs G2:", compare(g1, g2))
print("G2 vs G1:", compare(g2, g1))

b1 = fixtures.load_graph("bijection_g1")
for P, Q, s in [("ab", "ab", 1), ("ab", "ac", 1), ("ac", "ac", 2), ("ac", "ab", 2)]:
    w = find_bijection(b1, P, Q, s)
    print(f"bijection {P}->{Q} under mode {s}:", w.pairs if w else None)

g9 = fixtures.load_graph("sum_reduction_4node")
red = sum_reduction(g9)
print("sum reduction holds:", bool(red), {s: w.pairs for s, w in red.witnesses.items()})
