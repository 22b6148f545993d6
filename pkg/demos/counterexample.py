"""Two-mode, three-dimensional counterexample.

The printed max-of-quadratics pieces satisfy only a non-path-complete set of
inequalities, and none of the sixteen two-node co-complete graphs admits
quadratic pieces at all.
"""
from pathcomplete import fixtures
from pathcomplete.certify import solve_lmi, valid_inequality_graph
from pathcomplete.observer import path_completeness
from pathcomplete.ordering import enumerate_cocomplete_2node, reduce_to_representatives

sys = fixtures.load_system("counterexample_system")
pieces = fixtures.load_pieces("counterexample_pieces")

g = valid_inequality_graph(pieces, sys)
print("valid inequalities:", sorted((e.src, e.dst, e.label[0]) for e in g.edges))
pc = path_completeness(g)
print("path-complete:", pc.path_complete, "missing word:", pc.witness)

graphs = enumerate_cocomplete_2node()
print(f"\n{len(graphs)} co-complete two-node graphs:")
for i, h in enumerate(graphs):
    edges = " ".join(f"{e.src}{e.dst}{e.label[0]}" for e in h.sorted_edges)
    print(f"  #{i:2d} {edges:20s} {solve_lmi(h, sys).status}")

reps = {f"G{i}": fixtures.load_graph(f"cocomplete_rep_g{i}") for i in (1, 2, 3)}
reps["G4"] = fixtures.load_graph("gstar_2")
print("\nreductions:")
for i, r in enumerate(reduce_to_representatives(graphs, reps, "G4")):
    print(f"  #{i:2d} -> {r.representative} ({r.reason})")
