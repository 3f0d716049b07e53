"""Tour of the constraint generators: sizes, model counts, variable layouts."""

import nesykit as nk
from nesykit import compiler


def show(name, f, note):
    circuit, stats = compiler.compile(f)
    print(f"{name:24s} vars={f.var_count:3d} nodes={stats.nodes:5d} "
          f"models={nk.model_count(circuit):6d}  {note}")


def main():
    print("generator                 size and layout")
    print("-" * 78)

    show("exactly_one(4)", nk.exactly_one(4), "candidate i is variable i")
    show("total_order(3)", nk.total_order(3),
         "item i at position j is variable i*n + j; 3! = 6 rankings")

    g = nk.GridSpec(3, 3)
    print(f"\n3x3 grid: nodes 0..8 row-major, {g.n_edges} edges "
          "(right then down per node)")
    show("simple_path(g, 0, 8)", nk.simple_path(g, 0, 8),
         "edge e is variable e; corner-to-corner paths")
    show("simple_path_full(g)", nk.simple_path_full(g),
         "9 endpoint indicators then 12 edge variables")

    show("tile_grid(3, 3, PIPES)", nk.tile_grid(3, 3, 5, nk.PIPES),
         "cell (r,c) tile t is variable (r*3+c)*5+t")

    parts = [nk.parse_formula("(var 0)"),
             nk.parse_formula("(or (var 0) (var 1))")]
    show("conditional(2 parts)", nk.conditional(parts),
         "code bit i mirrors the truth of part i")

    # the conditional circuit switches: fixing a code bit recovers the part
    f = nk.conditional(parts)
    models = nk.enumerate_models(f)
    on = sorted(m[:2] for m in models if m[2] == 1)
    print(f"\nconditional content rows with code bit 0 set: {on}")
    print("(exactly the models of (var 0), padded to two variables)")


if __name__ == "__main__":
    main()
