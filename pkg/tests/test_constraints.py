"""Constraint generators against independent graph and rule oracles."""

import hashlib
import itertools
import math

import networkx as nx
import pytest

from nesykit import formula as fm
from nesykit.circuit import check_structure, model_count
from nesykit.compiler import compile as compile_formula
from nesykit.constraints import (
    BODY_LEFT,
    BODY_RIGHT,
    EMPTY,
    PIPES,
    TOP_LEFT,
    TOP_RIGHT,
    GridSpec,
    TileRule,
    conditional,
    exactly_one,
    simple_path,
    simple_path_full,
    tile_grid,
    total_order,
)


def nx_graph(g: GridSpec) -> nx.Graph:
    G = nx.Graph()
    G.add_nodes_from(range(g.n_nodes))
    G.add_edges_from(g.edges())
    return G


def nx_path_edge_sets(g: GridSpec, s: int, t: int) -> set[frozenset]:
    """Simple s-t paths as frozensets of edge ids, via networkx."""
    eid = {}
    for i, (u, v) in enumerate(g.edges()):
        eid[(u, v)] = i
        eid[(v, u)] = i
    out = set()
    for nodes in nx.all_simple_paths(nx_graph(g), s, t):
        out.add(frozenset(eid[(a, b)] for a, b in zip(nodes, nodes[1:])))
    return out


class TestExactlyOne:
    def test_models_are_one_hot(self):
        got = set(fm.enumerate_models(exactly_one(3)))
        assert got == {(1, 0, 0), (0, 1, 0), (0, 0, 1)}

    def test_single_variable(self):
        assert set(fm.enumerate_models(exactly_one(1))) == {(1,)}

    def test_compiled_count_is_n(self):
        for n in range(1, 7):
            c, _ = compile_formula(exactly_one(n))
            assert model_count(c) == n

    def test_rejects_zero(self):
        with pytest.raises(ValueError):
            exactly_one(0)


class TestTotalOrder:
    def test_two_items(self):
        # variables row-major: X00 X01 X10 X11
        got = set(fm.enumerate_models(total_order(2)))
        assert got == {(1, 0, 0, 1), (0, 1, 1, 0)}

    def test_counts_are_factorials(self):
        for n in range(1, 5):
            c, _ = compile_formula(total_order(n))
            assert model_count(c) == math.factorial(n)

    def test_models_are_permutation_matrices(self):
        n = 3
        for a in fm.enumerate_models(total_order(n)):
            rows = [sum(a[i * n + j] for j in range(n)) for i in range(n)]
            cols = [sum(a[i * n + j] for i in range(n)) for j in range(n)]
            assert rows == [1] * n and cols == [1] * n

    def test_rejects_zero(self):
        with pytest.raises(ValueError):
            total_order(0)


class TestGridSpec:
    def test_two_by_two_edges(self):
        g = GridSpec(2, 2)
        assert g.edges() == [(0, 1), (0, 2), (1, 3), (2, 3)]
        assert g.n_edges == 4

    def test_edge_order_right_then_down(self):
        g = GridSpec(2, 3)
        assert g.edges() == [
            (0, 1), (0, 3), (1, 2), (1, 4), (2, 5), (3, 4), (4, 5),
        ]
        assert g.n_edges == 2 * 2 + 3 * 1

    def test_edge_count_formula(self):
        for rows, cols in [(1, 1), (1, 4), (3, 3), (4, 2)]:
            g = GridSpec(rows, cols)
            assert len(g.edges()) == g.n_edges

    def test_node_ids_row_major(self):
        g = GridSpec(3, 4)
        assert g.node(0, 0) == 0
        assert g.node(1, 0) == 4
        assert g.node(2, 3) == 11

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            GridSpec(0, 3)


class TestSimplePath:
    def test_two_by_two_opposite_corners(self):
        g = GridSpec(2, 2)
        f = simple_path(g, 0, 3)
        models = {frozenset(i for i, b in enumerate(a) if b)
                  for a in fm.enumerate_models(f)}
        assert models == nx_path_edge_sets(g, 0, 3)
        assert len(models) == 2

    def test_two_by_two_adjacent_corners(self):
        # the direct edge plus the three-edge detour around the square
        g = GridSpec(2, 2)
        f = simple_path(g, 0, 1)
        models = {frozenset(i for i, b in enumerate(a) if b)
                  for a in fm.enumerate_models(f)}
        assert models == nx_path_edge_sets(g, 0, 1)
        assert len(models) == 2

    def test_matches_graph_oracle_on_larger_grids(self):
        for rows, cols, s, t in [(2, 3, 0, 5), (2, 3, 1, 3), (3, 3, 0, 8)]:
            g = GridSpec(rows, cols)
            f = simple_path(g, s, t)
            models = {frozenset(i for i, b in enumerate(a) if b)
                      for a in fm.enumerate_models(f)}
            assert models == nx_path_edge_sets(g, s, t)

    def test_compiled_counts_match_oracle(self):
        g = GridSpec(2, 3)
        for s in range(g.n_nodes):
            for t in range(s + 1, g.n_nodes):
                c, _ = compile_formula(simple_path(g, s, t))
                assert model_count(c) == len(nx_path_edge_sets(g, s, t))

    def test_rejects_equal_endpoints(self):
        with pytest.raises(ValueError):
            simple_path(GridSpec(2, 2), 1, 1)

    def test_rejects_out_of_range_node(self):
        with pytest.raises(ValueError):
            simple_path(GridSpec(2, 2), 0, 4)

    def test_cap_fails_loudly(self):
        with pytest.raises(ValueError, match="cap"):
            simple_path(GridSpec(3, 3), 0, 8, cap=3)


class TestSimplePathFull:
    def test_two_by_two_total_count(self):
        g = GridSpec(2, 2)
        c, _ = compile_formula(simple_path_full(g))
        expected = sum(
            len(nx_path_edge_sets(g, s, t))
            for s in range(g.n_nodes)
            for t in range(s + 1, g.n_nodes)
        )
        assert model_count(c) == expected == 12

    def test_models_pair_endpoints_with_paths(self):
        g = GridSpec(2, 2)
        nv = g.n_nodes
        for a in fm.enumerate_models(simple_path_full(g)):
            ends = [u for u in range(nv) if a[u]]
            assert len(ends) == 2
            s, t = ends
            edges = frozenset(e for e in range(g.n_edges) if a[nv + e])
            assert edges in nx_path_edge_sets(g, s, t)

    def test_variable_budget(self):
        g = GridSpec(2, 3)
        assert simple_path_full(g).var_count == g.n_nodes + g.n_edges


def pipes_valid(tiles: tuple[int, ...], rows: int, cols: int) -> bool:
    """Direct restatement of the pipe shape rules, no shared code."""
    def at(r, c):
        return tiles[r * cols + c]

    for r in range(rows):
        for c in range(cols):
            t = at(r, c)
            if t == TOP_LEFT:
                if c + 1 < cols and at(r, c + 1) != TOP_RIGHT:
                    return False
                if r + 1 < rows and at(r + 1, c) != BODY_LEFT:
                    return False
            if t == BODY_LEFT:
                if c + 1 < cols and at(r, c + 1) != BODY_RIGHT:
                    return False
                if r > 0 and at(r - 1, c) not in (TOP_LEFT, BODY_LEFT):
                    return False
    return True


def tilings_to_models(rows: int, cols: int, vocab: int):
    """All one-hot encodings of all tilings, tagged by rule validity."""
    for tiles in itertools.product(range(vocab), repeat=rows * cols):
        bits = [0] * (rows * cols * vocab)
        for cell, t in enumerate(tiles):
            bits[cell * vocab + t] = 1
        yield tiles, tuple(bits)


class TestTileGrid:
    def test_two_by_two_matches_brute_filter(self):
        f = tile_grid(2, 2, 5, PIPES)
        got = set(fm.enumerate_models(f))
        want = {
            bits
            for tiles, bits in tilings_to_models(2, 2, 5)
            if pipes_valid(tiles, 2, 2)
        }
        assert got == want

    def test_compiled_count_matches_brute_filter_2x3(self):
        c, _ = compile_formula(tile_grid(2, 3, 5, PIPES))
        want = sum(
            1
            for tiles in itertools.product(range(5), repeat=6)
            if pipes_valid(tiles, 2, 3)
        )
        assert model_count(c) == want

    def test_empty_grid_is_valid(self):
        f = tile_grid(2, 2, 5, PIPES)
        bits = [0] * 20
        for cell in range(4):
            bits[cell * 5 + EMPTY] = 1
        assert fm.eval_formula(f, bits)

    def test_full_pipe_column_is_valid(self):
        f = tile_grid(2, 2, 5, PIPES)
        layout = [TOP_LEFT, TOP_RIGHT, BODY_LEFT, BODY_RIGHT]
        bits = [0] * 20
        for cell, t in enumerate(layout):
            bits[cell * 5 + t] = 1
        assert fm.eval_formula(f, bits)

    def test_lone_cap_corner_is_invalid(self):
        # a top-left cap with room below must continue downward
        f = tile_grid(2, 2, 5, PIPES)
        layout = [TOP_LEFT, TOP_RIGHT, EMPTY, EMPTY]
        bits = [0] * 20
        for cell, t in enumerate(layout):
            bits[cell * 5 + t] = 1
        assert not fm.eval_formula(f, bits)

    def test_rejects_vocab_mismatch(self):
        with pytest.raises(ValueError, match="vocab"):
            tile_grid(2, 2, 6, PIPES)

    def test_rejects_grid_smaller_than_window(self):
        with pytest.raises(ValueError, match="window"):
            tile_grid(1, 4, 5, PIPES)

    def test_rule_validation(self):
        with pytest.raises(ValueError, match="outside window"):
            TileRule(2, 2, 3, ((((2, 0, 1)), ((0, 0, 1),)),))
        with pytest.raises(ValueError, match="vocabulary"):
            TileRule(2, 2, 3, ((((0, 0, 3)), ((0, 0, 1),)),))


class TestConditional:
    def test_every_content_assignment_extends_uniquely(self):
        # code bits are functions of the content bits, so 2^n models
        parts = [exactly_one(3), fm.var(0, 3)]
        f = conditional(parts)
        assert f.var_count == 5
        c, _ = compile_formula(f)
        assert model_count(c) == 2 ** 3

    def test_code_bits_track_part_truth(self):
        parts = [exactly_one(3), fm.var(0, 3)]
        f = conditional(parts)
        for a in fm.enumerate_models(f):
            content, code = a[:3], a[3:]
            for i, p in enumerate(parts):
                assert code[i] == int(fm.eval_formula(p, content))

    def test_conditioning_recovers_part_and_complement(self):
        parts = [exactly_one(3)]
        f = conditional(parts)
        ms = fm.enumerate_models(f)
        on = {a[:3] for a in ms if a[3]}
        off = {a[:3] for a in ms if not a[3]}
        part_models = set(fm.enumerate_models(parts[0]))
        assert on == part_models
        universe = set(itertools.product((0, 1), repeat=3))
        assert off == universe - part_models

    def test_rejects_empty_list(self):
        with pytest.raises(ValueError):
            conditional([])


class TestLayoutStability:
    """Emitted formula text is part of the interface; freeze it."""

    def golden(self, f: fm.Formula) -> str:
        return hashlib.sha256(fm.format_formula(f).encode()).hexdigest()[:16]

    def test_exactly_one_text(self):
        assert fm.format_formula(exactly_one(3)) == (
            "(and (or (var 0) (var 1) (var 2))"
            " (not (and (var 0) (var 1)))"
            " (not (and (var 0) (var 2)))"
            " (not (and (var 1) (var 2))))"
        )

    def test_golden_hashes(self):
        g = GridSpec(2, 2)
        assert self.golden(total_order(3)) == "dfcbcf6e896e2faf"
        assert self.golden(simple_path(g, 0, 3)) == "b939d9578d8fe8b4"
        assert self.golden(simple_path_full(g)) == "16d6658cf107c8d0"
        assert self.golden(tile_grid(2, 2, 5, PIPES)) == "9303be81c22fbdda"
        cond = conditional([exactly_one(3), fm.var(0, 3)])
        assert self.golden(cond) == "9a2921eafa0e93f2"


class TestCompiledGenerators:
    """Every generator yields circuits with the three structural properties."""

    def samples(self):
        g = GridSpec(2, 2)
        return [
            exactly_one(5),
            total_order(3),
            simple_path(g, 0, 3),
            simple_path_full(g),
            tile_grid(2, 2, 5, PIPES),
            conditional([exactly_one(3), fm.var(1, 3)]),
        ]

    def test_structure(self):
        for f in self.samples():
            c, _ = compile_formula(f)
            rep = check_structure(c)
            assert rep.decomposable and rep.smooth
            assert rep.deterministic in (True, None)

    def test_model_sets_survive_compilation(self):
        from nesykit.circuit import circuit_models

        for f in self.samples():
            if f.var_count > 16:
                continue
            c, _ = compile_formula(f)
            assert set(circuit_models(c)) == set(fm.enumerate_models(f))
