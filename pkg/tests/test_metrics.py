import io
import random
import time

import pytest

from aigsls import INPUT, Literal, build_circuit, build_profile, generate_random_sat_aig
from aigsls.metrics import (
    compute_depths,
    compute_fanout_tfo_tfi,
    compute_flow,
    compute_levels,
    compute_scoap_cc,
    compute_scoap_co,
)
from oracles import (
    random_dag,
    ref_cc,
    ref_co,
    ref_depth,
    ref_flow,
    ref_levels,
    ref_tfi_sizes,
    ref_tfo_sizes,
)


def lit(g, neg=False):
    return Literal(g, neg)


def chain():
    # in(0) -> a(1) -> out(2), unary references
    return build_circuit([INPUT, [lit(0)], [lit(1)]])


class TestDepth:
    def test_output_gate_is_zero(self):
        c = build_circuit([INPUT, INPUT, [lit(0), lit(1)]])
        assert compute_depths(c)[2] == 0

    def test_chain(self):
        depth = compute_depths(chain())
        assert depth == [2, 1, 0]

    def test_matches_longest_path_oracle(self):
        rng = random.Random(1)
        for _ in range(15):
            c = random_dag(rng, 100)
            assert compute_depths(c) == ref_depth(c)

    def test_duality_along_edges(self):
        rng = random.Random(2)
        c = random_dag(rng, 120)
        depth = compute_depths(c)
        for g in range(c.num_gates):
            parents = c.fanout[g]
            if parents:
                assert all(depth[g] >= depth[p] + 1 for p in parents)
                assert any(depth[g] == depth[p] + 1 for p in parents)


class TestLevels:
    def test_input_gate_all_zero(self):
        c = build_circuit([INPUT, INPUT, [lit(0), lit(1)]])
        level, llevel, alevel = compute_levels(c)
        assert (level[0], llevel[0], alevel[0]) == (0, 0, 0.0)

    def test_max_min_recursion(self):
        # b sits at level 2; g = And(a, b) with a an input
        c = build_circuit([INPUT, INPUT, [lit(1)], [lit(2)], [lit(0), lit(3)]])
        level, llevel, _ = compute_levels(c)
        assert level[3] == 2
        assert level[4] == 3
        assert llevel[4] == 1

    @pytest.mark.parametrize("mode", ["self", "level-sum"])
    def test_sandwich_property(self, mode):
        rng = random.Random(3)
        for _ in range(15):
            c = random_dag(rng, 100)
            level, llevel, alevel = compute_levels(c, mode)
            for g in range(c.num_gates):
                assert llevel[g] <= alevel[g] + 1e-12
                assert alevel[g] <= level[g] + 1e-12

    @pytest.mark.parametrize("mode", ["self", "level-sum"])
    def test_matches_recursive_oracle(self, mode):
        rng = random.Random(4)
        for _ in range(10):
            c = random_dag(rng, 80)
            assert compute_levels(c, mode) == ref_levels(c, mode)

    def test_unknown_mode_rejected(self):
        with pytest.raises(ValueError):
            compute_levels(chain(), "bogus")


class TestClosures:
    def test_output_has_empty_tfo(self):
        c = build_circuit([INPUT, INPUT, [lit(0), lit(1)]])
        _, tfo, _ = compute_fanout_tfo_tfi(c)
        assert tfo[2] == 0

    def test_input_feeding_everything(self):
        defs = [INPUT]
        for g in range(1, 10):
            defs.append([lit(g - 1), lit(0)] if g > 1 else [lit(0)])
        c = build_circuit(defs)
        _, tfo, _ = compute_fanout_tfo_tfi(c)
        assert tfo[0] == 9

    def test_bulk_and_lazy_match_dfs_oracle(self):
        rng = random.Random(5)
        for _ in range(10):
            c = random_dag(rng, 90)
            fo, tfo, tfi = compute_fanout_tfo_tfi(c)
            assert tfo == ref_tfo_sizes(c)
            assert tfi == ref_tfi_sizes(c)
            assert fo == [len(c.fanout[g]) for g in range(c.num_gates)]
            profile = build_profile(c)
            assert [profile.tfo_size(g) for g in range(c.num_gates)] == tfo
            assert [profile.tfi_size(g) for g in range(c.num_gates)] == tfi

    def test_closure_bounds(self):
        rng = random.Random(6)
        c = random_dag(rng, 70)
        profile = build_profile(c).materialize_closures()
        for g in range(c.num_gates):
            kids = c.fanin_gates[g] or ()
            assert profile.tfi_size(g) >= len(kids)
            assert profile.tfo_size(g) >= profile.fanout_size[g]


class TestScoap:
    def test_input_controllability(self):
        c = build_circuit([INPUT, INPUT, [lit(0), lit(1)]])
        cc0, cc1 = compute_scoap_cc(c)
        assert (cc0[0], cc1[0]) == (1, 1)

    def test_plain_and(self):
        c = build_circuit([INPUT, INPUT, [lit(0), lit(1)]])
        cc0, cc1 = compute_scoap_cc(c)
        assert cc0[2] == 2
        assert cc1[2] == 3

    def test_complemented_child_swaps_costs(self):
        c = build_circuit([INPUT, INPUT, [lit(0, True), lit(1)]])
        cc0, cc1 = compute_scoap_cc(c)
        assert cc1[2] == 3
        assert cc0[2] == 2

    def test_swap_visible_past_the_inputs(self):
        # d = And(a, b) has cc = (2, 3); g = And(-d, c) must read d's pair swapped
        c = build_circuit([INPUT, INPUT, INPUT,
                           [lit(0), lit(1)],
                           [lit(3, True), lit(2)]])
        cc0, cc1 = compute_scoap_cc(c)
        assert cc0[4] == 1 + min(cc1[3], cc0[2])  # = 1 + min(3, 1) = 2
        assert cc1[4] == 1 + cc0[3] + cc1[2]      # = 1 + 2 + 1 = 4

    def test_output_observability_zero(self):
        c = build_circuit([INPUT, INPUT, [lit(0), lit(1)]])
        cc0, cc1 = compute_scoap_cc(c)
        assert compute_scoap_co(c, cc0, cc1)[2] == 0

    def test_single_parent_observability(self):
        c = build_circuit([INPUT, INPUT, [lit(0), lit(1)]])
        cc0, cc1 = compute_scoap_cc(c)
        co = compute_scoap_co(c, cc0, cc1)
        assert co[0] == 1 + 0 + cc1[1]  # = 2

    def test_matches_recursive_oracles(self):
        rng = random.Random(7)
        for _ in range(10):
            c = random_dag(rng, 80)
            assert compute_scoap_cc(c) == tuple(ref_cc(c)) or \
                list(compute_scoap_cc(c)) == list(ref_cc(c))
            cc0, cc1 = compute_scoap_cc(c)
            assert compute_scoap_co(c, cc0, cc1) == ref_co(c)


class TestFlow:
    def test_single_and_splits_evenly(self):
        c = build_circuit([INPUT, INPUT, [lit(0), lit(1)]])
        assert compute_flow(c) == [0.5, 0.5, 1.0]

    def test_unary_chain_conserves_the_unit(self):
        assert compute_flow(chain()) == [1.0, 1.0, 1.0]

    def test_conservation_law(self):
        rng = random.Random(8)
        for _ in range(15):
            c = random_dag(rng, 100)
            flow = compute_flow(c)
            assert abs(sum(flow[g] for g in c.inputs) - len(c.outputs)) < 1e-9

    @pytest.mark.parametrize("mode", ["conserving", "fanout-split"])
    def test_matches_recursive_oracle(self, mode):
        rng = random.Random(9)
        for _ in range(10):
            c = random_dag(rng, 80)
            got = compute_flow(c, mode)
            want = ref_flow(c, mode)
            assert all(abs(a - b) < 1e-9 for a, b in zip(got, want))


class TestProfile:
    def test_nonnegativity_and_bounds(self):
        rng = random.Random(10)
        c = random_dag(rng, 150)
        p = build_profile(c).materialize_closures()
        for g in range(c.num_gates):
            assert p.depth[g] >= 0 and p.level[g] >= 0
            assert p.cc0[g] >= 1 and p.cc1[g] >= 1
            assert p.co[g] >= 0
            assert p.flow[g] >= 0.0

    def test_zero_markers_characterize_io(self):
        rng = random.Random(11)
        c = random_dag(rng, 100)
        p = build_profile(c)
        for g in range(c.num_gates):
            assert (p.depth[g] == 0) == (g in set(c.outputs))
            is_input = c.is_input(g)
            assert (p.level[g] == 0) == is_input
            assert (p.llevel[g] == 0) == is_input
            assert (p.alevel[g] == 0.0) == is_input

    def test_reproducible_bit_for_bit(self):
        cc = generate_random_sat_aig(6, 30, random.Random(12))
        buf_a, buf_b = io.StringIO(), io.StringIO()
        build_profile(cc.circuit).write_csv(buf_a)
        build_profile(cc.circuit).write_csv(buf_b)
        assert buf_a.getvalue() == buf_b.getvalue()

    def test_csv_shape(self):
        c = build_circuit([INPUT, INPUT, [lit(0), lit(1)]])
        buf = io.StringIO()
        build_profile(c).write_csv(buf)
        lines = buf.getvalue().strip().splitlines()
        assert lines[0] == "gate,depth,level,llevel,alevel,fo,tfo,tfi,cc0,cc1,co,flow"
        assert len(lines) == 1 + c.num_gates

    def test_large_circuit_builds_within_budget(self):
        cc = generate_random_sat_aig(200, 100_000, random.Random(13))
        start = time.process_time()
        build_profile(cc.circuit)
        assert time.process_time() - start < 10.0
