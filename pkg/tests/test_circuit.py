import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from aigsls import (
    INPUT,
    Assignment,
    CircuitError,
    ConstrainedCircuit,
    ConstraintNotOnOutput,
    CycleDetected,
    DanglingReference,
    InputGateHasNoJustification,
    Literal,
    build_circuit,
    enumerate_minimal_justifications,
    evaluate,
    is_justified,
    random_complete_extension,
    verify_satisfying,
)
from oracles import (
    brute_force_justifications,
    brute_force_sat,
    random_constrained,
    random_dag,
    ref_evaluate,
    ref_topo_check,
    ref_unjust,
)


def lit(g, neg=False):
    return Literal(g, neg)


def two_input_and():
    return build_circuit([INPUT, INPUT, [lit(0), lit(1)]])


class TestBuildCircuit:
    def test_two_input_and(self):
        c = two_input_and()
        assert c.fanout[0] == (2,)
        assert c.fanout[1] == (2,)
        assert c.topo_order[-1] == 2
        assert c.inputs == (0, 1)
        assert c.outputs == (2,)

    def test_self_loop_rejected(self):
        with pytest.raises(CycleDetected):
            build_circuit([[lit(0)]])

    def test_two_gate_cycle_rejected(self):
        with pytest.raises(CycleDetected):
            build_circuit([[lit(1)], [lit(0)]])

    def test_dangling_reference(self):
        with pytest.raises(DanglingReference):
            build_circuit([INPUT, [lit(0), lit(5)]])

    def test_empty_and_rejected(self):
        with pytest.raises(CircuitError):
            build_circuit([INPUT, []])

    def test_forward_references_allowed_when_acyclic(self):
        c = build_circuit([[lit(1)], INPUT])
        assert c.topo_order == (1, 0)

    def test_random_dags_topologically_ordered(self):
        rng = random.Random(11)
        for _ in range(20):
            c = random_dag(rng, 100)
            assert ref_topo_check(c)

    def test_fanout_is_transpose_of_fanin(self):
        rng = random.Random(12)
        for _ in range(20):
            c = random_dag(rng, 80)
            for g in range(c.num_gates):
                for p in c.fanout[g]:
                    assert any(l.gate == g for l in c.fanin[p])
                kids = c.fanin[g]
                if kids is not None:
                    for l in kids:
                        assert g in c.fanout[l.gate]


class TestEvaluate:
    def test_plain_and(self):
        c = two_input_and()
        assert evaluate(c, {0: 1, 1: 1}).values[2] == 1
        assert evaluate(c, {0: 1, 1: 0}).values[2] == 0

    def test_complemented_edge(self):
        c = build_circuit([INPUT, INPUT, [lit(0), lit(1, True)]])
        assert evaluate(c, {0: 1, 1: 1}).values[2] == 0
        assert evaluate(c, {0: 1, 1: 0}).values[2] == 1

    def test_random_circuits_fully_justified(self):
        rng = random.Random(21)
        for _ in range(10):
            c = random_dag(rng, 50)
            inputs = {g: rng.getrandbits(1) for g in c.inputs}
            asg = evaluate(c, inputs)
            assert asg.unjust == frozenset()
            assert all(is_justified(c, asg, g) for g in range(c.num_gates))

    def test_matches_recursive_reference(self):
        rng = random.Random(22)
        for _ in range(10):
            c = random_dag(rng, 60)
            inputs = {g: rng.getrandbits(1) for g in c.inputs}
            assert list(evaluate(c, inputs).values) == ref_evaluate(c, inputs)

    def test_idempotent(self):
        rng = random.Random(23)
        c = random_dag(rng, 40)
        inputs = {g: rng.getrandbits(1) for g in c.inputs}
        asg = evaluate(c, inputs)
        again = evaluate(c, {g: asg.values[g] for g in c.inputs})
        assert again.values == asg.values


class TestIsJustified:
    def test_input_gate_always_justified(self):
        c = two_input_and()
        for v0 in (0, 1):
            asg = Assignment(c, bytearray([v0, 1, 0]))
            assert is_justified(c, asg, 0)

    def test_and_zero_with_zero_child(self):
        c = two_input_and()
        asg = Assignment(c, bytearray([0, 1, 0]))
        assert is_justified(c, asg, 2)

    def test_and_zero_with_both_children_one(self):
        c = two_input_and()
        asg = Assignment(c, bytearray([1, 1, 0]))
        assert not is_justified(c, asg, 2)


class TestJustifications:
    def test_and_forced_to_zero(self):
        c = two_input_and()
        js = enumerate_minimal_justifications(c, 2, 0)
        assert [j.gate_values() for j in js] == [((0, 0),), ((1, 0),)]

    def test_and_forced_to_one(self):
        c = two_input_and()
        js = enumerate_minimal_justifications(c, 2, 1)
        assert [j.gate_values() for j in js] == [((0, 1), (1, 1))]

    def test_three_children_with_complement(self):
        c = build_circuit([INPUT, INPUT, INPUT,
                           [lit(0), lit(1, True), lit(2)]])
        js = enumerate_minimal_justifications(c, 3, 0)
        got = {frozenset(j.gate_values()) for j in js}
        assert got == brute_force_justifications(c, 3, 0)
        assert got == {frozenset({(0, 0)}), frozenset({(1, 1)}), frozenset({(2, 0)})}

    def test_input_gate_has_none(self):
        c = two_input_and()
        with pytest.raises(InputGateHasNoJustification):
            enumerate_minimal_justifications(c, 0, 1)

    def test_constant_zero_gate(self):
        c = build_circuit([INPUT, [lit(0), lit(0, True)]])
        # forcing 1 is impossible; forcing 0 needs no bindings at all
        assert enumerate_minimal_justifications(c, 1, 1) == []
        zeros = enumerate_minimal_justifications(c, 1, 0)
        assert [j.gate_values() for j in zeros] == [()]

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 10**6), st.booleans())
    def test_matches_brute_force(self, seed, value):
        rng = random.Random(seed)
        c = random_dag(rng, rng.randint(2, 12), max_arity=4)
        ands = [g for g in range(c.num_gates) if c.fanin[g] is not None]
        if not ands:
            return
        g = ands[rng.randrange(len(ands))]
        got = {frozenset(j.gate_values())
               for j in enumerate_minimal_justifications(c, g, value)}
        assert got == brute_force_justifications(c, g, int(value))

    def test_applying_a_justification_justifies_the_gate(self):
        rng = random.Random(31)
        for _ in range(50):
            c = random_dag(rng, 30)
            ands = [g for g in range(c.num_gates) if c.fanin[g] is not None]
            if not ands:
                continue
            g = rng.choice(ands)
            v = rng.getrandbits(1)
            values = bytearray(rng.getrandbits(1) for _ in range(c.num_gates))
            values[g] = v
            for j in enumerate_minimal_justifications(c, g, v):
                trial = bytearray(values)
                for gate, val in j.gate_values():
                    trial[gate] = val
                assert g not in ref_unjust(c, trial)


class TestVerifySatisfying:
    def test_consistent_and_respected(self):
        c = two_input_and()
        cc = ConstrainedCircuit(c, {2: True})
        assert verify_satisfying(cc, evaluate(c, {0: 1, 1: 1}))

    def test_violated_constraint(self):
        c = two_input_and()
        cc = ConstrainedCircuit(c, {2: True})
        assert not verify_satisfying(cc, evaluate(c, {0: 0, 1: 1}))

    def test_inconsistent_gate(self):
        c = two_input_and()
        cc = ConstrainedCircuit(c, {})
        assert not verify_satisfying(cc, Assignment(c, bytearray([1, 1, 0])))

    def test_agrees_with_exhaustive_enumeration(self):
        rng = random.Random(41)
        hits = 0
        for _ in range(40):
            c = random_dag(rng, rng.randint(4, 20), p_input=0.5)
            if len(c.inputs) > 8:
                continue
            cc = random_constrained(rng, c)
            sat, witness = brute_force_sat(cc)
            if sat:
                hits += 1
                assert verify_satisfying(cc, Assignment(c, bytearray(witness), cc.pinned))
            # every full input sweep value must agree with verify_satisfying
            for _ in range(5):
                inputs = {g: cc.constraints.get(g, rng.getrandbits(1)) for g in c.inputs}
                asg = evaluate(c, inputs)
                expected = all(asg.values[g] == v for g, v in cc.constraints.items())
                assert verify_satisfying(cc, asg) == expected
        assert hits  # the sweep must exercise satisfiable cases too


class TestConstrainedCircuit:
    def test_rejects_constraint_on_internal_gate(self):
        c = build_circuit([INPUT, INPUT, [lit(0), lit(1)], [lit(2), lit(1)]])
        with pytest.raises(ConstraintNotOnOutput):
            ConstrainedCircuit(c, {2: True})

    def test_rejects_constraint_on_referenced_input(self):
        c = two_input_and()
        with pytest.raises(ConstraintNotOnOutput):
            ConstrainedCircuit(c, {0: True})

    def test_const_gate_exemption(self):
        c = two_input_and()
        cc = ConstrainedCircuit(c, {0: True}, const_gate=0)
        assert cc.pinned[0] == 1

    def test_const_gate_must_be_pinned_true(self):
        c = two_input_and()
        with pytest.raises(CircuitError):
            ConstrainedCircuit(c, {0: False}, const_gate=0)
        with pytest.raises(CircuitError):
            ConstrainedCircuit(c, {}, const_gate=0)

    def test_out_of_range_constraint(self):
        with pytest.raises(DanglingReference):
            ConstrainedCircuit(two_input_and(), {9: True})


class TestRandomCompleteExtension:
    def test_unconstrained_circuit_has_empty_unjust(self):
        c = random_dag(random.Random(51), 40)
        cc = ConstrainedCircuit(c, {})
        asg = random_complete_extension(cc, random.Random(1))
        assert asg.unjust == frozenset()

    def test_disagreeing_constraint_is_unjustified(self):
        c = two_input_and()
        cc = ConstrainedCircuit(c, {2: True})
        # inputs (0, 0) evaluate the AND to 0; the constraint forces 1
        class FixedBits:
            def getrandbits(self, _):
                return 0
        asg = random_complete_extension(cc, FixedBits())
        assert asg.values[2] == 1
        assert asg.unjust == frozenset({2})

    def test_seed_determinism(self):
        c = random_dag(random.Random(52), 60)
        cc = random_constrained(random.Random(53), c)
        a = random_complete_extension(cc, random.Random(42))
        b = random_complete_extension(cc, random.Random(42))
        assert a.values == b.values
        assert a.unjust == b.unjust

    def test_unjust_is_exactly_the_violated_constraints(self):
        rng = random.Random(54)
        for _ in range(20):
            c = random_dag(rng, 50)
            cc = random_constrained(rng, c)
            asg = random_complete_extension(cc, rng)
            assert asg.unjust == ref_unjust(c, asg.values)
            assert asg.unjust <= set(cc.constraints)


class TestIncrementalUnjust:
    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 10**6), st.lists(st.integers(0, 10**6), max_size=30))
    def test_flip_sequences_match_scratch_recomputation(self, seed, flips):
        rng = random.Random(seed)
        c = random_dag(rng, rng.randint(2, 60))
        asg = evaluate(c, {g: rng.getrandbits(1) for g in c.inputs})
        for raw in flips:
            asg.flip(raw % c.num_gates)
            assert asg.unjust == ref_unjust(c, asg.values)

    def test_rollback_restores_values_and_unjust(self):
        rng = random.Random(61)
        c = random_dag(rng, 50)
        asg = evaluate(c, {g: rng.getrandbits(1) for g in c.inputs})
        before_values = bytes(asg.values)
        before_unjust = asg.unjust
        undo = []
        for _ in range(10):
            asg.flip(rng.randrange(c.num_gates), undo)
        asg.rollback(undo)
        assert bytes(asg.values) == before_values
        assert asg.unjust == before_unjust
