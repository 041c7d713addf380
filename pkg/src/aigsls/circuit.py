"""Constrained And-Inverter circuits: gates, assignments and justifications.

A circuit is a DAG of n-ary AND gates over complemented edges; inverters are
never materialized as gates, a child reference simply carries a complement
flag.  A constrained circuit additionally requires fixed truth values on some
of its output gates; a complete assignment satisfies it when every AND gate
is consistent with its children and every required value holds.
"""

from __future__ import annotations

import random
from collections import deque
from heapq import heapify, heappop, heappush
from typing import Iterable, Mapping, NamedTuple, Optional, Sequence


class CircuitError(ValueError):
    """Malformed circuit description."""


class CycleDetected(CircuitError):
    pass


class DuplicateDefinition(CircuitError):
    pass


class DanglingReference(CircuitError):
    pass


class ConstraintNotOnOutput(CircuitError):
    pass


class InputGateHasNoJustification(CircuitError):
    pass


class Literal(NamedTuple):
    """Reference to a gate, optionally through an inverter."""

    gate: int
    complement: bool = False

    def __invert__(self) -> "Literal":
        return Literal(self.gate, not self.complement)

    def value_in(self, values) -> int:
        """Truth value of this literal under a complete value vector."""
        return values[self.gate] ^ self.complement


# Marker for input gates in build_circuit definitions.
INPUT = None


class Circuit:
    """Immutable gate graph with fanout adjacency and a fixed topological order.

    Gates are densely indexed from 0.  ``fanin[g]`` is None for input gates
    and a tuple of child Literals for AND gates.  ``fanout[g]`` lists the
    distinct parent gates of g.  ``topo_order`` places every gate strictly
    after all of its children; ``topo_pos[g]`` is g's position in it.
    """

    __slots__ = ("fanin", "fanin_gates", "fanout", "topo_order", "topo_pos",
                 "inputs", "outputs", "_packed")

    def __init__(self, fanin, fanin_gates, fanout, topo_order, topo_pos, packed):
        self.fanin = fanin
        self.fanin_gates = fanin_gates
        self.fanout = fanout
        self.topo_order = topo_order
        self.topo_pos = topo_pos
        self._packed = packed
        self.inputs = tuple(g for g, kids in enumerate(fanin) if kids is None)
        self.outputs = tuple(g for g in range(len(fanin)) if not fanout[g])

    @property
    def num_gates(self) -> int:
        return len(self.fanin)

    def is_input(self, g: int) -> bool:
        return self.fanin[g] is None

    def __eq__(self, other) -> bool:
        return isinstance(other, Circuit) and self.fanin == other.fanin

    def __hash__(self):
        return hash(self.fanin)

    def __repr__(self):
        return f"Circuit({self.num_gates} gates, {len(self.inputs)} inputs, {len(self.outputs)} outputs)"


def build_circuit(definitions: Sequence[Optional[Iterable]]) -> Circuit:
    """Build and validate a Circuit from positional gate definitions.

    Each entry is either ``INPUT`` (None) for an input gate or a nonempty
    iterable of Literals (or (gate, complement) pairs) for an AND gate.
    Children may reference any gate index as long as the graph stays acyclic.

    Raises DanglingReference for out-of-range children, CircuitError for
    childless AND gates and CycleDetected when no topological order exists.
    """
    n = len(definitions)
    fanin = []
    for g, record in enumerate(definitions):
        if record is None:
            fanin.append(None)
            continue
        kids = tuple(Literal(int(k[0]), bool(k[1])) for k in record)
        if not kids:
            raise CircuitError(f"gate {g}: AND gate must have at least one child")
        for lit in kids:
            if not 0 <= lit.gate < n:
                raise DanglingReference(f"gate {g} references undefined gate {lit.gate}")
        fanin.append(kids)
    fanin = tuple(fanin)

    parent_sets = [set() for _ in range(n)]
    for g, kids in enumerate(fanin):
        if kids is not None:
            for lit in kids:
                parent_sets[lit.gate].add(g)
    fanout = tuple(tuple(sorted(s)) for s in parent_sets)

    fanin_gates = tuple(
        None if kids is None else tuple(dict.fromkeys(lit.gate for lit in kids))
        for kids in fanin
    )

    # Kahn's algorithm; every gate must be placed after its children.
    remaining = [0] * n
    for g, kids in enumerate(fanin_gates):
        if kids is not None:
            remaining[g] = len(kids)
    ready = deque(g for g in range(n) if remaining[g] == 0)
    topo_order = []
    while ready:
        g = ready.popleft()
        topo_order.append(g)
        for p in fanout[g]:
            remaining[p] -= 1
            if remaining[p] == 0:
                ready.append(p)
    if len(topo_order) != n:
        raise CycleDetected(f"{n - len(topo_order)} gates lie on a cycle")
    topo_pos = [0] * n
    for pos, g in enumerate(topo_order):
        topo_pos[g] = pos

    packed = tuple(
        None if kids is None else tuple(lit.gate * 2 + lit.complement for lit in kids)
        for kids in fanin
    )
    return Circuit(fanin, fanin_gates, fanout, tuple(topo_order), tuple(topo_pos), packed)


class ConstrainedCircuit:
    """A circuit plus required truth values on output gates.

    ``constraints`` maps gate index to its required value.  Constraints are
    only accepted on output gates (gates without parents), with a single
    exception: ``const_gate`` may designate an input gate pinned to True even
    when it is referenced, which is how a constant-true signal is modeled.
    """

    __slots__ = ("circuit", "constraints", "const_gate", "pinned")

    def __init__(self, circuit: Circuit, constraints: Mapping[int, bool],
                 const_gate: Optional[int] = None):
        self.circuit = circuit
        self.constraints = {int(g): bool(v) for g, v in constraints.items()}
        self.const_gate = const_gate
        n = circuit.num_gates
        for g, v in self.constraints.items():
            if not 0 <= g < n:
                raise DanglingReference(f"constraint on undefined gate {g}")
            if circuit.fanout[g] and g != const_gate:
                raise ConstraintNotOnOutput(f"gate {g} is not an output gate")
        if const_gate is not None:
            if not circuit.is_input(const_gate):
                raise CircuitError("constant gate must be an input gate")
            if self.constraints.get(const_gate) is not True:
                raise CircuitError("constant gate must be constrained to True")
        pinned = bytearray(n)
        for g in self.constraints:
            pinned[g] = 1
        self.pinned = bytes(pinned)

    def __eq__(self, other) -> bool:
        return (isinstance(other, ConstrainedCircuit)
                and self.circuit == other.circuit
                and self.constraints == other.constraints
                and self.const_gate == other.const_gate)

    def __repr__(self):
        return f"ConstrainedCircuit({self.circuit!r}, {len(self.constraints)} constraints)"


class Justification(NamedTuple):
    """Child bindings that force a gate's value in every extension.

    Each binding pairs a child literal with the truth value required at the
    literal's *gate* (not at the literal itself).
    """

    bindings: tuple

    def gate_values(self):
        return tuple((lit.gate, value) for lit, value in self.bindings)


class Assignment:
    """Complete truth assignment with an incrementally maintained unjust set.

    ``values[g]`` is 0 or 1 for every gate.  A non-input gate is unjustified
    when its value differs from the AND of its child literal values; input
    gates are always justified.  ``pinned[g]`` marks gates that forward
    propagation must never flip (the constrained gates).
    """

    __slots__ = ("circuit", "values", "pinned", "ulist", "upos", "_stamp", "_gen")

    def __init__(self, circuit: Circuit, values, pinned=None):
        n = circuit.num_gates
        if len(values) != n:
            raise CircuitError("value vector length does not match gate count")
        self.circuit = circuit
        self.values = bytearray(values)
        self.pinned = pinned if pinned is not None else bytes(n)
        self.ulist = []
        self.upos = [-1] * n
        self._stamp = [0] * n
        self._gen = 0
        values_ = self.values
        for g, kids in enumerate(circuit._packed):
            if kids is None:
                continue
            v = 1
            for p in kids:
                if not (values_[p >> 1] ^ (p & 1)):
                    v = 0
                    break
            if values_[g] != v:
                self.upos[g] = len(self.ulist)
                self.ulist.append(g)

    @property
    def unjust(self) -> frozenset:
        """Current set of unjustified gates."""
        return frozenset(self.ulist)

    @property
    def unjust_count(self) -> int:
        return len(self.ulist)

    def value(self, g: int) -> int:
        return self.values[g]

    def copy(self) -> "Assignment":
        return Assignment(self.circuit, self.values, self.pinned)

    def _consistent(self, g: int) -> bool:
        kids = self.circuit._packed[g]
        values = self.values
        v = 1
        for p in kids:
            if not (values[p >> 1] ^ (p & 1)):
                v = 0
                break
        return values[g] == v

    def _refresh(self, g: int):
        # recompute g's membership in the unjust set after a nearby flip
        if self.circuit._packed[g] is None:
            return
        pos = self.upos[g]
        if self._consistent(g):
            if pos >= 0:
                ulist = self.ulist
                last = ulist[-1]
                ulist[pos] = last
                self.upos[last] = pos
                ulist.pop()
                self.upos[g] = -1
        elif pos < 0:
            self.upos[g] = len(self.ulist)
            self.ulist.append(g)

    def flip(self, g: int, undo: Optional[list] = None):
        """Flip one gate value, updating the unjust set of g and its parents."""
        self.values[g] ^= 1
        if undo is not None:
            undo.append(g)
        self._refresh(g)
        for p in self.circuit.fanout[g]:
            self._refresh(p)

    def rollback(self, undo: list):
        """Reverse a sequence of recorded flips, newest first."""
        for g in reversed(undo):
            self.flip(g)

    def propagate_forward(self, flipped, undo: Optional[list] = None) -> "Assignment":
        """Limited forward propagation of just-flipped gate values.

        Processes gates in topological order through a no-duplicates priority
        queue seeded with ``flipped``.  A popped origin gate only forwards to
        its parents; any other popped gate that is unjustified and not pinned
        is flipped (which justifies it, since its children are already final)
        and its parents are enqueued in turn.  Propagation stops along a path
        as soon as a popped gate is found justified.
        """
        circuit = self.circuit
        order = circuit.topo_order
        topo_pos = circuit.topo_pos
        fanout = circuit.fanout
        pinned = self.pinned
        upos = self.upos
        self._gen += 1
        gen = self._gen
        stamp = self._stamp
        origins = frozenset(flipped)
        heap = []
        for g in origins:
            stamp[g] = gen
            heap.append(topo_pos[g])
        heapify(heap)
        while heap:
            g = order[heappop(heap)]
            if g not in origins:
                if upos[g] < 0 or pinned[g]:
                    continue
                self.flip(g, undo)
            for p in fanout[g]:
                if stamp[p] != gen:
                    stamp[p] = gen
                    heappush(heap, topo_pos[p])
        return self

    def recompute_unjust(self) -> frozenset:
        """From-scratch unjust set; the incremental one must always equal it."""
        out = set()
        values = self.values
        for g, kids in enumerate(self.circuit._packed):
            if kids is None:
                continue
            v = 1
            for p in kids:
                if not (values[p >> 1] ^ (p & 1)):
                    v = 0
                    break
            if values[g] != v:
                out.add(g)
        return frozenset(out)


def evaluate(circuit: Circuit, input_values: Mapping[int, int]) -> Assignment:
    """Deterministically extend input values to a consistent full assignment.

    ``input_values`` must assign every input gate.  Every AND gate receives
    the conjunction of its child literal values, so the result has an empty
    unjust set.
    """
    values = bytearray(circuit.num_gates)
    for g in circuit.inputs:
        values[g] = 1 if input_values[g] else 0
    packed = circuit._packed
    for g in circuit.topo_order:
        kids = packed[g]
        if kids is None:
            continue
        v = 1
        for p in kids:
            if not (values[p >> 1] ^ (p & 1)):
                v = 0
                break
        values[g] = v
    return Assignment(circuit, values)


def is_justified(circuit: Circuit, assignment: Assignment, g: int) -> bool:
    """True iff g is an input gate or its value equals the AND of its children."""
    if circuit.fanin[g] is None:
        return True
    return assignment._consistent(g)


def enumerate_minimal_justifications(circuit: Circuit, g: int, v) -> list:
    """All subset-minimal justifications for gate g holding value v.

    For an AND gate forced to 1 there is a single justification binding every
    child literal to 1; forced to 0, one singleton justification per child
    literal bound to 0.  Bindings are expressed as required values at the
    child gates; duplicate child references collapse.  A gate referencing
    both polarities of the same child is constantly 0: forcing 1 is then
    impossible (empty result) and forcing 0 needs nothing (the empty
    justification is the unique minimal one).
    """
    kids = circuit.fanin[g]
    if kids is None:
        raise InputGateHasNoJustification(f"gate {g} is an input gate")
    required = {}
    contradictory = False
    for lit in kids:
        need = not lit.complement
        prev = required.setdefault(lit.gate, need)
        if prev != need:
            contradictory = True
            break
    if v:
        if contradictory:
            return []
        bindings = []
        seen = set()
        for lit in kids:
            if lit.gate not in seen:
                seen.add(lit.gate)
                bindings.append((lit, not lit.complement))
        return [Justification(tuple(bindings))]
    if contradictory:
        return [Justification(())]
    seen = set()
    out = []
    for lit in kids:
        key = (lit.gate, lit.complement)
        if key not in seen:
            seen.add(key)
            out.append(Justification(((lit, lit.complement),)))
    return out


def verify_satisfying(cc: ConstrainedCircuit, assignment: Assignment) -> bool:
    """Check consistency at every gate plus every required output value.

    Scans the full circuit rather than trusting the tracked unjust set.
    """
    values = assignment.values
    for g, v in cc.constraints.items():
        if values[g] != v:
            return False
    for g, kids in enumerate(cc.circuit._packed):
        if kids is None:
            continue
        v = 1
        for p in kids:
            if not (values[p >> 1] ^ (p & 1)):
                v = 0
                break
        if values[g] != v:
            return False
    return True


def random_complete_extension(cc: ConstrainedCircuit, rng: random.Random) -> Assignment:
    """Random input assignment extended consistently, then constraints applied.

    Unconstrained inputs draw independent uniform bits; constrained inputs
    (the constant gate, or outputs that happen to be inputs) start at their
    required value.  AND gates evaluate consistently, after which every
    constrained non-input gate is overwritten with its required value; if
    that disagrees with the evaluated value the gate starts out unjustified,
    exposing the constraint violations the search must repair.
    """
    circuit = cc.circuit
    constraints = cc.constraints
    values = bytearray(circuit.num_gates)
    for g in circuit.inputs:
        if g in constraints:
            values[g] = constraints[g]
        else:
            values[g] = rng.getrandbits(1)
    packed = circuit._packed
    for g in circuit.topo_order:
        kids = packed[g]
        if kids is None:
            continue
        v = 1
        for p in kids:
            if not (values[p >> 1] ^ (p & 1)):
                v = 0
                break
        values[g] = v
    for g, v in constraints.items():
        values[g] = v
    return Assignment(circuit, values, cc.pinned)
