"""Per-gate structural measures backing the gate-selection heuristics.

All measures are static properties of the circuit, computed once per
instance.  Complement flags on edges are ignored by the distance and
connectivity measures; only the controllability/observability pair is
polarity-sensitive (a complemented edge swaps the to-0/to-1 costs of the
referenced gate, which is what "skipping" inverters amounts to when they are
represented as edge attributes).

Distance-style measures:

* depth     -- 0 at output gates, else 1 + max over parents
* level     -- 0 at input gates,  else 1 + max over children
* llevel    -- 0 at input gates,  else 1 + min over children
* alevel    -- 0 at input gates,  else 1 + mean over children; the recursion
               averages child alevel values by default, or child level values
               with alevel_mode="level-sum"

Connectivity measures:

* fanout_size      -- number of distinct parents
* tfo_size / tfi_size -- sizes of the transitive fanout/fanin closures,
               excluding the gate itself; computed lazily per gate and cached
* cc0 / cc1 -- testability-style controllability costs: 1 at inputs; an AND
               costs 1 + min over children to reach 0 and 1 + sum over
               children to reach 1
* co        -- observability cost: 0 at outputs, else 1 + min over parents of
               (parent co + sum of sibling to-1 costs)
* flow      -- unit flow poured from every output toward the inputs; each
               gate splits its incoming flow equally among its distinct
               children (flow_mode="conserving", the default, divides by the
               parent's fanin size so flow is conserved; "fanout-split"
               divides by the parent's fanout size instead)
"""

from __future__ import annotations

import csv

from .circuit import Circuit

ALEVEL_MODES = ("self", "level-sum")
FLOW_MODES = ("conserving", "fanout-split")


def compute_depths(circuit: Circuit) -> list[int]:
    depth = [0] * circuit.num_gates
    fanout = circuit.fanout
    for g in reversed(circuit.topo_order):
        parents = fanout[g]
        if parents:
            depth[g] = 1 + max(depth[p] for p in parents)
    return depth


def compute_levels(circuit: Circuit, alevel_mode: str = "self"):
    """Per-gate (level, llevel, alevel) distances from the input side."""
    if alevel_mode not in ALEVEL_MODES:
        raise ValueError(f"unknown alevel_mode {alevel_mode!r}")
    n = circuit.num_gates
    level = [0] * n
    llevel = [0] * n
    alevel = [0.0] * n
    avg_base = alevel if alevel_mode == "self" else level
    for g in circuit.topo_order:
        kids = circuit.fanin_gates[g]
        if kids is None:
            continue
        level[g] = 1 + max(level[c] for c in kids)
        llevel[g] = 1 + min(llevel[c] for c in kids)
        alevel[g] = 1.0 + sum(avg_base[c] for c in kids) / len(kids)
    return level, llevel, alevel


def compute_fanout_tfo_tfi(circuit: Circuit):
    """Per-gate (fanout_size, tfo_size, tfi_size), closures computed in bulk.

    Reachability closures are carried as big-integer bitsets, one pass in
    each direction of the topological order; memory grows quadratically with
    the gate count, so this is intended for full-profile dumps and
    cross-checks rather than huge circuits.
    """
    n = circuit.num_gates
    fanout = circuit.fanout
    fanout_size = [len(fanout[g]) for g in range(n)]
    tfo_size = [0] * n
    masks = [0] * n
    for g in reversed(circuit.topo_order):
        acc = 0
        for p in fanout[g]:
            acc |= masks[p] | (1 << p)
        masks[g] = acc
        tfo_size[g] = acc.bit_count()
    tfi_size = [0] * n
    masks = [0] * n
    for g in circuit.topo_order:
        kids = circuit.fanin_gates[g]
        acc = 0
        if kids is not None:
            for c in kids:
                acc |= masks[c] | (1 << c)
        masks[g] = acc
        tfi_size[g] = acc.bit_count()
    return fanout_size, tfo_size, tfi_size


def compute_scoap_cc(circuit: Circuit):
    """Controllability cost pair (cc0, cc1) per gate."""
    n = circuit.num_gates
    cc0 = [1] * n
    cc1 = [1] * n
    packed = circuit._packed
    for g in circuit.topo_order:
        kids = packed[g]
        if kids is None:
            continue
        cc0[g] = 1 + min((cc1[p >> 1] if p & 1 else cc0[p >> 1]) for p in kids)
        cc1[g] = 1 + sum((cc0[p >> 1] if p & 1 else cc1[p >> 1]) for p in kids)
    return cc0, cc1


def compute_scoap_co(circuit: Circuit, cc0, cc1) -> list[int]:
    """Observability cost per gate, given the controllability costs.

    Observing g through a parent costs the parent's own observability plus
    the cost of driving every sibling edge to 1; the cheapest parent wins.
    """
    n = circuit.num_gates
    co = [0] * n
    packed = circuit._packed
    fanout = circuit.fanout
    for g in reversed(circuit.topo_order):
        parents = fanout[g]
        if not parents:
            continue
        best = None
        for p in parents:
            total = co[p]
            for q in packed[p]:
                if q >> 1 != g:
                    total += cc0[q >> 1] if q & 1 else cc1[q >> 1]
            if best is None or total < best:
                best = total
        co[g] = 1 + best
    return co


def compute_flow(circuit: Circuit, flow_mode: str = "conserving") -> list[float]:
    if flow_mode not in FLOW_MODES:
        raise ValueError(f"unknown flow_mode {flow_mode!r}")
    n = circuit.num_gates
    flow = [0.0] * n
    fanout = circuit.fanout
    fanin_gates = circuit.fanin_gates
    for g in reversed(circuit.topo_order):
        parents = fanout[g]
        if not parents:
            flow[g] = 1.0
            continue
        total = 0.0
        for p in parents:
            if flow_mode == "conserving":
                denom = len(fanin_gates[p])
            else:
                # splitting by the parent's own fanout; parentless parents
                # would divide by zero, so they keep their whole unit
                denom = len(fanout[p]) or 1
            total += flow[p] / denom
        flow[g] = total
    return flow


class StructuralProfile:
    """All per-gate measures of one circuit, ready for constant-time lookup.

    The cheap measures are precomputed eagerly in O(gates + edges).  The
    transitive closure sizes are computed on first request per gate (a plain
    reachability walk) and cached, since a search typically queries only the
    gates that ever become unjustified.
    """

    __slots__ = ("circuit", "depth", "level", "llevel", "alevel", "fanout_size",
                 "cc0", "cc1", "co", "flow", "alevel_mode", "flow_mode",
                 "_tfo", "_tfi")

    def __init__(self, circuit: Circuit, alevel_mode: str = "self",
                 flow_mode: str = "conserving"):
        self.circuit = circuit
        self.alevel_mode = alevel_mode
        self.flow_mode = flow_mode
        self.depth = compute_depths(circuit)
        self.level, self.llevel, self.alevel = compute_levels(circuit, alevel_mode)
        self.fanout_size = [len(circuit.fanout[g]) for g in range(circuit.num_gates)]
        self.cc0, self.cc1 = compute_scoap_cc(circuit)
        self.co = compute_scoap_co(circuit, self.cc0, self.cc1)
        self.flow = compute_flow(circuit, flow_mode)
        self._tfo = [-1] * circuit.num_gates
        self._tfi = [-1] * circuit.num_gates

    def tfo_size(self, g: int) -> int:
        cached = self._tfo[g]
        if cached >= 0:
            return cached
        size = self._reach(g, self.circuit.fanout.__getitem__)
        self._tfo[g] = size
        return size

    def tfi_size(self, g: int) -> int:
        cached = self._tfi[g]
        if cached >= 0:
            return cached
        fanin_gates = self.circuit.fanin_gates
        size = self._reach(g, lambda x: fanin_gates[x] or ())
        self._tfi[g] = size
        return size

    def _reach(self, g, neighbours) -> int:
        seen = {g}
        stack = [g]
        count = 0
        while stack:
            for nxt in neighbours(stack.pop()):
                if nxt not in seen:
                    seen.add(nxt)
                    stack.append(nxt)
                    count += 1
        return count

    def materialize_closures(self):
        """Fill the tfo/tfi caches for every gate in two bulk passes."""
        _, self._tfo, self._tfi = compute_fanout_tfo_tfi(self.circuit)
        return self

    def write_csv(self, fh):
        """One row per gate with every measure; closures are materialized."""
        self.materialize_closures()
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["gate", "depth", "level", "llevel", "alevel", "fo",
                         "tfo", "tfi", "cc0", "cc1", "co", "flow"])
        for g in range(self.circuit.num_gates):
            writer.writerow([g, self.depth[g], self.level[g], self.llevel[g],
                             repr(self.alevel[g]), self.fanout_size[g],
                             self._tfo[g], self._tfi[g], self.cc0[g],
                             self.cc1[g], self.co[g], repr(self.flow[g])])


def build_profile(circuit: Circuit, alevel_mode: str = "self",
                  flow_mode: str = "conserving") -> StructuralProfile:
    """Compute the full structural profile of a circuit."""
    return StructuralProfile(circuit, alevel_mode=alevel_mode, flow_mode=flow_mode)
