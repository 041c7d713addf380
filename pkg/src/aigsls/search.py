"""Justification-based stochastic local search with limited forward propagation.

One search step picks an unjustified gate (per the configured heuristic),
chooses one of its subset-minimal justifications -- uniformly at random with
probability ``wp``, otherwise greedily minimizing the number of unjustified
gates the step would leave behind -- flips the disagreeing child gates, and
propagates the flips toward the outputs.  Constrained gates are never
flipped; the search succeeds when the unjustified set empties.
"""

from __future__ import annotations

import random
import time
from dataclasses import dataclass
from typing import Optional

from .circuit import (
    Assignment,
    ConstrainedCircuit,
    Justification,
    random_complete_extension,
    verify_satisfying,
)
from .metrics import StructuralProfile

#: Recognized gate-selection heuristics.  "rand" picks uniformly from the
#: unjustified set; "<measure>-max"/"<measure>-min" pick uniformly among the
#: gates maximizing/minimizing that structural measure.  The cc measure is
#: value-dependent: a gate currently at 0 scores cc0, at 1 scores cc1.
HEURISTICS = (
    "rand",
    "depth-max", "depth-min",
    "fo-max", "fo-min",
    "tfo-max", "tfo-min",
    "tfi-max", "tfi-min",
    "cc-max", "cc-min",
    "co-max", "co-min",
    "flow-max", "flow-min",
    "level-max", "level-min",
    "llevel-min",
    "alevel-min",
)


class EmptyUnjustSet(RuntimeError):
    """Gate selection requested while every gate is justified."""


class UnsoundResult(RuntimeError):
    """A SAT verdict whose witness failed verification; indicates a bug."""


@dataclass
class SolverConfig:
    heuristic: str = "rand"
    wp: float = 0.2
    cutoff: int = 1_000_000
    seed: int = 0

    def validate(self):
        if self.heuristic not in HEURISTICS:
            raise ValueError(f"unknown heuristic {self.heuristic!r}")
        if not 0.0 <= self.wp <= 1.0:
            raise ValueError(f"noise must be within [0, 1], got {self.wp}")
        if self.cutoff < 0:
            raise ValueError("cutoff must be nonnegative")


@dataclass
class SolveResult:
    status: str                      # "SAT" or "UNKNOWN"
    witness: Optional[tuple]         # gate values when SAT, else None
    steps_used: int
    wall_time: float                 # process CPU seconds


def _compile_justifications(cc: ConstrainedCircuit):
    """Per-gate static justification tables, filtered against the pins.

    ``tables[g] = (for_value_1, for_value_0)`` where each entry is a tuple of
    justifications and each justification is a tuple of (gate, value) pairs.
    Justifications that would force a constrained gate away from its required
    value are dropped here: they can never be applied.  An AND referencing
    both polarities of one gate is constantly 0, so it has no way to hold
    value 1 and needs nothing (the empty justification) to hold value 0;
    a gate whose children include the pinned constant may lose entries too.
    """
    circuit = cc.circuit
    constraints = cc.constraints
    tables = [None] * circuit.num_gates
    for g, kids in enumerate(circuit.fanin):
        if kids is None:
            continue
        required = {}
        contradictory = False
        for lit in kids:
            need = 0 if lit.complement else 1
            prev = required.setdefault(lit.gate, need)
            if prev != need:
                contradictory = True
                break
        admissible = not contradictory and all(
            constraints.get(gate, value) == value for gate, value in required.items())
        for_one = (tuple(required.items()),) if admissible else ()
        if contradictory:
            for_zero = ((),)
        else:
            seen = set()
            for_zero = []
            for lit in kids:
                value = 1 if lit.complement else 0
                key = (lit.gate, value)
                if key in seen:
                    continue
                seen.add(key)
                if lit.gate in constraints and constraints[lit.gate] != value:
                    continue
                for_zero.append(((lit.gate, value),))
            for_zero = tuple(for_zero)
        tables[g] = (for_one, for_zero)
    return tables


def _make_scorer(profile: StructuralProfile, base: str, values):
    if base == "depth":
        return profile.depth.__getitem__
    if base == "fo":
        return profile.fanout_size.__getitem__
    if base == "tfo":
        return profile.tfo_size
    if base == "tfi":
        return profile.tfi_size
    if base == "co":
        return profile.co.__getitem__
    if base == "flow":
        return profile.flow.__getitem__
    if base == "level":
        return profile.level.__getitem__
    if base == "llevel":
        return profile.llevel.__getitem__
    if base == "alevel":
        return profile.alevel.__getitem__
    if base == "cc":
        cc0, cc1 = profile.cc0, profile.cc1
        return lambda g: cc1[g] if values[g] else cc0[g]
    raise ValueError(f"unknown measure {base!r}")


def _argbest(gates, score, want_max, rng):
    best_gate = gates[0]
    best = score(best_gate)
    ties = [best_gate]
    for g in gates[1:]:
        v = score(g)
        if v == best:
            ties.append(g)
        elif (v > best) if want_max else (v < best):
            best = v
            ties = [g]
    if len(ties) == 1:
        return ties[0]
    return ties[rng.randrange(len(ties))]


def select_gate(assignment: Assignment, profile: StructuralProfile,
                heuristic: str, rng: random.Random) -> int:
    """Pick one unjustified gate according to the heuristic, ties uniform."""
    if heuristic not in HEURISTICS:
        raise ValueError(f"unknown heuristic {heuristic!r}")
    gates = assignment.ulist
    if not gates:
        raise EmptyUnjustSet("no unjustified gates to select from")
    if heuristic == "rand":
        return gates[rng.randrange(len(gates))]
    base, _, direction = heuristic.rpartition("-")
    score = _make_scorer(profile, base, assignment.values)
    return _argbest(gates, score, direction == "max", rng)


def lbcp_forward(cc: ConstrainedCircuit, flipped, assignment: Assignment) -> Assignment:
    """Propagate just-flipped gate values toward the outputs (in place)."""
    if assignment.circuit is not cc.circuit:
        raise ValueError("assignment belongs to a different circuit")
    assignment.pinned = cc.pinned
    return assignment.propagate_forward(flipped)


def count_unjust_after(cc: ConstrainedCircuit, assignment: Assignment,
                       justification: Justification) -> int:
    """Unjustified-gate count after applying a justification, without keeping it.

    Flips the disagreeing child gates, runs forward propagation, reads off
    the count and rolls every flip back, leaving the assignment unchanged.
    """
    if assignment.circuit is not cc.circuit:
        raise ValueError("assignment belongs to a different circuit")
    assignment.pinned = cc.pinned
    values = assignment.values
    undo = []
    flips = [g for g, v in justification.gate_values() if values[g] != v]
    for g in flips:
        assignment.flip(g, undo)
    assignment.propagate_forward(flips, undo)
    count = len(assignment.ulist)
    assignment.rollback(undo)
    return count


class SearchEngine:
    """One resumable search trajectory over a constrained circuit.

    The engine owns the assignment and the random stream; ``run(budget)``
    advances up to ``budget`` further steps and reports whether a satisfying
    assignment was observed.  Repeated calls continue the same trajectory, so
    a caller can interleave step budgets with its own wall-clock bookkeeping.
    """

    def __init__(self, cc: ConstrainedCircuit, profile: StructuralProfile,
                 heuristic: str = "rand", wp: float = 0.2, seed: int = 0,
                 debug: bool = False):
        if heuristic not in HEURISTICS:
            raise ValueError(f"unknown heuristic {heuristic!r}")
        if not 0.0 <= wp <= 1.0:
            raise ValueError(f"noise must be within [0, 1], got {wp}")
        if profile.circuit is not cc.circuit:
            raise ValueError("profile was built for a different circuit")
        self.cc = cc
        self.profile = profile
        self.heuristic = heuristic
        self.wp = wp
        self.rng = random.Random(seed)
        self.debug = debug
        self.steps = 0
        self.assignment = random_complete_extension(cc, self.rng)
        self._tables = _compile_justifications(cc)
        if heuristic == "rand":
            self._score = None
            self._want_max = False
        else:
            base, _, direction = heuristic.rpartition("-")
            self._score = _make_scorer(profile, base, self.assignment.values)
            self._want_max = direction == "max"

    @property
    def satisfied(self) -> bool:
        return not self.assignment.ulist

    def run(self, budget: int) -> bool:
        """Advance up to ``budget`` steps; True as soon as the circuit is satisfied.

        Satisfaction is only checked at the top of each pending step, so a
        run whose budget is exhausted reports False even if the very last
        step happened to justify everything; the next call returns True
        immediately.
        """
        asg = self.assignment
        ulist = asg.ulist
        values = asg.values
        rng = self.rng
        wp = self.wp
        tables = self._tables
        score = self._score
        want_max = self._want_max
        debug = self.debug
        propagate = asg.propagate_forward
        flip = asg.flip
        while budget > 0:
            if not ulist:
                return True
            if len(ulist) == 1:
                g = ulist[0]
            elif score is None:
                g = ulist[rng.randrange(len(ulist))]
            else:
                g = _argbest(ulist, score, want_max, rng)
            for_one, for_zero = tables[g]
            sigmas = for_one if values[g] else for_zero
            n_sig = len(sigmas)
            if n_sig == 0:
                # every justification would violate a pin; burn the step
                self.steps += 1
                budget -= 1
                continue
            if n_sig == 1:
                sigma = sigmas[0]
            elif rng.random() < wp:
                sigma = sigmas[rng.randrange(n_sig)]       # random walk
            else:
                sigma = self._greedy(sigmas)               # downward move
            flips = [gt for gt, v in sigma if values[gt] != v]
            for gt in flips:
                flip(gt)
            propagate(flips)
            self.steps += 1
            budget -= 1
            if debug and not self.steps & 0x3FFF:
                self._debug_check()
        return False

    def _greedy(self, sigmas):
        best_count = None
        ties = []
        for sigma in sigmas:
            count = self._trial(sigma)
            if best_count is None or count < best_count:
                best_count = count
                ties = [sigma]
            elif count == best_count:
                ties.append(sigma)
        if self.debug:
            rescan = min(self._trial(s) for s in sigmas)
            if rescan != best_count:
                raise AssertionError("greedy choice is not minimal")
        if len(ties) == 1:
            return ties[0]
        return ties[self.rng.randrange(len(ties))]

    def _trial(self, sigma) -> int:
        asg = self.assignment
        values = asg.values
        undo = []
        flips = [gt for gt, v in sigma if values[gt] != v]
        for gt in flips:
            asg.flip(gt, undo)
        asg.propagate_forward(flips, undo)
        count = len(asg.ulist)
        asg.rollback(undo)
        return count

    def _debug_check(self):
        asg = self.assignment
        if frozenset(asg.ulist) != asg.recompute_unjust():
            raise AssertionError("incremental unjust set diverged from recomputation")
        for g, v in self.cc.constraints.items():
            if asg.values[g] != v:
                raise AssertionError(f"constrained gate {g} lost its pinned value")


def crsat_solve(cc: ConstrainedCircuit, profile: StructuralProfile,
                config: SolverConfig, debug: bool = False) -> SolveResult:
    """Run one search try up to the configured step cutoff.

    Returns SAT with a verified witness, or UNKNOWN with no witness once the
    cutoff is reached.  A SAT verdict whose assignment fails verification
    raises UnsoundResult instead of being returned.
    """
    config.validate()
    start = time.process_time()
    engine = SearchEngine(cc, profile, config.heuristic, config.wp,
                          config.seed, debug=debug)
    found = engine.run(config.cutoff)
    elapsed = time.process_time() - start
    if found:
        if not verify_satisfying(cc, engine.assignment):
            raise UnsoundResult("search reported SAT but the witness fails verification")
        return SolveResult("SAT", tuple(engine.assignment.values), engine.steps, elapsed)
    return SolveResult("UNKNOWN", None, engine.steps, elapsed)
