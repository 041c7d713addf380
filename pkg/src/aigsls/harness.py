"""Experiment protocol: per-instance noise tuning, medians and CSV reports.

A tuning round runs a fixed number of independent tries per candidate noise
value with a wall-clock budget per try, picks the noise with the highest
success rate (best median time as tie-breaker, remaining ties uniformly at
random), and summarizes the winning tries.  An instance counts as solved
when at least half of its tries succeeded.  Medians are taken over all
tries; unsuccessful tries contribute the timeout budget to the time median
and a fixed censoring constant to the step median.

Every random choice -- per-try search seeds and protocol-level tie-breaks --
derives from the master seed through a stable hash, so a whole experiment is
reproducible regardless of worker scheduling.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
import random
import time
from dataclasses import dataclass, field
from multiprocessing import Pool
from typing import Optional, Sequence

from .aiger import generate_random_sat_aig, load_aiger, serialize_ascii
from .circuit import verify_satisfying
from .metrics import build_profile
from .search import HEURISTICS, SearchEngine, UnsoundResult

#: Candidate noise values of the reference tuning protocol.
DEFAULT_NOISES = (0.05, 0.1, 0.2, 0.3, 0.4, 0.5)

#: Step count recorded for unsuccessful tries in medians and scatter output.
CENSORED_STEPS = 10_000_000

#: Instances whose median step count falls below this are considered trivial.
TRIVIAL_STEP_THRESHOLD = 730


class MismatchedInstanceSets(ValueError):
    """Scatter requested over summary sets covering different instances."""


@dataclass
class TryRecord:
    instance: str
    heuristic: str
    wp: float
    try_index: int
    seed: int
    outcome: str            # "SAT" or "UNKNOWN"
    steps: int
    time: float


@dataclass
class InstanceSummary:
    instance: str
    heuristic: str
    best_wp: float
    success_rate: float
    median_time: float
    median_steps: float
    solved: bool


def derive_seed(master_seed: int, *parts) -> int:
    """Stable 64-bit stream split: hash the master seed with context labels."""
    key = "|".join([str(master_seed)] + [str(p) for p in parts])
    return int.from_bytes(hashlib.sha256(key.encode()).digest()[:8], "big")


def lower_median(values):
    """Median taking the lower middle element for even-length input."""
    ordered = sorted(values)
    if not ordered:
        raise ValueError("median of empty sequence")
    return ordered[(len(ordered) - 1) // 2]


def run_try(cc, profile, instance: str, heuristic: str, wp: float,
            try_index: int, master_seed: int, *, timeout: Optional[float] = None,
            cutoff: Optional[int] = None, clock: str = "cpu",
            chunk: int = 4096) -> TryRecord:
    """One seeded search try under a wall-clock and/or step budget.

    With ``clock="cpu"`` the try is interrupted once its process CPU time
    exceeds ``timeout`` (checked between step chunks) and a timed-out try
    records exactly the timeout value as its time.  With ``clock="steps"``
    the recorded time IS the step count, which makes every downstream
    statistic reproducible bit for bit; a step cutoff is then required and
    no wall timeout is allowed.
    """
    if clock not in ("cpu", "steps"):
        raise ValueError(f"unknown clock {clock!r}")
    if clock == "steps":
        if cutoff is None or timeout is not None:
            raise ValueError("steps clock needs a cutoff and no wall timeout")
    elif timeout is None and cutoff is None:
        raise ValueError("need a timeout or a cutoff to bound the try")
    seed = derive_seed(master_seed, instance, heuristic, wp, try_index)
    engine = SearchEngine(cc, profile, heuristic, wp, seed)
    start = time.process_time()
    found = False
    timed_out = False
    while True:
        budget = chunk
        if cutoff is not None:
            budget = min(budget, cutoff - engine.steps)
            if budget <= 0:
                break
        found = engine.run(budget)
        if found:
            break
        if timeout is not None and time.process_time() - start >= timeout:
            timed_out = True
            break
    elapsed = time.process_time() - start
    if found:
        if not verify_satisfying(cc, engine.assignment):
            raise UnsoundResult(f"unverifiable witness on {instance}")
        outcome = "SAT"
    else:
        outcome = "UNKNOWN"
    if clock == "steps":
        recorded_time = float(engine.steps)
    elif timed_out:
        recorded_time = float(timeout)
    else:
        # cap at the budget: a win inside the final chunk may overshoot slightly
        recorded_time = elapsed if timeout is None else min(elapsed, float(timeout))
    return TryRecord(instance, heuristic, wp, try_index, seed, outcome,
                     engine.steps, recorded_time)


def censored_steps(record: TryRecord) -> int:
    return record.steps if record.outcome == "SAT" else CENSORED_STEPS


def _rank_noises(per_wp: dict, master_seed: int, instance: str, heuristic: str) -> float:
    """Best noise by success rate, then median time; residual ties uniform."""
    def key(wp):
        records = per_wp[wp]
        successes = sum(r.outcome == "SAT" for r in records)
        return (-successes, lower_median([r.time for r in records]))

    best = min(key(wp) for wp in per_wp)
    ties = [wp for wp in per_wp if key(wp) == best]
    if len(ties) == 1:
        return ties[0]
    rng = random.Random(derive_seed(master_seed, instance, heuristic, "noise-tie"))
    return ties[rng.randrange(len(ties))]


def optimize_noise(cc, profile, instance: str, heuristic: str, *, tries: int,
                   timeout: Optional[float] = None,
                   candidates: Sequence[float] = DEFAULT_NOISES,
                   master_seed: int = 0, cutoff: Optional[int] = None,
                   clock: str = "cpu"):
    """Tune the noise parameter for one instance and heuristic.

    Runs ``tries`` seeded tries per candidate (the reference protocol uses a
    wall timeout and no step limit) and returns (best_wp, all records).
    """
    if not candidates:
        raise ValueError("need at least one candidate noise value")
    if tries < 1:
        raise ValueError("need at least one try")
    records = []
    per_wp = {}
    for wp in candidates:
        recs = [run_try(cc, profile, instance, heuristic, wp, i, master_seed,
                        timeout=timeout, cutoff=cutoff, clock=clock)
                for i in range(tries)]
        per_wp[wp] = recs
        records.extend(recs)
    best = _rank_noises(per_wp, master_seed, instance, heuristic)
    return best, records


def summarize(records: Sequence[TryRecord], tries: int) -> InstanceSummary:
    """Aggregate one instance's tries at one noise setting.

    Unsuccessful tries enter the step median at the censoring constant and
    the time median at their recorded (timeout-censored) time.  An instance
    is solved when at least half its tries succeeded.
    """
    if len(records) != tries:
        raise ValueError(f"expected {tries} records, got {len(records)}")
    first = records[0]
    if any((r.instance, r.heuristic, r.wp) != (first.instance, first.heuristic, first.wp)
           for r in records):
        raise ValueError("records mix instances, heuristics or noise values")
    successes = sum(r.outcome == "SAT" for r in records)
    rate = successes / tries
    return InstanceSummary(
        instance=first.instance,
        heuristic=first.heuristic,
        best_wp=first.wp,
        success_rate=rate,
        median_time=lower_median([r.time for r in records]),
        median_steps=lower_median([censored_steps(r) for r in records]),
        solved=rate >= 0.5,
    )


def emit_cactus_csv(summaries: Sequence[InstanceSummary]) -> str:
    """Solved instances per heuristic, sorted by median time, ranked 1..k."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["heuristic", "rank", "median_time"])
    for heuristic in sorted({s.heuristic for s in summaries}):
        solved = [s for s in summaries if s.heuristic == heuristic and s.solved]
        solved.sort(key=lambda s: (s.median_time, s.instance))
        for rank, s in enumerate(solved, start=1):
            writer.writerow([heuristic, rank, s.median_time])
    return out.getvalue()


def emit_scatter_csv(summaries_a: Sequence[InstanceSummary],
                     summaries_b: Sequence[InstanceSummary]) -> str:
    """Per-instance median steps of two heuristics, unsolved sides censored."""
    by_a = {s.instance: s for s in summaries_a}
    by_b = {s.instance: s for s in summaries_b}
    if by_a.keys() != by_b.keys():
        raise MismatchedInstanceSets("summary sets cover different instances")
    name_a = summaries_a[0].heuristic if summaries_a else "a"
    name_b = summaries_b[0].heuristic if summaries_b else "b"
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["instance", name_a, name_b])
    for instance in sorted(by_a):
        sa, sb = by_a[instance], by_b[instance]
        writer.writerow([
            instance,
            sa.median_steps if sa.solved else CENSORED_STEPS,
            sb.median_steps if sb.solved else CENSORED_STEPS,
        ])
    return out.getvalue()


def filter_trivial(summaries: Sequence[InstanceSummary],
                   threshold: int = TRIVIAL_STEP_THRESHOLD):
    """Partition into (trivial, retained) by median step count, strict less-than."""
    trivial = [s for s in summaries if s.median_steps < threshold]
    retained = [s for s in summaries if s.median_steps >= threshold]
    return trivial, retained


def records_to_csv(records: Sequence[TryRecord]) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["instance", "heuristic", "wp", "try", "seed", "outcome",
                     "steps", "time"])
    for r in sorted(records, key=lambda r: (r.instance, r.heuristic, r.wp, r.try_index)):
        writer.writerow([r.instance, r.heuristic, r.wp, r.try_index, r.seed,
                         r.outcome, r.steps, r.time])
    return out.getvalue()


def summaries_to_csv(summaries: Sequence[InstanceSummary]) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["instance", "heuristic", "best_wp", "success_rate",
                     "median_time", "median_steps", "solved"])
    for s in sorted(summaries, key=lambda s: (s.heuristic, s.instance)):
        writer.writerow([s.instance, s.heuristic, s.best_wp, s.success_rate,
                         s.median_time, s.median_steps,
                         "true" if s.solved else "false"])
    return out.getvalue()


@dataclass
class ExperimentConfig:
    """Declarative description of one benchmark experiment.

    ``instances`` lists AIGER files; ``generate`` may add a synthetic suite
    (keys: count, inputs, min_ands, max_ands, seed), written as .aag files
    into the output directory so the experiment stays inspectable.
    """
    output_dir: str
    instances: list = field(default_factory=list)
    generate: Optional[dict] = None
    heuristics: list = field(default_factory=lambda: ["rand"])
    noises: list = field(default_factory=lambda: list(DEFAULT_NOISES))
    tries: int = 25
    timeout: Optional[float] = 20.0
    cutoff: Optional[int] = None
    master_seed: int = 0
    clock: str = "cpu"
    jobs: int = 1
    scatter_pairs: Optional[list] = None
    trivial_heuristic: Optional[str] = None
    trivial_threshold: int = TRIVIAL_STEP_THRESHOLD

    def validate(self):
        for h in self.heuristics:
            if h not in HEURISTICS:
                raise ValueError(f"unknown heuristic {h!r}")
        if not self.heuristics:
            raise ValueError("no heuristics configured")
        if not self.noises:
            raise ValueError("no noise candidates configured")
        if any(not 0.0 <= wp <= 1.0 for wp in self.noises):
            raise ValueError("noise values must lie within [0, 1]")
        if self.tries < 1:
            raise ValueError("tries must be at least 1")
        if self.clock not in ("cpu", "steps"):
            raise ValueError(f"unknown clock {self.clock!r}")
        if self.clock == "steps" and (self.cutoff is None or self.timeout is not None):
            raise ValueError("steps clock needs a cutoff and no wall timeout")
        if self.clock == "cpu" and self.timeout is None and self.cutoff is None:
            raise ValueError("need a timeout or a cutoff")
        if not self.instances and not self.generate:
            raise ValueError("no instances configured")
        if self.trivial_heuristic is not None and self.trivial_heuristic not in self.heuristics:
            raise ValueError("trivial filter heuristic is not part of the experiment")
        for pair in self.scatter_pairs or []:
            if len(pair) != 2 or any(h not in self.heuristics for h in pair):
                raise ValueError(f"bad scatter pair {pair!r}")


def load_config(path) -> ExperimentConfig:
    """Read an experiment configuration from a JSON file."""
    with open(path, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    known = ExperimentConfig.__dataclass_fields__
    unknown = set(raw) - set(known)
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    if "output_dir" not in raw:
        raise ValueError("config needs an output_dir")
    config = ExperimentConfig(**raw)
    config.validate()
    return config


@dataclass
class ExperimentResult:
    records: list
    summaries: list
    trivial: list
    retained: list
    files: dict


# per-process parsed-instance cache for worker reuse
_INSTANCE_CACHE = {}


def _load_instance(path):
    entry = _INSTANCE_CACHE.get(path)
    if entry is None:
        cc = load_aiger(path)
        entry = (cc, build_profile(cc.circuit))
        _INSTANCE_CACHE[path] = entry
    return entry


def _run_job(args):
    (path, instance, heuristic, wp, try_index, master_seed,
     timeout, cutoff, clock) = args
    cc, profile = _load_instance(path)
    return run_try(cc, profile, instance, heuristic, wp, try_index, master_seed,
                   timeout=timeout, cutoff=cutoff, clock=clock)


def _materialize_instances(config: ExperimentConfig):
    """Resolve configured plus generated instances to (id, path) pairs."""
    paths = list(config.instances)
    if config.generate:
        spec = dict(config.generate)
        unknown = set(spec) - {"count", "inputs", "min_ands", "max_ands", "seed"}
        if unknown:
            raise ValueError(f"unknown generate keys: {sorted(unknown)}")
        count = int(spec["count"])
        inputs = int(spec["inputs"])
        lo, hi = int(spec["min_ands"]), int(spec["max_ands"])
        rng = random.Random(spec.get("seed", config.master_seed))
        gen_dir = os.path.join(config.output_dir, "instances")
        os.makedirs(gen_dir, exist_ok=True)
        for k in range(count):
            cc = generate_random_sat_aig(inputs, rng.randint(lo, hi), rng)
            path = os.path.join(gen_dir, f"gen-{k:04d}.aag")
            with open(path, "w", encoding="ascii") as fh:
                fh.write(serialize_ascii(cc))
            paths.append(path)
    pairs = [(os.path.basename(p), p) for p in paths]
    ids = [i for i, _ in pairs]
    if len(set(ids)) != len(ids):
        raise ValueError("instance file names must be unique")
    return pairs


def run_experiment(config: ExperimentConfig) -> ExperimentResult:
    """Run the full protocol and write tries/summaries/cactus/scatter CSVs."""
    config.validate()
    os.makedirs(config.output_dir, exist_ok=True)
    pairs = _materialize_instances(config)
    jobs = [
        (path, instance, heuristic, wp, try_index, config.master_seed,
         config.timeout, config.cutoff, config.clock)
        for instance, path in pairs
        for heuristic in config.heuristics
        for wp in config.noises
        for try_index in range(config.tries)
    ]
    if config.jobs > 1:
        with Pool(config.jobs) as pool:
            records = pool.map(_run_job, jobs, chunksize=1)
    else:
        records = [_run_job(job) for job in jobs]

    grouped = {}
    for record in records:
        grouped.setdefault((record.instance, record.heuristic), {}) \
               .setdefault(record.wp, []).append(record)
    summaries = []
    for instance, _ in pairs:
        for heuristic in config.heuristics:
            per_wp = grouped[(instance, heuristic)]
            best = _rank_noises(per_wp, config.master_seed, instance, heuristic)
            summaries.append(summarize(per_wp[best], config.tries))

    trivial, retained = [], summaries
    if config.trivial_heuristic is not None:
        reference = [s for s in summaries if s.heuristic == config.trivial_heuristic]
        trivial_ref, _ = filter_trivial(reference, config.trivial_threshold)
        trivial_ids = {s.instance for s in trivial_ref}
        trivial = [s for s in summaries if s.instance in trivial_ids]
        retained = [s for s in summaries if s.instance not in trivial_ids]

    files = {}

    def emit(name, text):
        path = os.path.join(config.output_dir, name)
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
        files[name] = path

    emit("tries.csv", records_to_csv(records))
    emit("summaries.csv", summaries_to_csv(summaries))
    emit("cactus.csv", emit_cactus_csv(retained))
    by_heuristic = {h: [s for s in retained if s.heuristic == h]
                    for h in config.heuristics}
    scatter_pairs = config.scatter_pairs
    if scatter_pairs is None:
        base = config.heuristics[0]
        scatter_pairs = [[base, h] for h in config.heuristics[1:]]
    for index, (a, b) in enumerate(scatter_pairs):
        name = "scatter.csv" if index == 0 else f"scatter_{a}_vs_{b}.csv"
        emit(name, emit_scatter_csv(by_heuristic[a], by_heuristic[b]))
    if config.trivial_heuristic is not None:
        emit("trivial.csv", summaries_to_csv(trivial))
    emit("report.txt", _report(retained, config.heuristics))
    return ExperimentResult(records, summaries, trivial, retained, files)


def _report(summaries, heuristics) -> str:
    """Plain-text digest: solved counts, median steps, pairwise comparisons."""
    by_heuristic = {h: {s.instance: s for s in summaries if s.heuristic == h}
                    for h in heuristics}
    instances = sorted({s.instance for s in summaries})
    lines = [f"instances: {len(instances)}"]
    for h in heuristics:
        entries = by_heuristic[h]
        solved = [s for s in entries.values() if s.solved]
        med = lower_median([s.median_steps for s in solved]) if solved else "n/a"
        lines.append(f"{h}: solved {len(solved)}/{len(instances)}, median steps {med}")
    lines.append("")
    lines.append("pairwise median-step comparison (instances solved by both):")
    for a in heuristics:
        for b in heuristics:
            if a == b:
                continue
            common = [i for i in instances
                      if by_heuristic[a].get(i, _UNSOLVED).solved
                      and by_heuristic[b].get(i, _UNSOLVED).solved]
            wins = sum(by_heuristic[a][i].median_steps <= by_heuristic[b][i].median_steps
                       for i in common)
            lines.append(f"  {a} <= {b}: {wins}/{len(common)}")
    base = heuristics[0]
    lines.append("")
    lines.append(f"median-step ratio vs {base} (geometric mean, solved by both):")
    for h in heuristics[1:]:
        common = [i for i in instances
                  if by_heuristic[h].get(i, _UNSOLVED).solved
                  and by_heuristic[base].get(i, _UNSOLVED).solved]
        if not common:
            lines.append(f"  {h}: n/a")
            continue
        log_sum = sum(
            math.log(max(1, by_heuristic[h][i].median_steps)
                     / max(1, by_heuristic[base][i].median_steps))
            for i in common)
        lines.append(f"  {h}: {math.exp(log_sum / len(common)):.4f}")
    return "\n".join(lines) + "\n"


_UNSOLVED = InstanceSummary("", "", 0.0, 0.0, 0.0, 0.0, False)
