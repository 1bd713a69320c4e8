"""Backward dynamic programming for single-machine family scheduling.

A state records how many jobs of each class are done and which class ran
last. From each state the controller picks the next class and its processing
time; both decisions come out as closed-form functions of the current time.
"""

from __future__ import annotations

import csv
import io
import json
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Optional, Sequence

from .argmin import ArgminPolicy, PolicySegment, argmin_policy, value_function
from .pwl import (
    INF,
    DeviationCost,
    PwlFunction,
    WinnerInterval,
    add_constant,
    as_rational,
    fmt_rational,
    lower_envelope,
    pwl_sum,
    ramp,
    shift,
)

log = logging.getLogger(__name__)


class InstanceError(ValueError):
    """Malformed or infeasible problem instance."""


@dataclass(frozen=True)
class Job:
    alpha: Fraction
    dd: Fraction

    def __post_init__(self):
        object.__setattr__(self, "alpha", as_rational(self.alpha))
        object.__setattr__(self, "dd", as_rational(self.dd))


@dataclass(frozen=True)
class ClassData:
    """Jobs of one class (in processing order) and its processing-time window."""

    jobs: tuple
    beta: Fraction
    pt_low: Fraction
    pt_nom: Fraction

    def __post_init__(self):
        object.__setattr__(self, "jobs", tuple(j if isinstance(j, Job) else Job(*j) for j in self.jobs))
        for name in ("beta", "pt_low", "pt_nom"):
            object.__setattr__(self, name, as_rational(getattr(self, name)))


@dataclass(frozen=True)
class ProblemInstance:
    """Classes plus optional setup matrices.

    ``setup_time`` / ``setup_cost`` are ``(C+1) x C``: row 0 is the setup from
    the initial (empty) machine, row ``c`` from class ``c``. A ``C x C``
    matrix gets a zero initial row prepended. When both are omitted the
    no-setup model is used, in which states with equal counts coincide.
    """

    classes: tuple
    setup_time: Optional[tuple] = None
    setup_cost: Optional[tuple] = None

    def __post_init__(self):
        classes = tuple(self.classes)
        if not classes:
            raise InstanceError("instance has no classes")
        for c, cd in enumerate(classes, start=1):
            if not cd.jobs:
                raise InstanceError(f"class {c} has no jobs")
            if not 0 < cd.pt_low < cd.pt_nom:
                raise InstanceError(f"class {c}: need 0 < pt_low < pt_nom")
            if cd.beta <= 0:
                raise InstanceError(f"class {c}: beta must be positive")
            for k, job in enumerate(cd.jobs, start=1):
                if job.alpha <= 0:
                    raise InstanceError(f"class {c} job {k}: alpha must be positive")
            dds = [j.dd for j in cd.jobs]
            if any(b < a for a, b in zip(dds, dds[1:])):
                raise InstanceError(f"class {c}: due dates must be nondecreasing")
        C = len(classes)
        object.__setattr__(self, "classes", classes)
        if self.setup_time is None and self.setup_cost is None:
            return
        object.__setattr__(self, "setup_time", self._matrix(self.setup_time, C, "setup_time"))
        object.__setattr__(self, "setup_cost", self._matrix(self.setup_cost, C, "setup_cost"))

    @staticmethod
    def _matrix(m, C, name):
        if m is None:
            return tuple(tuple(Fraction(0) for _ in range(C)) for _ in range(C + 1))
        rows = [tuple(as_rational(v) for v in row) for row in m]
        if len(rows) == C:
            rows.insert(0, tuple(Fraction(0) for _ in range(C)))
        if len(rows) != C + 1 or any(len(r) != C for r in rows):
            raise InstanceError(f"{name} must be {C}x{C} or {C + 1}x{C}")
        if any(v < 0 for r in rows for v in r):
            raise InstanceError(f"{name} entries must be nonnegative")
        return tuple(rows)

    @property
    def n_classes(self) -> int:
        return len(self.classes)

    @property
    def has_setup(self) -> bool:
        return self.setup_time is not None

    @property
    def job_counts(self) -> tuple:
        return tuple(len(c.jobs) for c in self.classes)

    def st(self, last: int, c: int) -> Fraction:
        return self.setup_time[last][c - 1] if self.has_setup else Fraction(0)

    def sc(self, last: int, c: int) -> Fraction:
        return self.setup_cost[last][c - 1] if self.has_setup else Fraction(0)


@dataclass(frozen=True, order=True)
class SchedState:
    """Completed counts per class and the last class processed (0 = none).

    In the no-setup model ``last_class`` is always 0.
    """

    completed: tuple
    last_class: int = 0

    @property
    def stage(self) -> int:
        return sum(self.completed)

    def label(self) -> str:
        return ",".join(str(n) for n in (*self.completed, self.last_class))


# ---------------------------------------------------------------------------
# state graph


def initial_state(inst: ProblemInstance) -> SchedState:
    return SchedState(tuple(0 for _ in inst.classes), 0)


def successors(inst: ProblemInstance, s: SchedState) -> list[tuple[int, SchedState]]:
    """``(class, next_state)`` for every class with jobs left."""
    out = []
    for c, N in enumerate(inst.job_counts, start=1):
        if s.completed[c - 1] < N:
            nxt = list(s.completed)
            nxt[c - 1] += 1
            out.append((c, SchedState(tuple(nxt), c if inst.has_setup else 0)))
    return out


def is_terminal(inst: ProblemInstance, s: SchedState) -> bool:
    return tuple(s.completed) == inst.job_counts


def state_graph(inst: ProblemInstance) -> list[list[SchedState]]:
    """Reachable states grouped by stage (number of completed jobs)."""
    stages: list[list[SchedState]] = [[initial_state(inst)]]
    total = sum(inst.job_counts)
    for _ in range(total):
        nxt = sorted({s2 for s in stages[-1] for _, s2 in successors(inst, s)})
        stages.append(nxt)
    return stages


# ---------------------------------------------------------------------------
# stage problem


def stage_cost(inst: ProblemInstance, state: SchedState, next_class: int, J_next: PwlFunction) -> tuple[PwlFunction, DeviationCost]:
    """``(f, g)`` such that choosing ``next_class`` with processing time ``x``
    at time ``t`` costs ``f(x + t) + g(x)``.

    ``f`` bundles the tardiness ramp (due date moved earlier by the setup
    time), the setup cost and the downstream cost-to-go shifted by the setup
    time; ``g`` is the compression cost window.
    """
    c = next_class
    if not 1 <= c <= inst.n_classes:
        raise InstanceError(f"no class {c}")
    k = state.completed[c - 1]
    cd = inst.classes[c - 1]
    if k >= len(cd.jobs):
        raise InstanceError(f"class {c} is exhausted in state {state.label()}")
    job = cd.jobs[k]
    st = inst.st(state.last_class, c)
    f = pwl_sum(ramp(job.dd - st, job.alpha), shift(J_next, st))
    f = add_constant(f, inst.sc(state.last_class, c))
    return f, DeviationCost(cd.pt_low, cd.pt_nom, cd.beta)


@dataclass(frozen=True)
class ClassOption:
    """Outcome of fixing the next class: the stage problem, its minimizer and
    the conditioned cost-to-go."""

    cls: int
    f: PwlFunction
    g: DeviationCost
    policy: ArgminPolicy
    cost_to_go: PwlFunction
    next_state: SchedState


@dataclass(frozen=True)
class StateSolution:
    state: SchedState
    cost_to_go: PwlFunction
    options: dict = field(default_factory=dict)  # class -> ClassOption
    class_intervals: tuple = ()  # WinnerIntervals, winners are class numbers

    @property
    def terminal(self) -> bool:
        return not self.options

    @property
    def tie_intervals(self) -> list[WinnerInterval]:
        return [iv for iv in self.class_intervals if iv.is_tie]

    def class_at(self, t, alternative: bool = False) -> int:
        if self.terminal:
            raise ValueError(f"state {self.state.label()} is terminal")
        for iv in self.class_intervals:
            if iv.contains(t):
                return iv.winners[-1] if alternative else iv.winners[0]
        raise ValueError(f"t={t} not covered")

    def class_strategy(self, alternative: bool = False) -> list[tuple]:
        """``(lo, hi, class)`` with adjacent equal choices merged."""
        out: list[list] = []
        for iv in self.class_intervals:
            c = iv.winners[-1] if alternative else iv.winners[0]
            if out and out[-1][2] == c:
                out[-1][1] = iv.hi
            else:
                out.append([iv.lo, iv.hi, c])
        return [tuple(r) for r in out]

    def pt_strategy(self, alternative: bool = False) -> list[PolicySegment]:
        """Processing-time rule stitched from the chosen class' minimizer."""
        segs: list[PolicySegment] = []
        for lo, hi, c in self.class_strategy(alternative):
            for s in self.options[c].policy.segments:
                a, b = max(lo, s.lo), min(hi, s.hi)
                if a < b:
                    if segs and segs[-1].hi == a and segs[-1].value == s.value and segs[-1].descending == s.descending:
                        segs[-1] = PolicySegment(segs[-1].lo, b, s.value, s.descending)
                    else:
                        segs.append(PolicySegment(a, b, s.value, s.descending))
        return segs

    def decide(self, t, alternative: bool = False) -> tuple[int, Fraction]:
        c = self.class_at(t, alternative)
        return c, self.options[c].policy(t)


@dataclass(frozen=True)
class Solution:
    instance: ProblemInstance
    states: dict  # SchedState -> StateSolution

    @property
    def start(self) -> StateSolution:
        return self.states[initial_state(self.instance)]

    def __getitem__(self, state) -> StateSolution:
        return self.states[_as_state(self.instance, state)]

    def cost_to_go(self, state) -> PwlFunction:
        return self[state].cost_to_go


def _as_state(inst: ProblemInstance, state) -> SchedState:
    if isinstance(state, SchedState):
        return state
    tup = tuple(state)
    C = inst.n_classes
    if len(tup) == C:
        return SchedState(tup, 0)
    if len(tup) == C + 1:
        return SchedState(tup[:C], tup[C])
    raise ValueError(f"cannot read {state!r} as a state")


def solve_state(inst: ProblemInstance, state: SchedState, downstream: dict) -> StateSolution:
    options = {}
    for c, nxt in successors(inst, state):
        f, g = stage_cost(inst, state, c, downstream[nxt].cost_to_go)
        pol = argmin_policy(f, g)
        options[c] = ClassOption(c, f, g, pol, value_function(f, g, pol), nxt)
    if not options:
        return StateSolution(state, PwlFunction.constant(0))
    classes = sorted(options)
    J, ivs = lower_envelope([options[c].cost_to_go for c in classes])
    ivs = tuple(WinnerInterval(iv.lo, iv.hi, tuple(classes[w] for w in iv.winners)) for iv in ivs)
    return StateSolution(state, J, options, ivs)


def solve(inst: ProblemInstance) -> Solution:
    """Costs-to-go and strategies for every reachable state."""
    stages = state_graph(inst)
    done: dict = {}
    for layer in reversed(stages):
        for s in layer:
            done[s] = solve_state(inst, s, done)
    log.debug("solved %d states", len(done))
    return Solution(inst, done)


def eval_strategy(sol: Solution, state, t, alternative: bool = False) -> tuple[int, Fraction]:
    """``(class, processing_time)`` to apply in ``state`` at time ``t``.

    On tie intervals the lowest class wins unless ``alternative`` is set, in
    which case the highest co-optimal class is returned.
    """
    return sol[state].decide(as_rational(t), alternative)


# ---------------------------------------------------------------------------
# closed-loop replay


@dataclass(frozen=True)
class ReplayEvent:
    step: int
    state: SchedState
    cls: int
    start: Fraction
    setup_time: Fraction
    tau: Fraction
    delay: Fraction
    completion: Fraction
    tardiness_cost: Fraction
    deviation_cost: Fraction
    setup_cost: Fraction

    @property
    def cost(self) -> Fraction:
        return self.tardiness_cost + self.deviation_cost + self.setup_cost


@dataclass(frozen=True)
class ReplayResult:
    events: tuple
    total_cost: Fraction
    final_time: Fraction


def replay(sol: Solution, inst: Optional[ProblemInstance] = None, t0=0, perturbations: Sequence = (), alternative: bool = False) -> ReplayResult:
    """Run the feedback strategies from the initial state.

    ``perturbations[k]`` is an extra delay added to the k-th operation after
    its processing time was chosen; the strategy reacts at the next decision.
    """
    inst = inst or sol.instance
    delays = [as_rational(d) for d in perturbations]
    if any(d < 0 for d in delays):
        raise ValueError("perturbation delays must be nonnegative")
    if len(delays) > sum(inst.job_counts):
        raise ValueError("more perturbations than operations")
    t = as_rational(t0)
    s = initial_state(inst)
    events = []
    total = Fraction(0)
    step = 0
    while not is_terminal(inst, s):
        c, tau = sol[s].decide(t, alternative)
        cd = inst.classes[c - 1]
        job = cd.jobs[s.completed[c - 1]]
        st, sc = inst.st(s.last_class, c), inst.sc(s.last_class, c)
        delay = delays[step] if step < len(delays) else Fraction(0)
        done = t + st + tau + delay
        ev = ReplayEvent(step, s, c, t, st, tau, delay, done,
                         job.alpha * max(done - job.dd, Fraction(0)),
                         cd.beta * (cd.pt_nom - tau), sc)
        events.append(ev)
        total += ev.cost
        s = dict(successors(inst, s))[c]
        t = done
        step += 1
    return ReplayResult(tuple(events), total, t)


# ---------------------------------------------------------------------------
# I/O


def instance_from_dict(data: dict) -> ProblemInstance:
    try:
        classes = []
        for cd in data["classes"]:
            jobs = tuple(Job(as_rational(j["alpha"]), as_rational(j["dd"])) for j in cd["jobs"])
            classes.append(ClassData(jobs, as_rational(cd["beta"]), as_rational(cd["pt_low"]), as_rational(cd["pt_nom"])))
        return ProblemInstance(tuple(classes), data.get("setup_time"), data.get("setup_cost"))
    except InstanceError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise InstanceError(f"bad instance data: {exc}") from exc


def instance_to_dict(inst: ProblemInstance) -> dict:
    out = {
        "classes": [
            {
                "beta": fmt_rational(cd.beta),
                "pt_low": fmt_rational(cd.pt_low),
                "pt_nom": fmt_rational(cd.pt_nom),
                "jobs": [{"alpha": fmt_rational(j.alpha), "dd": fmt_rational(j.dd)} for j in cd.jobs],
            }
            for cd in inst.classes
        ]
    }
    if inst.has_setup:
        out["setup_time"] = [[fmt_rational(v) for v in r] for r in inst.setup_time]
        out["setup_cost"] = [[fmt_rational(v) for v in r] for r in inst.setup_cost]
    return out


def load_instance(path) -> ProblemInstance:
    """Read a JSON or YAML instance file."""
    import yaml

    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise InstanceError(f"cannot read {path}: {exc}") from exc
    try:
        data = json.loads(text) if path.suffix == ".json" else yaml.safe_load(text)
    except (json.JSONDecodeError, yaml.YAMLError) as exc:
        raise InstanceError(f"cannot parse {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise InstanceError(f"{path}: top level must be a mapping")
    return instance_from_dict(data)


def _bound(x) -> str:
    return fmt_rational(x)


def export_solution(sol: Solution) -> dict:
    """Per-state records: serialized cost-to-go, class and processing-time tables."""
    records = []
    for s in sorted(sol.states, key=lambda s: (s.stage, s)):
        ss = sol.states[s]
        rec = {
            "state": {"completed": list(s.completed), "last_class": s.last_class},
            "stage": s.stage,
            "J": ss.cost_to_go.serialize(),
        }
        if not ss.terminal:
            rec["class_strategy"] = [
                {"lo": _bound(iv.lo), "hi": _bound(iv.hi), "classes": list(iv.winners)} for iv in ss.class_intervals
            ]
            rec["tau"] = [
                {"lo": _bound(p.lo), "hi": _bound(p.hi), "kind": "desc" if p.descending else "const", "value": fmt_rational(p.value)}
                for p in ss.pt_strategy()
            ]
            rec["conditioned"] = {str(c): o.cost_to_go.serialize() for c, o in sorted(ss.options.items())}
        records.append(rec)
    return {"instance": instance_to_dict(sol.instance), "states": records}


def sample_csv(sol: Solution, state, ts: Iterable, alternative: bool = False) -> str:
    """CSV with columns ``t, J, class, tau`` (floats) for plotting."""
    ss = sol[state]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "J", "class", "tau"])
    for t in ts:
        t = as_rational(t)
        c, tau = ss.decide(t, alternative)
        w.writerow([float(t), float(ss.cost_to_go(t)), c, float(tau)])
    return buf.getvalue()
