"""Command-line front end.

Subcommands::

    pwlsched solve INSTANCE [-o OUT]          solution export (JSON)
    pwlsched export INSTANCE --t-min A --t-max B --step S [--state ...]
    pwlsched replay INSTANCE --t0 T [--perturbations d1,d2,...]
    pwlsched example {ex1..ex9,sec5,sec6}

Exit codes: 0 ok, 2 usage, 3 parse error, 4 infeasible instance,
5 golden mismatch.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .goldens import EXAMPLE_IDS, run_example
from .pwl import as_rational
from .render import render
from .scheduler import InstanceError, export_solution, load_instance, replay, sample_csv, solve

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_PARSE = 3
EXIT_INFEASIBLE = 4
EXIT_MISMATCH = 5

log = logging.getLogger("pwlsched")


@dataclass
class RunConfig:
    command: str
    instance_path: Optional[str] = None
    output_path: Optional[str] = None
    format: str = "fractions"  # table | csv | fractions | decimal
    example_id: Optional[str] = None
    t0: Optional[str] = None
    perturbations: list = field(default_factory=list)
    alt_strategies: bool = False
    state: Optional[str] = None
    t_min: str = "0"
    t_max: str = "40"
    step: str = "1/2"

    def __post_init__(self):
        if self.command == "example" and self.example_id not in EXAMPLE_IDS:
            raise ValueError(f"unknown example {self.example_id!r}")
        if self.command == "replay" and self.t0 is None:
            raise ValueError("replay needs t0")


def _style(fmt: str) -> str:
    return "decimal" if fmt == "decimal" else "fraction"


def _emit(text: str, path: Optional[str]):
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")


def _parse_state(text: Optional[str], inst):
    if not text:
        return tuple(0 for _ in inst.classes) + ((0,) if inst.has_setup else ())
    return tuple(int(x) for x in text.split(","))


def run(cfg: RunConfig) -> int:
    rend = lambda q: render(q, _style(cfg.format))  # noqa: E731
    if cfg.command == "example":
        rep = run_example(cfg.example_id, rend)
        for line in rep.lines:
            print(line)
        for c in rep.checks:
            print(f"[{'ok' if c.ok else 'MISMATCH'}] {c.name}" + ("" if c.ok else f"  {c.detail}"))
        print(f"{cfg.example_id}: {'PASS' if rep.ok else 'FAIL'}")
        return EXIT_OK if rep.ok else EXIT_MISMATCH

    try:
        inst = load_instance(cfg.instance_path)
    except InstanceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    try:
        sol = solve(inst)
    except (InstanceError, ValueError, ArithmeticError) as exc:
        print(f"error: cannot solve instance: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE

    if cfg.command == "solve":
        _emit(json.dumps(export_solution(sol), indent=1), cfg.output_path)
        return EXIT_OK

    if cfg.command == "export":
        try:
            state = _parse_state(cfg.state, inst)
            lo, hi, step = as_rational(cfg.t_min), as_rational(cfg.t_max), as_rational(cfg.step)
            if step <= 0 or hi < lo:
                raise ValueError("need step > 0 and t_max >= t_min")
            ts = []
            t = lo
            while t <= hi:
                ts.append(t)
                t += step
            _emit(sample_csv(sol, state, ts, cfg.alt_strategies), cfg.output_path)
        except (KeyError, ValueError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_PARSE
        return EXIT_OK

    if cfg.command == "replay":
        try:
            res = replay(sol, inst, as_rational(cfg.t0), [as_rational(d) for d in cfg.perturbations], cfg.alt_strategies)
        except ValueError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_PARSE
        lines = ["step,state,class,start,setup,tau,delay,completion,cost"]
        for e in res.events:
            lines.append(",".join([str(e.step), e.state.label().replace(",", " "), str(e.cls)]
                                  + [rend(x) for x in (e.start, e.setup_time, e.tau, e.delay, e.completion, e.cost)]))
        lines.append(f"total_cost,{rend(res.total_cost)}")
        lines.append(f"predicted_cost,{rend(sol.start.cost_to_go(as_rational(cfg.t0)))}")
        _emit("\n".join(lines), cfg.output_path)
        return EXIT_OK

    raise ValueError(f"unknown command {cfg.command!r}")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pwlsched", description="Exact DP scheduler with closed-form feedback strategies.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, instance=True):
        if instance:
            sp.add_argument("instance_path", help="JSON or YAML instance file")
        sp.add_argument("-o", "--output", dest="output_path")
        sp.add_argument("--format", choices=["table", "csv", "fractions", "decimal"], default="fractions")
        sp.add_argument("--alt", dest="alt_strategies", action="store_true", help="prefer the highest class on ties")

    common(sub.add_parser("solve", help="solve and write the per-state export"))
    sp = sub.add_parser("export", help="sample t, J, class, tau to CSV")
    common(sp)
    sp.add_argument("--state", help="comma-separated state, e.g. 0,0,0 (default: initial)")
    sp.add_argument("--t-min", default="0")
    sp.add_argument("--t-max", default="40")
    sp.add_argument("--step", default="1/2")
    sp = sub.add_parser("replay", help="closed-loop run with optional delays")
    common(sp)
    sp.add_argument("--t0", required=True)
    sp.add_argument("--perturbations", default="", help="comma-separated extra delays per operation")
    sp = sub.add_parser("example", help="run a built-in reference fixture")
    common(sp, instance=False)
    sp.add_argument("example_id", choices=EXAMPLE_IDS)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.DEBUG if ns.verbose else logging.WARNING)
    kw = {k: v for k, v in vars(ns).items() if k in RunConfig.__dataclass_fields__}
    if "perturbations" in kw:
        kw["perturbations"] = [x for x in kw["perturbations"].split(",") if x.strip()]
    return run(RunConfig(**kw))


if __name__ == "__main__":
    sys.exit(main())
