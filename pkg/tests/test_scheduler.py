import json
import random
from fractions import Fraction

import numpy as np
import pytest

from pwlsched.goldens import check_sec5, check_sec6, load_fixture, parse_label
from pwlsched.pwl import INF, DeviationCost, PwlFunction
from pwlsched.scheduler import (
    ClassData,
    InstanceError,
    Job,
    ProblemInstance,
    SchedState,
    eval_strategy,
    export_solution,
    initial_state,
    instance_from_dict,
    instance_to_dict,
    load_instance,
    replay,
    sample_csv,
    solve,
    stage_cost,
    state_graph,
)

from _support import dp_property_campaign

F = Fraction


@pytest.fixture(scope="module")
def sec5():
    inst = instance_from_dict(load_fixture("sec5")["instance"])
    return inst, solve(inst)


@pytest.fixture(scope="module")
def sec6():
    inst = instance_from_dict(load_fixture("sec6")["instance"])
    return inst, solve(inst)


def single_job(alpha=2, beta=1, dd=10, low=1, nom=4):
    return ProblemInstance((ClassData((Job(alpha, dd),), beta, low, nom),))


class TestInstance:
    def test_validation(self):
        with pytest.raises(InstanceError):
            ProblemInstance(())
        with pytest.raises(InstanceError):
            ProblemInstance((ClassData((), 1, 1, 2),))
        with pytest.raises(InstanceError):
            ProblemInstance((ClassData((Job(1, 5),), 1, 2, 2),))
        with pytest.raises(InstanceError):
            ProblemInstance((ClassData((Job(1, 5), Job(1, 4)), 1, 1, 2),))
        with pytest.raises(InstanceError):
            ProblemInstance((ClassData((Job(0, 5),), 1, 1, 2),))

    def test_setup_matrix_shapes(self):
        cd = ClassData((Job(1, 5),), 1, 1, 2)
        inst = ProblemInstance((cd, cd), [[0, 1], [2, 0]], [[0, 3], [4, 0]])
        assert inst.setup_time[0] == (0, 0) and inst.st(2, 1) == 2 and inst.sc(1, 2) == 3
        with pytest.raises(InstanceError):
            ProblemInstance((cd, cd), [[0, 1, 2]], None)

    def test_dict_round_trip(self):
        data = load_fixture("sec6")["instance"]
        inst = instance_from_dict(data)
        assert instance_from_dict(instance_to_dict(inst)) == inst

    def test_bad_dict(self):
        with pytest.raises(InstanceError):
            instance_from_dict({"classes": [{"beta": 1}]})

    def test_load_yaml_and_json(self, tmp_path):
        data = load_fixture("sec5")["instance"]
        p = tmp_path / "i.json"
        p.write_text(json.dumps(data))
        y = tmp_path / "i.yaml"
        y.write_text("classes:\n  - {beta: 1, pt_low: 1, pt_nom: 4, jobs: [{alpha: 1/2, dd: 10}]}\n")
        assert load_instance(p) == instance_from_dict(data)
        assert load_instance(y).classes[0].jobs[0].alpha == F(1, 2)


class TestStateGraph:
    def test_sec6_counts(self, sec6):
        inst, _ = sec6
        stages = state_graph(inst)
        assert len(stages) == 8 and sum(map(len, stages)) == 32

    def test_single_job_chain(self):
        stages = state_graph(single_job())
        assert [len(s) for s in stages] == [1, 1]

    def test_sec5_no_setup_collapse(self, sec5):
        inst, _ = sec5
        assert sum(map(len, state_graph(inst))) == 6


class TestStageCost:
    def test_sec6_s29(self, sec6):
        inst, sol = sec6
        s = SchedState((3, 3), 2)
        f, g = stage_cost(inst, s, 1, sol[(4, 3, 1)].cost_to_go)
        assert f == PwlFunction.parse("init 1; bp 81/2 1/2")
        assert g == DeviationCost(4, 8, 1)

    def test_sec5_s4(self, sec5):
        inst, _ = sec5
        f, g = stage_cost(inst, SchedState((1, 1)), 2, PwlFunction.constant(0))
        assert f == PwlFunction(0, (20,), (F(3, 4),))
        assert g == DeviationCost(1, 2, 1)

    def test_zero_setup_matches_plain(self, sec5):
        inst, _ = sec5
        zero = ProblemInstance(inst.classes, [[0, 0]] * 3, [[0, 0]] * 3)
        J = PwlFunction(1, (5,), (2,))
        for c in (1, 2):
            assert stage_cost(zero, SchedState((0, 0), 0), c, J) == stage_cost(inst, SchedState((0, 0)), c, J)

    def test_exhausted_class(self, sec5):
        inst, _ = sec5
        with pytest.raises(InstanceError):
            stage_cost(inst, SchedState((1, 0)), 1, PwlFunction.constant(0))


class TestSec5:
    def test_golden_report(self):
        rep = check_sec5()
        assert rep.ok, [c for c in rep.checks if not c.ok]

    def test_class_switch(self, sec5):
        _, sol = sec5
        ss = sol[(0, 0)]
        assert ss.class_at(F(46, 3) - F(1, 1000)) == 1 and ss.class_at(F(46, 3)) == 2

    def test_strategy_examples(self, sec5):
        _, sol = sec5
        assert eval_strategy(sol, (0, 0), F(33, 2)) == (2, F(3, 2))
        assert eval_strategy(sol, (0, 0), 11) == (1, 4)
        assert eval_strategy(sol, (0, 0), 11, alternative=True) == (2, 2)

    def test_terminal_state_raises(self, sec5):
        _, sol = sec5
        with pytest.raises(ValueError):
            eval_strategy(sol, (1, 2), 0)

    def test_reported_tie_present(self, sec5):
        _, sol = sec5
        ties = [(iv.lo, iv.hi) for iv in sol[(0, 0)].tie_intervals]
        assert (10, 13) in ties

    def test_replay_at_zero(self, sec5):
        _, sol = sec5
        assert replay(sol, t0=0).total_cost == 0 == sol.start.cost_to_go(0)


class TestSec6:
    def test_golden_report(self):
        rep = check_sec6()
        assert rep.ok, [c for c in rep.checks if not c.ok]

    def test_named_record(self, sec6):
        _, sol = sec6
        J = sol[(3, 2, 1)].cost_to_go
        assert J == PwlFunction(F(1, 2), (23, 24, F(51, 2), 31), (1, 0, F(1, 2), F(3, 2)))

    def test_initial_record(self, sec6):
        _, sol = sec6
        J = sol.start.cost_to_go
        assert J.initial_value == F(1, 2) and J.M == 19
        assert J == PwlFunction.parse(load_fixture("sec6")["cost_to_go"]["0,0,0"])

    def test_replay_equals_cost_to_go(self, sec6):
        _, sol = sec6
        res = replay(sol, t0=0)
        assert res.total_cost == sol.start.cost_to_go(0) == F(47, 4)

    def test_every_listed_record(self, sec6):
        _, sol = sec6
        for label, ser in load_fixture("sec6")["cost_to_go"].items():
            st, cond = parse_label(label)
            ss = sol[st]
            got = ss.options[cond].cost_to_go if cond else ss.cost_to_go
            assert got == PwlFunction.parse(ser), label


class TestSingleJob:
    def test_closed_form(self):
        inst = single_job(alpha=2, beta=1, dd=10, low=1, nom=4)
        ss = solve(inst).start
        table = [(p.lo, p.hi, p.descending, p.value) for p in ss.pt_strategy()]
        assert table == [(-INF, 6, False, 4), (6, 9, True, 10), (9, INF, False, 1)]
        assert ss.cost_to_go.M == 2

    def test_grid_minimization(self):
        inst = single_job(alpha=3, beta=F(1, 2), dd=7, low=F(1, 2), nom=3)
        J = solve(inst).start.cost_to_go
        taus = np.linspace(0.5, 3, 5001)
        for t in np.linspace(-2, 12, 57):
            costs = 3 * np.maximum(t + taus - 7, 0) + 0.5 * (3 - taus)
            assert abs(costs.min() - float(J(F(t)))) <= 3 * (2.5 / 5000) + 1e-9


class TestProperties:
    def test_dp_campaign(self):
        out = dp_property_campaign()
        for name, tally in out.items():
            assert tally.checks >= 1000, name
            assert tally.ok, (name, tally.failures)

    def test_replay_with_delays_costs_more(self, sec6):
        _, sol = sec6
        rng = random.Random(0)
        for _ in range(20):
            t0 = F(rng.randint(-40, 80), 2)
            delays = [F(rng.randint(0, 8), 4) for _ in range(7)]
            assert replay(sol, t0=t0, perturbations=delays).total_cost >= sol.start.cost_to_go(t0)

    def test_replay_rejects_bad_delays(self, sec5):
        _, sol = sec5
        with pytest.raises(ValueError):
            replay(sol, perturbations=[-1])
        with pytest.raises(ValueError):
            replay(sol, perturbations=[0] * 4)


class TestExport:
    def test_export_records(self, sec5):
        _, sol = sec5
        out = export_solution(sol)
        assert len(out["states"]) == 6
        first = out["states"][0]
        assert first["state"] == {"completed": [0, 0], "last_class": 0}
        assert PwlFunction.parse(first["J"]) == sol.start.cost_to_go

    def test_sample_csv(self, sec5):
        _, sol = sec5
        text = sample_csv(sol, (0, 0), [0, F(33, 2)])
        lines = text.strip().splitlines()
        assert lines[0] == "t,J,class,tau"
        assert lines[2].split(",")[2:] == ["2", "1.5"]

    def test_state_lookup(self, sec6):
        inst, sol = sec6
        assert sol[(0, 0, 0)] is sol.start
        assert sol[initial_state(inst)] is sol.start
        with pytest.raises(ValueError):
            sol[(0,)]
