import random
from fractions import Fraction

import pytest

from pwlsched.goldens import load_fixture
from pwlsched.oracle import (
    MAX_ENUM_JOBS,
    enumerate_sequences,
    exact_envelope,
    grid_argmin,
    random_instance,
    random_pwl,
    random_window_pair,
    sequence_cost,
)
from pwlsched.pwl import DeviationCost, PwlFunction
from pwlsched.scheduler import ClassData, Job, ProblemInstance, instance_from_dict, solve

from _support import dp_oracle_campaign

F = Fraction


@pytest.fixture(scope="module")
def sec5():
    inst = instance_from_dict(load_fixture("sec5")["instance"])
    return inst, solve(inst)


class TestEnumerateSequences:
    def test_sec5_at_zero(self, sec5):
        inst, _ = sec5
        best, _ = enumerate_sequences(inst, 0)
        assert abs(best) <= 1e-9

    def test_sec5_matches_solve(self, sec5):
        inst, sol = sec5
        for t0 in (14, 11, F(46, 3), 20, -3):
            best, _ = enumerate_sequences(inst, t0)
            assert abs(best - float(sol.start.cost_to_go(t0))) <= 1e-6

    def test_one_job_is_window_minimum(self):
        inst = ProblemInstance((ClassData((Job(2, 10),), 1, 1, 4),))
        f = PwlFunction(0, (10,), (2,))
        g = DeviationCost(1, 4, 1)
        for t0 in range(0, 15):
            best, seq = enumerate_sequences(inst, t0)
            _, v = grid_argmin(f, g, t0)
            assert seq == (1,)
            assert abs(best - v) <= 1e-6

    def test_size_cap(self):
        jobs = tuple(Job(1, 5 + k) for k in range(MAX_ENUM_JOBS + 1))
        inst = ProblemInstance((ClassData(jobs, 1, 1, 2),))
        with pytest.raises(ValueError):
            enumerate_sequences(inst, 0)

    def test_setup_costs_counted(self):
        cd = ClassData((Job(1, 100),), 1, 1, 2)
        inst = ProblemInstance((cd, cd), [[0, 0], [0, 0], [0, 0]], [[0, 0], [0, 3], [5, 0]])
        best, seq = enumerate_sequences(inst, 0)
        assert seq == (1, 2) and abs(best - 3) <= 1e-9
        assert abs(sequence_cost(inst, (2, 1), 0) - 5) <= 1e-9

    def test_campaign(self):
        tally = dp_oracle_campaign(n_instances=15, n_t=3, seed=17)
        assert tally.ok, tally.failures


class TestExactEnvelope:
    def test_ties_go_right(self):
        f = PwlFunction(0, (0,), (1,))
        x, v = exact_envelope(f, DeviationCost(0, 2, 1), 0)
        assert (x, v) == (2, 2)

    def test_agrees_with_grid(self):
        rng = random.Random(0)
        for _ in range(100):
            f, g = random_window_pair(rng)
            t = F(rng.randint(-10, 40))
            _, v = exact_envelope(f, g, t)
            _, vg = grid_argmin(f, g, t)
            assert abs(float(v) - vg) <= 1e-9


class TestGenerators:
    def test_seed_reproducible(self):
        a = [random_pwl(random.Random(3)) for _ in range(2)]
        assert a[0] == a[1]
        assert random_instance(random.Random(4)) == random_instance(random.Random(4))

    def test_shapes(self):
        rng = random.Random(5)
        for _ in range(200):
            f = random_pwl(rng)
            assert 1 <= f.M <= 8
            inst = random_instance(rng, max_jobs=5)
            assert sum(inst.job_counts) <= 5

    def test_both_crossing_kinds_occur(self):
        from pwlsched.argmin import crossing_sets

        rng = random.Random(6)
        with_b = 0
        for _ in range(400):
            f, g = random_window_pair(rng)
            with_b += bool(crossing_sets(f, g.nu).B)
        assert 0.25 < with_b / 400 < 0.9
