import math

import numpy as np
import pytest

from diracbvp.boundary import BoundaryConditions
from diracbvp.gridfn import SampledFunction
from diracbvp.ode import DiracSystem
from diracbvp.stability import (
    PotentialBallSampler,
    eigen_deviation,
    eigenfunction_deviation,
    run_ball_experiment,
    two_sided_check,
)

from conftest import smooth_potential

SEP_BC = BoundaryConditions.from_canonical(0, 1, 1, 0)


class TestEigenDeviation:
    def test_identical_potentials(self):
        n = 96
        sys = smooth_potential(71, n, l1_norm=0.4)
        report = eigen_deviation(sys, sys, SEP_BC, 8, 2, n_grid=n)
        assert report.sup == 0.0
        assert report.lp_sum == 0.0
        assert report.reference == 0.0

    def test_q12_zero_b_zero_invariance(self):
        # eigenvalues do not move at all when Q12 = 0 and b = 0, for any Q21
        n = 96
        x = np.linspace(0, 1, n + 1)
        bc = BoundaryConditions.from_canonical(1.0, 0.0, 0.2, 1.0)
        qa = DiracSystem(-1.0, 2.0, SampledFunction.zero(n), SampledFunction(np.exp(2j * np.pi * x)))
        qb = DiracSystem(-1.0, 2.0, SampledFunction.zero(n), SampledFunction((np.cos(np.pi * x) * 1.5).astype(complex)))
        report = eigen_deviation(qa, qb, bc, 8, 2, n_grid=n)
        assert report.sup < 1e-8
        assert report.reference > 0.1

    def test_scaling_family_lipschitz_ratio(self):
        n = 128
        base = smooth_potential(72, n, l1_norm=0.6)
        zero = DiracSystem.zero(base.b1, base.b2, n)
        ratios = []
        for s in (0.25, 0.5, 1.0):
            scaled = DiracSystem(base.b1, base.b2, base.q12.scale(s), base.q21.scale(s))
            rep = eigen_deviation(scaled, zero, SEP_BC, 10, 2, n_grid=n)
            ratios.append(math.sqrt(rep.lp_sum) / rep.reference)
        assert max(ratios) / min(ratios) < 3.0

    def test_aggregates_recomputable(self):
        n = 96
        sys = smooth_potential(73, n, l1_norm=0.4)
        zero = DiracSystem.zero(sys.b1, sys.b2, n)
        rep = eigen_deviation(sys, zero, SEP_BC, 8, 1.5, n_grid=n)
        lp, wt, sup = rep.recompute_aggregates()
        assert lp == pytest.approx(rep.lp_sum)
        assert wt == pytest.approx(rep.weighted_sum)
        assert sup == pytest.approx(rep.sup)

    def test_triangle_consistency(self):
        n = 96
        qa = smooth_potential(74, n, l1_norm=0.3)
        qb = smooth_potential(75, n, l1_norm=0.3, b1=qa.b1, b2=qa.b2)
        zero = DiracSystem.zero(qa.b1, qa.b2, n)
        d_ab = eigen_deviation(qa, qb, SEP_BC, 8, 2, n_grid=n).sup
        d_a0 = eigen_deviation(qa, zero, SEP_BC, 8, 2, n_grid=n).sup
        d_0b = eigen_deviation(zero, qb, SEP_BC, 8, 2, n_grid=n).sup
        assert d_ab <= (d_a0 + d_0b) * 1.1

    def test_weighted_vs_unweighted_row_comparison(self):
        # row-level comparison of the two aggregate summands: the weighted
        # term (1+|n|)^{p-2} d^p stays below the unweighted d^{p'} exactly
        # when d >= (1+|n|)^{-1/p'} (and above it otherwise)
        n = 96
        p = 1.5
        sys = smooth_potential(76, n, l1_norm=0.2)
        zero = DiracSystem.zero(sys.b1, sys.b2, n)
        rep = eigen_deviation(sys, zero, SEP_BC, 10, p, n_grid=n)
        pc = p / (p - 1)
        for nn, d, flag in rep.rows:
            if flag != "ok" or d == 0.0:
                continue
            weighted_term = (1 + abs(nn)) ** (p - 2) * d**p
            unweighted_term = d**pc
            threshold = (1 + abs(nn)) ** (-1.0 / pc)
            if d >= threshold * (1 + 1e-12):
                assert weighted_term <= unweighted_term * (1 + 1e-9)
            elif d <= threshold * (1 - 1e-12):
                assert weighted_term >= unweighted_term * (1 - 1e-9)


class TestTwoSided:
    def test_identical_potentials_all_excluded(self):
        n = 96
        sys = smooth_potential(81, n, l1_norm=0.4)
        rows, summary = two_sided_check(sys, sys, SEP_BC, 6, n_grid=n)
        assert summary["excluded_exact"] == len(rows)

    def test_tail_ratios_bounded(self):
        n = 128
        sys = smooth_potential(82, n, l1_norm=0.3)
        zero = DiracSystem.zero(sys.b1, sys.b2, n)
        rows, summary = two_sided_check(sys, zero, SEP_BC, 12, n_grid=n)
        assert summary["tail_max"] / summary["tail_min"] <= 100

    def test_role_swap_bounded_factor(self):
        n = 96
        qa = smooth_potential(83, n, l1_norm=0.3)
        qb = smooth_potential(84, n, l1_norm=0.3, b1=qa.b1, b2=qa.b2)
        _, fwd = two_sided_check(qa, qb, SEP_BC, 8, n_grid=n)
        _, bwd = two_sided_check(qb, qa, SEP_BC, 8, n_grid=n)
        assert fwd["tail_max"] / bwd["tail_max"] < 100
        assert bwd["tail_max"] / fwd["tail_max"] < 100


class TestEigenfunctionDeviation:
    def test_identical_potentials(self):
        n = 96
        sys = smooth_potential(91, n, l1_norm=0.4)
        rep = eigenfunction_deviation(sys, sys, SEP_BC, 6, 2, n_grid=n)
        assert rep.sup == 0.0

    def test_q12_zero_second_branch_zero_deviation(self):
        # separated-type (b = 0) conditions with Q12 = 0: the branch whose
        # eigenfunctions are (0, e^{i b2 lam x}) does not feel Q21 at all
        n = 96
        x = np.linspace(0, 1, n + 1)
        bc = BoundaryConditions.from_canonical(1.0, 0.0, 0.2, 1.0)
        qa = DiracSystem(-1.0, 2.0, SampledFunction.zero(n), SampledFunction(np.exp(2j * np.pi * x)))
        qb = DiracSystem(-1.0, 2.0, SampledFunction.zero(n), SampledFunction((0.7 * np.sin(np.pi * x)).astype(complex)))
        rep = eigenfunction_deviation(qa, qb, bc, 8, 2, n_grid=n)
        # rows on the d + e^{i b2 lam} = 0 branch
        branch2 = [
            (nn, dev)
            for (nn, dev, flag) in rep.rows
            if flag == "ok" and abs(1.0 + np.exp(2j * rep_lam0(rep, nn))) < 1e-6
        ]
        assert branch2
        for _, dev in branch2:
            assert dev < 1e-7

    def test_partial_sums_tail_decay(self):
        n = 256
        sys = smooth_potential(92, n, l1_norm=0.4)
        zero = DiracSystem.zero(sys.b1, sys.b2, n)
        rep = eigenfunction_deviation(sys, zero, SEP_BC, 20, 2, n_grid=n)
        devs = {nn: d for nn, d, flag in rep.rows if flag == "ok"}
        head = sum(d**2 for nn, d in devs.items() if abs(nn) <= 10)
        tail = sum(d**2 for nn, d in devs.items() if abs(nn) > 10)
        assert math.isfinite(rep.lp_sum)
        assert tail < head


def rep_lam0(rep, nn):
    # helper: second-branch detection needs lam0; recover from detail-free
    # rows by the separated-structure of the test bc (b2 = 2)
    # zeros of d + e^{2 i lam} = 1 + e^{2 i lam}
    # stored rows don't carry lam0, so recompute from the bc used above
    from diracbvp.spectrum import zeros_delta0

    window = zeros_delta0(BoundaryConditions.from_canonical(1.0, 0.0, 0.2, 1.0), -1.0, 2.0, 8)
    table = {n_: lam for n_, lam, _ in window}
    return table[nn]


class TestSampler:
    def test_norm_constraint(self):
        for family in ("trig", "step", "spline"):
            sampler = PotentialBallSampler(2, 0.8, seed=5, family=family)
            for qa, qb in sampler.pairs(3, -1.0, 1.0, 64):
                from diracbvp.transformop import potential_diff_norm

                for q in (qa, qb):
                    norm = potential_diff_norm(q, DiracSystem.zero(-1.0, 1.0, 64), 2, 64)
                    assert norm <= 0.8 + 1e-12

    def test_determinism(self):
        s1 = PotentialBallSampler(2, 1.0, seed=42, family="trig")
        s2 = PotentialBallSampler(2, 1.0, seed=42, family="trig")
        for (a1, b1), (a2, b2) in zip(s1.pairs(2, -1.0, 1.0, 32), s2.pairs(2, -1.0, 1.0, 32)):
            assert np.array_equal(a1.q12.samples, a2.q12.samples)
            assert np.array_equal(b1.q21.samples, b2.q21.samples)

    def test_unknown_family_rejected(self):
        with pytest.raises(ValueError):
            PotentialBallSampler(2, 1.0, seed=0, family="wavelets")


class TestBallExperiment:
    def test_empty(self):
        sampler = PotentialBallSampler(2, 1.0, seed=1)
        rows, summary = run_ball_experiment(sampler, SEP_BC, 0, 6, 2, n_grid=64)
        assert rows == []

    def test_zero_sampler_gives_zero_table(self):
        sampler = PotentialBallSampler(2, 0.0, seed=1)
        rows, _ = run_ball_experiment(sampler, SEP_BC, 2, 5, 2, n_grid=64)
        for row in rows:
            assert row["dq_norm"] == 0.0
            assert row["kernel_dev"] == 0.0
            assert row["eigen_dev"] == 0.0

    def test_deterministic_rerun(self):
        sampler1 = PotentialBallSampler(2, 0.5, seed=7)
        sampler2 = PotentialBallSampler(2, 0.5, seed=7)
        rows1, _ = run_ball_experiment(sampler1, SEP_BC, 2, 5, 2, n_grid=64)
        rows2, _ = run_ball_experiment(sampler2, SEP_BC, 2, 5, 2, n_grid=64)
        assert rows1 == rows2
