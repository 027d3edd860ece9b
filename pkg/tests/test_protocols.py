import math

import numpy as np
import pytest

from entbench import protocols as pr
from entbench.classical import beta_binomial, beta_poisson
from entbench.quantum import bell_pair_test
from entbench.states import (
    Operator,
    fidelity_defect,
    isotropic_state,
    max_entangled_ket,
    proj,
    tensor,
)


def iso_config(protocol, d, n, eps, alpha, trials, seed, p, **kw):
    return pr.ExperimentConfig(
        protocol=protocol,
        d=d,
        n=n,
        epsilon=eps,
        alpha=alpha,
        trials=trials,
        seed=seed,
        state=pr.StateSpec("isotropic", d, (p,)),
        **kw,
    )


class TestStateSpec:
    def test_families(self):
        assert fidelity_defect(pr.StateSpec("max_entangled", 3).build()) == 0.0
        assert abs(fidelity_defect(pr.StateSpec("isotropic", 2, (0.2,)).build()) - 0.2) < 1e-12
        s = pr.StateSpec("bell_diagonal", 2, (0.1, 0.1, 0.1)).build()
        assert abs(fidelity_defect(s) - 0.3) < 1e-12
        a = pr.StateSpec("random", 2, (5,)).build()
        b = pr.StateSpec("random", 2, (5,)).build()
        assert np.array_equal(a.mat, b.mat)

    def test_unknown_family(self):
        with pytest.raises(ValueError):
            pr.StateSpec("bogus", 2).build()


class TestSamplePovmOutcome:
    def test_projective_on_target(self):
        d = 2
        p = proj(max_entangled_ket(d))
        povm = [p, np.eye(d * d) - p]
        state = isotropic_state(d, 0.0)
        rng = np.random.default_rng(0)
        assert all(pr.sample_povm_outcome(state, povm, rng) == 0 for _ in range(50))

    def test_isotropic_rate(self):
        d, p_def, n = 2, 0.3, 20000
        pmat = proj(max_entangled_ket(d))
        povm = [pmat, np.eye(d * d) - pmat]
        state = isotropic_state(d, p_def)
        rng = np.random.default_rng(1)
        hits = sum(pr.sample_povm_outcome(state, povm, rng) == 0 for _ in range(n))
        rate = hits / n
        assert abs(rate - (1 - p_def)) < 3 * math.sqrt(p_def * (1 - p_def) / n)

    def test_seed_determinism(self):
        d = 2
        pmat = proj(max_entangled_ket(d))
        povm = [pmat, np.eye(d * d) - pmat]
        state = isotropic_state(d, 0.5)
        a = [pr.sample_povm_outcome(state, povm, np.random.default_rng(7)) for _ in range(20)]
        b = [pr.sample_povm_outcome(state, povm, np.random.default_rng(7)) for _ in range(20)]
        assert a == b

    def test_rejects_non_povm(self):
        state = isotropic_state(2, 0.1)
        with pytest.raises(ValueError):
            pr.sample_povm_outcome(state, [np.eye(4), np.eye(4)], np.random.default_rng(0))


class TestRunGlobal:
    def test_size_at_null_boundary(self):
        cfg = iso_config("global_projective", 2, 40, 0.05, 0.1, 40000, 2, 0.05)
        res = pr.run_global(cfg)
        assert res.within_ci(0.9)

    def test_alternative_matches_exact(self):
        cfg = iso_config("global_projective", 2, 50, 0.05, 0.1, 40000, 3, 0.2)
        res = pr.run_global(cfg)
        assert res.within_ci(res.exact)
        assert abs(res.exact - beta_binomial(50, 0.05, 0.1, 0.2)) < 1e-12

    def test_perfect_state_deterministic_path(self):
        from entbench.classical import binomial_ump_test

        cfg = iso_config("global_projective", 2, 10, 0.1, 0.2, 5000, 4, 0.0)
        res = pr.run_global(cfg)
        t = binomial_ump_test(10, 0.1, 0.2)
        # k = 0 always; acceptance probability is the k=0 acceptance weight
        expected = 1.0 if t.threshold > 0 else t.gamma
        assert res.counts == {0: 5000}
        assert res.within_ci(expected)


class TestRunBellPairs:
    def test_perfect_state_accepts_up_to_randomization(self):
        from entbench.classical import binomial_ump_test

        cfg = iso_config("bell_pairs", 2, 10, 0.0, 0.1, 4000, 5, 0.0)
        res = pr.run_bell_pairs(cfg)
        t = binomial_ump_test(5, 0.0, 0.1)
        expected = 1.0 if t.threshold > 0 else t.gamma
        assert res.within_ci(expected)
        assert res.extra["per_pair_accept_rate"] == 1.0

    def test_per_pair_rate_respects_sandwich(self):
        rng = np.random.default_rng(6)
        for i in range(5):
            sigma_seed = int(rng.integers(0, 10000))
            cfg = pr.ExperimentConfig(
                protocol="bell_pairs",
                d=2,
                n=8,
                epsilon=0.05,
                alpha=0.1,
                trials=3000,
                seed=7 + i,
                state=pr.StateSpec("random", 2, (sigma_seed,)),
            )
            res = pr.run_bell_pairs(cfg)
            p = fidelity_defect(pr.StateSpec("random", 2, (sigma_seed,)).build())
            rate = res.extra["per_pair_accept_rate"]
            n_pairs = res.extra["pair_trials"]
            slack = 4 * math.sqrt(0.25 / n_pairs)
            assert (1 - p) ** 2 - slack <= rate <= (1 - p) ** 2 + p * p + slack

    def test_end_to_end_matches_mapped_binomial(self):
        cfg = iso_config("bell_pairs", 2, 20, 0.02, 0.1, 20000, 8, 0.1)
        res = pr.run_bell_pairs(cfg)
        assert res.within_ci(res.exact)

    def test_dual_source_uses_trace_oracle(self):
        cfg = iso_config(
            "bell_pairs", 2, 12, 0.05, 0.1, 8000, 9, 0.15,
            state2=pr.StateSpec("isotropic", 2, (0.05,)),
        )
        res = pr.run_bell_pairs(cfg)
        s1 = isotropic_state(2, 0.15)
        s2 = isotropic_state(2, 0.05)
        joint = tensor(
            Operator(s1.mat, (2, 2), ("A1", "B1")), Operator(s2.mat, (2, 2), ("A2", "B2"))
        )
        t = bell_pair_test(2)
        per_pair = float(np.real(np.trace(joint.mat @ t.mat)))
        assert abs(res.extra["per_pair_accept_exact"] - per_pair) < 1e-12
        assert res.within_ci(res.exact)

    def test_odd_copies_rejected(self):
        with pytest.raises(ValueError):
            iso_config("bell_pairs", 2, 9, 0.0, 0.1, 10, 0, 0.1)


class TestRunOneWay:
    def test_perfect_state(self):
        cfg = iso_config("one_way_single", 2, 1, 0.0, 0.05, 3000, 10, 0.0)
        res = pr.run_one_way_single(cfg)
        assert res.rate == 1.0

    def test_qubit_isotropic(self):
        cfg = iso_config("one_way_single", 2, 1, 0.0, 0.05, 50000, 11, 0.3)
        res = pr.run_one_way_single(cfg)
        assert abs(res.exact - 0.8) < 1e-12
        assert res.within_ci(0.8)

    def test_qutrit_isotropic(self):
        cfg = iso_config("one_way_single", 3, 1, 0.0, 0.05, 50000, 12, 0.4)
        res = pr.run_one_way_single(cfg)
        assert abs(res.exact - 0.7) < 1e-12
        assert res.within_ci(0.7)

    def test_generic_state(self):
        cfg = pr.ExperimentConfig(
            protocol="one_way_single", d=2, n=1, epsilon=0.0, alpha=0.05,
            trials=50000, seed=13, state=pr.StateSpec("random", 2, (3,)),
        )
        res = pr.run_one_way_single(cfg)
        assert res.within_ci(res.exact)

    def test_repeated_matches_exact(self):
        cfg = iso_config("one_way_repeated", 2, 60, 0.05, 0.1, 10000, 14, 0.12)
        res = pr.run_one_way_repeated(cfg)
        assert res.within_ci(res.exact)


class TestDispatchAndDeterminism:
    def test_dispatcher(self):
        cfg = iso_config("global_projective", 2, 5, 0.1, 0.1, 100, 15, 0.1)
        assert pr.run_experiment(cfg).protocol == "global_projective"

    def test_same_seed_same_result(self):
        cfg = iso_config("bell_pairs", 2, 10, 0.05, 0.1, 2000, 16, 0.2)
        a = pr.run_experiment(cfg)
        b = pr.run_experiment(cfg)
        assert a.accepted == b.accepted and a.counts == b.counts

    def test_different_seed_different_counts_same_exact(self):
        a = pr.run_experiment(iso_config("global_projective", 2, 30, 0.05, 0.1, 5000, 17, 0.2))
        b = pr.run_experiment(iso_config("global_projective", 2, 30, 0.05, 0.1, 5000, 18, 0.2))
        assert a.exact == b.exact and a.accepted != b.accepted

    def test_invalid_protocol(self):
        with pytest.raises(ValueError):
            iso_config("teleport", 2, 2, 0.0, 0.1, 10, 0, 0.0)


class TestAsymptoticSweep:
    def test_bell_gap_shrinks_toward_poisson(self):
        rows = pr.asymptotic_sweep(1.0, 3.0, 0.05, [100, 1000, 10000], "bell_pairs")
        gaps = [r["gap"] for r in rows]
        assert gaps[2] <= gaps[1] + 1e-4 <= gaps[0] + 2e-4
        assert gaps[2] < 1e-2

    def test_repeated_limit(self):
        rows = pr.asymptotic_sweep(0.0, 3.0, 0.05, [10000], "one_way_repeated", d=2)
        target = 0.95 * math.exp(-2.0)
        assert abs(rows[0]["exact"] - target) < 1e-2

    def test_boundary_alternative_gives_level(self):
        rows = pr.asymptotic_sweep(1.0, 1.0, 0.05, [100, 1000], "global_projective")
        for r in rows:
            assert abs(r["exact"] - 0.95) < 1e-12
        assert abs(rows[0]["poisson_limit"] - beta_poisson(1.0, 0.05, 1.0)) < 1e-12

    def test_empirical_column_small_n(self):
        rows = pr.asymptotic_sweep(
            1.0, 3.0, 0.05, [50, 5000], "global_projective", trials=4000, seed=1
        )
        assert rows[0]["empirical"] is not None and rows[1]["empirical"] is None
        assert abs(rows[0]["empirical"] - rows[0]["exact"]) <= 3 * rows[0]["ci95"] / 1.96 + 1e-9

    def test_rejects_single_shot_protocol(self):
        with pytest.raises(ValueError):
            pr.asymptotic_sweep(1.0, 3.0, 0.05, [10], "one_way_single")


class TestTypeOneErrorAtBoundary:
    def test_bell_pairs_level_at_mapped_boundary(self):
        # per-copy defect exactly eps: acceptance must sit at 1 - alpha
        cfg = iso_config("bell_pairs", 2, 16, 0.05, 0.1, 30000, 19, 0.05)
        res = pr.run_bell_pairs(cfg)
        assert abs(res.exact - 0.9) < 1e-12
        assert res.within_ci(0.9)

    def test_repeated_one_way_level_at_boundary(self):
        cfg = iso_config("one_way_repeated", 2, 40, 0.08, 0.1, 20000, 20, 0.08)
        res = pr.run_one_way_repeated(cfg)
        assert abs(res.exact - 0.9) < 1e-12
        assert res.within_ci(0.9)
