import numpy as np
import pytest

from multisecretary import (
    BadDelta,
    cutoff_time,
    drift_at_state,
    episode_stream,
    half_min_mass,
    make_policy,
    orbit_diagnostics,
    orbit_stats,
    paired_payoffs,
    ratio_mean_curve,
    run_episode,
    simulate_paths,
    thresholds,
)


class TestEpisodes:
    def test_zero_budget_never_selects(self, uniform5):
        policy = make_policy("br", uniform5, 50, 0)
        rec = run_episode(uniform5, policy, 50, 0, episode_stream(1, 0))
        assert not rec.decisions.any() and rec.payoff == 0.0

    def test_full_budget_takes_everything(self, uniform5):
        policy = make_policy("dp", uniform5, 50, 50)
        rec = run_episode(uniform5, policy, 50, 50, episode_stream(1, 0))
        assert rec.decisions.all()
        assert rec.payoff == pytest.approx(
            float(np.sum(uniform5.support[rec.abilities - 1])), abs=1e-9
        )

    def test_common_random_numbers_across_policies(self, uniform5):
        n, k = 400, 120
        recs = [
            run_episode(uniform5, make_policy(name, uniform5, n, k), n, k, episode_stream(77, 0))
            for name in ("br", "dp", "ai")
        ]
        np.testing.assert_array_equal(recs[0].abilities, recs[1].abilities)
        np.testing.assert_array_equal(recs[0].abilities, recs[2].abilities)

    def test_budget_identities(self, masspoint5):
        policy = make_policy("ai", masspoint5, 80, 30)
        rec = run_episode(masspoint5, policy, 80, 30, episode_stream(5, 3))
        np.testing.assert_array_equal(
            np.diff(rec.budget_path), -rec.decisions.astype(np.int64)
        )
        assert rec.decisions.sum() <= 30


class TestBatchConsistency:
    @pytest.mark.parametrize("name", ["br", "dp", "ai", "index"])
    def test_batch_equals_single_episodes(self, masspoint5, name):
        n, k, reps, seed = 70, 25, 5, 99
        policy = make_policy(name, masspoint5, n, k)
        payoffs, counts, paths = simulate_paths(masspoint5, policy, n, k, reps, seed)
        for rep in range(reps):
            rec = run_episode(masspoint5, policy, n, k, episode_stream(seed, rep))
            assert payoffs[rep] == pytest.approx(rec.payoff, abs=1e-9)
            np.testing.assert_array_equal(paths[rep], rec.budget_path)
            want_counts = np.bincount(rec.abilities, minlength=masspoint5.m + 1)[1:]
            np.testing.assert_array_equal(counts[rep], want_counts)

    def test_ratio_mean_single_rep_is_the_path(self, uniform5):
        n, k, seed = 60, 18, 12
        policy = make_policy("br", uniform5, n, k)
        mean_ratio, mean_budget = ratio_mean_curve(uniform5, policy, n, k, 1, seed)
        rec = run_episode(uniform5, policy, n, k, episode_stream(seed, 0))
        np.testing.assert_allclose(mean_ratio, rec.ratio_path, atol=1e-12)
        np.testing.assert_allclose(mean_budget, rec.budget_path[:n], atol=1e-12)

    def test_paired_payoffs_reproducible(self, uniform5):
        policy = make_policy("br", uniform5, 50, 15)
        a = paired_payoffs(uniform5, policy, 50, 15, 64, seed=2)
        b = paired_payoffs(uniform5, policy, 50, 15, 64, seed=2)
        np.testing.assert_array_equal(a[0], b[0])
        np.testing.assert_array_equal(a[1], b[1])


class TestOrbit:
    def test_start_on_threshold_enters_immediately(self, uniform5):
        n, k = 1000, 300  # k/n = 0.30 = T_2
        policy = make_policy("br", uniform5, n, k)
        rec = run_episode(uniform5, policy, n, k, episode_stream(8, 0))
        diag = orbit_diagnostics(rec, thresholds(uniform5), delta=0.05)
        assert diag.tau0 == 0 and diag.j_tau0 == 2
        assert diag.tau0 <= diag.tau <= n

    def test_initial_deviation_bound(self, uniform5):
        n, k, delta = 1000, 340, 0.05
        policy = make_policy("br", uniform5, n, k)
        thr = thresholds(uniform5)
        for rep in range(10):
            rec = run_episode(uniform5, policy, n, k, episode_stream(21, rep))
            diag = orbit_diagnostics(rec, thr, delta)
            if diag.j_tau0 <= uniform5.m:
                assert abs(diag.y_path[0]) <= delta / 2 * (n - diag.tau0) + 1e-9

    def test_cutoff_branch_on_short_horizon(self, uniform5):
        # with n - ceil(2/delta) - 1 <= 0 the sentinel fires at time zero
        policy = make_policy("br", uniform5, 30, 10)
        rec = run_episode(uniform5, policy, 30, 10, episode_stream(2, 0))
        diag = orbit_diagnostics(rec, thresholds(uniform5), delta=0.05)
        assert diag.j_tau0 == uniform5.m + 1
        assert diag.tau == diag.tau0 == cutoff_time(30, 0.05) == 0
        assert diag.y_path.size == 0

    def test_jump_bound_up_to_cutoff(self, uniform5):
        n, k, delta = 500, 150, 0.05
        policy = make_policy("br", uniform5, n, k)
        t_cut = cutoff_time(n, delta)
        for rep in range(5):
            rec = run_episode(uniform5, policy, n, k, episode_stream(31, rep))
            jumps = np.abs(np.diff(rec.ratio_path))
            assert np.all(jumps[: t_cut + 1] <= delta / 2 + 1e-12)

    def test_bad_delta(self, uniform5):
        policy = make_policy("br", uniform5, 100, 30)
        with pytest.raises(BadDelta):
            orbit_stats(uniform5, policy, thresholds(uniform5), 100, 30,
                        half_min_mass(uniform5), 10, seed=0)
        with pytest.raises(BadDelta):
            orbit_stats(uniform5, policy, thresholds(uniform5), 100, 30, 0.0, 10, seed=0)

    def test_stats_batch_matches_single(self, uniform5):
        n, k, delta, reps, seed = 600, 180, 0.05, 8, 44
        policy = make_policy("br", uniform5, n, k)
        thr = thresholds(uniform5)
        sample = orbit_stats(uniform5, policy, thr, n, k, delta, reps, seed)
        for rep in range(reps):
            rec = run_episode(uniform5, policy, n, k, episode_stream(seed, rep))
            diag = orbit_diagnostics(rec, thr, delta)
            assert sample.tau0[rep] == diag.tau0
            assert sample.j_tau0[rep] == diag.j_tau0
            assert sample.tau[rep] == diag.tau


class TestDrift:
    def test_analytic_values_in_orbit(self, masspoint5):
        d = masspoint5
        thr = thresholds(d)
        n = 1000
        for j in range(2, d.m + 1):
            t = 400
            anchor = thr.t(j)
            above = int(np.ceil(anchor * (n - t) + 1))
            below = int(np.floor(anchor * (n - t) - 1))
            assert drift_at_state(d, thr, n, t, above, j) == -0.5 * d.pmf[j - 1]
            assert drift_at_state(d, thr, n, t, below, j) == 0.5 * d.pmf[j - 1]
        assert drift_at_state(d, thr, n, 100, 0, 3) == thr.t(3)

    def test_empirical_drift_matches_analytic(self, uniform5):
        # conditional means of Y increments inside the orbit, by sign of Y
        d = uniform5
        n, k, delta, reps, seed = 1000, 300, 0.05, 400, 606
        thr = thresholds(d)
        policy = make_policy("br", d, n, k)
        _, _, paths = simulate_paths(d, policy, n, k, reps, seed)
        t_cut = cutoff_time(n, delta)
        anchor = thr.t(2)
        times = np.arange(n)
        up, down = [], []
        for row in paths:
            ratio = row[:n] / (n - times)
            y = row[:n] - anchor * (n - times)
            bucket = thr.bucket(ratio)  # tie rule matches the policy's
            ok = (np.abs(ratio - anchor) <= delta) & (row[:n] > 0) & (times < t_cut)
            inc = (row[1 : n + 1] - anchor * (n - times - 1)) - y
            up.extend(inc[ok & (bucket == 2)])
            down.extend(inc[ok & (bucket == 1)])
        for data, want in ((np.array(up), -0.1), (np.array(down), 0.1)):
            se = data.std(ddof=1) / np.sqrt(data.size)
            assert abs(data.mean() - want) <= 3 * se

    def test_ai_increments_center_on_zero(self, uniform5):
        # stopped-ratio increments over >= 1e5 eligible steps
        d = uniform5
        n, k, reps, seed = 500, 150, 300, 17
        policy = make_policy("ai", d, n, k)
        _, _, paths = simulate_paths(d, policy, n, k, reps, seed)
        times = np.arange(n - 1)
        ratios = paths[:, : n - 1] / (n - times)
        nxt = paths[:, 1:n] / (n - times - 1)
        eligible = ratios <= 1.0
        inc = (nxt - ratios)[eligible]
        assert inc.size >= 100_000
        se = inc.std(ddof=1) / np.sqrt(inc.size)
        assert abs(inc.mean()) <= 3 * se


class TestMeanCurves:
    def test_br_and_dp_hug_the_same_threshold(self, uniform5):
        n, k, reps, seed = 1000, 300, 400, 9
        curves = {}
        for name in ("br", "dp"):
            policy = make_policy(name, uniform5, n, k)
            curves[name], _ = ratio_mean_curve(uniform5, policy, n, k, reps, seed)
        gap = np.abs(curves["br"] - curves["dp"])[: n - 50]
        assert gap.max() < 0.025  # half the orbit width at delta = eps/2


class TestCutoff:
    def test_formula_and_clamp(self):
        assert cutoff_time(1000, 0.05) == 1000 - 41
        assert cutoff_time(10, 0.05) == 0
