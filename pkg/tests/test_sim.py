"""Monte-Carlo engine tests: stream derivation, determinism, estimator oracles."""

import math

import numpy as np
import pytest

from uavnoma import (
    ChannelSnapshot,
    CurveResult,
    FadingKind,
    FadingSpec,
    MonteCarloConfig,
    NetworkGeometry,
    OutageMode,
    OutageSpec,
    PairingStrategy,
    Pairing,
    PowerSplit,
    SchemeFamily,
    SchemeId,
    SnrGrid,
    SnrPoint,
    build_pairing,
    derive_trial_stream,
    enumerate_pairings,
    estimate_ergodic_sum_rate,
    estimate_outage,
    estimate_outage_curve,
    rank_by_gain,
    sample_snapshot,
    scheme_rates,
)
from uavnoma.sim import _Task, _TrialStreams, _rate_matrix, _sample_chunk

DET = FadingSpec(FadingKind.DETERMINISTIC)
RAY = FadingSpec(FadingKind.RAYLEIGH)
SPLIT = PowerSplit((0.25, 0.75))
SC_SPLIT = PowerSplit((0.1, 0.2, 0.3, 0.4))

GEO2 = NetworkGeometry(user_distances=(1.0, 1.8), inter_user_distance=0.9)
GEO4 = NetworkGeometry(user_distances=(0.8, 0.95, 1.15, 1.4), inter_user_distance=1.0)


class TestTrialStreams:
    def test_same_inputs_same_stream(self):
        a = derive_trial_stream(42, 7).standard_normal(100)
        b = derive_trial_stream(42, 7).standard_normal(100)
        assert np.array_equal(a, b)

    def test_no_collisions_across_trials(self):
        firsts = {float(derive_trial_stream(42, t).random()) for t in range(10_000)}
        assert len(firsts) == 10_000

    def test_no_collisions_across_seeds(self):
        firsts = {float(derive_trial_stream(seed, 0).random()) for seed in range(10_000)}
        assert len(firsts) == 10_000

    def test_adjacent_streams_differ(self):
        assert derive_trial_stream(42, 0).random() != derive_trial_stream(42, 1).random()
        assert derive_trial_stream(42, 0).random() != derive_trial_stream(43, 0).random()

    def test_fast_reset_path_matches_fresh_streams(self):
        # the engine resets one generator's counter instead of rebuilding Philox
        streams = _TrialStreams(master_seed=2024)
        for t in (0, 1, 5, 9999, 2 ** 40):
            fast = streams.stream(t).standard_exponential(8)
            slow = derive_trial_stream(2024, t).standard_exponential(8)
            assert np.array_equal(fast, slow)


def _chunk_matrices(geometry, fading, scheme, splits_norm, strategy, rho, seed, trials):
    task = _Task(master_seed=seed, lo=0, hi=trials, geometry=geometry, fading=fading,
                 scheme=scheme, splits=splits_norm, strategy=strategy, rhos=(rho,),
                 metric="sum-rate")
    user_gains, nf, h1, h2, pattern_idx = _sample_chunk(task)
    return _rate_matrix(task, user_gains, nf, h1, h2, rho, pattern_idx), pattern_idx


class TestVectorizedEngineMatchesScalarFormulas:
    """The chunked fast path must reproduce scheme_rates trial by trial."""

    @pytest.mark.parametrize("fam,splits,geometry", [
        (SchemeFamily.COOP_NOMA, SPLIT, GEO2),
        (SchemeFamily.NONCOOP_NOMA, SPLIT, GEO2),
        (SchemeFamily.OMA, None, GEO2),
        (SchemeFamily.TDMA, None, GEO4),
        (SchemeFamily.SC_NOMA, SC_SPLIT, GEO4),
        (SchemeFamily.HYBRID_NF, SPLIT, GEO4),
        (SchemeFamily.HYBRID_NNFF, SPLIT, GEO4),
    ])
    @pytest.mark.parametrize("via_uav", [False, True])
    def test_families(self, fam, splits, geometry, via_uav):
        scheme = SchemeId(fam, via_uav=via_uav)
        rho = 250.0
        seed, trials = 77, 64
        strategy = {SchemeFamily.HYBRID_NF: PairingStrategy.NEAR_FAR,
                    SchemeFamily.HYBRID_NNFF: PairingStrategy.NEAR_NEAR}.get(fam)
        splits_norm = ((splits,) * (2 if fam in (SchemeFamily.HYBRID_NF, SchemeFamily.HYBRID_NNFF)
                                    else 1) if splits else ())
        matrix, _ = _chunk_matrices(geometry, RAY, scheme, splits_norm, strategy,
                                    rho, seed, trials)
        for t in range(trials):
            snap = sample_snapshot(geometry, RAY, derive_trial_stream(seed, t))
            pairing = None
            if strategy is not None:
                from uavnoma import effective_user_gains
                gains = effective_user_gains(snap, SnrPoint(rho), via_uav)
                pairing = build_pairing(strategy, gains)
            report = scheme_rates(snap, scheme, SnrPoint(rho), pairing=pairing, splits=splits)
            assert matrix[t] == pytest.approx(report.per_user_rates, rel=1e-12, abs=1e-15)

    def test_random_strategy_uses_trial_stream_pattern(self):
        scheme = SchemeId(SchemeFamily.HYBRID_NF)
        rho, seed, trials = 120.0, 5, 48
        matrix, pattern_idx = _chunk_matrices(GEO4, RAY, scheme, (SPLIT, SPLIT),
                                              PairingStrategy.RANDOM, rho, seed, trials)
        patterns = [p.pairs for p in enumerate_pairings(4)]
        for t in range(trials):
            rng = derive_trial_stream(seed, t)
            snap = sample_snapshot(GEO4, RAY, rng)
            idx = int(rng.integers(len(patterns)))
            assert idx == pattern_idx[t]
            order = rank_by_gain(snap.user_gains)
            pairing = Pairing(tuple((int(order[a]), int(order[b]))
                                    for a, b in patterns[idx]))
            report = scheme_rates(snap, scheme, SnrPoint(rho), pairing=pairing, splits=SPLIT)
            assert matrix[t] == pytest.approx(report.per_user_rates, rel=1e-12)

    def test_best_strategy_takes_per_trial_argmax(self):
        scheme = SchemeId(SchemeFamily.HYBRID_NF)
        rho, seed, trials = 120.0, 6, 48
        matrix, _ = _chunk_matrices(GEO4, RAY, scheme, (SPLIT, SPLIT),
                                    PairingStrategy.BEST, rho, seed, trials)
        patterns = [p.pairs for p in enumerate_pairings(4)]
        for t in range(trials):
            snap = sample_snapshot(GEO4, RAY, derive_trial_stream(seed, t))
            order = rank_by_gain(snap.user_gains)
            best = -1.0
            for pattern in patterns:
                pairing = Pairing(tuple((int(order[a]), int(order[b])) for a, b in pattern))
                best = max(best, scheme_rates(snap, scheme, SnrPoint(rho), pairing=pairing,
                                              splits=SPLIT).sum_rate)
            assert matrix[t].sum() == pytest.approx(best, rel=1e-12)


class TestEstimateOutage:
    def test_deterministic_boundary_not_an_outage(self):
        # rate exactly equals the target: outage needs strictly-below
        geo = NetworkGeometry(user_distances=(1.0, 1.0), inter_user_distance=1.0,
                              path_loss_exponent=2.0)
        spec = OutageSpec(target_rates=(1.0, 1.0))
        est = estimate_outage(SchemeId(SchemeFamily.OMA), spec, geo, DET, None, None,
                              SnrPoint(3.0), MonteCarloConfig(trials=100, master_seed=0))
        assert est.probability == 0.0 and est.events == 0

    def test_deterministic_below_target(self):
        geo = NetworkGeometry(user_distances=(1.0, 1.0), inter_user_distance=1.0)
        spec = OutageSpec(target_rates=(1.0, 1.0))
        est = estimate_outage(SchemeId(SchemeFamily.OMA), spec, geo, DET, None, None,
                              SnrPoint(2.9), MonteCarloConfig(trials=100, master_seed=0))
        assert est.probability == 1.0

    def test_rayleigh_oma_matches_exponential_cdf(self):
        # closed-form oracle: P(0.5*log2(1+rho*g) < R) = 1 - exp(-(2^(2R)-1)/(rho*mean))
        geo = NetworkGeometry(user_distances=(1.0, 1.0), inter_user_distance=1.0)
        spec = OutageSpec(target_rates=(1.0, 1.0), user_index=-1)
        trials = 100_000
        est = estimate_outage(SchemeId(SchemeFamily.OMA), spec, geo, RAY, None, None,
                              SnrPoint(10.0), MonteCarloConfig(trials=trials, master_seed=3))
        expected = 1.0 - math.exp(-3.0 / 10.0)  # 0.25918177931828213
        se = math.sqrt(expected * (1.0 - expected) / trials)
        assert abs(est.probability - expected) < 3.0 * se

    def test_any_user_dominates_each_per_user(self):
        spec_any = OutageSpec(target_rates=(1.0, 1.0), mode=OutageMode.ANY_USER)
        mc = MonteCarloConfig(trials=20_000, master_seed=9)
        snr = SnrPoint.from_db(20.0)
        p_any = estimate_outage(SchemeId(SchemeFamily.OMA), spec_any, GEO2, RAY,
                                None, None, snr, mc).probability
        for idx in (0, 1):
            spec_one = OutageSpec(target_rates=(1.0, 1.0), mode=OutageMode.PER_USER,
                                  user_index=idx)
            p_one = estimate_outage(SchemeId(SchemeFamily.OMA), spec_one, GEO2, RAY,
                                    None, None, snr, mc).probability
            assert p_any >= p_one

    def test_outage_nonincreasing_in_snr(self):
        grid = SnrGrid((0.0, 10.0, 20.0, 30.0, 40.0))
        spec = OutageSpec(target_rates=(1.0, 1.0))
        mc = MonteCarloConfig(trials=20_000, master_seed=10)
        for fam, splits in [(SchemeFamily.COOP_NOMA, SPLIT),
                            (SchemeFamily.NONCOOP_NOMA, SPLIT),
                            (SchemeFamily.OMA, None)]:
            curve = estimate_outage_curve(SchemeId(fam), spec, GEO2, RAY, splits, None,
                                          grid, mc)
            slack = [3.0 * c for c in curve.ci_half_width]
            for i in range(len(grid.points_db) - 1):
                assert curve.values[i + 1] <= curve.values[i] + slack[i] + slack[i + 1]

    def test_low_event_flagging(self):
        est = estimate_outage(SchemeId(SchemeFamily.OMA),
                              OutageSpec(target_rates=(1.0, 1.0)), GEO2, RAY, None, None,
                              SnrPoint.from_db(60.0), MonteCarloConfig(trials=500, master_seed=1))
        assert est.events < 10
        assert not est.normal_ok

    def test_zero_trials_rejected(self):
        with pytest.raises(ValueError):
            MonteCarloConfig(trials=0)

    def test_target_arity_checked(self):
        spec = OutageSpec(target_rates=(1.0,))
        with pytest.raises(ValueError, match="target"):
            estimate_outage(SchemeId(SchemeFamily.OMA), spec, GEO2, RAY, None, None,
                            SnrPoint(1.0), MonteCarloConfig(trials=10))


class TestEstimateErgodicSumRate:
    def test_deterministic_zero_ci_and_exact_tdma(self):
        geo = NetworkGeometry(user_distances=(1.0, 1.0, 1.0, 1.0), inter_user_distance=1.0)
        curve = estimate_ergodic_sum_rate(SchemeId(SchemeFamily.TDMA), geo, DET, None, None,
                                          SnrGrid((10.0 * math.log10(3.0),)),
                                          MonteCarloConfig(trials=777, master_seed=0))
        assert curve.values[0] == pytest.approx(2.0, rel=1e-12)
        assert curve.ci_half_width[0] <= 1e-9

    def test_deterministic_workers_bit_identical(self):
        grid = SnrGrid((0.0, 15.0, 30.0))
        kw = dict(trials=30_000, master_seed=99)
        one = estimate_ergodic_sum_rate(SchemeId(SchemeFamily.HYBRID_NF, via_uav=True), GEO4,
                                        RAY, SPLIT, None, grid,
                                        MonteCarloConfig(workers=1, **kw))
        three = estimate_ergodic_sum_rate(SchemeId(SchemeFamily.HYBRID_NF, via_uav=True), GEO4,
                                          RAY, SPLIT, None, grid,
                                          MonteCarloConfig(workers=3, **kw))
        assert one.values == three.values
        assert one.ci_half_width == three.ci_half_width

    def test_outage_workers_bit_identical(self):
        grid = SnrGrid((0.0, 20.0, 40.0))
        spec = OutageSpec(target_rates=(1.0, 1.0))
        kw = dict(trials=25_000, master_seed=123)
        one = estimate_outage_curve(SchemeId(SchemeFamily.COOP_NOMA), spec, GEO2, RAY, SPLIT,
                                    None, grid, MonteCarloConfig(workers=1, **kw))
        four = estimate_outage_curve(SchemeId(SchemeFamily.COOP_NOMA), spec, GEO2, RAY, SPLIT,
                                     None, grid, MonteCarloConfig(workers=4, **kw))
        assert one.values == four.values

    def test_near_far_never_beats_exhaustive_best(self):
        grid = SnrGrid((0.0, 10.0, 20.0))
        mc = MonteCarloConfig(trials=20_000, master_seed=17)
        nf = estimate_ergodic_sum_rate(SchemeId(SchemeFamily.HYBRID_NF), GEO4, RAY, SPLIT,
                                       PairingStrategy.NEAR_FAR, grid, mc)
        best = estimate_ergodic_sum_rate(SchemeId(SchemeFamily.HYBRID_NF), GEO4, RAY, SPLIT,
                                         PairingStrategy.BEST, grid, mc)
        for v_nf, v_best, c_nf, c_best in zip(nf.values, best.values,
                                              nf.ci_half_width, best.ci_half_width):
            assert v_nf <= v_best + 3.0 * (c_nf + c_best)

    def test_near_far_equals_best_when_argmax_everywhere(self):
        # at these mean gains the strong/weak role sets of the near-far pairing
        # are per-trial optimal, so the two curves coincide within the CI
        grid = SnrGrid((20.0,))
        mc = MonteCarloConfig(trials=30_000, master_seed=23)
        nf = estimate_ergodic_sum_rate(SchemeId(SchemeFamily.HYBRID_NF), GEO4, RAY, SPLIT,
                                       PairingStrategy.NEAR_FAR, grid, mc)
        best = estimate_ergodic_sum_rate(SchemeId(SchemeFamily.HYBRID_NF), GEO4, RAY, SPLIT,
                                         PairingStrategy.BEST, grid, mc)
        assert abs(nf.values[0] - best.values[0]) <= nf.ci_half_width[0] + best.ci_half_width[0]

    def test_user_count_validation(self):
        with pytest.raises(ValueError, match="even"):
            estimate_ergodic_sum_rate(
                SchemeId(SchemeFamily.HYBRID_NF),
                NetworkGeometry(user_distances=(1.0, 2.0, 3.0), inter_user_distance=1.0),
                RAY, SPLIT, None, SnrGrid((0.0,)), MonteCarloConfig(trials=10))
        with pytest.raises(ValueError, match="two users"):
            estimate_ergodic_sum_rate(SchemeId(SchemeFamily.COOP_NOMA), GEO4, RAY, SPLIT,
                                      None, SnrGrid((0.0,)), MonteCarloConfig(trials=10))

    def test_split_arity_validation(self):
        with pytest.raises(ValueError, match="split"):
            estimate_ergodic_sum_rate(SchemeId(SchemeFamily.SC_NOMA), GEO4, RAY, SPLIT,
                                      None, SnrGrid((0.0,)), MonteCarloConfig(trials=10))


class TestGridAndConfigTypes:
    def test_grid_must_ascend(self):
        with pytest.raises(ValueError):
            SnrGrid((0.0, 0.0, 10.0))
        with pytest.raises(ValueError):
            SnrGrid((10.0, 0.0))

    def test_grid_must_be_nonempty(self):
        with pytest.raises(ValueError):
            SnrGrid(())

    def test_grid_converts_to_linear(self):
        assert SnrGrid((0.0, 10.0, 30.0)).rho_values() == pytest.approx((1.0, 10.0, 1000.0))

    def test_curve_result_checks_ranges(self):
        sid = SchemeId(SchemeFamily.OMA)
        with pytest.raises(ValueError):
            CurveResult(scheme=sid, metric="outage", snr_db=(0.0,), values=(1.5,),
                        ci_half_width=(0.0,), trials=10)
        with pytest.raises(ValueError):
            CurveResult(scheme=sid, metric="sum-rate", snr_db=(0.0,), values=(1.0,),
                        ci_half_width=(-0.1,), trials=10)
