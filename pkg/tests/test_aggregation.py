import numpy as np
import pytest

from crowdcast.aggregation import (AggregationConfig, aggregate_ifp_daily,
                                   combine_with_machine, decay_weights,
                                   extremize_aggregate, human_aggregate,
                                   human_aggregate_with_weight,
                                   machine_standing_daily, mean_only_config,
                                   power_transform, recalibrate_individual,
                                   recency_filter, season_fraction,
                                   skill_weights, slot_forecast)
from crowdcast.core import Source, TournamentLog, ValidationError

from conftest import human_fc, machine_fc, make_ifp, random_probs


def tv(a, b):
    return 0.5 * np.abs(np.asarray(a) - np.asarray(b)).sum()


class TestConfig:
    def test_validation(self):
        with pytest.raises(ValidationError):
            AggregationConfig(recency_fraction=0.0)
        with pytest.raises(ValidationError):
            AggregationConfig(decay_rate=-0.1)
        with pytest.raises(ValidationError):
            AggregationConfig(individual_recalibration=1.5)
        with pytest.raises(ValidationError):
            AggregationConfig(machine_weight_other=-1.0)

    def test_schedules_interpolate(self):
        cfg = AggregationConfig(extremize_start=0.8, extremize_end=1.2,
                                skill_exponent_start=0.5,
                                skill_exponent_end=2.0)
        assert cfg.extremize_exponent(0.0) == 0.8
        assert cfg.extremize_exponent(1.0) == 1.2
        assert cfg.extremize_exponent(0.5) == pytest.approx(1.0)
        assert cfg.skill_exponent(-1.0) == 0.5   # clamped
        assert cfg.skill_exponent(2.0) == 2.0

    def test_roundtrip(self):
        cfg = AggregationConfig(name="x", decay_rate=0.1)
        assert AggregationConfig.from_dict(cfg.to_dict()) == cfg


class TestPieces:
    def test_recency_filter_keeps_newest(self):
        fcs = [human_fc("q", f"u{i}", (0.5, 0.5), day, seq=i)
               for i, day in enumerate([1, 5, 3, 9, 7])]
        kept = recency_filter(fcs, fraction=0.4, floor=1)
        assert sorted(f.day for f in kept) == [7, 9]

    def test_recency_floor(self):
        fcs = [human_fc("q", f"u{i}", (0.5, 0.5), i) for i in range(4)]
        assert len(recency_filter(fcs, fraction=0.25, floor=5)) == 4
        assert len(recency_filter(fcs, fraction=0.25, floor=2)) == 2
        assert recency_filter([], 0.5) == []

    def test_decay_weights(self):
        fcs = [human_fc("q", "a", (0.5, 0.5), 0),
               human_fc("q", "b", (0.5, 0.5), 10)]
        w = decay_weights(fcs, 10, decay_rate=0.1)
        np.testing.assert_allclose(w, [np.exp(-1.0), 1.0])
        np.testing.assert_allclose(decay_weights(fcs, 10, 0.0), 1.0)

    def test_skill_weights_mean_one_and_order(self):
        from crowdcast.aggregation import SkillRecord
        records = {"good": SkillRecord("good", mean_z=-1.0),
                   "bad": SkillRecord("bad", mean_z=1.0)}
        cfg = AggregationConfig()
        w = skill_weights(records, ["good", "bad", "unknown"], 0.5, cfg)
        assert w.mean() == pytest.approx(1.0)
        assert w[0] > w[2] > w[1]

    def test_season_fraction(self):
        assert season_fraction(0, (0, 10)) == 0.0
        assert season_fraction(10, (0, 10)) == 1.0
        assert season_fraction(25, (0, 10)) == 1.0
        assert season_fraction(5, (5, 5)) == 0.0


class TestExtremization:
    def test_identity_at_one(self, rng):
        for _ in range(10_000):
            p = random_probs(rng, int(rng.integers(2, 6)))
            np.testing.assert_array_equal(extremize_aggregate(p, 1.0), p)

    def test_uniform_fixed_point(self):
        for c in (2, 3, 4, 5):
            u = np.full(c, 1 / c)
            for a in (0.5, 0.8, 1.3, 2.0):
                np.testing.assert_allclose(extremize_aggregate(u, a), u,
                                           atol=1e-15)

    def test_argmax_preserved(self, rng):
        for _ in range(10_000):
            p = random_probs(rng, int(rng.integers(2, 6)))
            a = float(rng.uniform(0.2, 3.0))
            assert np.argmax(extremize_aggregate(p, a)) == np.argmax(p)

    def test_sharpens_and_blunts(self):
        p = np.array([0.7, 0.3])
        assert extremize_aggregate(p, 2.0)[0] > 0.7
        assert extremize_aggregate(p, 0.5)[0] < 0.7
        with pytest.raises(ValidationError):
            power_transform(p, 0.0)

    def test_recalibration_bounds(self):
        with pytest.raises(ValidationError):
            recalibrate_individual([0.5, 0.5], 1.2)


class TestMachineCombination:
    def test_machine_only_is_bit_exact(self):
        m = np.array([0.2, 0.5, 0.3])
        out = combine_with_machine(None, 0.0, m, True, AggregationConfig())
        assert out.tobytes() == m.tobytes()

    def test_zero_weight_returns_human_bit_exact(self):
        cfg = AggregationConfig(machine_weight_timeseries=0.0,
                                machine_weight_other=0.0)
        h = np.array([0.6, 0.4])
        out = combine_with_machine(h, 3.0, np.array([0.1, 0.9]), True, cfg)
        assert out.tobytes() == h.tobytes()

    def test_tv_monotone_in_k(self, rng):
        h = random_probs(rng, 4)
        m = random_probs(rng, 4)
        dists = []
        for k in [0.0, 0.5, 1.0, 2.0, 4.0, 8.0, 32.0, 1e6]:
            cfg = AggregationConfig(machine_weight_timeseries=k)
            dists.append(tv(combine_with_machine(h, 5.0, m, True, cfg), m))
        assert all(a >= b - 1e-15 for a, b in zip(dists, dists[1:]))

    def test_no_inputs_raises(self):
        with pytest.raises(ValidationError):
            combine_with_machine(None, 0.0, None, True, AggregationConfig())


def random_instance(rng, n_users=8, c=None, days=10):
    c = c or int(rng.integers(2, 6))
    ifp = make_ifp("q", c=c, open_date=0, close_date=days - 1, resolved=0)
    fcs = []
    for u in range(n_users):
        for day in sorted(rng.choice(days, rng.integers(1, 4),
                                     replace=False)):
            fcs.append(human_fc("q", f"u{u}", random_probs(rng, c),
                                int(day), seq=u))
    return ifp, TournamentLog([ifp], fcs)


class TestDegeneratePipeline:
    def test_equals_unweighted_mean_of_recency_kept_set(self, rng):
        from crowdcast.core import latest_per_source
        cfg = mean_only_config()
        for _ in range(500):
            ifp, log = random_instance(rng)
            day = int(rng.integers(10))
            got = human_aggregate(log, "q", day, cfg, {}, (0, 9))
            latest = latest_per_source(log, "q", day)
            humans = [f for s, f in sorted(latest.items())
                      if s.kind == "human"]
            kept = recency_filter(humans, cfg.recency_fraction,
                                  cfg.min_forecasts_floor)
            if not kept:
                assert got is None
                continue
            expect = np.mean([f.probs_array() for f in kept], axis=0)
            np.testing.assert_allclose(got, expect, atol=1e-12, rtol=0)


class TestVectorizedReplay:
    def test_matches_per_day_pipeline(self, rng):
        season = (0, 9)
        for trial in range(40):
            ifp, log = random_instance(rng)
            cfg = AggregationConfig(name="t")
            machine = None
            if trial % 2:
                m_fcs = [machine_fc("q", random_probs(rng, ifp.n_options), d)
                         for d in range(0, 10, 3)]
                log = TournamentLog([ifp], list(log.forecasts) + m_fcs)
                machine = machine_standing_daily(
                    ifp, [f for f in log.forecasts_for("q")
                          if f.source.kind == "machine"])
            daily = aggregate_ifp_daily(
                ifp, log.forecasts_for("q"), cfg, {}, season,
                machine_daily=machine)
            for j, day in enumerate(ifp.active_days):
                m_day = machine[j] if machine is not None else None
                if m_day is not None and np.isnan(m_day[0]):
                    m_day = None
                expect = slot_forecast(log, ifp, day, cfg, {}, season,
                                       machine_probs=m_day)
                if expect is None:
                    assert np.isnan(daily[j]).all()
                else:
                    np.testing.assert_allclose(daily[j], expect, atol=1e-10)

    def test_machine_standing_daily_carry_forward(self):
        ifp = make_ifp(open_date=0, close_date=5)
        fcs = [machine_fc("q-1", (0.7, 0.3), 2), machine_fc("q-1", (0.4, 0.6), 4)]
        daily = machine_standing_daily(ifp, fcs)
        assert np.isnan(daily[0, 0]) and np.isnan(daily[1, 0])
        np.testing.assert_allclose(daily[2], [0.7, 0.3])
        np.testing.assert_allclose(daily[3], [0.7, 0.3])
        np.testing.assert_allclose(daily[5], [0.4, 0.6])


class TestSlotForecast:
    def test_machine_passthrough_when_no_humans(self):
        ifp = make_ifp(series_ref="s")
        log = TournamentLog([ifp], [])
        m = np.array([0.3, 0.7])
        out = slot_forecast(log, ifp, 0, AggregationConfig(), {}, (0, 9),
                            machine_probs=m)
        assert out.tobytes() == m.tobytes()

    def test_none_when_no_inputs(self):
        ifp = make_ifp()
        log = TournamentLog([ifp], [])
        assert slot_forecast(log, ifp, 0, AggregationConfig(), {},
                             (0, 9)) is None

    def test_weight_returned_matches_combination(self, rng):
        ifp, log = random_instance(rng, c=3)
        cfg = AggregationConfig()
        h, w = human_aggregate_with_weight(log, "q", 9, cfg, {}, (0, 9))
        m = random_probs(rng, 3)
        out = slot_forecast(log, ifp, 9, cfg, {}, (0, 9), machine_probs=m)
        k = cfg.machine_weight(False)
        expect = (w * h + k * m) / (w + k)
        np.testing.assert_allclose(out, expect / expect.sum(), atol=1e-12)
