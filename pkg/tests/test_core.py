import numpy as np
import pytest

from crowdcast.core import (Forecast, Ifp, Source, TournamentLog,
                            ValidationError, active_forecast_on_day,
                            latest_per_source, uniform_forecast,
                            validate_forecast)

from conftest import human_fc, make_ifp


class TestIfp:
    def test_option_count_bounds(self):
        for c in (2, 3, 4, 5):
            assert make_ifp(c=c).n_options == c
        with pytest.raises(ValidationError):
            make_ifp(c=1)
        with pytest.raises(ValidationError):
            make_ifp(c=6)

    def test_binary_kind_requires_two_options(self):
        with pytest.raises(ValidationError):
            make_ifp(c=3, kind="binary")
        with pytest.raises(ValidationError):
            make_ifp(c=2, kind="ordinal")

    def test_dates(self):
        with pytest.raises(ValidationError):
            make_ifp(open_date=5, close_date=4)
        ifp = make_ifp(open_date=3, close_date=7)
        assert list(ifp.active_days) == [3, 4, 5, 6, 7]
        assert ifp.is_active(3) and ifp.is_active(7)
        assert not ifp.is_active(2) and not ifp.is_active(8)

    def test_thresholds(self):
        ifp = make_ifp(c=3, thresholds=(-1.0, 1.0))
        assert ifp.thresholds == (-1.0, 1.0)
        with pytest.raises(ValidationError):
            make_ifp(c=3, thresholds=(1.0, -1.0))
        with pytest.raises(ValidationError):
            make_ifp(c=3, thresholds=(0.0,))
        with pytest.raises(ValidationError):
            make_ifp(c=3, kind="nominal", thresholds=(0.0, 1.0))

    def test_resolution(self):
        assert make_ifp(resolved=None).resolved_option is None
        with pytest.raises(ValidationError):
            make_ifp(c=3, resolved=3)


class TestValidateForecast:
    def test_normalizes_within_tolerance(self):
        v = validate_forecast([0.5 + 4e-7, 0.5], 2)
        assert abs(v.sum() - 1.0) < 1e-15

    def test_rejects_bad_vectors(self):
        with pytest.raises(ValidationError):
            validate_forecast([0.7, 0.2], 2)        # sum far from 1
        with pytest.raises(ValidationError):
            validate_forecast([1.2, -0.2], 2)       # negative
        with pytest.raises(ValidationError):
            validate_forecast([0.5, 0.5, 0.0], 2)   # wrong length
        with pytest.raises(ValidationError):
            validate_forecast([np.nan, 1.0], 2)

    def test_uniform(self):
        assert np.allclose(uniform_forecast(4), 0.25)
        with pytest.raises(ValidationError):
            uniform_forecast(6)


class TestTournamentLog:
    def test_rejects_out_of_window_forecast(self):
        ifp = make_ifp(open_date=0, close_date=5)
        with pytest.raises(ValidationError):
            TournamentLog([ifp], [human_fc(ifp.id, "u", (0.5, 0.5), 6)])

    def test_rejects_unknown_ifp(self):
        with pytest.raises(ValidationError):
            TournamentLog([make_ifp()], [human_fc("nope", "u", (0.5, 0.5), 0)])

    def test_timestamp_order(self):
        ifp = make_ifp()
        fcs = [human_fc(ifp.id, "u", (0.5, 0.5), 3),
               human_fc(ifp.id, "u", (0.4, 0.6), 1),
               human_fc(ifp.id, "v", (0.3, 0.7), 1, seq=1)]
        log = TournamentLog([ifp], fcs)
        stamps = [f.timestamp for f in log.forecasts_for(ifp.id)]
        assert stamps == sorted(stamps)

    def test_filter_keeps_ifps(self):
        ifp = make_ifp()
        log = TournamentLog([ifp], [human_fc(ifp.id, "u", (0.5, 0.5), 0)])
        sub = log.filter(lambda f: False)
        assert len(sub) == 0 and ifp.id in sub.ifps


class TestCarryForward:
    def test_latest_per_source_last_write_wins(self):
        ifp = make_ifp()
        fcs = [human_fc(ifp.id, "u", (0.4, 0.6), 2, seq=0),
               human_fc(ifp.id, "u", (0.1, 0.9), 2, seq=1),
               human_fc(ifp.id, "u", (0.8, 0.2), 5)]
        log = TournamentLog([ifp], fcs)
        latest = latest_per_source(log, ifp.id, 2)
        assert latest[Source.human("u")].probs == (0.1, 0.9)
        latest = latest_per_source(log, ifp.id, 9)
        assert latest[Source.human("u")].probs == (0.8, 0.2)
        assert latest_per_source(log, ifp.id, 1) == {}

    def test_active_forecast_fill_modes(self):
        ifp = make_ifp()
        log = TournamentLog([ifp], [human_fc(ifp.id, "u", (0.8, 0.2), 4)])
        src = Source.human("u")
        np.testing.assert_array_equal(
            active_forecast_on_day(log, src, ifp.id, 2), [0.5, 0.5])
        assert active_forecast_on_day(log, src, ifp.id, 2, fill="none") is None
        np.testing.assert_array_equal(
            active_forecast_on_day(log, src, ifp.id, 7), [0.8, 0.2])


class TestSource:
    def test_parse_roundtrip(self):
        for s in (Source.human("u1"), Source.machine("m"), Source.slot("s")):
            assert Source.parse(str(s)) == s
        with pytest.raises(ValidationError):
            Source.parse("alien:x")
        with pytest.raises(ValidationError):
            Source.parse("human:")
