import numpy as np
import pytest

from crowdcast.aggregation import AggregationConfig
from crowdcast.allocation import (AllocationPolicy, BudgetReport,
                                  ConsensusRule, apply_policy,
                                  consensus_reached, evaluate_policies,
                                  swift_order)
from crowdcast.core import TournamentLog, ValidationError
from crowdcast.simulator import SimConfig, run_tournament

from conftest import make_ifp, small_log


class TestPolicyValidation:
    def test_kinds(self):
        with pytest.raises(ValidationError):
            AllocationPolicy(kind="bogus")

    def test_ranges(self):
        with pytest.raises(ValidationError):
            AllocationPolicy(kind="greedy_ifp", exclude_frac=1.0)
        with pytest.raises(ValidationError):
            AllocationPolicy(kind="random", p_keep=0.0)
        with pytest.raises(ValidationError):
            AllocationPolicy(kind="greedy_ifp_pp", cap=2,
                             consensus=ConsensusRule(min_forecasters=5))
        with pytest.raises(ValidationError):
            ConsensusRule(threshold=0.4)
        with pytest.raises(ValidationError):
            ConsensusRule(window=0)
        with pytest.raises(ValidationError):
            BudgetReport("p", 0.3, budget=0.0, kept=0, total=10)

    def test_names(self):
        assert AllocationPolicy(kind="all").name == "all"
        assert AllocationPolicy(kind="random", p_keep=0.5).name == "random(0.5)"
        assert "greedy_ifp_pp(0.2,10)" == AllocationPolicy(
            kind="greedy_ifp_pp", exclude_frac=0.2, cap=10).name


class TestSwiftOrder:
    def test_resolution_then_popularity_then_id(self):
        a = make_ifp("a", close_date=20)
        b = make_ifp("b", close_date=10)
        c = make_ifp("c", close_date=10)
        got = swift_order([a, b, c], popularity={"b": 5, "c": 1})
        assert [i.id for i in got] == ["c", "b", "a"]
        got = swift_order([a, b, c])
        assert [i.id for i in got] == ["b", "c", "a"]


class TestConsensus:
    def setup_method(self):
        self.ifp = make_ifp(open_date=0, close_date=9)
        self.rule = ConsensusRule(threshold=0.7, window=3, max_drift=0.1,
                                  min_forecasters=3)

    def history(self, tops):
        h = np.full((10, 2), np.nan)
        for i, t in enumerate(tops):
            if t is not None:
                h[i] = (t, 1 - t)
        return h

    def test_stable_window_qualifies(self):
        h = self.history([0.8, 0.82, 0.8, 0.81] + [None] * 6)
        assert consensus_reached(self.ifp, 3, h, 5, self.rule)

    def test_below_threshold_fails(self):
        h = self.history([0.8, 0.65, 0.8, 0.8] + [None] * 6)
        assert not consensus_reached(self.ifp, 3, h, 5, self.rule)

    def test_drift_fails(self):
        h = self.history([0.71, 0.95, 0.8, 0.8] + [None] * 6)
        assert not consensus_reached(self.ifp, 3, h, 5, self.rule)

    def test_too_few_forecasters_fails(self):
        h = self.history([0.8, 0.8, 0.8, 0.8] + [None] * 6)
        assert not consensus_reached(self.ifp, 3, h, 2, self.rule)

    def test_window_not_yet_full(self):
        h = self.history([0.9, 0.9] + [None] * 8)
        assert not consensus_reached(self.ifp, 1, h, 5, self.rule)

    def test_nan_days_break_the_window(self):
        h = self.history([0.9, None, 0.9, 0.9] + [None] * 6)
        assert not consensus_reached(self.ifp, 3, h, 5, self.rule)


@pytest.fixture(scope="module")
def sim_log():
    result = run_tournament(SimConfig(seed=7, n_ifps=8, n_forecasters=20,
                                      season_days=70, history_days=60))
    return result.log, result.season


class TestApplyPolicy:
    def test_all_keeps_everything(self, sim_log):
        log, season = sim_log
        censored, rep = apply_policy(log, AllocationPolicy(kind="all"),
                                     season=season)
        assert rep.budget == 100.0 and rep.kept == rep.total

    def test_random_budget_near_p_keep(self, sim_log):
        log, season = sim_log
        _, rep = apply_policy(log, AllocationPolicy(kind="random",
                                                    p_keep=0.6, seed=1),
                              season=season)
        assert 40.0 < rep.budget < 80.0

    def test_machine_forecasts_pass_through(self, sim_log):
        log, season = sim_log
        censored, _ = apply_policy(log, AllocationPolicy(kind="random",
                                                         p_keep=0.3),
                                   season=season)
        n_m = sum(1 for f in log.forecasts if f.source.kind == "machine")
        n_m2 = sum(1 for f in censored.forecasts
                   if f.source.kind == "machine")
        assert n_m == n_m2 > 0

    def test_greedy_spends_less_than_all(self, sim_log):
        log, season = sim_log
        _, rep = apply_policy(log, AllocationPolicy(kind="greedy_ifp",
                                                    exclude_frac=0.25),
                              season=season)
        assert rep.budget < 100.0

    def test_degenerate_greedy_reduces_to_all(self, sim_log):
        log, season = sim_log
        cfg = AggregationConfig(name="alloc")
        huge_cap = 10 ** 9
        base, rep_all = apply_policy(log, AllocationPolicy(kind="all"),
                                     cfg, season)
        pp = AllocationPolicy(kind="greedy_ifp_pp", exclude_frac=0.0,
                              cap=huge_cap)
        censored, rep_pp = apply_policy(log, pp, cfg, season)
        assert censored.forecasts == base.forecasts        # bit-exact
        assert rep_pp.brier == rep_all.brier
        assert rep_pp.budget == 100.0

    def test_empty_log_rejected(self):
        ifp = make_ifp()
        with pytest.raises(ValidationError):
            apply_policy(TournamentLog([ifp], []),
                         AllocationPolicy(kind="all"))

    def test_evaluate_policies_table(self, sim_log):
        log, season = sim_log
        table = evaluate_policies(
            log, [AllocationPolicy(kind="all"),
                  AllocationPolicy(kind="random", p_keep=0.7)],
            season=season)
        assert list(table.columns) == ["policy", "brier", "budget",
                                       "kept", "total"]
        assert len(table) == 2
