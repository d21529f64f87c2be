import numpy as np
import pytest

from crowdcast.core import Forecast, Ifp, Source, TournamentLog

# pass/fail lines recorded by the acceptance tests, echoed after the run
SCORECARD = []


def pytest_terminal_summary(terminalreporter):
    if SCORECARD:
        terminalreporter.write_sep("-", "acceptance scorecard")
        for line in SCORECARD:
            terminalreporter.write_line(line)


def make_ifp(ifp_id="q-1", c=2, kind=None, open_date=0, close_date=9,
             resolved=0, series_ref=None, thresholds=None,
             horizon_kind="value_at_close"):
    if kind is None:
        kind = "binary" if c == 2 else "ordinal"
    return Ifp(id=ifp_id, title=ifp_id, options=tuple(f"o{i}" for i in range(c)),
               kind=kind, open_date=open_date, close_date=close_date,
               resolved_option=resolved, series_ref=series_ref,
               thresholds=thresholds, horizon_kind=horizon_kind)


def human_fc(ifp_id, user, probs, day, seq=0):
    return Forecast(ifp_id, Source.human(user), tuple(probs), day, seq)


def machine_fc(ifp_id, probs, day, seq=0, model="m"):
    return Forecast(ifp_id, Source.machine(model), tuple(probs), day, seq)


def random_probs(rng, c):
    v = rng.random(c) + 1e-3
    return v / v.sum()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def small_log(rng, n_ifps=3, n_users=6, c_choices=(2, 3, 4), days=12):
    """A small random but valid tournament log."""
    ifps, fcs = [], []
    for i in range(n_ifps):
        c = int(rng.choice(c_choices))
        ifp = make_ifp(f"q-{i}", c=c, open_date=0, close_date=days - 1,
                       resolved=int(rng.integers(c)))
        ifps.append(ifp)
        for u in range(n_users):
            for day in sorted(rng.choice(days, size=3, replace=False)):
                fcs.append(human_fc(ifp.id, f"u{u}",
                                    random_probs(rng, c), int(day), seq=u))
    return TournamentLog(ifps, fcs)
