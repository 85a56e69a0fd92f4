import numpy as np
import pytest

from sosg.errors import ChainValidationError, ConditioningOnNullEvent
from sosg.optionlab import (
    DEFAULT_DOMAIN,
    CurveConfig,
    arbitrage_check,
    assessments_from_chain,
    bundled_table1,
    bundled_weight,
    call_spread_bound,
    conditioned_curve,
    default_cgrid,
    load_option_chain,
    oracle_conditioned,
    parse_cgrid,
    probability_curve,
    weighted_curve,
)
from sosg.piecewise import call_payoff, indicator_at_least, pw_lower_prevision, pw_upper_prevision
from sosg.prevision import AslStatus

HEADER = "strike,bid,ask\n"


def test_bundled_chain_rows(table1):
    assert len(table1) == 22
    assert table1.rows[0].strike == 2490 and table1.rows[0].bid == 53.3 and table1.rows[0].ask == 53.8
    assert table1.rows[-1].strike == 2675 and table1.rows[-1].bid == 0.2 and table1.rows[-1].ask == 0.3


@pytest.mark.parametrize("text", [
    "",
    HEADER,
    "k,b,a\n2500,1,2\n",
    HEADER + "2500,3,2\n",
    HEADER + "2500,2,3\n2490,1,2\n",
    HEADER + "2500,2,3\n2500,1,2\n",
    HEADER + "2500,x,3\n",
    HEADER + "2500,1\n",
    HEADER + "2500,-1,3\n",
])
def test_bad_chains_rejected(text):
    with pytest.raises(ChainValidationError):
        load_option_chain(text)


def test_discount_applies_to_prices():
    ch = load_option_chain((HEADER + "2500,10,12\n").encode(), discount=0.5)
    assert ch.rows[0].bid == 5 and ch.rows[0].ask == 6


def test_gambles_from_chain(table1):
    G = assessments_from_chain(table1)
    assert len(G) == 44
    assert G[0](2600) == pytest.approx(110 - 53.3) and G[1](2600) == pytest.approx(53.8 - 110)


def test_cgrid_parsing():
    assert len(default_cgrid()) == 41
    assert np.allclose(parse_cgrid("0:1:0.25"), [0, 0.25, 0.5, 0.75, 1])
    for bad in ("0:1", "1:0:1", "0:1:0", "a:b:c"):
        with pytest.raises(ValueError):
            parse_cgrid(bad)


def test_prices_round_trip(table1):
    G = assessments_from_chain(table1)
    for r in table1.rows[::3]:
        assert abs(pw_lower_prevision(DEFAULT_DOMAIN, G, call_payoff(r.strike), 2).value - r.bid) < 1e-4
        assert abs(pw_upper_prevision(DEFAULT_DOMAIN, G, call_payoff(r.strike), 2).value - r.ask) < 1e-4


def test_call_spread_bound(table1):
    G = assessments_from_chain(table1)
    for i in (0, 5, 10, 20):
        up = pw_upper_prevision(DEFAULT_DOMAIN, G, indicator_at_least(table1.rows[i + 1].strike), 2).value
        assert up <= call_spread_bound(table1, i) + 1e-6


def test_arbitrage_detection(table1):
    assert arbitrage_check(table1).status is AslStatus.AVOIDS
    rows = HEADER + "".join(f"{r.strike:g},{r.bid},{r.ask}\n" for r in table1.rows[:-1]) + "2675,60,60.5\n"
    assert arbitrage_check(load_option_chain(rows)).status is AslStatus.SURE_LOSS
    assert arbitrage_check(load_option_chain(HEADER + "2675,60,60.5\n")).status is AslStatus.AVOIDS


def test_small_curve_csv(table1):
    cfg = CurveConfig(c_grid=np.array([2450.0, 2550.0, 2650.0]))
    curve = probability_curve(table1, cfg)
    assert curve.violations() == []
    lines = curve.to_csv().splitlines()
    assert lines[0] == "c,lower,upper" and len(lines) == 4


def test_conditioned_points(table1):
    cfg = CurveConfig(c_grid=np.array([2500.0, 2600.0]))
    curve = conditioned_curve(table1, 2540, cfg)
    lo, up = oracle_conditioned(table1, 2540, cfg, 2001)
    assert np.allclose(curve.updated_lower, [1, 1 / 25.6], atol=1e-5)
    assert np.allclose(curve.updated_lower, lo, atol=1e-5) and np.allclose(curve.updated_upper, up, atol=1e-5)
    assert curve.updated_upper[1] >= curve.upper[1]
    with pytest.raises(ConditioningOnNullEvent):
        conditioned_curve(table1, 3200, cfg)


def test_weighted_curve(table1):
    cfg = CurveConfig(c_grid=np.array([2500.0, 2550.0, 2600.0]), workers=2)
    curve = weighted_curve(table1, bundled_weight(), cfg)
    assert curve.violations() == []
    assert not np.allclose(curve.updated_upper, curve.upper, atol=1e-4)


@pytest.mark.slow
def test_full_curve_has_41_rows(table1_curves):
    curve, _, _ = table1_curves
    assert len(curve.to_csv().splitlines()) == 42
    assert curve.violations() == []
