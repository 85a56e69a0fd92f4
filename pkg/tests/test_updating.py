import json
import math

import numpy as np
import pytest

from sosg.cones import SemiAlgebraicSet
from sosg.errors import ConditioningOnNullEvent
from sosg.instances import InstanceConfig, random_instance
from sosg.oracle import lp_conditional
from sosg.piecewise import PiecewisePolynomial, indicator_at_least
from sosg.poly import Polynomial
from sosg.prevision import AssessmentSet, PrevisionStatus, lower_prevision, upper_prevision
from sosg.updating import (
    Event,
    _with,
    conditional_dual,
    conditional_lower_prevision,
    conditional_upper_prevision,
    multi_constraint_conditional,
    pw_conditional_lower_prevision,
    pw_conditional_upper_prevision,
    pw_weighted_lower_prevision,
    require_value,
    weighted_lower_prevision,
    weighted_upper_prevision,
)

x = Polynomial.variable(1, 0)
OMEGA = SemiAlgebraicSet.interval(0, 10)
MARKOV = AssessmentSet(OMEGA, [x - 2, 2 - x], 1)


def test_mean_given_tail():
    ev = Event.at_least(5)
    assert abs(conditional_lower_prevision(MARKOV, ev, x).value - 5) < 1e-6
    res, point = conditional_dual(MARKOV, ev, x)
    assert abs(res.value - 5) < 1e-6
    assert abs(point.y.y[0] - 1) < 1e-7
    assert abs(lp_conditional((0, 10), MARKOV.gambles, (5, 10), x, 2001) - 5) < 1e-6


def test_both_identities_reconstruct():
    ev = Event.at_least(5)
    r = conditional_lower_prevision(MARKOV, ev, x)
    c1, c2 = r.certificate
    comb = sum(float(l) * g for l, g in zip(r.lambdas, MARKOV.gambles))
    h = (ev.hs[0], ev.half_degrees[0])
    assert c1.reconstruct(_with(OMEGA, [h])).allclose(x - r.lambda0 - comb, atol=1e-5)
    assert c2.reconstruct(_with(OMEGA, [(-h[0], h[1])])).allclose(-comb, atol=1e-5)
    for c in (c1, c2):
        assert c.min_eigenvalue() >= -1e-7


def test_trivial_event_is_unconditional():
    f = (x - 3) ** 2 / 10
    a = MARKOV.with_degree(2)
    one = Event.single(Polynomial.constant(1, 1.0))
    assert abs(conditional_lower_prevision(a, one, f).value - lower_prevision(a, f).value) < 1e-6
    whole = Event.interval(-1, 11)
    assert abs(conditional_upper_prevision(a, whole, f).value - upper_prevision(a, f).value) < 1e-6


def test_multi_constraint_relaxation():
    ev = Event.interval(3, 7, single=False)
    res = multi_constraint_conditional(MARKOV, ev, x)
    assert abs(res.value - 3) < 1e-6
    with pytest.raises(ValueError):
        conditional_lower_prevision(MARKOV, ev, x)


def test_null_event_detected():
    ev = Event.single(-1 - x * x)
    a = MARKOV.with_degree(2)
    res = conditional_lower_prevision(a, ev, x)
    assert res.status is PrevisionStatus.NULL_EVENT
    assert conditional_dual(a, ev, x)[0].status is PrevisionStatus.NULL_EVENT
    with pytest.raises(ConditioningOnNullEvent):
        require_value(res)


def test_event_outside_domain_is_null_for_piecewise():
    res = pw_conditional_lower_prevision((0, 10), MARKOV.gambles, Event.at_least(12), x, 2)
    assert res.status is PrevisionStatus.NULL_EVENT


def test_event_json_round_trip():
    ev = Event.interval(2, 4)
    again = Event.from_json(json.loads(json.dumps(ev.to_json())))
    assert all(p.allclose(q) for p, q in zip(ev.hs, again.hs))
    assert ev.contains([3]) and not ev.contains([5])


def test_primal_dual_on_random_events():
    rng = np.random.default_rng(11)
    for _ in range(5):
        inst = random_instance(rng, InstanceConfig(max_degree=3), with_event=True)
        a = inst.assessment(2)
        ev = Event.interval(*inst.event)
        p = conditional_lower_prevision(a, ev, inst.f)
        q, _ = conditional_dual(a, ev, inst.f)
        assert p.ok and q.ok
        assert abs(p.value - q.value) <= 1e-5 * (1 + abs(p.value))
        lp = lp_conditional((inst.a, inst.b), inst.gambles, inst.event, inst.f, 2001)
        assert p.value <= lp + 1e-6


def test_piecewise_conditioning_matches_oracle():
    G = MARKOV.gambles
    ev = Event.at_least(5)
    for c in (4, 5, 6, 8):
        f = indicator_at_least(c)
        lo = pw_conditional_lower_prevision((0, 10), G, ev, f, 2).value
        up = pw_conditional_upper_prevision((0, 10), G, ev, f, 2).value
        assert abs(lo - lp_conditional((0, 10), G, (5, 10), f, 2001)) < 1e-6
        assert abs(up + lp_conditional((0, 10), G, (5, 10), -f, 2001)) < 1e-6
        assert lo <= up + 1e-7


@pytest.mark.parametrize("W", [Polynomial.constant(1, 1.0), Polynomial.constant(1, 3.5)])
def test_constant_weight_is_unconditional(W):
    f = (x - 3) ** 2 / 10
    a = MARKOV.with_degree(2)
    assert abs(weighted_lower_prevision(a, f, W).value - lower_prevision(a, f).value) < 1e-6
    assert abs(weighted_upper_prevision(a, f, W).value - upper_prevision(a, f).value) < 1e-6


def test_zero_weight_rejected():
    with pytest.raises(ValueError):
        weighted_lower_prevision(MARKOV, x, Polynomial(1))
    zero = PiecewisePolynomial([5], [0.0, 0.0])
    with pytest.raises(ValueError):
        pw_weighted_lower_prevision((0, 10), MARKOV.gambles, indicator_at_least(5), zero, 2)


def test_weight_tilts_towards_high_region():
    W = PiecewisePolynomial([5], [0.2, 1.0])
    f = indicator_at_least(5)
    base = pw_weighted_lower_prevision((0, 10), MARKOV.gambles, f, PiecewisePolynomial([], [1.0]), 2).value
    tilted = pw_weighted_lower_prevision((0, 10), MARKOV.gambles, f, W, 2).value
    assert math.isfinite(tilted) and tilted >= base - 1e-7
