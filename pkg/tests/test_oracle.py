import math

import numpy as np
import pytest

from sosg.instances import InstanceConfig, random_instance
from sosg.oracle import (
    grid,
    lp_avoids_sure_loss,
    lp_conditional,
    lp_lower_prevision,
    lp_lower_prevision_points,
    lp_upper_prevision,
)
from sosg.piecewise import indicator_at_least, pw_lower_prevision
from sosg.poly import Polynomial

x = Polynomial.variable(1, 0)
MARKOV = [x - 2, 2 - x]


def test_grid_keeps_breakpoints():
    g = grid(0, 10, 101, [3.333, 12])
    assert 3.333 in g and g.min() == 0 and g.max() == 10 and 12 not in g
    with pytest.raises(ValueError):
        grid(0, 1, 10)


def test_markov_on_grid():
    f = indicator_at_least(5)
    assert abs(lp_upper_prevision((0, 10), MARKOV, f, 1001) - 0.4) < 1e-9
    assert abs(lp_lower_prevision((0, 10), MARKOV, f, 1001)) < 1e-9


def test_vacuous_and_sure_loss():
    # with no assessments the lower prevision is the grid minimum; sure loss shows up as lambda_0 = 1
    assert abs(lp_lower_prevision((0, 10), [], x, 1001)) < 1e-9
    assert lp_avoids_sure_loss((0, 10), MARKOV, 1001) < 1e-9
    assert abs(lp_avoids_sure_loss((0, 10), [x - 11], 1001) - 1) < 1e-9


def test_points_version_any_dimension():
    x1, x2 = Polynomial.variables(2)
    pts = np.array([[1.0, 1.0], [-1.0, -1.0], [1.0, -1.0], [-1.0, 1.0]])
    G = [x1, -x1, x2, -x2]
    assert abs(lp_lower_prevision_points(pts, G, x1 * x2) + 1) < 1e-9


def test_refinement_is_monotone():
    inst = random_instance(np.random.default_rng(5), InstanceConfig(max_degree=3))
    vals = [lp_lower_prevision((inst.a, inst.b), inst.gambles, inst.f, n) for n in (251, 501, 1001, 2001)]
    assert all(b <= a + 1e-9 for a, b in zip(vals, vals[1:]))


def test_sos_value_below_oracle():
    rng = np.random.default_rng(6)
    for _ in range(5):
        inst = random_instance(rng, InstanceConfig(max_degree=3))
        sos = pw_lower_prevision((inst.a, inst.b), inst.gambles, inst.f, 3).value
        assert sos <= lp_lower_prevision((inst.a, inst.b), inst.gambles, inst.f, 2001) + 1e-6


def test_grid_stability():
    G = [x - 2, 2 - x, (x - 3) ** 2 - 5, 5 - (x - 3) ** 2]
    f = indicator_at_least(6.5)
    v1 = lp_upper_prevision((0, 10), G, f, 4001)
    v2 = lp_upper_prevision((0, 10), G, f, 8001)
    assert abs(v1 - v2) < 1e-6


def test_conditional_closure_at_breakpoint():
    # at c = s0 the indicator equals 1 on the whole event
    f = indicator_at_least(5)
    assert abs(lp_conditional((0, 10), MARKOV, (5, 10), f, 1001) - 1) < 1e-9
    assert math.isfinite(lp_conditional((0, 10), MARKOV, (5, 10), indicator_at_least(7), 1001))
