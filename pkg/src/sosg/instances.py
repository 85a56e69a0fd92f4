"""Random 1-D assessment instances that avoid sure loss by construction.

Each gamble is g_j = q_j - E_mu[q_j] + delta_j for a random discrete measure
mu on the domain and delta_j >= 0, so mu prices every g_j nonnegatively and no
positive combination can be uniformly negative.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .cones import SemiAlgebraicSet
from .poly import Polynomial
from .prevision import AssessmentSet


@dataclass
class InstanceConfig:
    max_gambles: int = 4
    max_degree: int = 4
    center: tuple[float, float] = (-2.0, 2.0)
    width: tuple[float, float] = (1.0, 4.0)
    atoms: tuple[int, int] = (2, 5)
    max_slack: float = 0.1
    min_gambles: int = 1


@dataclass
class Instance:
    a: float
    b: float
    gambles: list[Polynomial]
    f: Polynomial
    atoms: np.ndarray
    weights: np.ndarray
    event: tuple[float, float] | None = None

    @property
    def omega(self) -> SemiAlgebraicSet:
        return SemiAlgebraicSet.interval(self.a, self.b)

    def assessment(self, d: int) -> AssessmentSet:
        return AssessmentSet(self.omega, self.gambles, d)

    def expectation(self, p: Polynomial) -> float:
        return float(self.weights @ p.eval_many(self.atoms[:, None]))


def random_local_poly(rng: np.random.Generator, deg: int, a: float, b: float) -> Polynomial:
    """Random polynomial of the given degree with O(1) values on [a, b]."""
    t = Polynomial.variable(1, 0)
    coeffs = rng.normal(size=deg + 1)
    p = Polynomial(1)
    for k, c in enumerate(coeffs):
        p = p + float(c) * t**k
    # s = (x - mid) / half maps [a, b] to [-1, 1]
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    return p.compose_affine([1.0 / half], [-mid / half])


def random_instance(rng: np.random.Generator, cfg: InstanceConfig | None = None, with_event: bool = False) -> Instance:
    cfg = cfg or InstanceConfig()
    c = rng.uniform(*cfg.center)
    w = rng.uniform(*cfg.width)
    a, b = round(c - w / 2, 3), round(c + w / 2, 3)
    event = None
    k = int(rng.integers(cfg.atoms[0], cfg.atoms[1] + 1))
    atoms = rng.uniform(a, b, size=k)
    if with_event:
        lo = rng.uniform(a, a + 0.6 * (b - a))
        hi = rng.uniform(lo + 0.2 * (b - a), b)
        event = (round(lo, 3), round(min(hi, b), 3))
        atoms[0] = rng.uniform(*event)
    weights = rng.dirichlet(np.ones(k))
    inst = Instance(a, b, [], Polynomial(1), atoms, weights, event)
    n_g = int(rng.integers(cfg.min_gambles, cfg.max_gambles + 1))
    for _ in range(n_g):
        q = random_local_poly(rng, int(rng.integers(1, cfg.max_degree + 1)), a, b)
        inst.gambles.append(q - inst.expectation(q) + float(rng.uniform(0, cfg.max_slack)))
    inst.f = random_local_poly(rng, int(rng.integers(1, cfg.max_degree + 1)), a, b)
    return inst
