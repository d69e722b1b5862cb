"""Random fixtures: monotone (submodular) set functions and small networks.

Coverage functions with small integer item weights take few distinct
values, which keeps threshold-space integration cheap.
"""

from __future__ import annotations

import numpy as np

from .network import (
    LinearActivation,
    SocialNetwork,
    TableActivation,
    WeightFunction,
    zero_activation,
)


def coverage_table(m: int, rng: np.random.Generator, items: int = 4, max_weight: int = 3) -> np.ndarray:
    """Unnormalized weighted coverage function over ``m`` elements (monotone, submodular)."""
    weights = rng.integers(1, max_weight + 1, size=items)
    covers = rng.random((m, items)) < 0.5
    masks = np.arange(1 << m)
    covered = np.zeros((masks.size, items), dtype=bool)
    for i in range(m):
        covered |= ((masks >> i & 1) == 1)[:, None] & covers[i][None, :]
    return (covered * weights).sum(axis=1).astype(float)


def budget_additive_table(m: int, rng: np.random.Generator) -> np.ndarray:
    """``min(1, sum a_i)`` with random ``a_i``, monotone and submodular."""
    a = rng.choice([0.0, 0.25, 0.5, 0.75], size=m)
    masks = np.arange(1 << m)
    s = np.zeros(masks.size)
    for i in range(m):
        s = s + np.where(masks >> i & 1, a[i], 0.0)
    return np.minimum(1.0, s)


def submodular_activation_table(m: int, rng: np.random.Generator) -> np.ndarray:
    """Random monotone submodular table in [0,1] with value 0 at the empty set."""
    if m == 0:
        return np.zeros(1)
    if rng.random() < 0.5:
        cov = coverage_table(m, rng)
        total = cov[-1] if cov[-1] > 0 else 1.0
        scale = rng.choice([0.5, 0.75, 1.0])
        return cov / total * scale
    return budget_additive_table(m, rng)


def monotone_table(m: int, rng: np.random.Generator, levels: int = 4) -> np.ndarray:
    """Random monotone table (generally not submodular): upward closure of random values."""
    raw = rng.integers(0, levels + 1, size=1 << m) / levels
    raw[0] = 0.0
    vals = raw.copy()
    for i in range(m):
        masks = np.arange(1 << m)
        on = (masks >> i & 1) == 1
        vals[on] = np.maximum(vals[on], vals[masks[on] & ~(1 << i)])
    return vals


def random_network(n: int, rng: np.random.Generator, max_degree: int = 3, linear_share: float = 0.3,
                   submodular: bool = True) -> SocialNetwork:
    """Random network of tabulated (and some linear) activations."""
    acts = []
    for v in range(n):
        others = [u for u in range(n) if u != v]
        deg = int(rng.integers(0, min(max_degree, len(others)) + 1)) if others else 0
        nbrs = tuple(sorted(int(u) for u in rng.choice(others, size=deg, replace=False))) if deg else ()
        if not nbrs:
            acts.append(zero_activation())
        elif submodular and rng.random() < linear_share:
            w = rng.choice([0.0, 0.25, 0.5], size=len(nbrs))
            if w.sum() > 1.0:
                w = w / w.sum()
            acts.append(LinearActivation(nbrs, tuple(w)))
        else:
            table = submodular_activation_table(len(nbrs), rng) if submodular else monotone_table(len(nbrs), rng)
            acts.append(TableActivation(nbrs, table))
    labels = tuple(f"n{v}" for v in range(n))
    return SocialNetwork(labels, tuple(acts))


def random_weight(n: int, rng: np.random.Generator) -> WeightFunction:
    """Random monotone submodular weight function (coverage, tabulated)."""
    return WeightFunction("table", n, coverage_table(n, rng, items=5, max_weight=4))


def and_function() -> tuple[tuple[str, str], np.ndarray]:
    """``f(S) = 1`` iff both ``x`` and ``y`` are in ``S``: monotone, not submodular."""
    return ("x", "y"), np.array([0.0, 0.0, 0.0, 1.0])


def star_network(leaves: int = 3, weight: float = 0.5) -> SocialNetwork:
    labels = ("hub",) + tuple(f"leaf{i}" for i in range(leaves))
    acts = (zero_activation(),) + tuple(LinearActivation((0,), (weight,)) for _ in range(leaves))
    return SocialNetwork(labels, acts)
