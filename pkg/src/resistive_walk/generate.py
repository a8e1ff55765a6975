"""Random line-window generators and deterministic fixtures.

Window graphs live on labels -L..L with every nearest-neighbour bond
present at conductance 1.  Pairs at distance n >= 2 are bonded
independently with a model-specific probability, capped below 1 so the
Bernoulli draw is always proper.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError
from .graph import Graph

_MASK64 = (1 << 64) - 1

# Bernoulli probabilities are capped at 1 - 2^-32.
PROBABILITY_CAP = 1.0 - 2.0 ** -32


def mix_seed(master_seed: int, index: int) -> int:
    """Derive the stream seed for ensemble member `index`.

    SplitMix64 finalizer applied to master_seed advanced by index+1
    increments of the golden-gamma constant.  The +1 keeps member 0 from
    reusing the raw master seed.
    """
    z = (master_seed + (index + 1) * 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def ensemble_seeds(master_seed: int, count: int) -> list[int]:
    return [mix_seed(master_seed, i) for i in range(count)]


@dataclass(frozen=True)
class LongRangeParams:
    """Polynomial-tail window: P(bond at distance n) = min(beta * n^-s, cap)."""

    half_width: int
    beta: float
    tail_exponent: float
    seed: int

    def bond_probability(self, n: int) -> float:
        if n == 1:
            return 1.0
        return min(self.beta * float(n) ** -self.tail_exponent, PROBABILITY_CAP)

    def validate(self) -> None:
        if self.half_width < 2:
            raise InvalidArgumentError("half_width must be at least 2")
        if self.beta < 0:
            raise InvalidArgumentError("beta must be nonnegative")
        if not self.tail_exponent > 2:
            raise InvalidArgumentError("tail exponent must exceed 2")
        if not 0 <= self.seed <= _MASK64:
            raise InvalidArgumentError("seed must be an unsigned 64-bit integer")


@dataclass(frozen=True)
class ExpTailParams:
    """Exponential-tail window: P(bond at distance n) = min(exp(-rate*n), cap)."""

    half_width: int
    rate: float
    seed: int

    def bond_probability(self, n: int) -> float:
        if n == 1:
            return 1.0
        return min(float(np.exp(-self.rate * n)), PROBABILITY_CAP)

    def validate(self) -> None:
        if self.half_width < 2:
            raise InvalidArgumentError("half_width must be at least 2")
        if not self.rate > 0:
            raise InvalidArgumentError("rate must be positive")
        if not 0 <= self.seed <= _MASK64:
            raise InvalidArgumentError("seed must be an unsigned 64-bit integer")


def _generate_window(params: LongRangeParams | ExpTailParams) -> Graph:
    params.validate()
    L = params.half_width
    rng = np.random.default_rng(params.seed)
    bonds: list[tuple[int, int, float]] = [(x, x + 1, 1.0) for x in range(-L, L)]
    # For each distance the bond count is Binomial over the available left
    # endpoints and positions are a uniform subset, which reproduces the
    # independent-Bernoulli law pair by pair.
    for n in range(2, 2 * L + 1):
        p = params.bond_probability(n)
        m = 2 * L + 1 - n
        k = int(rng.binomial(m, p))
        if k:
            lefts = np.sort(rng.choice(m, size=k, replace=False))
            bonds.extend((int(j) - L, int(j) - L + n, 1.0) for j in lefts)
    return Graph(bonds, marked=0, window=(-L, L), truncated=True)


def generate_long_range(params: LongRangeParams) -> Graph:
    """Sample a polynomial-tail window; deterministic per seed."""
    return _generate_window(params)


def generate_exp_tail(params: ExpTailParams) -> Graph:
    """Sample an exponential-tail window; deterministic per seed."""
    return _generate_window(params)


# -- deterministic fixtures ------------------------------------------------


def fixture(name: str, size: int | None = None) -> Graph:
    """Small named graphs used throughout the tests.

    path(n): n bonds on labels 0..n.  cycle(n): n >= 3 ring.  parallel_pair:
    two unit bonds between 0 and 1.  binary_tree(depth): complete tree,
    heap-ordered labels, root 0.  ladder(n): 2 x n grid.  line(L): pure
    nearest-neighbour window on -L..L.
    """
    if name == "parallel_pair":
        if size is not None:
            raise InvalidArgumentError("parallel_pair takes no size")
        return Graph([(0, 1, 1.0), (0, 1, 1.0)], marked=0)
    if size is None or size < 1:
        raise InvalidArgumentError(f"fixture {name!r} needs a positive size")
    if name == "path":
        return Graph([(i, i + 1, 1.0) for i in range(size)], marked=0)
    if name == "cycle":
        if size < 3:
            raise InvalidArgumentError("cycle needs at least 3 vertices")
        return Graph(
            [(i, (i + 1) % size, 1.0) for i in range(size)], marked=0
        )
    if name == "binary_tree":
        n = 2 ** (size + 1) - 1
        bonds = []
        for i in range(n):
            for child in (2 * i + 1, 2 * i + 2):
                if child < n:
                    bonds.append((i, child, 1.0))
        return Graph(bonds, marked=0)
    if name == "ladder":
        if size < 2:
            raise InvalidArgumentError("ladder needs at least 2 rungs")
        bonds = [(2 * i, 2 * i + 1, 1.0) for i in range(size)]
        for i in range(size - 1):
            bonds.append((2 * i, 2 * i + 2, 1.0))
            bonds.append((2 * i + 1, 2 * i + 3, 1.0))
        return Graph(bonds, marked=0)
    if name == "line":
        if size < 2:
            raise InvalidArgumentError("line needs half-width at least 2")
        return Graph(
            [(x, x + 1, 1.0) for x in range(-size, size)],
            marked=0,
            window=(-size, size),
            truncated=True,
        )
    raise InvalidArgumentError(f"unknown fixture {name!r}")
