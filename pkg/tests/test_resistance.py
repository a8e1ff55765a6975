import numpy as np
import pytest

from resistive_walk.errors import InvalidArgumentError
from resistive_walk.generate import LongRangeParams, fixture, generate_long_range
from resistive_walk.oracle import dense_green, dense_resistance
from resistive_walk.resistance import (
    OriginResistanceCache,
    ProjectedLine,
    dirichlet_potential,
    effective_resistance,
    green_row,
    project_long_bonds,
    projected_complement_resistance,
    resistance_profile,
)

FIXTURES = [
    ("path", 3),
    ("parallel_pair", None),
    ("cycle", 5),
    ("ladder", 4),
    ("binary_tree", 3),
    ("line", 6),
]


@pytest.mark.parametrize("name, size", FIXTURES)
def test_matches_dense_oracle(name, size):
    g = fixture(name, size)
    labels = list(g.labels)
    A, B = [labels[0]], [labels[-1]]
    assert effective_resistance(g, A, B) == pytest.approx(
        dense_resistance(g, A, B), rel=1e-10
    )


def test_path_series_law():
    for n in (2, 5, 9):
        g = fixture("path", n)
        assert effective_resistance(g, [0], [n]) == pytest.approx(n, rel=1e-10)


def test_parallel_law():
    g = fixture("parallel_pair")
    assert effective_resistance(g, [0], [1]) == pytest.approx(0.5, rel=1e-10)


def test_added_bond_composes_in_parallel():
    g = fixture("path", 4)
    base = effective_resistance(g, [0], [4])
    h = g.with_bond(0, 4, 0.5)
    expected = 1.0 / (1.0 / base + 0.5)
    assert effective_resistance(h, [0], [4]) == pytest.approx(expected, rel=1e-10)


def test_rayleigh_monotonicity():
    for seed in range(20):
        g = generate_long_range(LongRangeParams(32, 1.0, 3.5, seed=seed))
        rng = np.random.default_rng(seed)
        u, v = sorted(rng.choice(np.arange(-30, 31), size=2, replace=False).tolist())
        base = effective_resistance(g, [0], [g.window[1]])
        bumped = effective_resistance(
            g.with_bond(int(u), int(v), 2.0), [0], [g.window[1]]
        )
        assert bumped <= base + 1e-12


def test_potential_interpolates_between_sets():
    g = fixture("path", 4)
    pot = dirichlet_potential(g, [0], [4])
    assert pot.value(0) == pytest.approx(1.0)
    assert pot.value(4) == pytest.approx(0.0)
    assert pot.value(2) == pytest.approx(0.5, rel=1e-10)
    assert pot.energy > 0
    assert pot.residual <= 1e-10


def test_requires_disjoint_nonempty_sets():
    g = fixture("path", 4)
    with pytest.raises(InvalidArgumentError):
        effective_resistance(g, [0], [0, 4])
    with pytest.raises(InvalidArgumentError):
        effective_resistance(g, [], [4])


def test_green_row_matches_oracle():
    g = generate_long_range(LongRangeParams(64, 1.0, 3.5, seed=7))
    domain = [x for x in range(-6, 7)]
    row = green_row(g, domain, 0)
    oracle = dense_green(g, domain, 0)
    assert row.values == pytest.approx(oracle, rel=1e-9)


def test_green_diagonal_is_complement_resistance(lrp128):
    domain = lrp128.ball(0, 9, metric="line").tolist()
    row = green_row(lrp128, domain, 0)
    outside = [x for x in lrp128.labels.tolist() if x not in set(domain)]
    assert row.diagonal == pytest.approx(
        effective_resistance(lrp128, [0], outside), rel=1e-9
    )


def test_green_row_is_nonnegative(lrp128):
    row = green_row(lrp128, lrp128.ball(0, 12, metric="line").tolist(), 0)
    assert np.all(row.values >= -1e-12)


def test_origin_cache_matches_pair_resistances(lrp128):
    cache = OriginResistanceCache(lrp128)
    targets = [-9, -3, 1, 5, 20]
    values = cache.pair_resistance(targets)
    for y, got in zip(targets, values):
        assert got == pytest.approx(
            effective_resistance(lrp128, [0], [y]), rel=1e-9
        )
    assert cache.pair_resistance([0]) == pytest.approx([0.0])


def test_profile_complement_resistances(line64):
    rows = resistance_profile(line64, [2, 4, 8], metric="line")
    # two arms of length R in parallel
    for row in rows:
        assert row.complement_resistance == pytest.approx(row.radius / 2, rel=1e-9)
        assert row.max_pointwise_ratio == pytest.approx(1.0, rel=1e-9)


def test_profile_rejects_nonpositive_radii(line64):
    with pytest.raises(InvalidArgumentError):
        resistance_profile(line64, [0, 2], metric="line")


def test_projection_reproduces_shorted_chord():
    g = fixture("path", 3).with_bond(0, 3, 1.0)
    projected = project_long_bonds(g, side=1)
    assert projected.conductances == pytest.approx([4.0, 4.0, 4.0])
    assert projected.resistance(3) == pytest.approx(0.75, rel=1e-12)
    # the shorted value happens to be exact here
    assert effective_resistance(g, [0], [3]) == pytest.approx(0.75, rel=1e-10)


def test_projection_is_a_lower_bound():
    for seed in range(15):
        g = generate_long_range(LongRangeParams(64, 1.0, 3.5, seed=seed))
        for radius in (4, 8, 16):
            outside = g.labels[np.abs(g.labels) >= radius].tolist()
            exact = effective_resistance(g, [0], outside)
            assert projected_complement_resistance(g, radius) <= exact + 1e-10


def test_projection_requires_line_labels():
    from resistive_walk.graph import Graph

    g = Graph([(0, 1, 1.0), (1, 3, 1.0)], marked=0)
    with pytest.raises(InvalidArgumentError, match="contiguous"):
        project_long_bonds(g)


def test_projected_line_validates_distance():
    line = ProjectedLine(side=1, conductances=np.asarray([1.0, 2.0]))
    assert line.resistance(2) == pytest.approx(1.5)
    with pytest.raises(InvalidArgumentError):
        line.resistance(3)
