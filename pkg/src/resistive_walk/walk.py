"""Heat kernels and Monte Carlo statistics of the conductance walk.

The walk moves from x to y with probability conductance(x,y)/mu_x.  Heat
kernel values p_n(x,y) = P(X_n = y)/mu_y come from exact sparse
transition products; a second, killed product tracks the probability of
having touched the window boundary, which flags truncation effects.
Monte Carlo trajectories draw from one dedicated stream per trajectory
index, so results do not depend on batching or scheduling.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.sparse import csr_matrix, diags

from .errors import InvalidArgumentError, SolverError
from .generate import mix_seed
from .graph import Graph
from .resistance import green_row

CONTAMINATION_LEVEL = 1e-3
_CONSERVATION_TOL = 1e-9


@dataclass(frozen=True)
class HeatKernelTable:
    """Exact kernel series from one origin.

    origin_series[n] is p_n(origin, origin); boundary_contact[n] is the
    probability of having visited a window-edge vertex by step n (zero for
    graphs that are not truncations).  snapshots maps selected steps to
    the full row p_n(origin, .), aligned with labels.
    """

    origin: int
    horizon: int
    labels: np.ndarray
    origin_series: np.ndarray
    boundary_contact: np.ndarray
    snapshots: dict[int, np.ndarray] = field(default_factory=dict)

    @property
    def contaminated_from(self) -> int | None:
        """First step where boundary contact exceeds the reporting level."""
        hits = np.nonzero(self.boundary_contact > CONTAMINATION_LEVEL)[0]
        return int(hits[0]) if hits.size else None

    def even_series(self) -> tuple[np.ndarray, np.ndarray]:
        """(n, p_2n(origin, origin)) pairs for n = 1..horizon//2."""
        ns = np.arange(1, self.horizon // 2 + 1)
        return ns, self.origin_series[2 * ns]

    def smoothed(self, n: int) -> float:
        """p_n + p_{n+1}, the parity-insensitive kernel value."""
        if not 0 <= n < self.horizon:
            raise InvalidArgumentError("n must lie in 0..horizon-1")
        return float(self.origin_series[n] + self.origin_series[n + 1])


def _transition(g: Graph) -> tuple[csr_matrix, np.ndarray]:
    adj = g.adjacency()
    mu = np.asarray(adj.sum(axis=1)).ravel()
    return (adj @ diags(1.0 / mu)).tocsr(), mu


def heat_kernel_exact(
    g: Graph,
    origin: int,
    n_steps: int,
    snapshots: Sequence[int] = (),
) -> HeatKernelTable:
    """Run n_steps exact transition products from `origin`."""
    if n_steps < 0:
        raise InvalidArgumentError("n_steps must be nonnegative")
    step_to_origin, mu = _transition(g)
    oi = g.index(origin)
    n = g.n_vertices
    wanted = set(int(s) for s in snapshots)
    bad = [s for s in wanted if not 0 <= s <= n_steps]
    if bad:
        raise InvalidArgumentError(f"snapshot steps {bad} outside 0..{n_steps}")

    boundary = np.zeros(n, dtype=bool)
    if g.truncated:
        lo, hi = g.window
        boundary = (g.labels == lo) | (g.labels == hi)

    q = np.zeros(n)
    q[oi] = 1.0
    killed = q.copy()
    killed[boundary] = 0.0

    series = np.empty(n_steps + 1)
    contact = np.empty(n_steps + 1)
    series[0] = q[oi] / mu[oi]
    contact[0] = 1.0 - killed.sum()
    snaps: dict[int, np.ndarray] = {}
    if 0 in wanted:
        snaps[0] = q / mu
    for t in range(1, n_steps + 1):
        q = step_to_origin @ q
        total = q.sum()
        if abs(total - 1.0) > _CONSERVATION_TOL:
            raise SolverError(f"probability mass drifted to {total!r} at step {t}")
        killed = step_to_origin @ killed
        killed[boundary] = 0.0
        series[t] = q[oi] / mu[oi]
        contact[t] = 1.0 - killed.sum()
        if t in wanted:
            snaps[t] = q / mu
    return HeatKernelTable(int(origin), n_steps, g.labels, series, contact, snaps)


def mean_exit_time_exact(g: Graph, origin: int, radius: int, metric: str = "graph") -> float:
    """E[exit time from the ball of `radius`] via the killed Green row."""
    g.check_probe_radius(radius)
    ball = g.ball(origin, radius, metric)
    if ball.size == g.n_vertices:
        raise InvalidArgumentError(f"ball of radius {radius} covers the whole graph")
    row = green_row(g, ball, origin)
    _, mu = _transition(g)
    idx = g.indices(row.domain)
    return float(row.values @ mu[idx])


@dataclass(frozen=True)
class WalkStatistics:
    """Per-trajectory Monte Carlo statistics on one graph.

    Exit times are reported per tracked radius and capped at the horizon
    with `censored` set.  Grid columns follow `time_grid`.
    """

    origin: int
    n_steps: int
    metric: str
    seed: int
    radii: np.ndarray
    time_grid: np.ndarray
    exit_time: np.ndarray          # (n_traj, n_radii), horizon where censored
    censored: np.ndarray           # (n_traj, n_radii) bool
    displacement: np.ndarray       # (n_traj, n_grid) distance at grid steps
    max_displacement: np.ndarray   # (n_traj, n_grid) running max at grid steps
    range_weight: np.ndarray       # (n_traj, n_grid) measure of visited set
    range_size: np.ndarray         # (n_traj, n_grid) visited vertex count
    endpoint: np.ndarray           # (n_traj, n_grid) vertex labels
    step_displacement: np.ndarray | None = None  # (n_traj, n_steps+1) when kept

    @property
    def n_trajectories(self) -> int:
        return self.exit_time.shape[0]

    def mean_exit_time(self, radius: int, include_censored: bool = False) -> float:
        j = int(np.nonzero(self.radii == radius)[0][0])
        if include_censored:
            return float(self.exit_time[:, j].mean())
        live = ~self.censored[:, j]
        if not live.any():
            raise InvalidArgumentError(f"all trajectories censored at radius {radius}")
        return float(self.exit_time[live, j].mean())

    def return_frequency(self, grid_index: int = -1) -> float:
        """Fraction of trajectories sitting at the origin at a grid step."""
        return float((self.endpoint[:, grid_index] == self.origin).mean())


def simulate(
    g: Graph,
    origin: int,
    n_steps: int,
    n_trajectories: int,
    seed: int,
    radii: Sequence[int] = (),
    time_grid: Sequence[int] | None = None,
    metric: str = "graph",
    keep_steps: bool = False,
    chunk_size: int = 256,
) -> WalkStatistics:
    """Sample trajectories of the conductance walk.

    Trajectory i draws all its uniforms from the stream seeded by
    mix_seed(seed, i), so any batching gives identical paths.
    """
    if n_steps < 1 or n_trajectories < 1:
        raise InvalidArgumentError("n_steps and n_trajectories must be positive")
    radii_arr = np.asarray(sorted(int(R) for R in radii), dtype=np.int64)
    if np.any(radii_arr < 1):
        raise InvalidArgumentError("radii must be positive")
    if time_grid is None:
        grid = np.asarray([n_steps], dtype=np.int64)
    else:
        grid = np.asarray(sorted(int(t) for t in time_grid), dtype=np.int64)
        if grid.size == 0 or grid[0] < 1 or grid[-1] > n_steps:
            raise InvalidArgumentError("time grid must lie in 1..n_steps")

    indptr, indices, weights = g.csr()
    edge_cum = np.concatenate([[0.0], np.cumsum(weights)])
    row_span = edge_cum[indptr[1:]] - edge_cum[indptr[:-1]]
    mu = row_span  # weighted degree, in the same float accumulation
    dist = g.distances_from(origin, metric)
    oi = g.index(origin)
    n = g.n_vertices

    n_grid = grid.size
    exit_time = np.full((n_trajectories, radii_arr.size), n_steps, dtype=np.int64)
    censored = np.ones((n_trajectories, radii_arr.size), dtype=bool)
    displacement = np.empty((n_trajectories, n_grid), dtype=np.int64)
    max_displacement = np.empty((n_trajectories, n_grid), dtype=np.int64)
    range_weight = np.empty((n_trajectories, n_grid))
    range_size = np.empty((n_trajectories, n_grid), dtype=np.int64)
    endpoint = np.empty((n_trajectories, n_grid), dtype=np.int64)
    steps_kept = (
        np.empty((n_trajectories, n_steps + 1), dtype=np.int64) if keep_steps else None
    )

    for start in range(0, n_trajectories, chunk_size):
        stop = min(start + chunk_size, n_trajectories)
        m = stop - start
        uniforms = np.empty((m, n_steps))
        for i in range(m):
            stream = np.random.default_rng(mix_seed(seed, start + i))
            uniforms[i] = stream.random(n_steps)

        x = np.full(m, oi, dtype=np.int64)
        d_hist = np.empty((m, n_steps + 1), dtype=np.int64)
        d_hist[:, 0] = 0
        visited = np.zeros((m, n), dtype=bool)
        visited[:, oi] = True
        rows = np.arange(m)
        weight_sum = np.full(m, mu[oi])
        size = np.ones(m, dtype=np.int64)
        grid_pos = 0
        for t in range(1, n_steps + 1):
            target = edge_cum[indptr[x]] + uniforms[:, t - 1] * row_span[x]
            pos = np.searchsorted(edge_cum, target, side="right") - 1
            pos = np.clip(pos, indptr[x], indptr[x + 1] - 1)
            x = indices[pos]
            d_hist[:, t] = dist[x]
            fresh = ~visited[rows, x]
            weight_sum += mu[x] * fresh
            size += fresh
            visited[rows, x] = True
            while grid_pos < n_grid and grid[grid_pos] == t:
                displacement[start:stop, grid_pos] = dist[x]
                range_weight[start:stop, grid_pos] = weight_sum
                range_size[start:stop, grid_pos] = size
                endpoint[start:stop, grid_pos] = g.labels[x]
                grid_pos += 1
        running_max = np.maximum.accumulate(d_hist, axis=1)
        max_displacement[start:stop] = running_max[:, grid]
        for j, R in enumerate(radii_arr):
            hit = running_max >= R
            reached = hit[:, -1]
            first = np.argmax(hit, axis=1)
            exit_time[start:stop, j] = np.where(reached, first, n_steps)
            censored[start:stop, j] = ~reached
        if keep_steps:
            steps_kept[start:stop] = d_hist

    return WalkStatistics(
        origin=int(origin),
        n_steps=int(n_steps),
        metric=metric,
        seed=int(seed),
        radii=radii_arr,
        time_grid=grid,
        exit_time=exit_time,
        censored=censored,
        displacement=displacement,
        max_displacement=max_displacement,
        range_weight=range_weight,
        range_size=range_size,
        endpoint=endpoint,
        step_displacement=steps_kept,
    )
