"""Finite weighted multigraphs with integer vertex labels.

Vertices carry integer labels (positions on the line for window graphs).
Bonds form a multiset: parallel bonds are kept and their conductances add
wherever a merged adjacency is needed.  The vertex measure mu is the
weighted degree unless an explicit measure is supplied.
"""

from __future__ import annotations

import io
import os
from typing import Iterable, Iterator, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components, dijkstra

from .errors import InvalidArgumentError, TruncationError

METRICS = ("graph", "line")


def _check_metric(metric: str) -> str:
    if metric not in METRICS:
        raise InvalidArgumentError(f"unknown metric {metric!r}, expected one of {METRICS}")
    return metric


class Graph:
    """Immutable connected multigraph.

    Parameters
    ----------
    bonds : iterable of (u, v, conductance)
        Vertex labels are integers, conductances positive reals.  Repeated
        (u, v) pairs are kept as parallel bonds.
    marked : int
        Distinguished origin vertex; must appear in some bond.
    window : (int, int), optional
        Recorded label range.  Defaults to the observed label range.
    measure : dict[int, float], optional
        Explicit vertex measure; defaults to the weighted degree.
    truncated : bool
        True for windows cut out of an infinite graph; probe radii are then
        restricted to a quarter of the window half-width.
    """

    __slots__ = (
        "labels", "bond_u", "bond_v", "bond_c", "marked", "window",
        "truncated", "measure", "_explicit_measure", "_cache",
    )

    def __init__(
        self,
        bonds: Iterable[tuple[int, int, float]],
        marked: int,
        window: tuple[int, int] | None = None,
        measure: dict[int, float] | None = None,
        truncated: bool = False,
    ) -> None:
        triples = list(bonds)
        if not triples:
            raise InvalidArgumentError("a graph needs at least one bond")
        u = np.asarray([t[0] for t in triples], dtype=np.int64)
        v = np.asarray([t[1] for t in triples], dtype=np.int64)
        c = np.asarray([t[2] for t in triples], dtype=np.float64)
        if np.any(u == v):
            raise InvalidArgumentError("self-loops are not allowed")
        if np.any(c <= 0) or not np.all(np.isfinite(c)):
            raise InvalidArgumentError("conductances must be positive and finite")

        labels = np.unique(np.concatenate([u, v]))
        self.labels = labels
        self.bond_u = np.searchsorted(labels, u).astype(np.int64)
        self.bond_v = np.searchsorted(labels, v).astype(np.int64)
        self.bond_c = c
        if marked not in labels:
            raise InvalidArgumentError(f"marked vertex {marked} is not in the graph")
        self.marked = int(marked)
        if window is None:
            window = (int(labels[0]), int(labels[-1]))
        self.window = (int(window[0]), int(window[1]))
        self.truncated = bool(truncated)

        n = labels.size
        mu = np.zeros(n)
        np.add.at(mu, self.bond_u, c)
        np.add.at(mu, self.bond_v, c)
        self._explicit_measure = measure is not None
        if measure is not None:
            if set(measure) != set(int(x) for x in labels):
                raise InvalidArgumentError("explicit measure must cover exactly the vertex set")
            mu = np.asarray([float(measure[int(x)]) for x in labels])
        if np.any(mu < 1.0):
            raise InvalidArgumentError("every vertex must have measure >= 1")
        self.measure = mu
        self._cache: dict = {}
        if not self._connected():
            raise InvalidArgumentError("graph must be connected")

    # -- basic accessors ------------------------------------------------

    @property
    def n_vertices(self) -> int:
        return self.labels.size

    @property
    def n_bonds(self) -> int:
        return self.bond_c.size

    def index(self, label: int) -> int:
        i = int(np.searchsorted(self.labels, label))
        if i >= self.labels.size or self.labels[i] != label:
            raise InvalidArgumentError(f"vertex {label} is not in the graph")
        return i

    def indices(self, labels: Sequence[int]) -> np.ndarray:
        return np.asarray([self.index(x) for x in labels], dtype=np.int64)

    def bonds(self) -> Iterator[tuple[int, int, float]]:
        for i in range(self.bond_c.size):
            yield (
                int(self.labels[self.bond_u[i]]),
                int(self.labels[self.bond_v[i]]),
                float(self.bond_c[i]),
            )

    def total_measure(self) -> float:
        return float(self.measure.sum())

    # -- merged adjacency ------------------------------------------------

    def csr(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Merged adjacency (indptr, indices, weights); parallel conductances add."""
        if "csr" not in self._cache:
            n = self.n_vertices
            src = np.concatenate([self.bond_u, self.bond_v])
            dst = np.concatenate([self.bond_v, self.bond_u])
            w = np.concatenate([self.bond_c, self.bond_c])
            order = np.lexsort((dst, src))
            src, dst, w = src[order], dst[order], w[order]
            # collapse duplicate (src, dst) pairs
            first = np.ones(src.size, dtype=bool)
            first[1:] = (src[1:] != src[:-1]) | (dst[1:] != dst[:-1])
            groups = np.cumsum(first) - 1
            m = int(groups[-1]) + 1
            ws = np.zeros(m)
            np.add.at(ws, groups, w)
            srcs = src[first]
            dsts = dst[first]
            indptr = np.zeros(n + 1, dtype=np.int64)
            np.add.at(indptr, srcs + 1, 1)
            indptr = np.cumsum(indptr)
            self._cache["csr"] = (indptr, dsts.astype(np.int64), ws)
        return self._cache["csr"]

    def adjacency(self) -> csr_matrix:
        """Merged weighted adjacency as a scipy CSR matrix."""
        if "adj" not in self._cache:
            indptr, indices, weights = self.csr()
            n = self.n_vertices
            self._cache["adj"] = csr_matrix((weights, indices, indptr), shape=(n, n))
        return self._cache["adj"]

    def _connected(self) -> bool:
        ncomp, _ = connected_components(self.adjacency(), directed=False)
        return int(ncomp) == 1

    def _bfs_hops(self, start_index: int) -> np.ndarray:
        hops = dijkstra(self.adjacency(), indices=start_index, unweighted=True)
        return hops.astype(np.int64, casting="unsafe")

    # -- metrics, balls, volumes -----------------------------------------

    def is_line_labeled(self) -> bool:
        """Labels form a contiguous integer interval."""
        return int(self.labels[-1] - self.labels[0]) == self.n_vertices - 1

    def distances_from(self, center: int, metric: str = "graph") -> np.ndarray:
        """Distance from `center` to every vertex, aligned with `labels`."""
        _check_metric(metric)
        key = ("dist", center, metric)
        if key not in self._cache:
            i = self.index(center)
            if metric == "line":
                if not self.is_line_labeled():
                    raise InvalidArgumentError("line metric requires contiguous integer labels")
                d = np.abs(self.labels - self.labels[i]).astype(np.int64)
            else:
                d = self._bfs_hops(i)
            self._cache[key] = d
        return self._cache[key]

    def ball(self, center: int, radius: int, metric: str = "graph") -> np.ndarray:
        """Labels of vertices at distance strictly less than `radius`."""
        if radius < 1 or int(radius) != radius:
            raise InvalidArgumentError("radius must be a positive integer")
        d = self.distances_from(center, metric)
        return self.labels[d < radius]

    def volume(self, center: int, radius: int, metric: str = "graph") -> float:
        """Measure of the ball around `center`."""
        d = self.distances_from(center, metric)
        if radius < 1 or int(radius) != radius:
            raise InvalidArgumentError("radius must be a positive integer")
        return float(self.measure[d < radius].sum())

    def half_width(self) -> int:
        lo, hi = self.window
        return int(min(self.marked - lo, hi - self.marked))

    def check_probe_radius(self, radius: int) -> None:
        """Refuse radii beyond a quarter of the window for truncated graphs."""
        if self.truncated and radius > self.half_width() / 4:
            raise TruncationError(
                f"radius {radius} exceeds a quarter of the window half-width "
                f"{self.half_width()}"
            )

    # -- perturbation ------------------------------------------------------

    def with_bond(self, u: int, v: int, conductance: float = 1.0) -> "Graph":
        """A copy with one extra bond (labels may be new)."""
        triples = list(self.bonds())
        triples.append((int(u), int(v), float(conductance)))
        return Graph(
            triples,
            marked=self.marked,
            window=None if not self.truncated else self.window,
            truncated=self.truncated,
        )

    def __repr__(self) -> str:
        return (
            f"Graph(n_vertices={self.n_vertices}, n_bonds={self.n_bonds}, "
            f"marked={self.marked}, window={self.window})"
        )


# -- edge-list serialization ---------------------------------------------


def write_edge_list(g: Graph, path: str | os.PathLike) -> None:
    """Write `u v conductance` lines under a one-line header."""
    with open(path, "w", newline="\n") as fh:
        fh.write(dumps_edge_list(g))


def dumps_edge_list(g: Graph) -> str:
    if g._explicit_measure:
        raise InvalidArgumentError("graphs with an explicit measure cannot be serialized")
    lo, hi = g.window
    buf = io.StringIO()
    buf.write(f"# marked={g.marked} window={lo},{hi} truncated={int(g.truncated)}\n")
    for u, v, c in g.bonds():
        buf.write(f"{u} {v} {c!r}\n")
    return buf.getvalue()


def read_edge_list(path: str | os.PathLike) -> Graph:
    try:
        with open(path) as fh:
            return loads_edge_list(fh.read())
    except OSError as exc:
        raise InvalidArgumentError(f"cannot read edge list: {exc}") from exc


def loads_edge_list(text: str) -> Graph:
    lines = text.splitlines()
    if not lines or not lines[0].startswith("#"):
        raise InvalidArgumentError("edge list must start with a '# marked=... window=...' header")
    fields: dict[str, str] = {}
    for token in lines[0][1:].split():
        key, _, value = token.partition("=")
        fields[key] = value
    try:
        marked = int(fields["marked"])
        lo_s, _, hi_s = fields["window"].partition(",")
        window = (int(lo_s), int(hi_s))
    except (KeyError, ValueError) as exc:
        raise InvalidArgumentError(f"malformed edge-list header: {lines[0]!r}") from exc
    truncated = bool(int(fields.get("truncated", "0")))
    triples = []
    for ln in lines[1:]:
        ln = ln.strip()
        if not ln or ln.startswith("#"):
            continue
        parts = ln.split()
        if len(parts) != 3:
            raise InvalidArgumentError(f"malformed edge-list line: {ln!r}")
        try:
            triples.append((int(parts[0]), int(parts[1]), float(parts[2])))
        except ValueError as exc:
            raise InvalidArgumentError(f"malformed edge-list line: {ln!r}") from exc
    return Graph(triples, marked=marked, window=window, truncated=truncated)
