"""Graphs, phase-ordering coloring and the oscillator coloring pipeline.

Nodes are numbered 1..n here (DIMACS convention); oscillator indices in the
simulator are the same nodes shifted to 0-based.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .analysis import AnalysisError, PhaseReport, lock_report, phase_report
from .engine import SimConfig, SimulationError, simulate
from .model import DEFAULT_PARAMS, NetworkSpec, OscillatorParams, build_network
from .noise import NoiseSpec

__all__ = [
    "GraphError",
    "Graph",
    "CyclicOrder",
    "Coloring",
    "RunRecord",
    "ColoringResult",
    "NetSettings",
    "parse_dimacs",
    "serialize_dimacs",
    "read_dimacs",
    "write_dimacs",
    "circulant_graph",
    "complete_graph",
    "cycle_graph",
    "diamond_graph",
    "phase_order",
    "cyclic_greedy_coloring",
    "verify_coloring",
    "chromatic_number_bruteforce",
    "derive_seed",
    "color_via_oscillators",
    "COLOR_T_END",
]

COLOR_T_END = 40e-3


class GraphError(ValueError):
    pass


@dataclass(frozen=True)
class Graph:
    """Simple undirected graph on nodes 1..n, edges stored as (i, j) with i < j."""

    n: int
    edges: frozenset = frozenset()

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 0:
            raise GraphError(f"node count must be a non-negative integer, got {self.n!r}")
        canon = set()
        for e in self.edges:
            i, j = (int(x) for x in e)
            if i == j:
                raise GraphError(f"self-loop on node {i}")
            if not (1 <= i <= self.n and 1 <= j <= self.n):
                raise GraphError(f"edge ({i}, {j}) has an endpoint outside 1..{self.n}")
            canon.add((min(i, j), max(i, j)))
        object.__setattr__(self, "edges", frozenset(canon))

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]]) -> "Graph":
        """Build from an edge list, rejecting duplicates."""
        seen = set()
        for i, j in edges:
            key = (min(i, j), max(i, j))
            if key in seen:
                raise GraphError(f"duplicate edge {key}")
            seen.add(key)
        return cls(n, frozenset(seen))

    @property
    def nodes(self) -> range:
        return range(1, self.n + 1)

    def sorted_edges(self) -> list[tuple[int, int]]:
        return sorted(self.edges)

    def adjacency(self) -> dict[int, set[int]]:
        adj = {v: set() for v in self.nodes}
        for i, j in self.edges:
            adj[i].add(j)
            adj[j].add(i)
        return adj

    def degree(self, v: int) -> int:
        return sum(1 for e in self.edges if v in e)

    def has_edge(self, i: int, j: int) -> bool:
        return (min(i, j), max(i, j)) in self.edges


# ----------------------------------------------------------------- DIMACS


def parse_dimacs(text: str) -> Graph:
    """Parse DIMACS ``.col`` text.

    Duplicate edge lines (in either orientation) collapse to one edge.  The
    edge count on the ``p`` line is informational and not enforced.
    """
    n = None
    edges = set()
    pending = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("c"):
            continue
        parts = line.split()
        tag = parts[0]
        if tag == "p":
            if n is not None:
                raise GraphError(f"line {lineno}: duplicate 'p' line")
            if len(parts) != 4 or parts[1] not in ("edge", "col"):
                raise GraphError(f"line {lineno}: expected 'p edge <n> <m>'")
            try:
                n = int(parts[2])
                int(parts[3])
            except ValueError:
                raise GraphError(f"line {lineno}: non-integer size in 'p' line") from None
            if n < 0:
                raise GraphError(f"line {lineno}: negative node count")
        elif tag == "e":
            if len(parts) != 3:
                raise GraphError(f"line {lineno}: expected 'e <i> <j>'")
            try:
                i, j = int(parts[1]), int(parts[2])
            except ValueError:
                raise GraphError(f"line {lineno}: non-integer endpoint") from None
            pending.append((lineno, i, j))
        else:
            raise GraphError(f"line {lineno}: unknown line type {tag!r}")
    if n is None:
        raise GraphError("missing 'p edge <n> <m>' line")
    for lineno, i, j in pending:
        if i == j:
            raise GraphError(f"line {lineno}: self-loop on node {i}")
        if not (1 <= i <= n and 1 <= j <= n):
            raise GraphError(f"line {lineno}: endpoint out of range 1..{n} in edge ({i}, {j})")
        edges.add((min(i, j), max(i, j)))
    return Graph(n, frozenset(edges))


def serialize_dimacs(g: Graph, comment: str | None = None) -> str:
    lines = []
    if comment:
        lines.extend(f"c {c}" for c in comment.splitlines())
    lines.append(f"p edge {g.n} {len(g.edges)}")
    lines.extend(f"e {i} {j}" for i, j in g.sorted_edges())
    return "\n".join(lines) + "\n"


def read_dimacs(path) -> Graph:
    with open(path) as fh:
        return parse_dimacs(fh.read())


def write_dimacs(g: Graph, path, comment: str | None = None) -> None:
    with open(path, "w") as fh:
        fh.write(serialize_dimacs(g, comment))


# ------------------------------------------------------------- generators


def circulant_graph(n: int, k: int) -> Graph:
    """Ring of ``n`` nodes, each joined to its ``k`` nearest neighbours."""
    if k % 2 or not 2 <= k < n:
        raise GraphError(f"need even k with 2 <= k < n, got n={n}, k={k}")
    edges = set()
    for i in range(n):
        for d in range(1, k // 2 + 1):
            j = (i + d) % n
            edges.add((min(i, j) + 1, max(i, j) + 1))
    return Graph(n, frozenset(edges))


def complete_graph(n: int) -> Graph:
    return Graph(n, frozenset((i, j) for i in range(1, n + 1) for j in range(i + 1, n + 1)))


def cycle_graph(n: int) -> Graph:
    if n < 3:
        raise GraphError("a cycle needs at least 3 nodes")
    return Graph(n, frozenset((min(i, i % n + 1), max(i, i % n + 1)) for i in range(1, n + 1)))


def diamond_graph() -> Graph:
    """4-cycle 1-2-3-4 with the chord 1-3."""
    return Graph(4, frozenset({(1, 2), (2, 3), (3, 4), (1, 4), (1, 3)}))


# --------------------------------------------------------------- ordering


@dataclass(frozen=True)
class CyclicOrder:
    sequence: tuple[int, ...]
    phases_deg: tuple[float, ...]  # indexed by node - 1


def _wrap360(x: float) -> float:
    y = math.fmod(float(x), 360.0)
    if y < 0:
        y += 360.0
    return 0.0 if y >= 360.0 else y


def phase_order(report: PhaseReport | Sequence[float]) -> CyclicOrder:
    """Nodes by ascending phase, ties by ascending node number."""
    phases = report.phases_deg if isinstance(report, PhaseReport) else report
    wrapped = tuple(_wrap360(p) for p in phases)
    seq = sorted(range(1, len(wrapped) + 1), key=lambda v: (wrapped[v - 1], v))
    return CyclicOrder(tuple(seq), wrapped)


@dataclass(frozen=True)
class Coloring:
    assignment: dict  # node -> color id (1-based)

    @property
    def num_colors(self) -> int:
        return len(set(self.assignment.values()))

    def as_list(self) -> list[int]:
        return [self.assignment[v] for v in sorted(self.assignment)]

    def classes(self) -> list[list[int]]:
        out: dict[int, list[int]] = {}
        for v in sorted(self.assignment):
            out.setdefault(self.assignment[v], []).append(v)
        return [out[c] for c in sorted(out)]


def _greedy_pass(seq: Sequence[int], adj: dict[int, set[int]]) -> list[list[int]]:
    classes: list[list[int]] = []
    current: list[int] = []
    for v in seq:
        if current and any(u in adj[v] for u in current):
            classes.append(current)
            current = []
        current.append(v)
    if current:
        classes.append(current)
    return classes


def cyclic_greedy_coloring(order: CyclicOrder | Sequence[int], g: Graph) -> Coloring:
    """Split the cyclic order into consecutive independent runs.

    Every rotation is tried; the one with fewest classes wins, ties going to
    the earliest starting position.
    """
    seq = list(order.sequence if isinstance(order, CyclicOrder) else order)
    if sorted(seq) != list(g.nodes):
        raise GraphError("order must be a permutation of the graph's nodes")
    if not seq:
        return Coloring({})
    adj = g.adjacency()
    best = None
    for r in range(len(seq)):
        classes = _greedy_pass(seq[r:] + seq[:r], adj)
        if best is None or len(classes) < len(best):
            best = classes
    return Coloring({v: c for c, members in enumerate(best, 1) for v in members})


@dataclass(frozen=True)
class Verdict:
    valid: bool
    violations: tuple[tuple[int, int], ...]

    def __bool__(self):
        return self.valid


def verify_coloring(g: Graph, c: Coloring | dict | Sequence[int]) -> Verdict:
    """Check properness; lists every monochromatic edge."""
    if isinstance(c, Coloring):
        assignment = c.assignment
    elif isinstance(c, dict):
        assignment = c
    else:
        assignment = {v: col for v, col in zip(g.nodes, c)}
        if len(c) != g.n:
            raise GraphError(f"coloring has {len(c)} entries for {g.n} nodes")
    missing = [v for v in g.nodes if v not in assignment]
    if missing:
        raise GraphError(f"nodes without a color: {missing}")
    bad = tuple(e for e in g.sorted_edges() if assignment[e[0]] == assignment[e[1]])
    return Verdict(not bad, bad)


# ----------------------------------------------------------------- oracle


def chromatic_number_bruteforce(g: Graph, node_limit: int = 16) -> int:
    """Exact chromatic number by backtracking.

    Nodes are visited by descending degree; a node may only open the next
    unused color, which fixes the first node to color 1 and removes color
    permutations from the search.
    """
    if g.n > node_limit:
        raise GraphError(f"graph has {g.n} nodes, exceeds node_limit={node_limit}")
    if g.n == 0:
        return 0
    if not g.edges:
        return 1
    adj = g.adjacency()
    order = sorted(g.nodes, key=lambda v: (-len(adj[v]), v))
    colors = {}

    def place(idx: int, k: int, used: int) -> bool:
        if idx == len(order):
            return True
        v = order[idx]
        taken = {colors[u] for u in adj[v] if u in colors}
        for col in range(1, min(used + 1, k) + 1):
            if col in taken:
                continue
            colors[v] = col
            if place(idx + 1, k, max(used, col)):
                return True
            del colors[v]
        return False

    for k in range(2, g.n + 1):
        colors.clear()
        if place(0, k, 0):
            return k
    return g.n  # unreachable: n colors always suffice


# --------------------------------------------------------------- pipeline


@dataclass(frozen=True)
class NetSettings:
    """How a graph becomes an oscillator network, plus the lock criterion.

    Node ``v`` receives fractional detune ``linspace(-spread, +spread, n)[v-1]``.
    """

    params: OscillatorParams = DEFAULT_PARAMS
    c_c: float = 5e-12
    c_noise: float = 1e-12
    detune_spread: float = 0.001
    noise_common: bool = True
    window_fraction: float = 0.5
    eps_f: float = 1e-3
    eps_phi_deg: float = 10.0

    def detune(self, n: int) -> np.ndarray:
        return np.zeros(n) if n == 1 else np.linspace(-self.detune_spread, self.detune_spread, n)

    def network(self, g: Graph) -> NetworkSpec:
        return build_network(
            g.n,
            [(i - 1, j - 1) for i, j in g.sorted_edges()],
            defaults=self.params,
            c_c=self.c_c,
            c_noise=self.c_noise,
            detune=self.detune(g.n),
            noise_common=self.noise_common,
        )


def derive_seed(master: int, index: int) -> int:
    """Deterministic 63-bit child seed."""
    ss = np.random.SeedSequence([int(master) % 2**64, int(index)])
    return int(ss.generate_state(1, np.uint64)[0] >> np.uint64(1))


@dataclass(frozen=True)
class RunRecord:
    run: int
    seed: int
    locked: bool
    num_colors: int | None = None
    order: tuple[int, ...] | None = None
    error: str | None = None


@dataclass(frozen=True)
class ColoringResult:
    coloring: Coloring | None
    locked: bool
    runs_used: int
    order: CyclicOrder | None
    records: tuple[RunRecord, ...] = field(default_factory=tuple)

    @property
    def locked_runs(self) -> int:
        return sum(r.locked for r in self.records)

    @property
    def num_colors(self) -> int | None:
        return None if self.coloring is None else self.coloring.num_colors

    def to_dict(self) -> dict:
        return {
            "status": "colored" if self.coloring is not None else "unlocked",
            "num_colors": self.num_colors,
            "assignment": None if self.coloring is None else self.coloring.as_list(),
            "locked_runs": self.locked_runs,
            "total_runs": self.runs_used,
            "order": None if self.order is None else list(self.order.sequence),
            "phases_deg": None if self.order is None else list(self.order.phases_deg),
            "runs": [
                {"run": r.run, "seed": r.seed, "locked": r.locked, "num_colors": r.num_colors,
                 "order": None if r.order is None else list(r.order), "error": r.error}
                for r in self.records
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def color_via_oscillators(
    g: Graph,
    settings: NetSettings = NetSettings(),
    noise: NoiseSpec = NoiseSpec(),
    cfg: SimConfig | None = None,
    runs: int = 12,
    seed: int = 0,
) -> ColoringResult:
    """Simulate the graph's oscillator network ``runs`` times and color it
    from the phase order of each locked run.

    Run ``r`` uses ``derive_seed(seed, r)`` for both the initial state and
    the noise generator.  The fewest-color coloring over locked runs is
    returned (earliest run on ties).  With no locked run the result carries
    no coloring.
    """
    if runs < 1:
        raise ValueError("runs must be >= 1")
    net = settings.network(g)
    cfg = cfg if cfg is not None else SimConfig.for_network(net, t_end=COLOR_T_END)
    records = []
    best = None
    for r in range(runs):
        s = derive_seed(seed, r)
        try:
            trace = simulate(net, NoiseSpec(noise.rms_voltage, noise.hold_interval, s), cfg, seed=s)
            lock = lock_report(trace, settings.window_fraction, settings.eps_f, settings.eps_phi_deg)
        except (SimulationError, AnalysisError) as exc:
            records.append(RunRecord(r, s, False, error=f"{type(exc).__name__}: {exc}"))
            continue
        if not lock.locked:
            records.append(RunRecord(r, s, False))
            continue
        order = phase_order(phase_report(trace, 0, settings.window_fraction))
        col = cyclic_greedy_coloring(order, g)
        records.append(RunRecord(r, s, True, col.num_colors, order.sequence))
        if best is None or col.num_colors < best[0].num_colors:
            best = (col, order)
    if best is None:
        return ColoringResult(None, False, runs, None, tuple(records))
    return ColoringResult(best[0], True, runs, best[1], tuple(records))
