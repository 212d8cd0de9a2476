"""Circuit data model for networks of capacitively coupled Schmitt-trigger
relaxation oscillators.

Every oscillator is an RC integrator (resistor ``r_f`` from the comparator
output onto a load capacitor ``c_l``) closed by a hysteretic comparator with
thresholds ``+-beta * v_a``.  Coupling and noise capacitors hang off the
capacitor node, so the network is described by one constant capacitance
matrix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "OscillatorParams",
    "NetworkSpec",
    "DEFAULT_PARAMS",
    "build_network",
    "capacitance_matrix",
    "natural_period",
]


@dataclass(frozen=True)
class OscillatorParams:
    """Per-oscillator circuit constants (SI units)."""

    r_f: float = 1e6
    c_l: float = 100e-12
    beta: float = 0.5
    v_a: float = 2.0

    def __post_init__(self):
        for name in ("r_f", "c_l", "v_a"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be finite and > 0, got {value!r}")
        if not (0.0 < self.beta < 1.0):
            raise ValueError(f"beta must lie in (0, 1), got {self.beta!r}")

    @property
    def tau(self) -> float:
        return self.r_f * self.c_l

    @property
    def threshold(self) -> float:
        """Comparator switching level ``beta * v_a``."""
        return self.beta * self.v_a


DEFAULT_PARAMS = OscillatorParams()


def natural_period(p: OscillatorParams) -> float:
    """Free-running period ``2 r_f c_l ln((1 + beta) / (1 - beta))``.

    Each half cycle charges the capacitor from ``-beta v_a`` to ``+beta v_a``
    towards the rail ``v_a`` (or the mirror image), which takes
    ``tau ln((1 + beta) / (1 - beta))``.
    """
    return 2.0 * p.r_f * p.c_l * math.log((1.0 + p.beta) / (1.0 - p.beta))


def _canonical_edge(i: int, j: int) -> tuple[int, int]:
    return (i, j) if i < j else (j, i)


@dataclass(frozen=True)
class NetworkSpec:
    """Oscillators, coupling capacitors and noise wiring.

    ``edges`` maps 0-based node pairs ``(i, j)`` with ``i < j`` to the coupling
    capacitance of that edge.  ``c_noise`` is one value per oscillator.
    """

    oscillators: tuple[OscillatorParams, ...]
    edges: dict[tuple[int, int], float] = field(default_factory=dict)
    c_noise: tuple[float, ...] = ()
    noise_common: bool = True

    def __post_init__(self):
        n = len(self.oscillators)
        if n < 1:
            raise ValueError("a network needs at least one oscillator")
        object.__setattr__(self, "oscillators", tuple(self.oscillators))
        c_noise = tuple(float(c) for c in self.c_noise) if len(self.c_noise) else (0.0,) * n
        if len(c_noise) != n:
            raise ValueError(f"c_noise has {len(c_noise)} entries for {n} oscillators")
        if any(not (math.isfinite(c) and c >= 0) for c in c_noise):
            raise ValueError("c_noise entries must be finite and >= 0")
        object.__setattr__(self, "c_noise", c_noise)

        edges = {}
        for (i, j), c_c in dict(self.edges).items():
            i, j = int(i), int(j)
            if i == j:
                raise ValueError(f"self-loop on node {i}")
            if not (0 <= i < n and 0 <= j < n):
                raise ValueError(f"edge ({i}, {j}) out of range for {n} nodes")
            key = _canonical_edge(i, j)
            if key in edges:
                raise ValueError(f"duplicate edge {key}")
            if not (math.isfinite(c_c) and c_c > 0):
                raise ValueError(f"coupling capacitance must be > 0, got {c_c!r} on {key}")
            edges[key] = float(c_c)
        object.__setattr__(self, "edges", dict(sorted(edges.items())))

    @property
    def n(self) -> int:
        return len(self.oscillators)

    def column(self, name: str) -> np.ndarray:
        """One oscillator field as an array, e.g. ``net.column("r_f")``."""
        return np.array([getattr(p, name) for p in self.oscillators], dtype=float)

    def with_coupling(self, c_c: float) -> "NetworkSpec":
        """Copy of this network with every edge set to ``c_c``."""
        return replace(self, edges={e: c_c for e in self.edges})

    def with_amplitude(self, v_a: float) -> "NetworkSpec":
        return replace(self, oscillators=tuple(replace(p, v_a=v_a) for p in self.oscillators))


def build_network(
    n: int,
    edges: Iterable[tuple[int, int]] = (),
    defaults: OscillatorParams = DEFAULT_PARAMS,
    c_c: float = 0.0,
    c_noise: float = 1e-12,
    detune: Sequence[float] | None = None,
    noise_common: bool = True,
) -> NetworkSpec:
    """Network with one oscillator per node and a ``c_c`` capacitor per edge.

    ``edges`` use 0-based node indices.  Oscillator ``i`` gets
    ``r_f = defaults.r_f * (1 + detune[i])``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    detune = [0.0] * n if detune is None else [float(d) for d in detune]
    if len(detune) != n:
        raise ValueError(f"detune has {len(detune)} entries, expected {n}")
    oscs = []
    for i, d in enumerate(detune):
        if not 1.0 + d > 0:
            raise ValueError(f"detune[{i}] = {d} gives a non-positive r_f")
        oscs.append(replace(defaults, r_f=defaults.r_f * (1.0 + d)))

    seen = {}
    for i, j in edges:
        if i == j:
            raise ValueError(f"self-loop on node {i}")
        key = _canonical_edge(int(i), int(j))
        if key in seen:
            raise ValueError(f"duplicate edge {key}")
        seen[key] = c_c
    if seen and not c_c > 0:
        raise ValueError("c_c must be > 0 when the graph has edges")
    return NetworkSpec(tuple(oscs), seen, (c_noise,) * n, noise_common)


def capacitance_matrix(net: NetworkSpec) -> np.ndarray:
    """Nodal capacitance matrix of the capacitor nodes (farads).

    Diagonal: ``c_l + c_noise + sum of incident c_c``; off-diagonal: ``-c_c``
    for each edge.
    """
    m = np.diag(net.column("c_l") + np.asarray(net.c_noise))
    for (i, j), c_c in net.edges.items():
        m[i, i] += c_c
        m[j, j] += c_c
        m[i, j] -= c_c
        m[j, i] -= c_c
    return m
