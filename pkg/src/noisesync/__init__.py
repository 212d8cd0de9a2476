"""Simulation and analysis of capacitively coupled relaxation-oscillator
networks driven by common noise, with phase-based graph coloring."""

__version__ = "0.1.0"

from .analysis import (
    AnalysisError,
    LockReport,
    PeakReport,
    PhaseReport,
    Spectrum,
    lock_report,
    peak_fwhm,
    periodogram,
    phase_report,
    spectrum_of,
)
from .coloring import (
    ColoringResult,
    CyclicOrder,
    Graph,
    GraphError,
    NetSettings,
    chromatic_number_bruteforce,
    circulant_graph,
    color_via_oscillators,
    cyclic_greedy_coloring,
    parse_dimacs,
    phase_order,
    serialize_dimacs,
    verify_coloring,
)
from .engine import SimConfig, SimulationError, State, Trace, ZenoError, extract_troughs, initial_state, simulate
from .experiments import (
    SweepResult,
    ThresholdResult,
    find_critical_coupling,
    find_noise_threshold,
    lock_probability,
    phase_vs_noise,
    sweep_amplitude,
    sweep_population,
)
from .model import DEFAULT_PARAMS, NetworkSpec, OscillatorParams, build_network, capacitance_matrix, natural_period
from .noise import NoiseSignal, NoiseSpec, generate_noise
