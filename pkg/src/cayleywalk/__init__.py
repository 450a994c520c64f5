"""Random walks in i.i.d. random environments on d-regular Cayley trees.

Simulation plus two numerical certificates at finite volume: transience
via conductance/flow statistics on spheres, and positive speed via the
martingale decomposition of the distance process.
"""

__version__ = "0.1.0"

from .conductance import (
    FlowReport,
    PathToVertex,
    SphereSampler,
    conductance_edge,
    flow_report,
    log_phi,
    occupation_frequencies,
)
from .environment import (
    A2Report,
    EnvSpec,
    Environment,
    TransitionVector,
    check_a2,
    check_a3,
    derive_vertex_key,
    transition_at,
)
from .group_words import (
    ROOT,
    Presentation,
    Word,
    apply_letter,
    deserialize,
    neighbors,
    parent,
    serialize,
    sphere_size,
)
from .network import (
    effective_conductance,
    escape_probability,
    escape_probability_mc,
    resistance_profile,
)
from .speed import (
    SpeedReport,
    martingale_decompose,
    speed_ensemble,
    theoretical_speed_floor,
)
from .walk import WalkConfig, WalkSummary, annealed_ensemble, simulate_quenched, step

__all__ = [
    "__version__",
    "ROOT",
    "Presentation",
    "Word",
    "apply_letter",
    "neighbors",
    "parent",
    "serialize",
    "deserialize",
    "sphere_size",
    "TransitionVector",
    "EnvSpec",
    "Environment",
    "transition_at",
    "derive_vertex_key",
    "A2Report",
    "check_a2",
    "check_a3",
    "WalkConfig",
    "WalkSummary",
    "step",
    "simulate_quenched",
    "annealed_ensemble",
    "PathToVertex",
    "SphereSampler",
    "FlowReport",
    "log_phi",
    "conductance_edge",
    "occupation_frequencies",
    "flow_report",
    "effective_conductance",
    "escape_probability",
    "escape_probability_mc",
    "resistance_profile",
    "SpeedReport",
    "martingale_decompose",
    "theoretical_speed_floor",
    "speed_ensemble",
]
