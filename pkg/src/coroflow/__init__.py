"""Reduced-order coronary simulator and data-driven microvascular index inference.

A 0D closed-loop hemodynamic network coupled to 1D contrast transport
generates synthetic contrast intensity profiles and ground-truth IMR/CFR
values; a from-scratch encoder-MLP deep ensemble learns to invert the
profiles with epistemic uncertainty.
"""

__version__ = "0.1.0"

from .errors import (
    CampaignError,
    CflViolation,
    CoroflowError,
    DegenerateSeries,
    EmptyAfterFilter,
    EmptyInput,
    EmptyWindow,
    InsufficientData,
    MismatchError,
    MissingBranch,
    NonFiniteLoss,
    NumericalDivergence,
    ParseError,
    RangeError,
    ShapeError,
    TopologyError,
    UnknownBranch,
    UnknownSegment,
    ZeroMass,
)
from .vessels import (
    BLOOD_VISCOSITY,
    Branch,
    LEFT_BRANCHES,
    OUTLET_BRANCHES,
    RIGHT_BRANCHES,
    Segment,
    VesselTree,
    apply_stenosis,
    default_tree,
    load_tree,
    load_tree_file,
    poiseuille_resistance,
    save_tree,
)
from .lpm import (
    DESIGN_RANGES,
    CoronaryOutletParams,
    DesignPoint,
    ElastanceParams,
    HeartParams,
    LMIN,
    LpmParameterSet,
    MMHG,
    PhysioState,
    WindkesselParams,
    elastance,
    reference_parameters,
    scale_parameters,
)
from .hemo import (
    DEFAULT_N_CYCLES,
    HemoMetrics,
    HemoState,
    INJECTION_CYCLE,
    SimulationConfig,
    SimulationResult,
    initial_state,
    simulate,
    step,
    summarize_hemodynamics,
)
