"""Random walks on red/blue colored regular graphs.

Cover-time simulation for walks that pay for red edges (oblivious, flip,
smooth and congestion-priced walks), random graph generators, and the
matching asymptotic predictions.
"""
from .errors import (
    ExperimentError,
    GenerationError,
    InfeasibleError,
    NumericError,
    ParameterError,
    RBWalkError,
    StructureError,
)
from .graphgen import (
    Color,
    ColoredGraph,
    StructureReport,
    analyze_structure,
    cycle_graph,
    gen_hamilton_union,
    gen_regular,
    gen_twofactor_union,
    gen_union,
    second_eigenvalue,
    single_color_graph,
    small_cycle_threshold,
)
from .theory import (
    CoverConstant,
    FlipSolution,
    flip_fixed_point,
    flip_roots_b2,
    flip_smallest_root,
    oblivious_budget,
    predict,
    sigma_b,
    sigma_rb,
    theta_flip,
)
from .walks import (
    Congestion,
    CoverResult,
    Flip,
    Mode,
    Oblivious,
    Simple,
    Smooth,
    run_cover,
    run_with_checkpoints,
    sample_path,
    smooth_policy,
    step,
)
from .experiments import (
    ExperimentConfig,
    ExperimentResult,
    GraphSpec,
    estimate_cover,
    estimate_returns,
    nonvisit_curve,
    theta_sweep,
    trial_seed,
    twofactor_stats,
)

__version__ = "0.1.0"
