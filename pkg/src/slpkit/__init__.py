"""Symbol-level precoding toolkit for the multiuser MISO downlink.

Builds distance-preserving constructive interference regions for
arbitrary 2-D constellations, solves the associated power-minimization
and SINR-balancing precoding problems, and runs seeded Monte-Carlo
experiment sweeps.
"""

from .constellation import (
    Constellation,
    ConstellationError,
    HullClassification,
    VoronoiRegion,
    bundled_constellation,
    classify_hull,
    load_constellation,
    make_standard,
    save_constellation,
    voronoi_region,
)
from .dpcir import (
    Dpcir,
    ReducedDpcir,
    build_dpcir,
    build_reduced,
    delta_of_point,
    point_of_delta,
    reduce_dpcir,
    region_summary,
)
from .harness import (
    ExperimentConfig,
    ResultRecord,
    load_config,
    run_experiment,
    scatter_records,
    write_csv,
    write_scatter_csv,
)
from .precoders import (
    FeasibilityVerdict,
    MaxMinConfig,
    PrecoderError,
    feasibility_check,
    maxmin_bcd,
    maxmin_bisection,
    maxmin_exhaustive,
    maxmin_fixed,
    maxmin_relaxed,
    power_min_qp,
    power_min_reduced,
    zf_maxmin_baseline,
    zf_transmit,
)
from .system_model import (
    ChannelSet,
    PrecodeSolution,
    StackedSystem,
    SymbolAssignment,
    add_noise,
    assemble,
    ml_detect,
    rng_stream,
    sample_channel,
)

__version__ = "0.1.0"
