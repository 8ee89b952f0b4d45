"""Bilinear recurrent fractal interpolation surfaces and their box dimension."""

from .attractor import AttractorReport, attractor_convergence_check
from .dimension import (
    ComponentReport,
    connected_components,
    degenerate_cells,
    positions,
    spectral_radius,
    theoretical_box_dimension,
)
from .empirical import (
    OscillationProfile,
    box_count,
    empirical_dimension,
    lemma_bounds,
    level_stats,
    oscillation_profile,
    streamed_level_stats,
    transfer_inequality_check,
)
from .errors import *  # noqa: F401,F403
from .grid import (
    AddressMaps,
    HomogeneityCertificate,
    InterpolationData,
    build_address_maps,
    build_data,
    check_homogeneity,
    uniform_data,
)
from .io import RfisConfig, export_surface, load_config, parse_config, read_surface_csv
from .partition import (
    Partition,
    TransferMatrix,
    build_partition,
    check_compatible,
    check_steady,
    compute_uniform_sums,
    rectangle_cells,
    verify_interior_uniformity,
)
from .surface import (
    BilinearRfis,
    SampledSurface,
    build_rfis,
    check_matchable,
    eval_F,
    eval_field,
    eval_g,
    eval_W,
    operator_T_gaps,
    operator_T_iterate,
    sample_surface,
)
