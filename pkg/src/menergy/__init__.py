"""Moebius-invariant energies and flatness analytics on sampled sets."""

from .grassmann import (
    DimensionMismatchError,
    PrincipalDecomposition,
    Subspace,
    affine_project,
    angle_metric,
    combined_angle,
    cone_contains,
    cone_lemma_bound,
    principal_angles,
    projector,
    random_subspace,
    two_plane_angle_bound,
)
from .conformal import (
    DegeneratePairError,
    PointPlanePair,
    angle_power_lower_constant,
    comparison_constant,
    conformal_angle,
    numerator_ks,
    numerator_ltau,
    pointwise_ftau,
    reflect,
    reflect_subspace,
)
from .sampled_sets import (
    MobiusMap,
    SampledSet,
    Similarity,
    SphereInversion,
    apply_mobius,
    gen_circle,
    gen_ellipse,
    gen_graph,
    gen_parallel_sheets,
    gen_sphere,
    gen_torus,
    gen_transversal_sheets,
    gen_wedge,
    load_point_cloud_csv,
    load_sampled_set,
    measured_mass_constant,
    save_sampled_set,
)
from .energy import (
    EnergyConfig,
    EnergyReport,
    c1_constant,
    c2_constant,
    cross_energy,
    default_cutoff,
    energy,
    integrand_matrix,
    local_energy,
    parallel_angle_threshold,
    wedge_scan,
)
from .flatness import (
    DiscreteGraph,
    EmptyBallError,
    FlatnessEntry,
    FlatnessReport,
    NotAGraphError,
    ProbeReport,
    admissibility_probe,
    best_plane,
    beta_wrt_plane,
    coverage_defect,
    extract_local_graph,
    injectivity_check,
    reifenberg_report,
    theta,
)
from .lipgraph import (
    GraphDescriptor,
    c2_bound_constant,
    c2_integrand_bound,
    graph_angle_bounds,
    intersect_graphs,
    shift_graph,
    sobolev_seminorm,
    sobolev_sufficiency_check,
    tilting_coverage_check,
)
from .checks import run_check_suite

__all__ = [name for name in dir() if not name.startswith("_")]
