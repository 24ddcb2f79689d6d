"""Computational calculus on quasiconvex (chord-arc) sets.

Discretizes closed sets as geometric graphs, estimates chord-arc constants,
integrates covector fields along intrinsic paths, verifies first-order
remainder bounds, reconstructs functions from differentials, and checks the
uniqueness phenomena for differentials (flatness, complex linearity,
Clifford monogenicity).
"""
from .calculus import (
    affine_rigidity_test,
    discrete_gradient,
    fit_holder_modulus,
    loop_defect,
    oscillation,
    pair_modulus_profile,
    path_integral,
    reconstruct,
    verify_ftc,
    verify_remainder_bound,
    whitney_remainder,
)
from .clifford import (
    ComplexLinearMap,
    LinearCliffordMap,
    Multivector,
    complete_from_hyperplane,
    complex_complete,
    complex_to_even,
    dirac_constraint_matrix,
    geometric_product,
    is_left_monogenic,
    is_right_monogenic,
    monogenic_space_dimension,
    tangential_derivative_on_graph,
)
from .errors import QcalcError
from .fields import CovectorField, ScalarField
from .geometry import (
    PolylinePath,
    SetSample,
    build_carpet,
    build_dumbbell,
    build_gasket,
    build_lipschitz_graph,
    build_polyline,
    load_sample,
    sample_from_dict,
    sample_to_dict,
    validate,
)
from .metric import (
    ChordArcReport,
    estimate_chord_arc,
    geodesic_distance,
    shortest_path,
    verify_local_to_global,
)
from .whitney import (
    check_whitney_c1,
    determined_subspace,
    differential_stability,
    local_flatness,
)

__version__ = "0.1.0"
