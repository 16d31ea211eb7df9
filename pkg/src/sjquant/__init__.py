"""Kahler data, Sorkin-Johnston states and Berezin-Toeplitz quantization on finite-dimensional phase spaces."""

__version__ = "0.1.0"

from .causet import (
    CausalSet,
    GreensData,
    parse_causal_set,
    pauli_jordan_from_green,
    retarded_green_2d_massless,
    sprinkle_diamond_2d,
)
from .cfield import (
    HbarGrid,
    SectionSample,
    classical_limit_berezin,
    dequantization_expansion,
    norm_function,
    state_field,
    toeplitz_section,
    weyl_section,
)
from .fock import (
    FockOperator,
    FockTruncation,
    build_ladders,
    dequantize,
    dequantize_projector,
    toeplitz_exponential,
    toeplitz_of_symbol,
    trace_pairing_check,
    weyl_generator,
)
from .kahler import (
    InnerProductSpace,
    KahlerDecomposition,
    PauliJordanOperator,
    laplacian_spectrum,
    polar_decompose,
    restrict_to_image,
    spectra_ab_ba_check,
)
from .sj import (
    Covector,
    QuasiFreeState,
    SJOperator,
    purity_check,
    sj_operator,
    solve_sj_axioms,
    state_on_weyl,
    state_positivity_gram,
)
from .symbols import (
    ExponentialSymbol,
    GaussianSymbol,
    PolynomialSymbol,
    berezin_transform_gaussian,
    berezin_transform_poly,
    exp_remainder_bound_check,
    gauge_relation_check,
    poisson_bracket,
    star_remainder_exponentials,
    star_t,
    star_xi,
)
