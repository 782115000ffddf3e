"""Desk-scale laboratory for dyadic frequency decompositions of functions and
finite-rank operators on a discretized periodic box, with empirical checks of
the square-function, density, sign-sum and kinetic-energy comparisons."""

from .errors import (
    ConfigurationError,
    ContractViolationError,
    DegenerateInputError,
    GridMismatchError,
    UnsupportedFamilyError,
    ZeroModeSingularityError,
)
from .torus_grid import (
    GridFunction,
    SpectrumFunction,
    TorusGrid,
    abs_squared,
    apply_symbol,
    constant_function,
    forward_transform,
    inner_product,
    inverse_transform,
    kinetic_form,
    lp_norm,
    plane_wave,
)
from .dyadic_partition import (
    SHARP,
    SMOOTH,
    BumpProfile,
    DyadicBlockSet,
    block_squared_sum,
    block_table,
    build_blocks,
    build_companions,
    build_profile,
    overlap_count,
    write_block_table_csv,
)
from .projectors import (
    SignVector,
    bernstein_bound_constant,
    block_energy_sum,
    frequency_comparability_bounds,
    project,
    project_companion,
    random_sign_multiplier,
    square_function,
    unit_ball_volume,
)
from .fock_operator import (
    FiniteRankOperator,
    NO_CONTRACT,
    OperatorContract,
    UNIT_BALL,
    ValidationReport,
    conjugated_density,
    density,
    diagonal_block_bound,
    fermi_sea,
    kinetic_trace,
    load_operator,
    power_bounded,
    require_contract,
    save_operator,
    validate_contract,
)
from .corpus import (
    CorpusSpec,
    philox_generator,
    random_band_limited,
    random_orthonormal_frame,
    single_spike,
    spike_sequences,
    wave_packet,
)
from .inequality_lab import (
    ChainResult,
    CheckSample,
    GeneralizedLTResult,
    KhinchineResult,
    LiebThirringResult,
    RatioReport,
    SequenceLemmaResult,
    SignEnsemble,
    TensorKhinchineResult,
    duality_identity_check,
    envelope_for,
    estimate_envelope,
    fermi_lattice_oracle,
    fermi_sweep,
    generalized_lt_check,
    gns_check,
    khinchine_ratio,
    khinchine_reports,
    khinchine_tensor_ratio,
    lieb_thirring_check,
    load_envelopes,
    lp_density_check,
    lp_function_check,
    lt_chain_check,
    parseval_square_ratio,
    sequence_lemma_bound,
    sequence_lemma_trials,
    summed_block_density,
    tensor_khinchine_reports,
)
from .reporting import canonical_json, emit_report, format_float, read_json, write_json

__version__ = "0.1.0"
