"""Anchored multiplayer games, parallel repetition, and verification suites.

Exact (rational) classical machinery, a nonsignaling LP, dependency-breaking
tables with their inequality batteries, an entangled-strategy layer with
seesaw optimization and rounding checks, plus file formats and a CLI.
"""

from .anchoring import (
    DecayBoundParams,
    anchor_transform,
    anchor_transform_general,
    answer_bits,
    classical_decay_bound,
    predicted_value,
    quantum_decay_reference,
)
from .depbreak import (
    CheckRow,
    DepBreakTable,
    build_table_multi,
    build_table_twoplayer,
    check_local_sampling,
    check_marginal_reconstruction,
    check_trivial_lemma,
    check_twoplayer_skew,
    tv_distance,
    verify_holenstein_bounds,
    verify_rounding_gap,
)
from .fileio import (
    FileFormatError,
    load_game,
    load_strategy,
    save_game,
    save_strategy,
    write_csv,
)
from .fixtures import BUILTIN_GAMES, build_fixture
from .games import (
    AnchorSets,
    BudgetExceededError,
    DeterministicStrategy,
    Distribution,
    Game,
    GameValidationError,
    ZeroMassError,
    classical_value,
    is_anchored,
    validate_game,
)
from .harness import DecayRecord, ExperimentConfig, run_decay, run_verification_suite
from .nonsignaling import nonsignaling_value
from .qinfo import (
    CQState,
    QuantumValidationError,
    check_fuchs_van_de_graaf,
    check_pinsker,
    check_quantum_raz,
    cq_max_relative_entropy,
    cq_relative_entropy,
    fidelity,
    partial_trace,
    relative_entropy,
    trace_distance,
    uhlmann_unitary,
)
from .quantum import (
    EntangledStrategy,
    build_cq_states,
    build_phi_family,
    chsh_qubit_strategy,
    embed_deterministic,
    entangled_value_eval,
    phi_suite_rows,
    quantum_rounding_value,
    repeated_strategy,
    rounding_suite_rows,
    seesaw,
)
from .repetition import repeat_game, repeated_classical_value, win_probability

__version__ = "0.1.0"
