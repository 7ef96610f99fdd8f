"""Virtual quantum Markov chain analysis for four-qubit states.

Decides, certifies, and quantifies recoverability of a four-qubit state
from its three-qubit marginal: structural kernel-inclusion tests, exact and
approximate channel certification through an embedded SDP engine, and
quasiprobability sampling-overhead computation.
"""

from .conic import (
    ConicProblem,
    ConicSolution,
    Constraint,
    OverheadResult,
    SolverConfig,
    SweepReport,
    build_cptp_feasibility,
    build_overhead_problem,
    cptp_certify,
    recoverability_sweep,
    sampling_overhead,
    solve,
)
from .linops import (
    SubspaceBasis,
    eigh,
    kernel_basis,
    rank_of,
    subspace_contained,
    support_basis,
)
from .markov import (
    ConditionalBlock,
    ConsistencyReport,
    InclusionReport,
    apply_choi,
    conditional_block,
    kernel_inclusion_check,
    marginal_block_consistency,
    theta_blocks,
    verify_recovery,
)
from .registers import (
    ChoiOperator,
    DensityOperator,
    QubitRegister,
    ket,
    load_state,
    make_channel_choi,
    make_state,
    mix,
    partial_trace,
    partial_transpose,
    save_state,
    tensor,
)

__version__ = "0.1.0"

__all__ = [
    "ChoiOperator",
    "ConditionalBlock",
    "ConicProblem",
    "ConicSolution",
    "ConsistencyReport",
    "Constraint",
    "DensityOperator",
    "InclusionReport",
    "OverheadResult",
    "QubitRegister",
    "SolverConfig",
    "SubspaceBasis",
    "SweepReport",
    "apply_choi",
    "build_cptp_feasibility",
    "build_overhead_problem",
    "conditional_block",
    "cptp_certify",
    "eigh",
    "kernel_basis",
    "kernel_inclusion_check",
    "ket",
    "load_state",
    "make_channel_choi",
    "make_state",
    "marginal_block_consistency",
    "mix",
    "partial_trace",
    "partial_transpose",
    "rank_of",
    "recoverability_sweep",
    "sampling_overhead",
    "save_state",
    "solve",
    "subspace_contained",
    "support_basis",
    "tensor",
    "theta_blocks",
    "verify_recovery",
    "__version__",
]
