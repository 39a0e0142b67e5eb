//! Step operators on finite lattice truncations and the analysis of their
//! ballistic behaviour: partial isometries, orthogonality preservation,
//! stability, Halmos–Wallen decompositions, Feynman Hamiltonians and
//! quantum Turing machine step operators.

// Loop indices double as basis-state labels, and `!(x > 0.0)` is used on
// purpose so that NaN is rejected.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod error;
pub mod halmos_wallen;
pub mod hilbert;
pub mod isometry;
pub mod qtm;
pub mod report;

pub use dynamics::{
    continuum_limit_check, evolve, feynman_hamiltonian, path_support_profile, predicted_eigenvector,
    predicted_spectrum, reconstruct_step_operator, spectrum, verify_spectrum, Hamiltonian, SpectrumKind,
    SpectrumPrediction,
};
pub use error::{Error, Result};
pub use halmos_wallen::{
    contraction_u1, decompose, defect_chain, hw_direct_sum, hw_product_lemma, hw_tower, Decomposition,
    DecompositionSummary, DefectChain, TruncatedShift,
};
pub use hilbert::gates::{self, Gate};
pub use hilbert::operator::{ComplexOperator, DROP_TOLERANCE};
pub use hilbert::spectral::{hermitian_eigen, hermitian_sqrt, is_projection, EigenDecomposition, DENSE_CAP};
pub use hilbert::tolerance::ToleranceContext;
pub use hilbert::{head_raise, head_shift, projector, site_unitary, LatticeShape, ProjectorKind, Topology};
pub use isometry::{
    extract_paths, is_completely_orthogonality_preserving, is_distinct_path_generating,
    is_orthogonality_preserving, is_partial_isometry, is_power_partial_isometry, is_stable_on_basis,
    op_basis, powers_preserve_orthogonality, Basis, Chain, ChainKind, PathSet,
};
pub use num_complex::Complex64 as C64;
pub use qtm::{
    build_step_operator, condition_x, decide_ballistic, gram_conditions, is_deterministic,
    iterate_norm_profile, BallisticVerdict, Direction, ExampleMachine, MachineVerdict, Rule, RuleTable,
};
pub use report::{PredicateReport, Witness};
