//! Continuation sweeps `p -> 1+` along q-paths and the limit checks run on
//! them.

mod checks;
mod extrapolate;
mod path;
mod sweep;

pub use checks::{
    check_corollary_le1, check_lemma_estim, check_path_agreement, check_q_monotonicity,
    check_quotient_bound, check_theorem_main, e_p_lower_bound, estim_constant, estim_integral,
    random_test_fields, CheckEntry, EstimBranch, EstimCheck, Le1Report, Le1Row, LimitReport,
    MonotonicityCheck, QuotientCheck, SkippedRecord, Tolerances,
};
pub use extrapolate::{extrapolate_limit, Extrapolation, Observable, TAIL};
pub use path::QPath;
pub use sweep::{run_sweep, write_records_csv, Sweep, SweepRecord, P_FLOOR};
