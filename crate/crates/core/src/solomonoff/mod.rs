//! Computable stand-in for the universal prior: a budgeted program
//! machine, exhaustive enumeration of its minimal programs, and mass
//! estimates built from the enumerated table.
//!
//! The pipeline is `vm` (run one program) -> `enumerate` (every minimal
//! program within budget) -> `estimates` (monotone mass, conditional
//! probabilities, description-length figures) -> `scan` (experiments over
//! instance numbers), with `cache` persisting the enumeration between
//! processes and `bits` supplying the packed bit-string type everything
//! shares.

pub mod bits;
pub mod cache;
pub mod enumerate;
pub mod estimates;
pub mod scan;
pub mod vm;

pub use bits::Bits;
pub use cache::{load_or_build, CacheHeader};
pub use enumerate::{enumerate, Enumeration, KraftSum};
pub use estimates::{binary_expansion, ApproxM, ComplexityEstimates};
pub use scan::{
    computable_convergence, magic_number_scan, ConvergenceRow, MagicRow, MagicScanReport,
};
pub use vm::{Budget, ProgramRecord, VmOutcome, vm_run, INSTRUCTION_SET_VERSION, MAX_ENUMERATION_LEN};
