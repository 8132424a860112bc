//! Surface capture, the slice ledger and the end-of-run audits.

mod audit;
mod detector;
mod frame;
mod ledger;

pub use audit::{conservation_audit, overlap_metric, slice_overlap_monitor, AuditReport, AuditTolerances};
pub use detector::{CaptureStats, Credit, Detector, Pending, Shell, StepCapture, LEAK_LIMIT};
pub use frame::Frame;
pub use ledger::{
    born_distribution, born_from_records, parse_ledger, read_ledger, BornDistribution, Deposits, LedgerFile,
    SliceLedger, SliceRecord,
};
