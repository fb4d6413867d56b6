//! AC power flow and the dispatch surrogate.

mod acpf;
mod dispatch;
pub mod sparse_lu;
mod ybus;

pub use acpf::{solve_acpf, BusKind, Injections, PfOptions, PfSolution, PowerFlow, VarMap};
pub use dispatch::{
    build_dispatch_schedule, dispatch_opf, economic_dispatch, DispatchResult, DispatchSchedule, LoadAllocation,
};
pub use ybus::Ybus;
