//! Approximate-multiplier design: gate-level netlists, structural
//! approximation transforms, exhaustive error characterization, and a
//! multi-objective search that produces an (area, MRED) Pareto front.

pub mod library;
pub mod metrics;
pub mod netlist;
pub mod search;
pub mod transform;

pub use library::{filter_by_accuracy, load_library, write_library, VariantLibrary, VariantRecord};
pub use metrics::{error_metrics, ErrorMetrics, MAX_EXHAUSTIVE_BITWIDTH};
pub use netlist::{build_exact_multiplier, Gate, GateAreaTable, GateKind, NetId, Netlist};
pub use search::{pareto_search, MultiplierVariant, Provenance, SearchParams};
pub use transform::{precision_scale, prune, Cut};
