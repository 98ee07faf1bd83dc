//! Locally edge-differentially private core decomposition and densest
//! subgraph.
//!
//! Every vertex is a user that knows only its own neighborhood. Users and an
//! untrusted server interact in synchronous rounds; the server peels vertices
//! whose reported degree is low, and each user tracks the drop in its degree
//! with a private continual counter instead of re-noising its degree every
//! round. The crate simulates both sides, provides the non-private oracles
//! to check against, and audits the sensitivity arguments that the noise
//! calibration rests on.
//!
//! ```
//! use ldp_core::{exact_coreness, run_exact_core, Graph, RunConfig};
//!
//! let g = Graph::complete(5);
//! let run = run_exact_core(&g, &RunConfig::noiseless()).unwrap();
//! assert_eq!(run.estimates.values, vec![4.0; 5]);
//! assert_eq!(exact_coreness(&g), vec![4; 5]);
//! ```

pub mod approx;
pub mod audit;
pub mod counting;
pub mod densest;
pub mod edgelist;
pub mod error;
pub mod estimate;
pub mod exact;
pub mod experiment;
pub mod generators;
pub mod graph;
pub mod noise;
pub mod sim;
pub mod values;

pub use approx::{build_schedule, run_approx_core, ApproxRun, PhaseSchedule};
pub use audit::{
    audit_alpha, audit_counter_sensitivity, audit_protocol_stream_discrepancy, measure_alpha_obs,
    AuditReport,
};
pub use counting::{AdaptiveCounter, CounterConfig, CounterKind};
pub use densest::{densest_from_estimates, run_densest, DensestMode, DensestResult};
pub use edgelist::{parse_edge_list, read_edge_list, write_edge_list};
pub use error::{Error, Result};
pub use estimate::EstimateVector;
pub use exact::{run_exact_core, ExactRun};
pub use generators::{gen_gnp, gen_path, gen_query_graph, gen_regular, QueryGraphSpec};
pub use graph::{brute_force_densest, exact_coreness, Density, Graph};
pub use noise::{NoiseMode, NoiseSource};
pub use sim::{MemoryMode, RunConfig, Transcript};
pub use values::VertexValues;
