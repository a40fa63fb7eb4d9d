//! Bach: a Linda-style coordination language with constrained execution
//! over a multiset store, and a model of the Needham-Schroeder public key
//! protocol that reproduces Lowe's man-in-the-middle attack.
//!
//! ```
//! use bach_core::{parse_program, search, SearchStatus};
//!
//! let model = parse_program(
//!     "proc P = tell(req) ; get(ack) .
//!      proc Q = get(req) ; tell(ack) .
//!      proc Protocol = P || Q .
//!      form Acked = (!bf(ack) ; Acked) + bf(ack) .
//!      run Protocol with Acked .",
//! )
//! .unwrap();
//! let goal = model.goal_formula(None).unwrap().unwrap();
//! let agent = model.entry_agent().unwrap();
//! let result = search(&agent, &goal, model.procs(), model.formulas(), 10).unwrap();
//! assert_eq!(result.status, SearchStatus::Witness);
//! let trace: Vec<String> = result.witness().unwrap().trace().iter().map(|l| l.to_string()).collect();
//! assert_eq!(trace, ["tell(req)", "get(req)", "tell(ack)"]);
//! ```

pub mod agent;
pub mod cli;
pub mod error;
pub mod explorer;
pub mod interpreter;
pub mod logic;
pub mod model;
pub mod ns_model;
pub mod parser;
pub mod store;
pub mod term;

pub use agent::{Agent, Primitive, ProcDef, ProcEnv};
pub use error::{Error, Result};
pub use explorer::{search, search_all, Explorer, SearchResult, SearchStatus, Witness};
pub use interpreter::{execute, Configuration, RunOutcome, RunStatus, StepLabel, StepRecord};
pub use logic::{derive, BasicFormula, BslFormula, FormulaEnv};
pub use model::Model;
pub use parser::{parse_agent, parse_formula, parse_program, parse_term};
pub use store::Store;
pub use term::SiTerm;
