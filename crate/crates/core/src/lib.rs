//! Multi-population alternate-evolution architecture search.
//!
//! A network of `L` layers is searched with one population of binary cell
//! genomes per layer. Populations evolve in turn, are scored in the context
//! of their neighbours' best cells, and exchange elites with nearby layers.
//! Two reference searchers (coevolution without migration and a single
//! global population) share the same operators and evaluators.
//!
//! ```no_run
//! use mpae::config::SearchConfig;
//! use mpae::search::Search;
//!
//! let config = SearchConfig::from_toml_str("layers = 4\npopulation_size = 16").unwrap();
//! let mut search = Search::from_config(config).unwrap();
//! search.run().unwrap();
//! println!("{} evaluations", search.evaluations());
//! ```

pub mod analysis;
pub mod baselines;
pub mod config;
pub mod engine;
pub mod error;
pub mod evaluation;
pub mod genome;
pub mod log;
pub mod migration;
pub mod oracle;
pub mod par;
pub mod persist;
pub mod rng;
pub mod search;

pub use error::{Error, Result};
