//! Frequency-aware spatio-textual indexing of continuous queries.
//!
//! ```
//! use fast_core::model::{ContinuousQuery, Mbr, SpatioTextualObject};
//! use fast_core::{FastConfig, FastIndex};
//!
//! let mut idx = FastIndex::new(FastConfig { theta: 5, gran_max: 512, ..Default::default() })?;
//! idx.insert(ContinuousQuery::new(1, Mbr::new(0.1, 0.1, 0.4, 0.4), ["cafe", "wifi"], 1_000)?)?;
//! idx.advance_clock(1);
//! let hits = idx.match_object(&SpatioTextualObject::point(7, 0.2, 0.3, ["cafe", "wifi", "open"])?);
//! assert_eq!(hits.ids(), vec![1]);
//! # Ok::<(), fast_core::Error>(())
//! ```

pub mod aki;
pub mod baselines;
pub mod bench;
pub mod costmodel;
pub mod error;
pub mod index;
pub mod model;
pub mod oracle;
pub mod pyramid;

pub use error::{Error, Result};
pub use index::{FastConfig, FastIndex};
