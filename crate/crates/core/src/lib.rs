//! Blocked storage of super-symmetric tensors and estimation of moment and
//! cumulant tensors of arbitrary order.
//!
//! Only the blocks whose block multi-index is non-decreasing are stored, so
//! an order-`m` tensor takes roughly `n^m / m!` elements. Moments are
//! accumulated block by block over the samples; cumulants of order `m` are
//! the central moment minus sums of products of lower cumulants over
//! partitions with no singleton part.
//!
//! ```
//! use symcum::{cumulants_upto, DataMatrix};
//!
//! let x = DataMatrix::from_rows(&[
//!     vec![1.0, 2.0],
//!     vec![3.0, 1.0],
//!     vec![0.0, 4.0],
//!     vec![2.0, 2.0],
//! ])?;
//! let set = cumulants_upto(&x, 4, 2)?;
//! assert_eq!(set.mean(), &[1.5, 2.25]);
//! let c4 = set.tensor(4).unwrap();
//! assert_eq!(c4.value(&[0, 1, 0, 1]), c4.value(&[1, 1, 0, 0]));
//! # Ok::<(), symcum::Error>(())
//! ```

pub mod cli_io;
pub mod cumulants;
pub mod dense;
pub mod error;
mod indexing;
pub mod moments;
pub mod oracle;
pub mod partitions;
pub mod symtensor;
pub mod tolerance;

pub use cumulants::{cumulant, cumulants_upto, outer_prod_cum, CumulantSet};
pub use dense::DenseTensor;
pub use error::{Error, Result};
pub use indexing::MAX_ORDER;
pub use moments::{center, moment, moment_parallel, DataMatrix, Parallelism};
pub use symtensor::{BlockSymTensor, TensorIndex};
