//! Frequent itemset mining with Dynamic Itemset Counting over 64-bit
//! transaction masks, in a serial and a thread-parallel flavour.
//!
//! ```
//! use dicmine::bitcore::BitDatabase;
//! use dicmine::dic::{mine_parallel, MiningParams};
//!
//! let db = BitDatabase::from_raw(vec![0b11, 0b11, 0b01]).unwrap();
//! let params = MiningParams::new(0.5, 2, 2, db.len()).unwrap();
//! let result = mine_parallel(&db, &params).unwrap();
//! assert_eq!(result.frequent.len(), 3);
//! ```

pub mod bench;
pub mod bitcore;
pub mod cli;
pub mod dataio;
pub mod dic;
pub mod error;
pub mod oracle;

pub use error::{Error, Result};
