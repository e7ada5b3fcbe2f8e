//! UniSymNet symbolic regression engine.
//!
//! A structure proposer suggests sparse symbolic networks; each network maps
//! to a skeleton expression whose constants and exponents are then fitted to
//! the data, either symbolically ([`skopt`]) or by gradient descent on the
//! network itself ([`train`]).

pub mod api;
pub mod bench;
pub mod codec;
pub mod data;
pub mod datagen;
pub mod expr;
pub mod labeler;
pub mod netcore;
pub mod proposer;
pub mod skopt;
pub mod train;

pub use data::{Dataset, Interval};
pub use expr::{parse, Expr};
