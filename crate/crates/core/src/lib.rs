//! Three-dimensional homological product codes and single-shot decoding.
//!
//! The crate builds CSS codes from a product of three classical seed
//! matrices, samples phase-flip and measurement noise, runs the two-stage
//! single-shot protocol with matching or BP+OSD syndrome repair, and fits
//! threshold models to the resulting failure rates. A separate module checks
//! confinement properties exhaustively on small instances.

pub mod gf2;
pub mod product_code;
pub mod lattice;
pub mod noise;
pub mod bp_osd;
pub mod matching;
pub mod single_shot;
pub mod confinement;
pub mod montecarlo;
pub mod fitting;
