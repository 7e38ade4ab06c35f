pub mod cli;
pub mod config;
pub mod error;
pub mod forms;
pub mod grassmann;
pub mod groups;
pub mod intersect;
pub mod kinematics;
pub mod linalg;
pub mod parallel;
pub mod polytope;
pub mod suites;
pub mod valuations;

pub use error::{Error, Result};
