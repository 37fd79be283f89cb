//! Exact finite models of measured group actions: expansion profiles, Cheeger
//! constants, Følner sets, exhaustions by domains of expansion and approximating spaces.

pub mod action;
pub mod approx;
pub mod config;
pub mod error;
pub mod expansion;
pub mod folner;
pub mod group;
pub mod measure;
pub mod pipeline;
pub mod rational;
pub mod scenarios;

pub use error::{Error, Result};
pub use rational::Rational;
