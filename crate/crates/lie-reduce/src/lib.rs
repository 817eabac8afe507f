//! Symbolic symmetry reduction of the Zabolotskaya-Khokhlov equation.

pub mod calculus;
pub mod exec;
pub mod expr;
pub mod lie;
pub mod linearize;
pub mod parser;
pub mod reduction;
