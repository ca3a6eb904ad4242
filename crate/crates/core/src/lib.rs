pub mod error;
pub mod matrix;
pub mod mp;
pub mod par;
pub mod rational;
pub mod solver;
pub mod spectral;
pub mod experiments;
