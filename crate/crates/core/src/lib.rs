pub mod ensemble;
pub mod experiment;
pub mod linalg;
pub mod spectral;
pub mod quad;
pub mod singlering;
pub mod stats;
