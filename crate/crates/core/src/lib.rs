pub mod container;
pub mod dataset;
pub mod scatter;
pub mod surrogate;
pub mod inverse;
