pub mod error;
pub mod nest;
pub mod rule;
pub mod normal;
pub mod expr;
pub mod numerics;
pub mod operator;
pub mod compactness;
pub mod task;
pub mod decision;
pub mod sampler;
pub mod ideal;
pub mod constructions;
pub mod catalog;
pub mod suite;
pub mod scenario;
