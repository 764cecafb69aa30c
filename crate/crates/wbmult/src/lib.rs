pub mod scalar;
pub mod series;
pub mod sequence;
pub mod analyzer;
pub mod numeric;
pub mod corpus;
