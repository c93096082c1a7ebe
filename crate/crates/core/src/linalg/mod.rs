pub mod dense;
pub mod exact;
pub mod ldlt;
pub mod ordering;
pub mod sparse;
