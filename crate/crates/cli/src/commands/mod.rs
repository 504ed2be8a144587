pub mod compare;
pub mod eval;
pub mod losscurves;
pub mod synth;
pub mod train;
