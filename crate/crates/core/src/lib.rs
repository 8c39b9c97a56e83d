pub mod error;
pub mod model;
pub mod numerics;
pub mod shape;

pub mod green;
pub mod grid;

pub use error::{Error, Result};
pub use grid::{GridSpec, Rect, ScalarField, VorticityField};
pub use green::{green_value, GreenOperator, VelocityField};
pub use model::{ConjugateEval, HypothesisReport, ModelFunctions, ProbeGrid};
pub use shape::ScalarShape;
