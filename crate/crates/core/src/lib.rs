//! Matrix-variate canonical correlation analysis.
//!
//! Probabilistic models for paired matrix observations: the bilateral model
//! with latent `C ~ MN(0, I, I)` projected on both sides, its unilateral
//! special case, and the vector baselines (CCA, PCCA, 2DCCA).

pub mod baselines;
pub mod bmvcca;
pub mod dataset;
pub mod error;
mod factor;
pub mod inference;
pub mod matvar;
mod rng;
pub mod scalar;
pub mod synth;
pub mod trace;
pub mod umvcca;

pub use dataset::{PairedMatrixDataset, View};
pub use error::{MvccaError, Result};
pub use matvar::SpdPolicy;
pub use scalar::Real;
pub use trace::TraceRow;

pub use baselines::{CcaModel, PccaModel, TdccaModel};
pub use bmvcca::{BilateralView, BmvccaFit, BmvccaModel, BmvccaOptions, VariationalState};
pub use inference::{LabeledGallery, ModelKind, SourceView, SubspaceCode};
pub use synth::{GroundTruth, SynthSpec};
pub use umvcca::{UmvccaFit, UmvccaModel, UmvccaOptions};

/// Double-precision aliases.
pub type Matrix = nalgebra::DMatrix<f64>;
pub type Dataset = PairedMatrixDataset<f64>;
pub type Bmvcca = BmvccaModel<f64>;
pub type Umvcca = UmvccaModel<f64>;
pub type Pcca = PccaModel<f64>;
pub type Cca = CcaModel<f64>;
pub type Tdcca = TdccaModel<f64>;
pub type Code = SubspaceCode<f64>;
pub type Gallery = LabeledGallery<f64>;
