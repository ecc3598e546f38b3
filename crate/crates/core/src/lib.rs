//! Class-dependent multiplicative-weights training for class-wise fairness.
//!
//! The crate covers the restricted simplex and its projections, the
//! zero-sum game view with regret diagnostics, baseline fairness losses,
//! small differentiable classifiers with the CLAM training loop, fairness
//! metrics and dataset utilities. Numeric code is generic over [`Scalar`]
//! (`f32` or `f64`); the `*64` aliases below fix it to `f64`.

pub mod accuracy;
pub mod classifier;
pub mod data;
pub mod error;
pub mod game;
pub mod losses;
pub mod metrics;
pub mod scalar;
pub mod simplex;

pub use accuracy::ClassAccuracyVector;
pub use classifier::{
    class_accuracies, per_class_batch_loss, train_baseline, train_clam, train_method, weighted_loss, Architecture,
    ClassifierParams, TrainConfig, TrainResult,
};
pub use data::{AugmentationSpec, Dataset, SampleShape, Split};
pub use error::{Error, Result};
pub use game::{run_mw_game, tau_theorem, verify_theorem1, GameTrace, PayoffMatrix, RegretDiagnostics};
pub use losses::{LossSpec, SampleLoss};
pub use metrics::{fairness_report, FairnessReport};
pub use scalar::Scalar;
pub use simplex::{mw_update, project, MwConfig, Projection, RestrictedSimplex, WeightVector};

pub type WeightVector64 = WeightVector<f64>;
pub type RestrictedSimplex64 = RestrictedSimplex<f64>;
pub type MwConfig64 = MwConfig<f64>;
pub type ClassAccuracyVector64 = ClassAccuracyVector<f64>;
pub type PayoffMatrix64 = PayoffMatrix<f64>;
pub type GameTrace64 = GameTrace<f64>;
pub type LossSpec64 = LossSpec<f64>;
pub type Dataset64 = Dataset<f64>;
pub type ClassifierParams64 = ClassifierParams<f64>;
pub type TrainResult64 = TrainResult<f64>;
pub type FairnessReport64 = FairnessReport<f64>;

pub type WeightVector32 = WeightVector<f32>;
pub type RestrictedSimplex32 = RestrictedSimplex<f32>;
pub type Dataset32 = Dataset<f32>;
pub type ClassifierParams32 = ClassifierParams<f32>;
