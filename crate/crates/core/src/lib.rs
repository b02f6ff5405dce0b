//! Effective sections, valuation images, arithmetic Okounkov bodies and
//! arithmetic intersection numbers for hermitian line bundles on `P1_Z` and
//! `P2_Z`.

pub mod error;
pub mod experiments;
pub mod intersect;
pub mod model;
pub mod norms;
pub mod numeric;
pub mod okounkov;
pub mod sections;
pub mod valuation;

pub use error::{Error, Result};
pub use model::{
    add_bundles, make_bundle, make_model, twist, ArithmeticModel, HermitianLineBundle,
    MetricFamily, MetricSpec, ModelKind,
};
pub use norms::{Enclosure, Membership, NormBodyBounds, SupOptions};
