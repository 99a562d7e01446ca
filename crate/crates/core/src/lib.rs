pub mod constructions;
pub mod energy;
pub mod error;
pub mod exact;
pub mod experiment;
pub mod field;
pub mod geometry;
pub mod incidence;
pub mod report;
pub mod verify;

#[cfg(test)]
mod testutil;

pub use energy::{
    additive_energy, additive_energy_oracle, fourier_coefficient, lu_norm, representation_counts, salem_assess,
    sidon_profile, weak_tech_ratio, EnergyReport, Moment, RepKind, RepMap, SalemAssessment, SalemRegime,
    SidonProfile, Spectrum,
};
pub use error::{LabError, Result};
pub use exact::{Rational, SValue};
pub use field::{make_field, FieldDesc, Scalar};
pub use geometry::{GeomObject, Hyperplane, Limits, OffsetClass, PointSet, Sphere, Vector};
