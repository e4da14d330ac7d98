use thiserror::Error;

use crate::jet::JetError;
use crate::linalg4::LinalgError;
use crate::meancurv::MeanCurvatureError;
use crate::profile::ProfileError;
use crate::surface::GeometryError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Solution(#[from] MeanCurvatureError),
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error("unknown tolerance `{0}`")]
    UnknownTolerance(String),
}

impl Error {
    /// Bad input rather than a numerical failure.
    pub fn is_parameter_error(&self) -> bool {
        matches!(
            self,
            Error::Solution(MeanCurvatureError::InvalidParams(_) | MeanCurvatureError::NoAdmissibleBranch { .. })
                | Error::Profile(ProfileError::Solution(
                    MeanCurvatureError::InvalidParams(_) | MeanCurvatureError::NoAdmissibleBranch { .. }
                ))
                | Error::UnknownTolerance(_)
        )
    }
}
