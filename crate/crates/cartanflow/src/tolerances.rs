use crate::error::{Error, Result};

/// Numerical thresholds. Relative entries are scaled by `1 + |x|` at the point
/// of use.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Membership in p.
    pub member: f64,
    /// Orthogonality / determinant of group elements (absolute).
    pub group: f64,
    /// Reconstruction and commutation residuals.
    pub solve: f64,
    /// Single-linkage threshold for eigenvalue clusters.
    pub cluster: f64,
    /// Equality threshold for chamber faces.
    pub face: f64,
    /// Central-difference step for sampled paths and projector derivatives.
    pub h_fd: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            member: 1e-10,
            group: 1e-8,
            solve: 1e-8,
            cluster: 1e-8,
            face: 1e-6,
            h_fd: 1e-5,
        }
    }
}

impl Tolerances {
    pub fn eps_member(&self, norm: f64) -> f64 {
        self.member * (1.0 + norm)
    }

    pub fn eps_solve(&self, norm: f64) -> f64 {
        self.solve * (1.0 + norm)
    }

    pub fn cluster_thr(&self, norm: f64) -> f64 {
        self.cluster * (1.0 + norm)
    }

    /// Applies a `key=value` override.
    pub fn set(&mut self, key: &str, value: f64) -> Result<()> {
        if !(value.is_finite() && value > 0.0) {
            return Err(Error::Parse(format!("tolerance {key} must be positive, got {value}")));
        }
        let slot = match key {
            "member" => &mut self.member,
            "group" => &mut self.group,
            "solve" => &mut self.solve,
            "cluster" => &mut self.cluster,
            "face" => &mut self.face,
            "h_fd" | "h-fd" => &mut self.h_fd,
            _ => return Err(Error::Parse(format!("unknown tolerance key '{key}'"))),
        };
        *slot = value;
        Ok(())
    }
}
