//! Closed-form geometry of the κ-stereographic constant-curvature model.
//!
//! A single curvature parameter κ selects the space: κ < 0 is the Poincaré
//! ball of radius 1/√(−κ), κ > 0 the stereographic sphere, and κ = 0 plain
//! Euclidean space. All maps here are taken at the origin, which is all the
//! message-passing layers need. The distance convention keeps the factor 2
//! at κ = 0 (`d = 2‖x − y‖`) so that d is continuous in κ.
//!
//! Curvature-sign-unified trig pair used throughout:
//!
//! ```text
//! tanκ(t)     = tan(√κ·t)/√κ      (κ > 0)   tanh(√−κ·t)/√−κ     (κ < 0)   t (κ = 0)
//! tanκ⁻¹(s)   = arctan(√κ·s)/√κ   (κ > 0)   artanh(√−κ·s)/√−κ   (κ < 0)   s (κ = 0)
//! ```

pub mod tape;

use thiserror::Error;

/// Relative margin kept from the open-ball boundary when projecting.
pub const BOUNDARY_EPS: f64 = 1e-5;

/// Floor applied to norms before division so the origin is a fixed point
/// rather than a singularity.
pub(crate) const NORM_FLOOR: f64 = 1e-15;

/// Fraction of the tan singularity admitted by the κ > 0 tangent-norm clamp.
pub(crate) const TAN_CLAMP: f64 = 0.99;

#[derive(Debug, Error)]
pub enum ManifoldError {
    #[error("möbius addition denominator ~ 0 (antipodal configuration, kappa = {kappa})")]
    Singularity { kappa: f64 },
}

/// One constant-curvature space: curvature plus the fixed numerical guards.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ManifoldSpace {
    pub kappa: f64,
}

impl ManifoldSpace {
    pub fn new(kappa: f64) -> ManifoldSpace {
        assert!(kappa.is_finite(), "curvature must be finite");
        ManifoldSpace { kappa }
    }

    pub fn euclidean() -> ManifoldSpace {
        ManifoldSpace { kappa: 0.0 }
    }

    /// Radius of the open-ball domain for κ < 0; `None` when the domain is
    /// all of real d-space (κ ≥ 0).
    pub fn domain_radius(&self) -> Option<f64> {
        (self.kappa < 0.0).then(|| 1.0 / (-self.kappa).sqrt())
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        -self.kappa * sq_norm(x) < 1.0
    }

    /// Clamps `x` into the domain: for κ < 0 rescales onto the ball of
    /// radius (1 − ε)/√(−κ) when outside, for κ ≥ 0 returns `x` unchanged.
    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        if self.kappa >= 0.0 {
            return x.to_vec();
        }
        let sc = (-self.kappa).sqrt();
        let n = norm(x).max(NORM_FLOOR);
        let scale = (((1.0 - BOUNDARY_EPS) / sc) / n).min(1.0);
        x.iter().map(|&v| v * scale).collect()
    }

    /// Gyro-group addition `x ⊕κ y`; reduces to `x + y` at κ = 0.
    pub fn mobius_add(&self, x: &[f64], y: &[f64]) -> Result<Vec<f64>, ManifoldError> {
        debug_assert_eq!(x.len(), y.len());
        if self.kappa == 0.0 {
            return Ok(x.iter().zip(y).map(|(a, b)| a + b).collect());
        }
        let k = self.kappa;
        let x2 = sq_norm(x);
        let y2 = sq_norm(y);
        let xy = dot(x, y);
        let a = 1.0 - 2.0 * k * xy - k * y2;
        let b = 1.0 + k * x2;
        let den = 1.0 - 2.0 * k * xy + k * k * x2 * y2;
        if den.abs() < 1e-12 {
            return Err(ManifoldError::Singularity { kappa: k });
        }
        let mut out: Vec<f64> =
            x.iter().zip(y).map(|(xi, yi)| (a * xi + b * yi) / den).collect();
        if k < 0.0 {
            out = self.project(&out);
        }
        Ok(out)
    }

    /// Origin exponential map `exp₀κ(v) = tanκ(‖v‖)·v/‖v‖`, with the κ > 0
    /// tangent-norm clamp and the κ < 0 boundary projection folded in.
    pub fn exp0(&self, v: &[f64]) -> Vec<f64> {
        if self.kappa == 0.0 {
            return v.to_vec();
        }
        let n = norm(v);
        let nc = n.max(NORM_FLOOR);
        if self.kappa < 0.0 {
            let sc = (-self.kappa).sqrt();
            let t = (sc * nc).tanh().min(1.0 - BOUNDARY_EPS);
            let factor = t / (sc * nc);
            v.iter().map(|&x| factor * x).collect()
        } else {
            let sc = self.kappa.sqrt();
            let bound = TAN_CLAMP * std::f64::consts::FRAC_PI_2 / sc;
            let arg_n = nc.min(bound);
            if nc > bound {
                log::debug!("exp0 tangent norm {nc} clamped to {bound} (kappa = {})", self.kappa);
            }
            let t = (sc * arg_n).tan();
            let factor = t / (sc * nc);
            v.iter().map(|&x| factor * x).collect()
        }
    }

    /// Origin logarithmic map `log₀κ(y) = tanκ⁻¹(‖y‖)·y/‖y‖`. Points within
    /// `BOUNDARY_EPS` of the κ < 0 boundary are projected first.
    pub fn log0(&self, y: &[f64]) -> Vec<f64> {
        if self.kappa == 0.0 {
            return y.to_vec();
        }
        let n = norm(y);
        let nc = n.max(NORM_FLOOR);
        if self.kappa < 0.0 {
            let sc = (-self.kappa).sqrt();
            let arg = sc * nc;
            let capped = arg.min(1.0 - BOUNDARY_EPS);
            if arg > 1.0 - BOUNDARY_EPS {
                log::debug!("log0 input projected from the boundary (kappa = {})", self.kappa);
            }
            let factor = capped.atanh() / (sc * nc);
            y.iter().map(|&x| factor * x).collect()
        } else {
            let sc = self.kappa.sqrt();
            let factor = (sc * nc).atan() / (sc * nc);
            y.iter().map(|&x| factor * x).collect()
        }
    }

    /// Geodesic distance `dκ(x, y) = 2·tanκ⁻¹(‖(−x) ⊕κ y‖)`.
    pub fn dist(&self, x: &[f64], y: &[f64]) -> Result<f64, ManifoldError> {
        let neg_x: Vec<f64> = x.iter().map(|&v| -v).collect();
        let m = self.mobius_add(&neg_x, y)?;
        let s = norm(&m);
        Ok(if self.kappa == 0.0 {
            2.0 * s
        } else if self.kappa < 0.0 {
            let sc = (-self.kappa).sqrt();
            2.0 * (sc * s).min(1.0 - 1e-12).atanh() / sc
        } else {
            let sc = self.kappa.sqrt();
            2.0 * (sc * s).atan() / sc
        })
    }

    /// Geodesic scaling through the origin, `w ⊗κ x = exp₀(w·log₀(x))`.
    /// `w = 1` is the identity and `w = 0` collapses to the origin.
    pub fn kappa_scale(&self, w: f64, x: &[f64]) -> Vec<f64> {
        if self.kappa == 0.0 {
            return x.iter().map(|&v| w * v).collect();
        }
        let t: Vec<f64> = self.log0(x).iter().map(|&v| w * v).collect();
        self.exp0(&t)
    }

    /// `tanκ` on scalars; exposed for the closed-form test oracles.
    pub fn tan_k(&self, t: f64) -> f64 {
        if self.kappa == 0.0 {
            t
        } else if self.kappa < 0.0 {
            let sc = (-self.kappa).sqrt();
            (sc * t).tanh() / sc
        } else {
            let sc = self.kappa.sqrt();
            (sc * t).tan() / sc
        }
    }

    /// `tanκ⁻¹` on scalars.
    pub fn tan_k_inv(&self, s: f64) -> f64 {
        if self.kappa == 0.0 {
            s
        } else if self.kappa < 0.0 {
            let sc = (-self.kappa).sqrt();
            (sc * s).atanh() / sc
        } else {
            let sc = self.kappa.sqrt();
            (sc * s).atan() / sc
        }
    }
}

pub(crate) fn norm(x: &[f64]) -> f64 {
    sq_norm(x).sqrt()
}

pub(crate) fn sq_norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

pub(crate) fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}
