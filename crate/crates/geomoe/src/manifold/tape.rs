//! Differentiable counterparts of the manifold operations, assembled from
//! tape primitives so that gradients flow into points, tangents, and the
//! curvature parameter itself. Formulas and guards mirror the pure path.

use crate::autodiff::{NodeId, Result, Tape};

use super::{BOUNDARY_EPS, NORM_FLOOR, TAN_CLAMP};

/// A constant-curvature space bound to a tape. For curved spaces the
/// curvature is a node (usually a trainable parameter leaf) whose sign is
/// fixed for the life of the tape; √|κ| is built once and reused.
#[derive(Clone, Copy, Debug)]
pub enum TapeSpace {
    Euclidean,
    Curved {
        kappa: NodeId,
        /// √(−κ) for κ < 0, √κ for κ > 0.
        sqrt_abs: NodeId,
        positive: bool,
    },
}

impl TapeSpace {
    pub fn euclidean() -> TapeSpace {
        TapeSpace::Euclidean
    }

    /// Binds a nonzero-curvature space. `kappa` must hold a scalar whose
    /// sign matches `positive` (the clamped optimizer keeps it there).
    pub fn curved(tape: &mut Tape, kappa: NodeId, positive: bool) -> Result<TapeSpace> {
        let abs_k = if positive { kappa } else { tape.neg(kappa) };
        let sqrt_abs = tape.sqrt(abs_k)?;
        Ok(TapeSpace::Curved { kappa, sqrt_abs, positive })
    }

    pub fn for_kappa(tape: &mut Tape, kappa_value: f64, kappa: NodeId) -> Result<TapeSpace> {
        if kappa_value == 0.0 {
            Ok(TapeSpace::Euclidean)
        } else {
            TapeSpace::curved(tape, kappa, kappa_value > 0.0)
        }
    }

    pub fn mobius_add(&self, tape: &mut Tape, x: NodeId, y: NodeId) -> Result<NodeId> {
        match *self {
            TapeSpace::Euclidean => Ok(tape.add(x, y)),
            TapeSpace::Curved { kappa, sqrt_abs, positive } => {
                let x2 = tape.dot(x, x);
                let y2 = tape.dot(y, y);
                let xy = tape.dot(x, y);
                let kxy = tape.mul_scalar(kappa, xy);
                let kx2 = tape.mul_scalar(kappa, x2);
                let ky2 = tape.mul_scalar(kappa, y2);
                let two_kxy = tape.mul_const(kxy, 2.0);
                // a = 1 - 2k<x,y> - k|y|^2 ; b = 1 + k|x|^2
                let sum_a = tape.add(two_kxy, ky2);
                let neg_a = tape.neg(sum_a);
                let a = tape.add_const(neg_a, 1.0);
                let b = tape.add_const(kx2, 1.0);
                let ax = tape.mul_scalar(a, x);
                let by = tape.mul_scalar(b, y);
                let num = tape.add(ax, by);
                // den = 1 - 2k<x,y> + k^2 |x|^2 |y|^2
                let k2 = tape.mul_elem(kappa, kappa);
                let x2y2 = tape.mul_scalar(x2, y2);
                let k2x2y2 = tape.mul_scalar(k2, x2y2);
                let neg_two_kxy = tape.neg(two_kxy);
                let den_sum = tape.add(neg_two_kxy, k2x2y2);
                let den = tape.add_const(den_sum, 1.0);
                if tape.scalar_value(den).abs() < 1e-12 {
                    return Err(crate::autodiff::AutodiffError::NumericalDomain {
                        op: "mobius_add",
                        detail: "denominator ~ 0 (antipodal configuration)".into(),
                    });
                }
                let out = tape.div_scalar(num, den)?;
                if positive {
                    Ok(out)
                } else {
                    self.project(tape, out, sqrt_abs)
                }
            }
        }
    }

    fn project(&self, tape: &mut Tape, x: NodeId, sqrt_abs: NodeId) -> Result<NodeId> {
        let n = tape.norm(x);
        let nc = tape.clamp_min(n, NORM_FLOOR);
        let max_norm_num = tape.scalar(1.0 - BOUNDARY_EPS);
        let max_norm = tape.div_scalar(max_norm_num, sqrt_abs)?;
        let ratio = tape.div_scalar(max_norm, nc)?;
        let scale = tape.clamp_max(ratio, 1.0);
        Ok(tape.mul_scalar(scale, x))
    }

    pub fn exp0(&self, tape: &mut Tape, v: NodeId) -> Result<NodeId> {
        match *self {
            TapeSpace::Euclidean => Ok(v),
            TapeSpace::Curved { sqrt_abs, positive, .. } => {
                let n = tape.norm(v);
                let nc = tape.clamp_min(n, NORM_FLOOR);
                if positive {
                    let bound_num = tape.scalar(TAN_CLAMP * std::f64::consts::FRAC_PI_2);
                    let bound = tape.div_scalar(bound_num, sqrt_abs)?;
                    let arg_n = tape.min2(nc, bound);
                    let arg = tape.mul_scalar(sqrt_abs, arg_n);
                    let t = tape.tan(arg);
                    let den = tape.mul_scalar(sqrt_abs, nc);
                    let factor = tape.div_scalar(t, den)?;
                    Ok(tape.mul_scalar(factor, v))
                } else {
                    let arg = tape.mul_scalar(sqrt_abs, nc);
                    let th = tape.tanh(arg);
                    let t = tape.clamp_max(th, 1.0 - BOUNDARY_EPS);
                    let den = tape.mul_scalar(sqrt_abs, nc);
                    let factor = tape.div_scalar(t, den)?;
                    Ok(tape.mul_scalar(factor, v))
                }
            }
        }
    }

    pub fn log0(&self, tape: &mut Tape, y: NodeId) -> Result<NodeId> {
        match *self {
            TapeSpace::Euclidean => Ok(y),
            TapeSpace::Curved { sqrt_abs, positive, .. } => {
                let n = tape.norm(y);
                let nc = tape.clamp_min(n, NORM_FLOOR);
                let arg = tape.mul_scalar(sqrt_abs, nc);
                let mapped = if positive {
                    tape.atan(arg)
                } else {
                    let capped = tape.clamp_max(arg, 1.0 - BOUNDARY_EPS);
                    tape.artanh(capped)?
                };
                let den = tape.mul_scalar(sqrt_abs, nc);
                let factor = tape.div_scalar(mapped, den)?;
                Ok(tape.mul_scalar(factor, y))
            }
        }
    }

    pub fn dist(&self, tape: &mut Tape, x: NodeId, y: NodeId) -> Result<NodeId> {
        let neg_x = tape.neg(x);
        let m = self.mobius_add(tape, neg_x, y)?;
        let s = tape.norm(m);
        match *self {
            TapeSpace::Euclidean => Ok(tape.mul_const(s, 2.0)),
            TapeSpace::Curved { sqrt_abs, positive, .. } => {
                let arg = tape.mul_scalar(sqrt_abs, s);
                let mapped = if positive {
                    tape.atan(arg)
                } else {
                    let capped = tape.clamp_max(arg, 1.0 - 1e-12);
                    tape.artanh(capped)?
                };
                let ratio = tape.div_scalar(mapped, sqrt_abs)?;
                Ok(tape.mul_const(ratio, 2.0))
            }
        }
    }

    /// Squared geodesic distance, the quantity the pairwise blend consumes.
    pub fn dist_sq(&self, tape: &mut Tape, x: NodeId, y: NodeId) -> Result<NodeId> {
        let d = self.dist(tape, x, y)?;
        Ok(tape.mul_elem(d, d))
    }

    pub fn kappa_scale(&self, tape: &mut Tape, w: NodeId, x: NodeId) -> Result<NodeId> {
        match *self {
            TapeSpace::Euclidean => Ok(tape.mul_scalar(w, x)),
            TapeSpace::Curved { .. } => {
                let t = self.log0(tape, x)?;
                let scaled = tape.mul_scalar(w, t);
                self.exp0(tape, scaled)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::ManifoldSpace;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    fn rand_point(rng: &mut ChaCha20Rng, space: &ManifoldSpace, d: usize) -> Vec<f64> {
        let raw: Vec<f64> = (0..d).map(|_| rng.gen_range(-0.4..0.4)).collect();
        space.project(&raw)
    }

    /// The tape assembly must agree with the pure closed-form path.
    #[test]
    fn tape_ops_match_pure_ops() {
        let mut rng = ChaCha20Rng::seed_from_u64(7);
        for kappa in [-3.0, -1.0, -0.5, 0.0, 0.5, 1.0, 3.0] {
            let space = ManifoldSpace::new(kappa);
            for _ in 0..50 {
                let x = rand_point(&mut rng, &space, 4);
                let y = rand_point(&mut rng, &space, 4);
                let v: Vec<f64> = (0..4).map(|_| rng.gen_range(-0.8..0.8)).collect();
                let w = rng.gen_range(0.0..1.0);

                let mut tape = Tape::new();
                let k_node = tape.scalar(kappa);
                let ts = TapeSpace::for_kappa(&mut tape, kappa, k_node).unwrap();
                let xn = tape.vector(&x);
                let yn = tape.vector(&y);
                let vn = tape.vector(&v);
                let wn = tape.scalar(w);

                let sum = ts.mobius_add(&mut tape, xn, yn).unwrap();
                let pure_sum = space.mobius_add(&x, &y).unwrap();
                for (a, b) in tape.data(sum).iter().zip(&pure_sum) {
                    assert!((a - b).abs() < 1e-12, "mobius mismatch at kappa {kappa}");
                }

                let ex = ts.exp0(&mut tape, vn).unwrap();
                for (a, b) in tape.data(ex).iter().zip(&space.exp0(&v)) {
                    assert!((a - b).abs() < 1e-12, "exp0 mismatch at kappa {kappa}");
                }

                let lg = ts.log0(&mut tape, xn).unwrap();
                for (a, b) in tape.data(lg).iter().zip(&space.log0(&x)) {
                    assert!((a - b).abs() < 1e-12, "log0 mismatch at kappa {kappa}");
                }

                let dd = ts.dist(&mut tape, xn, yn).unwrap();
                let pure_d = space.dist(&x, &y).unwrap();
                assert!((tape.scalar_value(dd) - pure_d).abs() < 1e-12);

                let ks = ts.kappa_scale(&mut tape, wn, xn).unwrap();
                for (a, b) in tape.data(ks).iter().zip(&space.kappa_scale(w, &x)) {
                    assert!((a - b).abs() < 1e-12, "kappa_scale mismatch at kappa {kappa}");
                }
            }
        }
    }
}
