//! Generalized DWD loss.
//!
//! `V_q(u) = 1 - u` for `u <= q/(1+q)` and `u^{-q} q^q / (q+1)^{q+1}`
//! otherwise. The loss is convex, C¹, dominates the hinge loss, and
//! converges to it as `q → ∞`. The power branch is evaluated in log space so
//! that large `q` (used to emulate the hinge) does not overflow.

use crate::error::{Error, Result};

/// Validated loss exponent `q > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossParam {
    q: f64,
}

impl LossParam {
    pub fn new(q: f64) -> Result<Self> {
        if !(q > 0.0 && q.is_finite()) {
            return Err(Error::InvalidData(format!(
                "loss exponent q must be positive and finite, got {q}"
            )));
        }
        Ok(Self { q })
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    /// The knot `u* = q/(1+q)` where the two branches meet.
    pub fn knot(&self) -> f64 {
        self.q / (1.0 + self.q)
    }

    /// `V_q(u)`.
    pub fn vq(&self, u: f64) -> f64 {
        let q = self.q;
        if u <= self.knot() {
            1.0 - u
        } else {
            // u^{-q} q^q / (q+1)^{q+1} = exp(q ln(q/((q+1)u)) - ln(q+1))
            (q * (q / ((q + 1.0) * u)).ln() - (q + 1.0).ln()).exp()
        }
    }

    /// `V_q'(u)`; equals -1 on the linear branch (and exactly at the knot,
    /// where the one-sided limits agree) and `-(q/((q+1)u))^{q+1}` beyond it.
    pub fn vq_grad(&self, u: f64) -> f64 {
        let q = self.q;
        if u <= self.knot() {
            -1.0
        } else {
            -((q + 1.0) * (q / ((q + 1.0) * u)).ln()).exp()
        }
    }

    /// `c_q = V_q(1) = q^q/(q+1)^{q+1}`, a value in (0, 1).
    pub fn cq(&self) -> f64 {
        self.vq(1.0)
    }

    /// Uniform curvature bound of `V_q`: the second derivative peaks at the
    /// knot with value `(q+1)^2 / q`. This is the constant behind the MM
    /// majorizer.
    pub fn curvature_bound(&self) -> f64 {
        (self.q + 1.0) * (self.q + 1.0) / self.q
    }
}

/// Tabulates `(u, V_q(u))` pairs for plotting.
pub fn loss_curve_samples(q: LossParam, u_grid: &[f64]) -> Vec<(f64, f64)> {
    u_grid.iter().map(|&u| (u, q.vq(u))).collect()
}
