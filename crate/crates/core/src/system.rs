//! System parameters, phase-space points and the Hamiltonian itself.
//!
//! Two normalisations of the same dynamics are exposed:
//!
//! * `𝓗 = (p² + ω²q² + Σ b_j q_j⁻²)/(κ + q²)` ([`hamiltonian_cal`]), and
//! * `H = (p² − c + Σ b_j q_j⁻²)/(2(κ + q²))` with `c = κω²` ([`hamiltonian_h`]),
//!
//! related by `𝓗 = 2H + ω²`. Equations of motion and all integrals are written
//! against `H`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{sq_norm, Scalar};

/// Dimension and physical constants of the system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    n: usize,
    kappa: f64,
    omega_sq: f64,
    b: Vec<f64>,
    c: f64,
}

impl SystemParams {
    /// Validated constructor: n ≥ 1, κ > 0, ω² ≥ 0, b_j ≥ 0.
    pub fn new(kappa: f64, omega_sq: f64, b: Vec<f64>) -> Result<Self> {
        let params = Self::with_signed_b(kappa, omega_sq, b)?;
        if let Some(j) = params.b.iter().position(|&bj| bj < 0.0) {
            return Err(Error::InvalidParams(format!(
                "b_{} = {} must be >= 0",
                j + 1,
                params.b[j]
            )));
        }
        Ok(params)
    }

    /// Like [`SystemParams::new`] but accepts negative b_j. The coalgebra
    /// realization is defined for any real b_j; dynamics entry points reject
    /// such parameters through [`SystemParams::ensure_physical`].
    pub fn with_signed_b(kappa: f64, omega_sq: f64, b: Vec<f64>) -> Result<Self> {
        if b.is_empty() {
            return Err(Error::InvalidParams("dimension n must be >= 1".into()));
        }
        if !(kappa.is_finite() && kappa > 0.0) {
            return Err(Error::InvalidParams(format!("kappa = {kappa} must be > 0")));
        }
        if !(omega_sq.is_finite() && omega_sq >= 0.0) {
            return Err(Error::InvalidParams(format!(
                "omega_sq = {omega_sq} must be >= 0"
            )));
        }
        if let Some(j) = b.iter().position(|bj| !bj.is_finite()) {
            return Err(Error::InvalidParams(format!("b_{} is not finite", j + 1)));
        }
        Ok(Self {
            n: b.len(),
            kappa,
            omega_sq,
            c: kappa * omega_sq,
            b,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn omega_sq(&self) -> f64 {
        self.omega_sq
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    /// c = κω².
    pub fn c(&self) -> f64 {
        self.c
    }

    /// Rejects negative b_j (allowed only for pure algebra checks).
    pub fn ensure_physical(&self) -> Result<()> {
        match self.b.iter().position(|&bj| bj < 0.0) {
            Some(j) => Err(Error::InvalidParams(format!(
                "b_{} = {} must be >= 0 for dynamics",
                j + 1,
                self.b[j]
            ))),
            None => Ok(()),
        }
    }

    /// Checks dimensions, finiteness, and the q_i ≠ 0 requirement for b_i ≠ 0.
    pub fn check_state(&self, s: &PhasePoint) -> Result<()> {
        for len in [s.q.len(), s.p.len()] {
            if len != self.n {
                return Err(Error::DimensionMismatch {
                    expected: self.n,
                    got: len,
                });
            }
        }
        if s.q.iter().chain(&s.p).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("state has non-finite entries".into()));
        }
        self.check_position(&s.q)
    }

    pub fn check_position(&self, q: &[f64]) -> Result<()> {
        if q.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: q.len(),
            });
        }
        match q
            .iter()
            .zip(&self.b)
            .position(|(&qi, &bi)| bi != 0.0 && qi == 0.0)
        {
            Some(index) => Err(Error::SingularState { index: index + 1 }),
            None => Ok(()),
        }
    }
}

/// A point (q, p) of the flat phase space ℝ²ⁿ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
}

impl PhasePoint {
    pub fn new(q: Vec<f64>, p: Vec<f64>) -> Self {
        Self { q, p }
    }

    pub fn dim(&self) -> usize {
        self.q.len()
    }

    /// Stacked coordinates (q_1..q_n, p_1..p_n).
    pub fn to_vec(&self) -> Vec<f64> {
        self.q.iter().chain(&self.p).copied().collect()
    }

    pub fn from_slice(z: &[f64]) -> Self {
        let n = z.len() / 2;
        Self {
            q: z[..n].to_vec(),
            p: z[n..].to_vec(),
        }
    }
}

/// Σ b_j q_j⁻², skipping b_j = 0 terms so that q_j = 0 stays admissible there.
pub fn centrifugal<T: Scalar>(b: &[f64], q: &[T]) -> T {
    b.iter()
        .zip(q)
        .filter(|(&bj, _)| bj != 0.0)
        .fold(T::zero(), |acc, (&bj, &qj)| acc + (qj * qj).recip() * bj)
}

/// 𝓗 evaluated on arbitrary scalars. No singularity check.
pub fn hamiltonian_cal_expr<T: Scalar>(params: &SystemParams, q: &[T], p: &[T]) -> T {
    let q2 = sq_norm(q);
    (sq_norm(p) + q2 * params.omega_sq + centrifugal(&params.b, q)) / (q2 + params.kappa)
}

/// H evaluated on arbitrary scalars. No singularity check.
pub fn hamiltonian_h_expr<T: Scalar>(params: &SystemParams, q: &[T], p: &[T]) -> T {
    let q2 = sq_norm(q);
    (sq_norm(p) - params.c + centrifugal(&params.b, q)) / ((q2 + params.kappa) * 2.0)
}

pub fn potential_expr<T: Scalar>(params: &SystemParams, q: &[T]) -> T {
    let q2 = sq_norm(q);
    (q2 * params.omega_sq + centrifugal(&params.b, q)) / (q2 + params.kappa)
}

/// Hamiltonian vector field of H on arbitrary scalars: (dq/dt, dp/dt).
pub fn eom_expr<T: Scalar>(params: &SystemParams, q: &[T], p: &[T]) -> (Vec<T>, Vec<T>) {
    let x = sq_norm(q) + params.kappa;
    let inv_x = x.recip();
    let h = hamiltonian_h_expr(params, q, p);
    let dq = p.iter().map(|&pi| pi * inv_x).collect();
    let dp = q
        .iter()
        .zip(&params.b)
        .map(|(&qi, &bi)| {
            let mut force = h * qi * 2.0;
            if bi != 0.0 {
                let inv = qi.recip();
                force = force + inv * inv * inv * bi;
            }
            force * inv_x
        })
        .collect();
    (dq, dp)
}

/// 𝓗(p, q) = (p² + ω²q² + Σ b_j q_j⁻²)/(κ + q²).
pub fn hamiltonian_cal(params: &SystemParams, s: &PhasePoint) -> Result<f64> {
    params.check_state(s)?;
    Ok(hamiltonian_cal_expr(params, &s.q, &s.p))
}

/// H(p, q) = (p² − c + Σ b_j q_j⁻²)/(2(κ + q²)).
pub fn hamiltonian_h(params: &SystemParams, s: &PhasePoint) -> Result<f64> {
    params.check_state(s)?;
    Ok(hamiltonian_h_expr(params, &s.q, &s.p))
}

/// V(q) = (ω²q² + Σ b_j q_j⁻²)/(κ + q²).
pub fn potential(params: &SystemParams, q: &[f64]) -> Result<f64> {
    params.check_position(q)?;
    Ok(potential_expr(params, q))
}

/// Right-hand side of Hamilton's equations for H.
pub fn eom_rhs(params: &SystemParams, s: &PhasePoint) -> Result<(Vec<f64>, Vec<f64>)> {
    params.check_state(s)?;
    Ok(eom_expr(params, &s.q, &s.p))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn worked() -> (SystemParams, PhasePoint) {
        (
            SystemParams::new(1.0, 1.0, vec![1.0, 1.0]).unwrap(),
            PhasePoint::new(vec![1.0, 1.0], vec![1.0, -1.0]),
        )
    }

    #[test]
    fn worked_state_values() {
        let (params, s) = worked();
        assert_eq!(hamiltonian_cal(&params, &s).unwrap(), 2.0);
        assert_eq!(hamiltonian_h(&params, &s).unwrap(), 0.5);
        assert!((potential(&params, &s.q).unwrap() - 4.0 / 3.0).abs() < 1e-15);
        let (dq, dp) = eom_rhs(&params, &s).unwrap();
        let third = 1.0 / 3.0;
        assert!((dq[0] - third).abs() < 1e-15 && (dq[1] + third).abs() < 1e-15);
        assert!(dp.iter().all(|v| (v - 2.0 * third).abs() < 1e-15));
    }

    #[test]
    fn zero_state() {
        let params = SystemParams::new(1.0, 0.0, vec![0.0, 0.0]).unwrap();
        let s = PhasePoint::new(vec![0.0, 0.0], vec![0.0, 0.0]);
        assert_eq!(hamiltonian_cal(&params, &s).unwrap(), 0.0);
        assert_eq!(hamiltonian_h(&params, &s).unwrap(), 0.0);
        assert_eq!(potential(&params, &s.q).unwrap(), 0.0);
    }

    #[test]
    fn negative_h_example() {
        let params = SystemParams::new(1.0, 1.0, vec![0.0, 0.0]).unwrap();
        let s = PhasePoint::new(vec![1.0, 0.0], vec![0.0, 0.0]);
        assert_eq!(hamiltonian_h(&params, &s).unwrap(), -0.25);
    }

    #[test]
    fn potential_tends_to_omega_sq() {
        let params = SystemParams::new(1.0, 1.0, vec![0.0; 3]).unwrap();
        let v = potential(&params, &[1e3, 0.0, 0.0]).unwrap();
        assert!((v - 1.0).abs() < 1e-5);
    }

    #[test]
    fn geodesic_rest_point() {
        let params = SystemParams::new(2.0, 0.0, vec![0.0; 3]).unwrap();
        let s = PhasePoint::new(vec![0.3, -1.0, 2.0], vec![0.0; 3]);
        let (dq, dp) = eom_rhs(&params, &s).unwrap();
        assert!(dq.iter().chain(&dp).all(|&v| v == 0.0));
    }

    #[test]
    fn singular_state_rejected() {
        let params = SystemParams::new(1.0, 1.0, vec![1.0, 0.0]).unwrap();
        let bad = PhasePoint::new(vec![0.0, 1.0], vec![1.0, 1.0]);
        assert_eq!(
            hamiltonian_h(&params, &bad),
            Err(Error::SingularState { index: 1 })
        );
        // b_2 = 0 makes q_2 = 0 admissible
        let ok = PhasePoint::new(vec![1.0, 0.0], vec![1.0, 1.0]);
        assert!(hamiltonian_h(&params, &ok).is_ok());
    }

    #[test]
    fn parameter_validation() {
        assert!(SystemParams::new(0.0, 1.0, vec![1.0]).is_err());
        assert!(SystemParams::new(1.0, -1.0, vec![1.0]).is_err());
        assert!(SystemParams::new(1.0, 1.0, vec![-1.0]).is_err());
        assert!(SystemParams::new(1.0, 1.0, vec![]).is_err());
        let signed = SystemParams::with_signed_b(1.0, 1.0, vec![-1.0]).unwrap();
        assert!(signed.ensure_physical().is_err());
        let p = SystemParams::new(2.5, 0.4, vec![1.0]).unwrap();
        assert_eq!(p.c(), 2.5 * 0.4);
    }
}
