//! Riemannian structure of `Mⁿ = (ℝⁿ, (κ + q²) dq²)` and the
//! Hamilton–Jacobi correspondence with the flat Smorodinsky–Winternitz system.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use twofloat::TwoFloat;

use crate::algebra::extra_integral;
use crate::dynamics::Trajectory;
use crate::error::{Error, Result};
use crate::scalar::{sq_norm, Dual, Scalar};
use crate::system::{centrifugal, hamiltonian_h, PhasePoint, SystemParams};

/// Conformal factor κ + q² of the metric.
pub fn conformal_factor(params: &SystemParams, q: &[f64]) -> f64 {
    params.kappa() + sq_norm(q)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSample {
    pub q: Vec<f64>,
    pub conformal_factor: f64,
    pub scalar_curvature: f64,
}

pub fn metric_sample(params: &SystemParams, q: &[f64]) -> MetricSample {
    MetricSample {
        q: q.to_vec(),
        conformal_factor: conformal_factor(params, q),
        scalar_curvature: scalar_curvature(params, q),
    }
}

/// R = −(n − 1)(3(n − 2)q² + 2κn)/(κ + q²)³, with n = `params.n()`.
pub fn scalar_curvature(params: &SystemParams, q: &[f64]) -> f64 {
    scalar_curvature_at_radius(params.n(), params.kappa(), sq_norm(q).sqrt())
}

/// Same formula, as a function of |q| only.
pub fn scalar_curvature_at_radius(n: usize, kappa: f64, r: f64) -> f64 {
    let n = n as f64;
    let r2 = r * r;
    -(n - 1.0) * (3.0 * (n - 2.0) * r2 + 2.0 * kappa * n) / (kappa + r2).powi(3)
}

/// Inner step for metric derivatives.
pub const ORACLE_METRIC_STEP: f64 = 1e-5;
/// Outer step for Christoffel derivatives. Larger than the inner one so the
/// rounding noise of the inner differences is not amplified past 1e-7.
pub const ORACLE_CHRISTOFFEL_STEP: f64 = 1e-4;
/// Largest dimension the oracle accepts.
pub const ORACLE_MAX_DIM: usize = 4;

/// Γ^a_{bc} stored as `gamma[a][(b, c)]`.
fn christoffel(metric: &dyn Fn(&[f64]) -> DMatrix<f64>, q: &[f64]) -> Result<Vec<DMatrix<f64>>> {
    let n = q.len();
    let h = ORACLE_METRIC_STEP;
    let g = metric(q);
    let ginv = g
        .try_inverse()
        .ok_or_else(|| Error::Domain("metric is singular".into()))?;
    let mut dg = Vec::with_capacity(n);
    let mut shifted = q.to_vec();
    for k in 0..n {
        shifted[k] = q[k] + h;
        let plus = metric(&shifted);
        shifted[k] = q[k] - h;
        let minus = metric(&shifted);
        shifted[k] = q[k];
        dg.push((plus - minus) / (2.0 * h));
    }
    let mut gamma = vec![DMatrix::zeros(n, n); n];
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                let mut acc = 0.0;
                for d in 0..n {
                    acc += ginv[(a, d)] * (dg[b][(d, c)] + dg[c][(d, b)] - dg[d][(b, c)]);
                }
                gamma[a][(b, c)] = 0.5 * acc;
            }
        }
    }
    Ok(gamma)
}

/// Scalar curvature of an arbitrary metric field from first principles:
/// Christoffel symbols and their derivatives by central differences, then
/// the Ricci contraction. Intended as a check, not a fast path.
pub fn curvature_oracle_with(
    metric: &dyn Fn(&[f64]) -> DMatrix<f64>,
    q: &[f64],
) -> Result<f64> {
    let n = q.len();
    if n == 0 || n > ORACLE_MAX_DIM {
        return Err(Error::InvalidArgument(format!(
            "curvature oracle supports 1 <= n <= {ORACLE_MAX_DIM}, got {n}"
        )));
    }
    let big_h = ORACLE_CHRISTOFFEL_STEP;
    let gamma = christoffel(metric, q)?;
    // d_gamma[m][a][(b, c)] = ∂_m Γ^a_{bc}
    let mut d_gamma = Vec::with_capacity(n);
    let mut shifted = q.to_vec();
    for m in 0..n {
        shifted[m] = q[m] + big_h;
        let plus = christoffel(metric, &shifted)?;
        shifted[m] = q[m] - big_h;
        let minus = christoffel(metric, &shifted)?;
        shifted[m] = q[m];
        d_gamma.push(
            plus.iter()
                .zip(&minus)
                .map(|(p, mi)| (p - mi) / (2.0 * big_h))
                .collect::<Vec<_>>(),
        );
    }
    // R_{sv} = ∂_r Γ^r_{vs} − ∂_v Γ^r_{rs} + Γ^r_{rl} Γ^l_{vs} − Γ^r_{vl} Γ^l_{rs}
    let mut ricci = DMatrix::zeros(n, n);
    for s in 0..n {
        for v in 0..n {
            let mut acc = 0.0;
            for r in 0..n {
                acc += d_gamma[r][r][(v, s)] - d_gamma[v][r][(r, s)];
                for l in 0..n {
                    acc += gamma[r][(r, l)] * gamma[l][(v, s)] - gamma[r][(v, l)] * gamma[l][(r, s)];
                }
            }
            ricci[(s, v)] = acc;
        }
    }
    let ginv = metric(q)
        .try_inverse()
        .ok_or_else(|| Error::Domain("metric is singular".into()))?;
    Ok(ginv.component_mul(&ricci).sum())
}

/// Finite-difference scalar curvature of (κ + q²)δ_ij.
pub fn curvature_oracle(params: &SystemParams, q: &[f64]) -> Result<f64> {
    let kappa = params.kappa();
    let metric = move |x: &[f64]| DMatrix::identity(x.len(), x.len()) * (kappa + sq_norm(x));
    curvature_oracle_with(&metric, q)
}

/// A function of the radius |q|, evaluable on any scalar type.
pub trait RadialFn {
    fn eval<T: Scalar>(&self, r: T) -> T;
}

/// v(r) = √(κ + r²)/r.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreenFunction {
    pub kappa: f64,
}

impl RadialFn for GreenFunction {
    fn eval<T: Scalar>(&self, r: T) -> T {
        (r * r + self.kappa).sqrt() / r
    }
}

/// Radial Laplace–Beltrami operator of M³:
///
/// ```text
/// Δf = (r²(κ + r²)^{3/2})⁻¹ d/dr( r² √(κ + r²) f′ )
///    = ( f″ + (2/r + r/(κ + r²)) f′ ) / (κ + r²)
/// ```
///
/// f′ and f″ come from second-order dual numbers over double-double
/// arithmetic: near the origin f″ and (2/r)f′ nearly cancel for the Green
/// function, and plain `f64` loses about ε·|f″| there.
pub fn laplace_beltrami_radial<F: RadialFn>(params: &SystemParams, f: &F, r: f64) -> Result<f64> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::Domain(format!("radius r = {r} must be > 0")));
    }
    let rr = TwoFloat::from(r);
    let seed = Dual::new(Dual::var(rr), Dual::constant(TwoFloat::from(1.0)));
    let val = f.eval(seed);
    let (d1, d2) = (val.re.eps, val.eps.eps);
    let g = rr * rr + params.kappa();
    let lap = (d2 + (TwoFloat::from(2.0) / rr + rr / g) * d1) / g;
    Ok(lap.value())
}

/// v(r) = √(κ + r²)/r, normalised with unit multiplicative constant.
pub fn green_function(params: &SystemParams, r: f64) -> Result<f64> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::Domain(format!("radius r = {r} must be > 0")));
    }
    Ok(GreenFunction {
        kappa: params.kappa(),
    }
    .eval(r))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntrinsicPotentials {
    pub kepler: f64,
    pub harmonic: f64,
}

/// V_Kepler = K√(κ + q²)/|q|.
pub fn kepler_potential(params: &SystemParams, k: f64, q: &[f64]) -> Result<f64> {
    Ok(k * green_function(params, sq_norm(q).sqrt())?)
}

/// V_Harm = Kq²/(κ + q²) (= K v(|q|)⁻² away from the origin).
pub fn harmonic_potential(params: &SystemParams, k: f64, q: &[f64]) -> f64 {
    let q2 = sq_norm(q);
    k * q2 / (params.kappa() + q2)
}

pub fn intrinsic_potentials(params: &SystemParams, k: f64, q: &[f64]) -> Result<IntrinsicPotentials> {
    Ok(IntrinsicPotentials {
        kepler: kepler_potential(params, k, q)?,
        harmonic: harmonic_potential(params, k, q),
    })
}

/// ‖p‖² on the cotangent bundle: p²/(κ + q²).
pub fn cotangent_norm(params: &SystemParams, p: &[f64], q: &[f64]) -> f64 {
    sq_norm(p) / conformal_factor(params, q)
}

/// 𝓗 split as ‖p‖² + V_Harm + (κ + q²)⁻¹Σ b_j q_j⁻², with V_Harm's
/// constant K = ω².
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HamiltonianDecomposition {
    pub kinetic: f64,
    pub harmonic: f64,
    pub centrifugal: f64,
}

impl HamiltonianDecomposition {
    pub fn total(&self) -> f64 {
        self.kinetic + self.harmonic + self.centrifugal
    }
}

pub fn hamiltonian_decomposition(params: &SystemParams, s: &PhasePoint) -> Result<HamiltonianDecomposition> {
    params.check_state(s)?;
    Ok(HamiltonianDecomposition {
        kinetic: cotangent_norm(params, &s.p, &s.q),
        harmonic: harmonic_potential(params, params.omega_sq(), &s.q),
        centrifugal: centrifugal(params.b(), &s.q) / conformal_factor(params, &s.q),
    })
}

/// Separation data of the HJ equation
/// `(∂W/∂q)² − Eq² + Σ b_j q_j⁻² = c + κE` in Cartesian coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwCorrespondence {
    pub energy: f64,
    /// Separation constants λ_i = I_i.
    pub lambda_i: Vec<f64>,
    /// c + κE
    pub constraint_value: f64,
    pub b: Vec<f64>,
}

impl SwCorrespondence {
    /// |Σλ_i − (c + κE)|
    pub fn constraint_residual(&self) -> f64 {
        (self.lambda_i.iter().sum::<f64>() - self.constraint_value).abs()
    }

    /// max_i |p_i² − (λ_i + E q_i² − b_i q_i⁻²)| at one state.
    pub fn separated_residual(&self, s: &PhasePoint) -> f64 {
        (0..self.lambda_i.len())
            .map(|i| {
                let (q, p, b) = (s.q[i], s.p[i], self.b[i]);
                let wall = if b != 0.0 { b / (q * q) } else { 0.0 };
                (p * p - (self.lambda_i[i] + self.energy * q * q - wall)).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Largest separated-relation residual over a trajectory.
    pub fn max_separated_residual(&self, traj: &Trajectory) -> f64 {
        traj.states
            .iter()
            .map(|s| self.separated_residual(s))
            .fold(0.0, f64::max)
    }
}

/// E = 2H(s0), λ_i = I_i(s0).
pub fn sw_hj_check(params: &SystemParams, s0: &PhasePoint) -> Result<SwCorrespondence> {
    let energy = 2.0 * hamiltonian_h(params, s0)?;
    let lambda_i = (1..=params.n())
        .map(|i| extra_integral(params, s0, i))
        .collect::<Result<Vec<_>>>()?;
    Ok(SwCorrespondence {
        energy,
        lambda_i,
        constraint_value: params.c() + params.kappa() * energy,
        b: params.b().to_vec(),
    })
}

/// Flat SW Hamiltonian with the energy as parameter: p² − Eq² + Σ b_j q_j⁻².
pub fn sw_hamiltonian(params: &SystemParams, energy: f64, s: &PhasePoint) -> Result<f64> {
    params.check_state(s)?;
    Ok(sq_norm(&s.p) - energy * sq_norm(&s.q) + centrifugal(params.b(), &s.q))
}
