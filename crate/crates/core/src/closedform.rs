//! Exact trajectories for E = 2H > 0 and c = κω² ≠ 0.
//!
//! With x = κ + q² the radial motion obeys `x²ẋ² = 4E[(x − α)² − γ²]`, where
//!
//! ```text
//! α = ½(κ − c/E),   γ² = ¼(κ + c/E)² + C/E.
//! ```
//!
//! Writing `x = α + γ cosh X` with a signed phase X (X < 0 on the incoming
//! branch, X > 0 on the outgoing one) the time relation becomes
//!
//! ```text
//! 2√E (t − τ) = γ sinh X + α X,
//! ```
//!
//! which is smooth and strictly increasing in X because dt/dX = x/(2√E) > 0.
//! For |X| = arccosh((x − α)/γ) this is the familiar
//! `±2√E(t − τ) = √((x − α)² − γ²) + α·arccosh((x − α)/γ)`.
//!
//! Each squared coordinate Q_i = q_i² then follows
//! `Q_i = α_i + γ_i cosh(X + φ_i)` with α_i = −I_i/(2E) and γ_i² = α_i² + b_i/E.

use serde::{Deserialize, Serialize};

use crate::algebra::{casimir, extra_integral};
use crate::dynamics::{Scheme, Trajectory};
use crate::error::{Error, Result};
use crate::scalar::{dot, sq_norm};
use crate::system::{hamiltonian_h, PhasePoint, SystemParams};

/// Which half of the orbit a radius refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Branch {
    /// ẋ < 0, t < τ
    Incoming,
    /// ẋ > 0, t > τ
    Outgoing,
}

impl Branch {
    fn sign(self) -> f64 {
        match self {
            Branch::Incoming => -1.0,
            Branch::Outgoing => 1.0,
        }
    }
}

/// How q_i is recovered from the phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoordinateForm {
    /// q_i = sign_i·√Q_i. Used whenever Q_i stays positive (b_i > 0, or
    /// b_i = 0 with α_i > 0) and for the trivial Q_i ≡ 0 orbit.
    Root,
    /// b_i = 0 and α_i < 0: Q_i = 2|α_i| sinh²((X + φ_i)/2) touches zero and
    /// q_i = sign_i·√(2|α_i|)·sinh((X + φ_i)/2) crosses it; sign_i is the
    /// (constant) sign of p_i.
    HalfAngle,
}

/// Constants of one E > 0 orbit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitConstants {
    pub energy: f64,
    pub casimir: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub tau: f64,
    pub alpha_i: Vec<f64>,
    pub gamma_i: Vec<f64>,
    pub phi_i: Vec<f64>,
    pub signs: Vec<f64>,
    pub forms: Vec<CoordinateForm>,
    pub kappa: f64,
    pub c: f64,
}

/// Absolute residuals of the relations tying the orbit constants together.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompatibilityResiduals {
    /// |Σα_i + κ − α|
    pub alpha_sum: f64,
    /// |Σγ_i cosh φ_i − γ|
    pub gamma_cosh_sum: f64,
    /// |Σγ_i sinh φ_i|
    pub gamma_sinh_sum: f64,
    /// |γ² − ¼(κ + c/E)² − C/E|
    pub gamma_sq: f64,
    /// |E + c/(κ + 2Σα_i)|
    pub energy: f64,
}

impl CompatibilityResiduals {
    pub fn max(&self) -> f64 {
        [
            self.alpha_sum,
            self.gamma_cosh_sum,
            self.gamma_sinh_sum,
            self.gamma_sq,
            self.energy,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

/// Tolerance on (x₀ − α)² ≥ γ² before a state is declared inconsistent.
const TURNING_TOL: f64 = 1e-10;

/// Orbit constants of the trajectory through `s0` at time `t0`.
pub fn constants_from_state(params: &SystemParams, s0: &PhasePoint, t0: f64) -> Result<OrbitConstants> {
    params.ensure_physical()?;
    let energy = 2.0 * hamiltonian_h(params, s0)?;
    if !(energy > 0.0) {
        return Err(Error::UnsupportedEnergy { energy });
    }
    let c = params.c();
    if c == 0.0 {
        return Err(Error::UnsupportedCoupling);
    }
    let kappa = params.kappa();
    let cas = casimir(params, s0)?;
    let alpha = 0.5 * (kappa - c / energy);
    let gamma_sq = 0.25 * (kappa + c / energy).powi(2) + cas / energy;
    if !(gamma_sq > 0.0) {
        return Err(Error::InconsistentState(format!("gamma^2 = {gamma_sq} <= 0")));
    }
    let gamma = gamma_sq.sqrt();
    let sqrt_e = energy.sqrt();

    let x0 = kappa + sq_norm(&s0.q);
    let j0 = dot(&s0.p, &s0.q);
    // sinh X₀ = J₀/(γ√E) follows from ẋ = 2J₀/x and x = α + γ cosh X.
    let phase0 = (j0 / (gamma * sqrt_e)).asinh();
    let radial_gap = (x0 - alpha).powi(2) - gamma_sq;
    if radial_gap < -TURNING_TOL * gamma_sq.max(1.0) {
        return Err(Error::InconsistentState(format!(
            "(x0 - alpha)^2 - gamma^2 = {radial_gap:e} < 0"
        )));
    }
    let expected_x0 = alpha + gamma * phase0.cosh();
    if (expected_x0 - x0).abs() > 1e-8 * x0.max(1.0) {
        return Err(Error::InconsistentState(format!(
            "radius {x0} does not match alpha + gamma cosh X0 = {expected_x0}"
        )));
    }
    let tau = t0 - (gamma * phase0.sinh() + alpha * phase0) / (2.0 * sqrt_e);

    let n = params.n();
    let mut alpha_i = Vec::with_capacity(n);
    let mut gamma_i = Vec::with_capacity(n);
    let mut phi_i = Vec::with_capacity(n);
    let mut signs = Vec::with_capacity(n);
    let mut forms = Vec::with_capacity(n);
    for i in 0..n {
        let (qi, pi, bi) = (s0.q[i], s0.p[i], params.b()[i]);
        let ai = -extra_integral(params, s0, i + 1)? / (2.0 * energy);
        let gi = (ai * ai + bi / energy).sqrt();
        alpha_i.push(ai);
        gamma_i.push(gi);
        if gi == 0.0 {
            // Only the trivial Q_i ≡ 0 motion has a finite phase here.
            if qi != 0.0 || pi != 0.0 {
                return Err(Error::Unsupported(format!(
                    "coordinate {} has I = b = 0 with nonzero (q, p): exponential Q_i(X)",
                    i + 1
                )));
            }
            phi_i.push(0.0);
            signs.push(1.0);
            forms.push(CoordinateForm::Root);
            continue;
        }
        // sinh(X₀ + φ_i) = q_i p_i/(γ_i√E), from Q̇_i = 2q_i p_i/x.
        let shifted = (qi * pi / (gi * sqrt_e)).asinh();
        phi_i.push(shifted - phase0);
        if bi == 0.0 && ai < 0.0 {
            forms.push(CoordinateForm::HalfAngle);
            signs.push(if pi < 0.0 { -1.0 } else { 1.0 });
        } else {
            forms.push(CoordinateForm::Root);
            signs.push(if qi < 0.0 { -1.0 } else { 1.0 });
        }
    }

    Ok(OrbitConstants {
        energy,
        casimir: cas,
        alpha,
        gamma,
        tau,
        alpha_i,
        gamma_i,
        phi_i,
        signs,
        forms,
        kappa,
        c,
    })
}

impl OrbitConstants {
    pub fn dim(&self) -> usize {
        self.alpha_i.len()
    }

    /// Turning radius α + γ, the minimum of x along the orbit.
    pub fn turning_radius(&self) -> f64 {
        self.alpha + self.gamma
    }

    pub fn compatibility(&self) -> CompatibilityResiduals {
        let sum_alpha: f64 = self.alpha_i.iter().sum();
        let (mut cosh_sum, mut sinh_sum) = (0.0, 0.0);
        for (g, phi) in self.gamma_i.iter().zip(&self.phi_i) {
            if *g != 0.0 {
                cosh_sum += g * phi.cosh();
                sinh_sum += g * phi.sinh();
            }
        }
        let e = self.energy;
        CompatibilityResiduals {
            alpha_sum: (sum_alpha + self.kappa - self.alpha).abs(),
            gamma_cosh_sum: (cosh_sum - self.gamma).abs(),
            gamma_sinh_sum: sinh_sum.abs(),
            gamma_sq: (self.gamma * self.gamma
                - 0.25 * (self.kappa + self.c / e).powi(2)
                - self.casimir / e)
                .abs(),
            energy: (e + self.c / (self.kappa + 2.0 * sum_alpha)).abs(),
        }
    }

    /// E recomputed from {α_i} alone: −c/(κ + 2Σα_i).
    pub fn energy_from_alphas(&self) -> f64 {
        -self.c / (self.kappa + 2.0 * self.alpha_i.iter().sum::<f64>())
    }

    fn check_radius(&self, x: f64) -> Result<f64> {
        let turn = self.turning_radius();
        let u = (x - self.alpha) / self.gamma;
        if !x.is_finite() || x < turn - 1e-12 * turn.abs().max(1.0) {
            return Err(Error::Domain(format!(
                "radius x = {x} below turning radius {turn}"
            )));
        }
        Ok(u.max(1.0))
    }

    /// Signed phase X at radius `x` on `branch`.
    pub fn phase_of_radius(&self, x: f64, branch: Branch) -> Result<f64> {
        let u = self.check_radius(x)?;
        Ok(branch.sign() * u.acosh())
    }

    /// t(X) = τ + (γ sinh X + αX)/(2√E).
    pub fn time_of_phase(&self, phase: f64) -> f64 {
        self.tau + (self.gamma * phase.sinh() + self.alpha * phase) / (2.0 * self.energy.sqrt())
    }

    /// Inverse of [`OrbitConstants::time_of_phase`]: bracketed Newton with
    /// bisection safeguard.
    pub fn phase_of_time(&self, t: f64) -> f64 {
        let target = 2.0 * self.energy.sqrt() * (t - self.tau);
        if target == 0.0 {
            return 0.0;
        }
        let g = |x: f64| self.gamma * x.sinh() + self.alpha * x - target;
        // g is increasing with g' = x(X) ≥ κ, so the root has the sign of target.
        let (mut lo, mut hi) = if target > 0.0 { (0.0, 1.0) } else { (-1.0, 0.0) };
        if target > 0.0 {
            while g(hi) < 0.0 {
                lo = hi;
                hi *= 2.0;
            }
        } else {
            while g(lo) > 0.0 {
                hi = lo;
                lo *= 2.0;
            }
        }
        let tol = 1e-13 * target.abs().max(1.0);
        let mut x = 0.5 * (lo + hi);
        for _ in 0..200 {
            let gx = g(x);
            if gx.abs() <= tol {
                break;
            }
            if gx > 0.0 {
                hi = x;
            } else {
                lo = x;
            }
            let slope = self.gamma * x.cosh() + self.alpha;
            let newton = x - gx / slope;
            x = if newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            if hi - lo <= f64::EPSILON * x.abs().max(1.0) {
                break;
            }
        }
        x
    }

    /// Time at which the orbit passes radius `x` on `branch`.
    pub fn time_of_radius(&self, x: f64, branch: Branch) -> Result<f64> {
        let u = self.check_radius(x)?;
        let root = self.gamma * (u * u - 1.0).max(0.0).sqrt();
        let s = branch.sign();
        Ok(self.tau + s * (root + self.alpha * u.acosh()) / (2.0 * self.energy.sqrt()))
    }

    /// x(t); the branch is implied by sign(t − τ).
    pub fn radius_of_time(&self, t: f64) -> f64 {
        self.alpha + self.gamma * self.phase_of_time(t).cosh()
    }

    /// Q_i = α_i + γ_i cosh(X + φ_i) at phase X.
    pub fn squares_of_phase(&self, phase: f64) -> Vec<f64> {
        (0..self.dim())
            .map(|i| self.alpha_i[i] + self.gamma_i[i] * (phase + self.phi_i[i]).cosh())
            .collect()
    }

    /// The expanded form of Q_i(x):
    /// α_i + γ⁻¹γ_i cosh φ_i (x − α) ± γ_i sinh φ_i |1 − ((x − α)/γ)²|^{1/2},
    /// + on the outgoing branch.
    pub fn squares_of_radius_expanded(&self, x: f64, branch: Branch) -> Result<Vec<f64>> {
        let u = self.check_radius(x)?;
        let root = (1.0 - u * u).abs().sqrt();
        Ok((0..self.dim())
            .map(|i| {
                let (g, phi) = (self.gamma_i[i], self.phi_i[i]);
                self.alpha_i[i]
                    + g * phi.cosh() * (x - self.alpha) / self.gamma
                    + branch.sign() * g * phi.sinh() * root
            })
            .collect())
    }

    /// Positions at phase X.
    pub fn coords_of_phase(&self, phase: f64) -> Result<Vec<f64>> {
        let mut q = Vec::with_capacity(self.dim());
        for i in 0..self.dim() {
            let shifted = phase + self.phi_i[i];
            let qi = match self.forms[i] {
                CoordinateForm::HalfAngle => {
                    self.signs[i] * (2.0 * self.alpha_i[i].abs()).sqrt() * (0.5 * shifted).sinh()
                }
                CoordinateForm::Root => {
                    if self.gamma_i[i] == 0.0 {
                        0.0
                    } else {
                        let sq = self.alpha_i[i] + self.gamma_i[i] * shifted.cosh();
                        if sq < -1e-12 * self.gamma_i[i].max(1.0) {
                            return Err(Error::InconsistentState(format!(
                                "Q_{} = {sq:e} < 0",
                                i + 1
                            )));
                        }
                        self.signs[i] * sq.max(0.0).sqrt()
                    }
                }
            };
            q.push(qi);
        }
        Ok(q)
    }

    /// Momenta at phase X: p_i = x q̇_i = 2√E dq_i/dX.
    pub fn momenta_of_phase(&self, phase: f64) -> Result<Vec<f64>> {
        let sqrt_e = self.energy.sqrt();
        let mut p = Vec::with_capacity(self.dim());
        for i in 0..self.dim() {
            let shifted = phase + self.phi_i[i];
            let pi = match self.forms[i] {
                CoordinateForm::HalfAngle => {
                    self.signs[i] * (2.0 * self.alpha_i[i].abs() * self.energy).sqrt()
                        * (0.5 * shifted).cosh()
                }
                CoordinateForm::Root => {
                    if self.gamma_i[i] == 0.0 {
                        0.0
                    } else {
                        let sq = self.alpha_i[i] + self.gamma_i[i] * shifted.cosh();
                        if !(sq > 0.0) {
                            return Err(Error::InconsistentState(format!(
                                "Q_{} = {sq:e} <= 0 on a root-form coordinate",
                                i + 1
                            )));
                        }
                        self.signs[i] * sqrt_e * self.gamma_i[i] * shifted.sinh() / sq.sqrt()
                    }
                }
            };
            p.push(pi);
        }
        Ok(p)
    }

    /// Positions at radius `x` on `branch`.
    pub fn coords_of_radius(&self, x: f64, branch: Branch) -> Result<Vec<f64>> {
        self.coords_of_phase(self.phase_of_radius(x, branch)?)
    }

    /// Full phase point at time `t`.
    pub fn state_at_time(&self, t: f64) -> Result<PhasePoint> {
        let phase = self.phase_of_time(t);
        Ok(PhasePoint::new(
            self.coords_of_phase(phase)?,
            self.momenta_of_phase(phase)?,
        ))
    }

    /// dx/dt at radius `x`: ±2√(E[(x − α)² − γ²])/x.
    pub fn radial_velocity(&self, x: f64, branch: Branch) -> Result<f64> {
        let u = self.check_radius(x)?;
        let gap = self.gamma * self.gamma * (u * u - 1.0);
        Ok(branch.sign() * 2.0 * (self.energy * gap).sqrt() / x)
    }
}

/// Free functions mirroring the methods, for call sites that prefer them.
pub fn time_of_radius(oc: &OrbitConstants, x: f64, branch: Branch) -> Result<f64> {
    oc.time_of_radius(x, branch)
}

pub fn radius_of_time(oc: &OrbitConstants, t: f64) -> f64 {
    oc.radius_of_time(t)
}

pub fn coords_of_radius(oc: &OrbitConstants, x: f64, branch: Branch) -> Result<Vec<f64>> {
    oc.coords_of_radius(x, branch)
}

/// Closed-form states at `times`, for the orbit through `s0` at t = 0.
pub fn trajectory_closed_form(
    params: &SystemParams,
    s0: &PhasePoint,
    times: &[f64],
) -> Result<Trajectory> {
    let oc = constants_from_state(params, s0, 0.0)?;
    trajectory_from_constants(params, &oc, times)
}

pub fn trajectory_from_constants(
    params: &SystemParams,
    oc: &OrbitConstants,
    times: &[f64],
) -> Result<Trajectory> {
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidArgument("times must be strictly increasing".into()));
    }
    let states = times
        .iter()
        .map(|&t| oc.state_at_time(t))
        .collect::<Result<Vec<_>>>()?;
    Ok(Trajectory {
        times: times.to_vec(),
        states,
        params: params.clone(),
        scheme: Scheme::ClosedForm,
        step: if times.len() > 1 { times[1] - times[0] } else { 0.0 },
    })
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
    fn worked_constants() {
        let (params, s) = worked();
        let oc = constants_from_state(&params, &s, 0.0).unwrap();
        assert_eq!(oc.energy, 1.0);
        assert_eq!(oc.casimir, 8.0);
        assert_eq!(oc.alpha, 0.0);
        assert_eq!(oc.gamma, 3.0);
        assert_eq!(oc.tau, 0.0);
        assert_eq!(oc.alpha_i, vec![-0.5, -0.5]);
        // arccosh(3/√5) = ln √5
        let phi = 0.5 * 5f64.ln();
        assert!((oc.phi_i[0] - phi).abs() < 1e-14);
        assert!((oc.phi_i[1] + phi).abs() < 1e-14);
    }

    #[test]
    fn negative_energy_and_zero_coupling_rejected() {
        let params = SystemParams::new(1.0, 1.0, vec![0.0, 0.0]).unwrap();
        let s = PhasePoint::new(vec![1.0, 0.5], vec![0.0, 0.0]);
        assert!(matches!(
            constants_from_state(&params, &s, 0.0),
            Err(Error::UnsupportedEnergy { .. })
        ));
        let geodesic = SystemParams::new(1.0, 0.0, vec![1.0, 1.0]).unwrap();
        let s = PhasePoint::new(vec![1.0, 1.0], vec![1.0, -1.0]);
        assert_eq!(
            constants_from_state(&geodesic, &s, 0.0),
            Err(Error::UnsupportedCoupling)
        );
    }

    #[test]
    fn time_radius_worked_values() {
        let (params, s) = worked();
        let oc = constants_from_state(&params, &s, 0.0).unwrap();
        let expect = 27f64.sqrt() / 2.0;
        assert!((oc.time_of_radius(6.0, Branch::Outgoing).unwrap() - expect).abs() < 1e-14);
        assert!((oc.time_of_radius(6.0, Branch::Incoming).unwrap() + expect).abs() < 1e-14);
        assert_eq!(oc.time_of_radius(3.0, Branch::Incoming).unwrap(), 0.0);
        assert_eq!(oc.radius_of_time(0.0), 3.0);
        assert!((oc.radius_of_time(expect) - 6.0).abs() < 1e-10);
        assert!((oc.radius_of_time(-expect) - 6.0).abs() < 1e-10);
        assert!(oc.time_of_radius(2.9, Branch::Outgoing).is_err());
    }

    #[test]
    fn turning_point_recovers_state() {
        let (params, s) = worked();
        let oc = constants_from_state(&params, &s, 0.0).unwrap();
        let q = oc.coords_of_radius(3.0, Branch::Outgoing).unwrap();
        assert!((q[0] - 1.0).abs() < 1e-14 && (q[1] - 1.0).abs() < 1e-14);
        let st = oc.state_at_time(0.0).unwrap();
        assert!((st.p[0] - 1.0).abs() < 1e-14 && (st.p[1] + 1.0).abs() < 1e-14);
    }

    #[test]
    fn half_angle_coordinate_crosses_zero() {
        // b_2 = 0 with I_2 > 0: q_2 passes through the hyperplane q_2 = 0.
        let params = SystemParams::new(1.0, 1.0, vec![1.0, 0.0]).unwrap();
        let s = PhasePoint::new(vec![1.0, -0.5], vec![0.3, 1.5]);
        let oc = constants_from_state(&params, &s, 0.0).unwrap();
        assert_eq!(oc.forms[1], CoordinateForm::HalfAngle);
        let st = oc.state_at_time(0.0).unwrap();
        for (a, b) in st.to_vec().iter().zip(s.to_vec()) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
        let later = oc.state_at_time(3.0).unwrap();
        assert!(later.q[1] > 0.0);
    }
}
