//! Fixed-step time integration of Hamilton's equations for H, with
//! invariant-drift monitoring and checks of the radial sl(2) equations.
//!
//! H is not separable (the kinetic term carries the factor 1/(κ + q²)), so
//! the symplectic scheme is the implicit midpoint rule
//! `z' = z + h·X_H((z + z')/2)`. Classical RK4 is available as a
//! non-symplectic cross-check.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poisson::PhaseFunction;
use crate::scalar::{dot, sq_norm, Dual};
use crate::system::{eom_expr, PhasePoint, SystemParams};

/// Residual target for the implicit midpoint solve (relative to max(1, |z|∞)).
pub const SOLVE_TOL: f64 = 1e-13;
/// Fixed-point iterations attempted before the Newton fallback.
pub const MAX_FIXED_POINT_ITERS: usize = 50;
const MAX_NEWTON_ITERS: usize = 30;
/// Integration halts when |q_i| drops below this for some b_i > 0.
pub const WALL_GUARD: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    ImplicitMidpoint,
    Rk4Oracle,
    ClosedForm,
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::ImplicitMidpoint => "implicit-midpoint",
            Scheme::Rk4Oracle => "rk4-oracle",
            Scheme::ClosedForm => "closed-form",
        }
    }

    /// Relative drift below which the integrals count as conserved.
    pub fn drift_bound(&self) -> f64 {
        match self {
            Scheme::ImplicitMidpoint => 1e-8,
            Scheme::Rk4Oracle => 1e-6,
            Scheme::ClosedForm => 1e-9,
        }
    }
}

/// Time series of phase points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<PhasePoint>,
    pub params: SystemParams,
    pub scheme: Scheme,
    /// Nominal step; for closed-form trajectories the first grid spacing.
    pub step: f64,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<&PhasePoint> {
        self.states.last()
    }
}

fn field(params: &SystemParams, z: &[f64]) -> Vec<f64> {
    let n = params.n();
    let (dq, dp) = eom_expr(params, &z[..n], &z[n..]);
    dq.into_iter().chain(dp).collect()
}

/// Jacobian of the Hamiltonian vector field, column by column with duals.
fn field_jacobian(params: &SystemParams, z: &[f64]) -> DMatrix<f64> {
    let n = params.n();
    let dim = 2 * n;
    let mut zd: Vec<Dual<f64>> = z.iter().map(|&v| Dual::constant(v)).collect();
    let mut jac = DMatrix::zeros(dim, dim);
    for k in 0..dim {
        zd[k].eps = 1.0;
        let (dq, dp) = eom_expr(params, &zd[..n], &zd[n..]);
        for (r, v) in dq.iter().chain(&dp).enumerate() {
            jac[(r, k)] = v.eps;
        }
        zd[k].eps = 0.0;
    }
    jac
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m: f64, x| m.max(x.abs()))
}

fn midpoint_residual(params: &SystemParams, z0: &[f64], z1: &[f64], h: f64) -> Vec<f64> {
    let mid: Vec<f64> = z0.iter().zip(z1).map(|(a, b)| 0.5 * (a + b)).collect();
    let x = field(params, &mid);
    (0..z0.len()).map(|k| z1[k] - z0[k] - h * x[k]).collect()
}

fn guard(params: &SystemParams, s: &PhasePoint, time: f64) -> Result<()> {
    for (i, (&qi, &bi)) in s.q.iter().zip(params.b()).enumerate() {
        if bi > 0.0 && qi.abs() < WALL_GUARD {
            return Err(Error::SingularityCrossing {
                time,
                index: i + 1,
                value: qi,
            });
        }
    }
    Ok(())
}

/// One implicit-midpoint step of (signed) length `h`.
///
/// The stage equation is solved by fixed-point iteration; if that does not
/// reach the residual target within [`MAX_FIXED_POINT_ITERS`] sweeps a damped
/// Newton solve takes over. A negative `h` steps backwards in time.
pub fn step_implicit_midpoint(params: &SystemParams, s: &PhasePoint, h: f64) -> Result<PhasePoint> {
    params.check_state(s)?;
    if !(h.is_finite() && h != 0.0) {
        return Err(Error::InvalidArgument(format!("step h = {h} must be nonzero")));
    }
    let z0 = s.to_vec();
    let tol = SOLVE_TOL * inf_norm(&z0).max(1.0);

    let x0 = field(params, &z0);
    let mut z1: Vec<f64> = z0.iter().zip(&x0).map(|(z, x)| z + h * x).collect();
    let mut converged = false;
    for _ in 0..MAX_FIXED_POINT_ITERS {
        let mid: Vec<f64> = z0.iter().zip(&z1).map(|(a, b)| 0.5 * (a + b)).collect();
        let x = field(params, &mid);
        let next: Vec<f64> = z0.iter().zip(&x).map(|(z, v)| z + h * v).collect();
        let change = next
            .iter()
            .zip(&z1)
            .fold(0.0, |m: f64, (a, b)| m.max((a - b).abs()));
        z1 = next;
        if !change.is_finite() {
            break;
        }
        if change <= tol {
            converged = true;
            break;
        }
    }

    if !converged {
        z1 = newton_midpoint(params, &z0, h, tol)?;
    }
    let out = PhasePoint::from_slice(&z1);
    guard(params, &out, h)?;
    Ok(out)
}

fn newton_midpoint(params: &SystemParams, z0: &[f64], h: f64, tol: f64) -> Result<Vec<f64>> {
    let dim = z0.len();
    let x0 = field(params, z0);
    let mut z1: Vec<f64> = z0.iter().zip(&x0).map(|(z, x)| z + h * x).collect();
    let mut res = midpoint_residual(params, z0, &z1, h);
    let mut norm = inf_norm(&res);
    for _ in 0..MAX_NEWTON_ITERS {
        if norm <= tol {
            return Ok(z1);
        }
        let mid: Vec<f64> = z0.iter().zip(&z1).map(|(a, b)| 0.5 * (a + b)).collect();
        let jac = DMatrix::identity(dim, dim) - field_jacobian(params, &mid) * (0.5 * h);
        let rhs = -DVector::from_vec(res.clone());
        let Some(delta) = jac.lu().solve(&rhs) else {
            break;
        };
        let mut lambda = 1.0;
        let mut accepted = false;
        while lambda > 1e-6 {
            let trial: Vec<f64> = z1.iter().zip(delta.iter()).map(|(z, d)| z + lambda * d).collect();
            let r = midpoint_residual(params, z0, &trial, h);
            let rn = inf_norm(&r);
            if rn.is_finite() && rn < norm {
                z1 = trial;
                res = r;
                norm = rn;
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if norm <= tol {
        Ok(z1)
    } else {
        Err(Error::NonConvergence { residual: norm })
    }
}

/// One classical RK4 step.
pub fn step_rk4(params: &SystemParams, s: &PhasePoint, h: f64) -> Result<PhasePoint> {
    params.check_state(s)?;
    let z = s.to_vec();
    let axpy = |a: &[f64], k: &[f64], c: f64| -> Vec<f64> {
        a.iter().zip(k).map(|(x, y)| x + c * y).collect()
    };
    let k1 = field(params, &z);
    let k2 = field(params, &axpy(&z, &k1, 0.5 * h));
    let k3 = field(params, &axpy(&z, &k2, 0.5 * h));
    let k4 = field(params, &axpy(&z, &k3, h));
    let out: Vec<f64> = (0..z.len())
        .map(|i| z[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect();
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonConvergence { residual: f64::NAN });
    }
    let out = PhasePoint::from_slice(&out);
    guard(params, &out, h)?;
    Ok(out)
}

/// Integrates from t = 0 to `t_final` with fixed step `h`, sampling at every
/// multiple of `h`; a shorter final step lands exactly on `t_final`.
pub fn integrate(
    params: &SystemParams,
    s0: &PhasePoint,
    t_final: f64,
    h: f64,
    scheme: Scheme,
) -> Result<Trajectory> {
    params.ensure_physical()?;
    params.check_state(s0)?;
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::InvalidArgument(format!("step h = {h} must be > 0")));
    }
    if !(t_final.is_finite() && t_final >= 0.0) {
        return Err(Error::InvalidArgument(format!("t_final = {t_final} must be >= 0")));
    }
    let stepper: fn(&SystemParams, &PhasePoint, f64) -> Result<PhasePoint> = match scheme {
        Scheme::ImplicitMidpoint => step_implicit_midpoint,
        Scheme::Rk4Oracle => step_rk4,
        Scheme::ClosedForm => {
            return Err(Error::InvalidArgument(
                "closed-form trajectories come from closedform::trajectory_closed_form".into(),
            ))
        }
    };
    guard(params, s0, 0.0)?;

    let ratio = t_final / h;
    let full_steps = if (ratio - ratio.round()).abs() < 1e-9 * ratio.max(1.0) {
        ratio.round() as usize
    } else {
        ratio.floor() as usize
    };
    let mut times = Vec::with_capacity(full_steps + 2);
    let mut states = Vec::with_capacity(full_steps + 2);
    times.push(0.0);
    states.push(s0.clone());
    let mut current = s0.clone();
    let relocate = |e: Error, t: f64| match e {
        Error::SingularityCrossing { time, index, value } => Error::SingularityCrossing {
            time: t + time,
            index,
            value,
        },
        other => other,
    };
    for k in 1..=full_steps {
        let t_prev = (k - 1) as f64 * h;
        current = stepper(params, &current, h).map_err(|e| relocate(e, t_prev))?;
        times.push(k as f64 * h);
        states.push(current.clone());
    }
    let t_last = full_steps as f64 * h;
    let rest = t_final - t_last;
    if rest > 1e-9 * h {
        current = stepper(params, &current, rest).map_err(|e| relocate(e, t_last))?;
        times.push(t_final);
        states.push(current);
    }
    Ok(Trajectory {
        times,
        states,
        params: params.clone(),
        scheme,
        step: h,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftEntry {
    pub name: String,
    pub initial: f64,
    /// max_t |F(t) − F(0)| / max(1, |F(0)|)
    pub max_relative_drift: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftReport {
    pub scheme: Scheme,
    pub entries: Vec<DriftEntry>,
    pub bound: f64,
    pub pass: bool,
}

impl DriftReport {
    pub fn max_drift(&self) -> f64 {
        self.entries
            .iter()
            .map(|e| e.max_relative_drift)
            .fold(0.0, f64::max)
    }
}

/// Drift of each integral along `traj`, judged against the scheme's bound.
pub fn drift_report(traj: &Trajectory, integrals: &[&dyn PhaseFunction]) -> DriftReport {
    drift_report_with_bound(traj, integrals, traj.scheme.drift_bound())
}

pub fn drift_report_with_bound(
    traj: &Trajectory,
    integrals: &[&dyn PhaseFunction],
    bound: f64,
) -> DriftReport {
    let entries: Vec<DriftEntry> = integrals
        .iter()
        .map(|f| {
            let initial = traj.states.first().map(|s| f.value_at(s)).unwrap_or(0.0);
            let scale = initial.abs().max(1.0);
            let mut drift: f64 = 0.0;
            for s in &traj.states {
                let d = (f.value_at(s) - initial).abs() / scale;
                if d.is_nan() || d > drift {
                    drift = d;
                }
            }
            DriftEntry {
                name: f.name(),
                initial,
                max_relative_drift: drift,
            }
        })
        .collect();
    let pass = entries.iter().all(|e| e.max_relative_drift < bound);
    DriftReport {
        scheme: traj.scheme,
        entries,
        bound,
        pass,
    }
}

/// Radial observables at one sample: x = κ + J₋, J₀, J₊, E = 2H.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialSample {
    pub t: f64,
    pub x: f64,
    pub j_zero: f64,
    pub j_plus: f64,
    pub energy: f64,
    pub casimir: f64,
}

/// Residuals of the radial sl(2) equations along a trajectory.
///
/// Derivative residuals (`dx`, `dj_zero`, `dj_plus`, `radial_equation`) are
/// evaluated at interior samples with three-point centered differences;
/// `casimir_identity` is evaluated at every sample with ẋ = 2J₀/x.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialReport {
    pub samples: Vec<RadialSample>,
    /// |ẋ − 2J₀/x|
    pub dx: Vec<f64>,
    /// |J̇₀ − (J₊ + E(x − κ))/x|
    pub dj_zero: Vec<f64>,
    /// |J̇₊ − 2EJ₀/x|
    pub dj_plus: Vec<f64>,
    /// |x²ẋ² − 4(Ex² + (c − Eκ)x − cκ − C)|, which for E > 0 is
    /// |x²ẋ² − 4E((x − α)² − γ²)|.
    pub radial_equation: Vec<f64>,
    /// |C − (−¼x²ẋ² + Ex² + (c − Eκ)x − cκ)|
    pub casimir_identity: Vec<f64>,
}

fn max_of(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m: f64, &x| if x.is_nan() { f64::NAN } else { m.max(x) })
}

impl RadialReport {
    pub fn max_dx(&self) -> f64 {
        max_of(&self.dx)
    }
    pub fn max_dj_zero(&self) -> f64 {
        max_of(&self.dj_zero)
    }
    pub fn max_dj_plus(&self) -> f64 {
        max_of(&self.dj_plus)
    }
    pub fn max_radial_equation(&self) -> f64 {
        max_of(&self.radial_equation)
    }
    pub fn max_casimir_identity(&self) -> f64 {
        max_of(&self.casimir_identity)
    }
    /// Largest of the four derivative residuals.
    pub fn max_derivative_residual(&self) -> f64 {
        [
            self.max_dx(),
            self.max_dj_zero(),
            self.max_dj_plus(),
            self.max_radial_equation(),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

/// Three-point derivative at an interior node of a possibly uneven grid.
fn centered(t: [f64; 3], f: [f64; 3]) -> f64 {
    let h1 = t[1] - t[0];
    let h2 = t[2] - t[1];
    -h2 / (h1 * (h1 + h2)) * f[0] + (h2 - h1) / (h1 * h2) * f[1] + h1 / (h2 * (h1 + h2)) * f[2]
}

pub fn radial_observables(traj: &Trajectory) -> Result<RadialReport> {
    let len = traj.len();
    if len < 3 {
        return Err(Error::TrajectoryTooShort(len));
    }
    let params = &traj.params;
    let kappa = params.kappa();
    let c = params.c();
    let samples: Vec<RadialSample> = traj
        .times
        .iter()
        .zip(&traj.states)
        .map(|(&t, s)| {
            let jm = sq_norm(&s.q);
            let j0 = dot(&s.p, &s.q);
            let jp = sq_norm(&s.p) + crate::system::centrifugal(params.b(), &s.q);
            let x = kappa + jm;
            RadialSample {
                t,
                x,
                j_zero: j0,
                j_plus: jp,
                energy: (jp - c) / x,
                casimir: jm * jp - j0 * j0,
            }
        })
        .collect();

    let casimir_identity = samples
        .iter()
        .map(|r| {
            let xdot = 2.0 * r.j_zero / r.x;
            let rhs = -0.25 * r.x * r.x * xdot * xdot + r.energy * r.x * r.x
                + (c - r.energy * kappa) * r.x
                - c * kappa;
            (r.casimir - rhs).abs()
        })
        .collect();

    let mut dx = Vec::with_capacity(len - 2);
    let mut dj_zero = Vec::with_capacity(len - 2);
    let mut dj_plus = Vec::with_capacity(len - 2);
    let mut radial_equation = Vec::with_capacity(len - 2);
    for k in 1..len - 1 {
        let (a, m, b) = (&samples[k - 1], &samples[k], &samples[k + 1]);
        let t = [a.t, m.t, b.t];
        let xdot = centered(t, [a.x, m.x, b.x]);
        let j0dot = centered(t, [a.j_zero, m.j_zero, b.j_zero]);
        let jpdot = centered(t, [a.j_plus, m.j_plus, b.j_plus]);
        let e = m.energy;
        dx.push((xdot - 2.0 * m.j_zero / m.x).abs());
        dj_zero.push((j0dot - (m.j_plus + e * (m.x - kappa)) / m.x).abs());
        dj_plus.push((jpdot - 2.0 * e * m.j_zero / m.x).abs());
        let quartic = e * m.x * m.x + (c - e * kappa) * m.x - c * kappa - m.casimir;
        radial_equation.push((m.x * m.x * xdot * xdot - 4.0 * quartic).abs());
    }

    Ok(RadialReport {
        samples,
        dx,
        dj_zero,
        dj_plus,
        radial_equation,
        casimir_identity,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{IntegralKind, Observable};
    use crate::poisson::Constant;

    fn worked() -> (SystemParams, PhasePoint) {
        (
            SystemParams::new(1.0, 1.0, vec![1.0, 1.0]).unwrap(),
            PhasePoint::new(vec![1.0, 1.0], vec![1.0, -1.0]),
        )
    }

    fn dist(a: &PhasePoint, b: &PhasePoint) -> f64 {
        inf_norm(
            &a.to_vec()
                .iter()
                .zip(b.to_vec())
                .map(|(x, y)| x - y)
                .collect::<Vec<_>>(),
        )
    }

    #[test]
    fn rest_point_is_fixed() {
        let params = SystemParams::new(1.0, 0.0, vec![0.0, 0.0]).unwrap();
        let s = PhasePoint::new(vec![0.4, -1.1], vec![0.0, 0.0]);
        assert_eq!(step_implicit_midpoint(&params, &s, 0.1).unwrap(), s);
    }

    #[test]
    fn step_is_time_symmetric() {
        let (params, s) = worked();
        let fwd = step_implicit_midpoint(&params, &s, 0.01).unwrap();
        let back = step_implicit_midpoint(&params, &fwd, -0.01).unwrap();
        assert!(dist(&back, &s) < 1e-12);
    }

    #[test]
    fn local_error_is_third_order() {
        let (params, s) = worked();
        let gap = |h: f64| {
            let one = step_implicit_midpoint(&params, &s, h).unwrap();
            let half = step_implicit_midpoint(&params, &s, h / 2.0).unwrap();
            let two = step_implicit_midpoint(&params, &half, h / 2.0).unwrap();
            dist(&one, &two)
        };
        let ratio = gap(0.02) / gap(0.01);
        assert!((ratio - 8.0).abs() < 0.5, "ratio = {ratio}");
    }

    #[test]
    fn newton_fallback_solves_large_steps() {
        let params = SystemParams::new(0.2, 3.0, vec![0.5, 0.5]).unwrap();
        let s = PhasePoint::new(vec![0.3, 0.4], vec![1.5, -1.0]);
        let z0 = s.to_vec();
        let out = newton_midpoint(&params, &z0, 0.05, 1e-13).unwrap();
        let res = midpoint_residual(&params, &z0, &out, 0.05);
        assert!(inf_norm(&res) <= 1e-13);
    }

    #[test]
    fn row_count_and_partial_step() {
        let (params, s) = worked();
        let traj = integrate(&params, &s, 1.0, 0.01, Scheme::ImplicitMidpoint).unwrap();
        assert_eq!(traj.len(), 101);
        assert_eq!(*traj.times.last().unwrap(), 1.0);
        let traj = integrate(&params, &s, 0.105, 0.01, Scheme::Rk4Oracle).unwrap();
        assert_eq!(traj.len(), 12);
        assert!((traj.times[11] - 0.105).abs() < 1e-15);
    }

    #[test]
    fn radius_leaves_turning_point() {
        let (params, s) = worked();
        let traj = integrate(&params, &s, 0.5, 0.01, Scheme::ImplicitMidpoint).unwrap();
        let rep = radial_observables(&traj).unwrap();
        assert_eq!(rep.samples[0].j_zero, 0.0);
        assert!(rep.samples.windows(2).all(|w| w[1].x > w[0].x));
        // C = −¼x²ẋ² + Ex² + (c − Eκ)x − cκ at t = 0: 8 = 0 + 9 + 0 − 1
        assert_eq!(rep.casimir_identity[0], 0.0);
    }

    #[test]
    fn constant_has_zero_drift() {
        let (params, s) = worked();
        let traj = integrate(&params, &s, 0.1, 0.01, Scheme::ImplicitMidpoint).unwrap();
        let rep = drift_report(&traj, &[&Constant(4.0)]);
        assert_eq!(rep.entries[0].max_relative_drift, 0.0);
        assert!(rep.pass);
    }

    #[test]
    fn short_trajectory_rejected() {
        let (params, s) = worked();
        let traj = integrate(&params, &s, 0.01, 0.01, Scheme::ImplicitMidpoint).unwrap();
        assert_eq!(radial_observables(&traj), Err(Error::TrajectoryTooShort(2)));
    }

    #[test]
    fn rejects_signed_b_and_bad_steps() {
        let signed = SystemParams::with_signed_b(1.0, 1.0, vec![-1.0, 1.0]).unwrap();
        let s = PhasePoint::new(vec![1.0, 1.0], vec![0.0, 0.0]);
        assert!(integrate(&signed, &s, 1.0, 0.1, Scheme::ImplicitMidpoint).is_err());
        let (params, s) = worked();
        assert!(integrate(&params, &s, 1.0, 0.0, Scheme::ImplicitMidpoint).is_err());
        assert!(integrate(&params, &s, 1.0, 0.1, Scheme::ClosedForm).is_err());
    }

    #[test]
    fn guard_trips_near_wall() {
        let params = SystemParams::new(1.0, 1.0, vec![1e-3, 0.0]).unwrap();
        let s = PhasePoint::new(vec![5e-5, 1.0], vec![0.0, 0.0]);
        assert!(matches!(
            integrate(&params, &s, 1.0, 0.1, Scheme::ImplicitMidpoint),
            Err(Error::SingularityCrossing { index: 1, .. })
        ));
    }

    #[test]
    fn energy_error_is_second_order() {
        let (params, s) = worked();
        let h = Observable::new(&params, IntegralKind::Hamiltonian);
        let drift = |step: f64| {
            let traj = integrate(&params, &s, 2.0, step, Scheme::ImplicitMidpoint).unwrap();
            drift_report(&traj, &[&h]).max_drift()
        };
        let ratio = drift(2e-3) / drift(1e-3);
        assert!((ratio - 4.0).abs() < 0.1, "ratio = {ratio}");
    }
}
