//! Gradient engine, canonical Poisson bracket, involution reports and
//! functional-independence rank analysis.
//!
//! Gradients are computed by forward-mode dual numbers, one seeded pass per
//! phase-space coordinate. A central finite-difference gradient is kept as an
//! independent cross-check.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampling::StateSampler;
use crate::scalar::{Dual, Scalar};
use crate::system::{PhasePoint, SystemParams};

/// Minimum |q_i| at which derivatives are evaluated when q_i is singular.
pub const SINGULARITY_GUARD: f64 = 1e-6;

/// Default relative singular-value cutoff for [`independence_rank`].
pub const DEFAULT_RANK_TOL: f64 = 1e-8;

/// A phase-space function written once for every [`Scalar`].
pub trait PhaseExpr: Send + Sync {
    fn label(&self) -> String;

    fn eval<T: Scalar>(&self, q: &[T], p: &[T]) -> T;

    /// 0-based coordinates i whose vanishing makes the function singular.
    fn singular_coords(&self) -> Vec<usize> {
        Vec::new()
    }
}

/// Object-safe view of a [`PhaseExpr`], so heterogeneous families can be
/// collected in one slice.
pub trait PhaseFunction: Send + Sync {
    fn name(&self) -> String;
    fn value(&self, q: &[f64], p: &[f64]) -> f64;
    fn value_dual(&self, q: &[Dual<f64>], p: &[Dual<f64>]) -> Dual<f64>;
    fn singular_set(&self) -> Vec<usize>;

    fn value_at(&self, s: &PhasePoint) -> f64 {
        self.value(&s.q, &s.p)
    }
}

impl<E: PhaseExpr> PhaseFunction for E {
    fn name(&self) -> String {
        self.label()
    }
    fn value(&self, q: &[f64], p: &[f64]) -> f64 {
        self.eval(q, p)
    }
    fn value_dual(&self, q: &[Dual<f64>], p: &[Dual<f64>]) -> Dual<f64> {
        self.eval(q, p)
    }
    fn singular_set(&self) -> Vec<usize> {
        self.singular_coords()
    }
}

/// Canonical coordinate functions q_i and p_i (0-based index).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Coordinate {
    Q(usize),
    P(usize),
}

impl PhaseExpr for Coordinate {
    fn label(&self) -> String {
        match self {
            Coordinate::Q(i) => format!("q_{}", i + 1),
            Coordinate::P(i) => format!("p_{}", i + 1),
        }
    }
    fn eval<T: Scalar>(&self, q: &[T], p: &[T]) -> T {
        match *self {
            Coordinate::Q(i) => q[i],
            Coordinate::P(i) => p[i],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constant(pub f64);

impl PhaseExpr for Constant {
    fn label(&self) -> String {
        format!("{}", self.0)
    }
    fn eval<T: Scalar>(&self, _q: &[T], _p: &[T]) -> T {
        T::cst(self.0)
    }
}

/// `factor · f`.
#[derive(Debug, Clone)]
pub struct Scaled<F>(pub f64, pub F);

impl<F: PhaseExpr> PhaseExpr for Scaled<F> {
    fn label(&self) -> String {
        format!("{}*{}", self.0, self.1.label())
    }
    fn eval<T: Scalar>(&self, q: &[T], p: &[T]) -> T {
        self.1.eval(q, p) * self.0
    }
    fn singular_coords(&self) -> Vec<usize> {
        self.1.singular_coords()
    }
}

/// The bracket {f, g} as a phase-space function in its own right; its
/// gradient (needed for Jacobi-identity checks) comes from nested duals.
#[derive(Debug, Clone)]
pub struct Bracket<F, G>(pub F, pub G);

impl<F: PhaseExpr, G: PhaseExpr> PhaseExpr for Bracket<F, G> {
    fn label(&self) -> String {
        format!("{{{},{}}}", self.0.label(), self.1.label())
    }

    fn eval<T: Scalar>(&self, q: &[T], p: &[T]) -> T {
        let gf = gradient_generic(&self.0, q, p);
        let gg = gradient_generic(&self.1, q, p);
        bracket_from_gradients(&gf, &gg)
    }

    fn singular_coords(&self) -> Vec<usize> {
        let mut idx = self.0.singular_coords();
        idx.extend(self.1.singular_coords());
        idx.sort_unstable();
        idx.dedup();
        idx
    }
}

fn gradient_generic<F: PhaseExpr, T: Scalar>(f: &F, q: &[T], p: &[T]) -> Vec<T> {
    let n = q.len();
    let mut qd: Vec<Dual<T>> = q.iter().map(|&v| Dual::constant(v)).collect();
    let mut pd: Vec<Dual<T>> = p.iter().map(|&v| Dual::constant(v)).collect();
    let mut grad = Vec::with_capacity(2 * n);
    for k in 0..2 * n {
        let slot = if k < n { &mut qd[k] } else { &mut pd[k - n] };
        slot.eps = T::cst(1.0);
        grad.push(f.eval(&qd, &pd).eps);
        let slot = if k < n { &mut qd[k] } else { &mut pd[k - n] };
        slot.eps = T::zero();
    }
    grad
}

fn bracket_from_gradients<T: Scalar>(gf: &[T], gg: &[T]) -> T {
    let n = gf.len() / 2;
    (0..n).fold(T::zero(), |acc, i| {
        acc + gf[i] * gg[n + i] - gf[n + i] * gg[i]
    })
}

fn check_proximity(f: &dyn PhaseFunction, s: &PhasePoint) -> Result<()> {
    for i in f.singular_set() {
        let v = s.q[i];
        if v.abs() < SINGULARITY_GUARD {
            return Err(Error::SingularityProximity {
                index: i + 1,
                value: v,
            });
        }
    }
    Ok(())
}

/// Gradient (∂f/∂q, ∂f/∂p) by forward-mode dual numbers.
pub fn gradient(f: &dyn PhaseFunction, s: &PhasePoint) -> Result<Vec<f64>> {
    check_proximity(f, s)?;
    let n = s.dim();
    let mut qd: Vec<Dual<f64>> = s.q.iter().map(|&v| Dual::constant(v)).collect();
    let mut pd: Vec<Dual<f64>> = s.p.iter().map(|&v| Dual::constant(v)).collect();
    let mut grad = Vec::with_capacity(2 * n);
    for k in 0..2 * n {
        if k < n {
            qd[k].eps = 1.0;
        } else {
            pd[k - n].eps = 1.0;
        }
        grad.push(f.value_dual(&qd, &pd).eps);
        if k < n {
            qd[k].eps = 0.0;
        } else {
            pd[k - n].eps = 0.0;
        }
    }
    Ok(grad)
}

/// Central finite-difference gradient with step ε^(1/3)·max(1, |z_k|).
pub fn gradient_fd(f: &dyn PhaseFunction, s: &PhasePoint) -> Result<Vec<f64>> {
    check_proximity(f, s)?;
    let n = s.dim();
    let base = s.to_vec();
    let step0 = f64::EPSILON.cbrt();
    let mut z = base.clone();
    let eval = |z: &[f64]| f.value(&z[..n], &z[n..]);
    let mut grad = Vec::with_capacity(2 * n);
    for k in 0..2 * n {
        let h = step0 * base[k].abs().max(1.0);
        z[k] = base[k] + h;
        let plus = eval(&z);
        z[k] = base[k] - h;
        let minus = eval(&z);
        z[k] = base[k];
        grad.push((plus - minus) / (2.0 * h));
    }
    Ok(grad)
}

/// {f, g} = ∂f/∂q·∂g/∂p − ∂f/∂p·∂g/∂q.
pub fn poisson_bracket(
    f: &dyn PhaseFunction,
    g: &dyn PhaseFunction,
    s: &PhasePoint,
) -> Result<f64> {
    let gf = gradient(f, s)?;
    let gg = gradient(g, s)?;
    Ok(bracket_from_gradients(&gf, &gg))
}

/// Largest |{f, g}| seen for one pair of a family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairBracket {
    pub left: String,
    pub right: String,
    pub max_abs: f64,
}

/// Outcome of an involution check over sampled states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BracketReport {
    pub family: Vec<String>,
    pub pairs: Vec<PairBracket>,
    pub samples: Vec<PhasePoint>,
    pub seed: u64,
    pub max_abs: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Evaluates every pairwise bracket of `family` at `n_samples` seeded random
/// states; passes iff every |bracket| < `tol`.
pub fn involution_report(
    family: &[&dyn PhaseFunction],
    params: &SystemParams,
    n_samples: usize,
    tol: f64,
    seed: u64,
) -> Result<BracketReport> {
    let mut sampler = StateSampler::new(params, seed);
    let mut pairs: Vec<PairBracket> = Vec::new();
    for (a, f) in family.iter().enumerate() {
        for g in &family[a + 1..] {
            pairs.push(PairBracket {
                left: f.name(),
                right: g.name(),
                max_abs: 0.0,
            });
        }
    }
    let mut samples = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        let s = sampler.sample();
        let grads = family
            .iter()
            .map(|f| gradient(*f, &s))
            .collect::<Result<Vec<_>>>()?;
        let mut k = 0;
        for a in 0..grads.len() {
            for b in a + 1..grads.len() {
                let v = bracket_from_gradients(&grads[a], &grads[b]).abs();
                // NaN must fail the check, so it is propagated explicitly.
                if v.is_nan() || v > pairs[k].max_abs {
                    pairs[k].max_abs = v;
                }
                k += 1;
            }
        }
        samples.push(s);
    }
    let max_abs = pairs
        .iter()
        .map(|p| p.max_abs)
        .fold(0.0, |m: f64, v| if v.is_nan() { f64::NAN } else { m.max(v) });
    Ok(BracketReport {
        family: family.iter().map(|f| f.name()).collect(),
        pairs,
        samples,
        seed,
        max_abs,
        tolerance: tol,
        pass: max_abs < tol,
    })
}

/// Jacobian of a family at `s`: one row per function, 2n columns.
pub fn jacobian(family: &[&dyn PhaseFunction], s: &PhasePoint) -> Result<DMatrix<f64>> {
    let cols = 2 * s.dim();
    let mut jac = DMatrix::zeros(family.len(), cols);
    for (r, f) in family.iter().enumerate() {
        let g = gradient(*f, s)?;
        for (c, v) in g.into_iter().enumerate() {
            jac[(r, c)] = v;
        }
    }
    Ok(jac)
}

/// Singular values of the family Jacobian, descending.
pub fn jacobian_singular_values(
    family: &[&dyn PhaseFunction],
    s: &PhasePoint,
) -> Result<Vec<f64>> {
    let jac = jacobian(family, s)?;
    let mut sv: Vec<f64> = jac.singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    Ok(sv)
}

/// Numerical rank of the family Jacobian: singular values below
/// `tol · σ_max` count as zero.
pub fn independence_rank(
    family: &[&dyn PhaseFunction],
    s: &PhasePoint,
    tol: f64,
) -> Result<usize> {
    let sv = jacobian_singular_values(family, s)?;
    let Some(&largest) = sv.first() else {
        return Ok(0);
    };
    if largest == 0.0 {
        return Ok(0);
    }
    Ok(sv.iter().filter(|&&v| v > tol * largest).count())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{IntegralKind, Observable};

    fn worked() -> (SystemParams, PhasePoint) {
        (
            SystemParams::new(1.0, 1.0, vec![1.0, 1.0]).unwrap(),
            PhasePoint::new(vec![1.0, 1.0], vec![1.0, -1.0]),
        )
    }

    #[test]
    fn canonical_brackets() {
        let s = PhasePoint::new(vec![0.3, -1.2, 2.0], vec![0.7, 0.1, -0.4]);
        for i in 0..3 {
            for j in 0..3 {
                let v = poisson_bracket(&Coordinate::Q(i), &Coordinate::P(j), &s).unwrap();
                assert_eq!(v, if i == j { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn j_minus_gradient_and_constant() {
        let (params, s) = worked();
        let jm = Observable::new(&params, IntegralKind::JMinus);
        assert_eq!(gradient(&jm, &s).unwrap(), vec![2.0, 2.0, 0.0, 0.0]);
        assert_eq!(gradient(&Constant(3.5), &s).unwrap(), vec![0.0; 4]);
    }

    #[test]
    fn lie_poisson_at_worked_state() {
        let (params, s) = worked();
        let j0 = Observable::new(&params, IntegralKind::JZero);
        let jp = Observable::new(&params, IntegralKind::JPlus);
        assert!((poisson_bracket(&j0, &jp, &s).unwrap() - 8.0).abs() < 1e-13);
    }

    #[test]
    fn proximity_guard() {
        let params = SystemParams::new(1.0, 1.0, vec![1.0, 1.0]).unwrap();
        let h = Observable::new(&params, IntegralKind::Hamiltonian);
        let s = PhasePoint::new(vec![1e-7, 1.0], vec![0.0, 0.0]);
        assert!(matches!(
            gradient(&h, &s),
            Err(Error::SingularityProximity { index: 1, .. })
        ));
    }

    #[test]
    fn dependent_pair_has_rank_one() {
        let (params, s) = worked();
        let h = Observable::new(&params, IntegralKind::Hamiltonian);
        let h2 = Scaled(2.0, h.clone());
        assert_eq!(independence_rank(&[&h, &h2], &s, DEFAULT_RANK_TOL).unwrap(), 1);
    }

    #[test]
    fn bracket_expression_matches_direct_bracket() {
        let (params, s) = worked();
        let j0 = Observable::new(&params, IntegralKind::JZero);
        let jp = Observable::new(&params, IntegralKind::JPlus);
        let b = Bracket(j0.clone(), jp.clone());
        assert!((b.value_at(&s) - poisson_bracket(&j0, &jp, &s).unwrap()).abs() < 1e-14);
    }
}
