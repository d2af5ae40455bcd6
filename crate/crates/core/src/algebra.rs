//! sl(2) Poisson-coalgebra realization and the first integrals it generates.
//!
//! The realization on ℝ²ⁿ is
//!
//! ```text
//! J₋ = q²,   J₀ = p·q,   J₊ = p² + Σ b_j q_j⁻²
//! ```
//!
//! with Casimir `C = J₋J₊ − J₀²`. Left and right partial Casimirs `C^(m)`,
//! `C_(m)` are the Casimirs of the first / last m sites. The extra integrals
//! are `I_i = p_i² − 2H q_i² + b_i q_i⁻²`.
//!
//! Public indices `m` and `i` are 1-based, as in the formulas.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poisson::PhaseExpr;
use crate::scalar::{dot, sq_norm, Scalar};
use crate::system::{centrifugal, hamiltonian_cal_expr, hamiltonian_h_expr, PhasePoint, SystemParams};

/// Realized generators (J₋, J₀, J₊) at a phase point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sl2Generators {
    pub j_minus: f64,
    pub j_zero: f64,
    pub j_plus: f64,
}

impl Sl2Generators {
    /// J₋J₊ − J₀².
    pub fn casimir(&self) -> f64 {
        self.j_minus * self.j_plus - self.j_zero * self.j_zero
    }

    /// H reconstructed as (J₊ − c)/(2(κ + J₋)).
    pub fn hamiltonian(&self, params: &SystemParams) -> f64 {
        (self.j_plus - params.c()) / (2.0 * (params.kappa() + self.j_minus))
    }
}

/// Σ over sites `lo..hi` (0-based, half-open) of the two-site Casimir terms
/// plus the site constants b_i.
fn partial_casimir_expr<T: Scalar>(b: &[f64], q: &[T], p: &[T], lo: usize, hi: usize) -> T {
    let mut acc = T::zero();
    for i in lo..hi {
        for j in i + 1..hi {
            let l = q[i] * p[j] - q[j] * p[i];
            acc = acc + l * l;
            if b[i] != 0.0 {
                acc = acc + q[j] * q[j] / (q[i] * q[i]) * b[i];
            }
            if b[j] != 0.0 {
                acc = acc + q[i] * q[i] / (q[j] * q[j]) * b[j];
            }
        }
        acc = acc + b[i];
    }
    acc
}

fn extra_integral_expr<T: Scalar>(params: &SystemParams, q: &[T], p: &[T], i: usize) -> T {
    let h = hamiltonian_h_expr(params, q, p);
    let mut v = p[i] * p[i] - h * q[i] * q[i] * 2.0;
    let bi = params.b()[i];
    if bi != 0.0 {
        v = v + (q[i] * q[i]).recip() * bi;
    }
    v
}

fn casimir_expr<T: Scalar>(params: &SystemParams, q: &[T], p: &[T]) -> T {
    let j0 = dot(p, q);
    sq_norm(q) * (sq_norm(p) + centrifugal(params.b(), q)) - j0 * j0
}

pub fn realize_sl2(params: &SystemParams, s: &PhasePoint) -> Result<Sl2Generators> {
    params.check_state(s)?;
    Ok(Sl2Generators {
        j_minus: sq_norm(&s.q),
        j_zero: dot(&s.p, &s.q),
        j_plus: sq_norm(&s.p) + centrifugal(params.b(), &s.q),
    })
}

/// C = J₋J₊ − J₀².
pub fn casimir(params: &SystemParams, s: &PhasePoint) -> Result<f64> {
    params.check_state(s)?;
    Ok(casimir_expr(params, &s.q, &s.p))
}

/// The same Casimir written as L² + Σ_j b_j q²/q_j².
pub fn casimir_angular(params: &SystemParams, s: &PhasePoint) -> Result<f64> {
    params.check_state(s)?;
    let (q, p) = (&s.q, &s.p);
    let n = q.len();
    let mut l2 = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            let l = q[i] * p[j] - q[j] * p[i];
            l2 += l * l;
        }
    }
    let q2 = sq_norm(q);
    let rest: f64 = params
        .b()
        .iter()
        .zip(q)
        .filter(|(&bj, _)| bj != 0.0)
        .map(|(&bj, &qj)| bj * q2 / (qj * qj))
        .sum();
    Ok(l2 + rest)
}

fn check_m(params: &SystemParams, m: usize) -> Result<()> {
    if m < 2 || m > params.n() {
        return Err(Error::IndexOutOfRange {
            index: m,
            min: 2,
            max: params.n(),
        });
    }
    Ok(())
}

fn check_i(params: &SystemParams, i: usize) -> Result<()> {
    if i < 1 || i > params.n() {
        return Err(Error::IndexOutOfRange {
            index: i,
            min: 1,
            max: params.n(),
        });
    }
    Ok(())
}

/// Left partial Casimir C^(m), 1 < m ≤ n, over the first m sites.
pub fn partial_casimir_left(params: &SystemParams, s: &PhasePoint, m: usize) -> Result<f64> {
    check_m(params, m)?;
    params.check_state(s)?;
    Ok(partial_casimir_expr(params.b(), &s.q, &s.p, 0, m))
}

/// Right partial Casimir C_(m), 1 < m ≤ n, over the last m sites.
pub fn partial_casimir_right(params: &SystemParams, s: &PhasePoint, m: usize) -> Result<f64> {
    check_m(params, m)?;
    params.check_state(s)?;
    let n = params.n();
    Ok(partial_casimir_expr(params.b(), &s.q, &s.p, n - m, n))
}

/// I_i = p_i² − 2H q_i² + b_i q_i⁻², 1 ≤ i ≤ n.
pub fn extra_integral(params: &SystemParams, s: &PhasePoint, i: usize) -> Result<f64> {
    check_i(params, i)?;
    params.check_state(s)?;
    Ok(extra_integral_expr(params, &s.q, &s.p, i - 1))
}

/// Which observable an [`Observable`] evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum IntegralKind {
    Hamiltonian,
    HamiltonianCal,
    JMinus,
    JZero,
    JPlus,
    Casimir,
    /// C^(m), 1-based m.
    CasimirLeft(usize),
    /// C_(m), 1-based m.
    CasimirRight(usize),
    /// I_i, 1-based i.
    Extra(usize),
}

impl IntegralKind {
    pub fn label(&self) -> String {
        match self {
            IntegralKind::Hamiltonian => "H".into(),
            IntegralKind::HamiltonianCal => "Hcal".into(),
            IntegralKind::JMinus => "J-".into(),
            IntegralKind::JZero => "J0".into(),
            IntegralKind::JPlus => "J+".into(),
            IntegralKind::Casimir => "C".into(),
            IntegralKind::CasimirLeft(m) => format!("C^({m})"),
            IntegralKind::CasimirRight(m) => format!("C_({m})"),
            IntegralKind::Extra(i) => format!("I_{i}"),
        }
    }
}

impl std::str::FromStr for IntegralKind {
    type Err = Error;

    /// Inverse of [`IntegralKind::label`].
    fn from_str(s: &str) -> Result<Self> {
        let index = |digits: &str| {
            digits
                .parse::<usize>()
                .map_err(|_| Error::InvalidArgument(format!("unknown integral label {s:?}")))
        };
        Ok(match s {
            "H" => IntegralKind::Hamiltonian,
            "Hcal" => IntegralKind::HamiltonianCal,
            "J-" => IntegralKind::JMinus,
            "J0" => IntegralKind::JZero,
            "J+" => IntegralKind::JPlus,
            "C" => IntegralKind::Casimir,
            _ => {
                if let Some(m) = s.strip_prefix("C^(").and_then(|r| r.strip_suffix(')')) {
                    IntegralKind::CasimirLeft(index(m)?)
                } else if let Some(m) = s.strip_prefix("C_(").and_then(|r| r.strip_suffix(')')) {
                    IntegralKind::CasimirRight(index(m)?)
                } else if let Some(i) = s.strip_prefix("I_") {
                    IntegralKind::Extra(index(i)?)
                } else {
                    return Err(Error::InvalidArgument(format!("unknown integral label {s:?}")));
                }
            }
        })
    }
}

/// A named observable of the system, usable as a [`PhaseExpr`].
///
/// `fault` adds `fault · q_1` to the value. It exists only so that negative
/// controls can check that the verification machinery notices a wrong formula.
#[derive(Debug, Clone, PartialEq)]
pub struct Observable {
    kind: IntegralKind,
    params: SystemParams,
    fault: f64,
}

impl Observable {
    /// Panics if an index inside `kind` is out of range for `params`.
    pub fn new(params: &SystemParams, kind: IntegralKind) -> Self {
        Self::try_new(params, kind).expect("observable index out of range")
    }

    pub fn try_new(params: &SystemParams, kind: IntegralKind) -> Result<Self> {
        match kind {
            IntegralKind::CasimirLeft(m) | IntegralKind::CasimirRight(m) => check_m(params, m)?,
            IntegralKind::Extra(i) => check_i(params, i)?,
            _ => {}
        }
        Ok(Self {
            kind,
            params: params.clone(),
            fault: 0.0,
        })
    }

    /// Test hook: returns the observable perturbed by `amount · q_1`.
    pub fn with_fault(mut self, amount: f64) -> Self {
        self.fault = amount;
        self
    }

    pub fn kind(&self) -> IntegralKind {
        self.kind
    }
}

impl PhaseExpr for Observable {
    fn label(&self) -> String {
        let base = self.kind.label();
        if self.fault != 0.0 {
            format!("{base}+fault")
        } else {
            base
        }
    }

    fn eval<T: Scalar>(&self, q: &[T], p: &[T]) -> T {
        let params = &self.params;
        let n = params.n();
        let v = match self.kind {
            IntegralKind::Hamiltonian => hamiltonian_h_expr(params, q, p),
            IntegralKind::HamiltonianCal => hamiltonian_cal_expr(params, q, p),
            IntegralKind::JMinus => sq_norm(q),
            IntegralKind::JZero => dot(p, q),
            IntegralKind::JPlus => sq_norm(p) + centrifugal(params.b(), q),
            IntegralKind::Casimir => casimir_expr(params, q, p),
            IntegralKind::CasimirLeft(m) => partial_casimir_expr(params.b(), q, p, 0, m),
            IntegralKind::CasimirRight(m) => partial_casimir_expr(params.b(), q, p, n - m, n),
            IntegralKind::Extra(i) => extra_integral_expr(params, q, p, i - 1),
        };
        if self.fault != 0.0 {
            v + q[0] * self.fault
        } else {
            v
        }
    }

    fn singular_coords(&self) -> Vec<usize> {
        match self.kind {
            IntegralKind::JMinus | IntegralKind::JZero => Vec::new(),
            _ => self
                .params
                .b()
                .iter()
                .enumerate()
                .filter(|(_, &bi)| bi != 0.0)
                .map(|(i, _)| i)
                .collect(),
        }
    }
}

/// The three involutive families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyKind {
    /// {H, C^(m) : 1 < m ≤ n}
    LeftCasimirs,
    /// {H, C_(m) : 1 < m ≤ n}
    RightCasimirs,
    /// {H, I_i : 1 ≤ i ≤ n}
    ExtraIi,
}

impl FamilyKind {
    pub const ALL: [FamilyKind; 3] = [
        FamilyKind::LeftCasimirs,
        FamilyKind::RightCasimirs,
        FamilyKind::ExtraIi,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            FamilyKind::LeftCasimirs => "left-casimirs",
            FamilyKind::RightCasimirs => "right-casimirs",
            FamilyKind::ExtraIi => "extra-Ii",
        }
    }
}

/// Observables of one involutive family; H always comes first.
pub fn family_observables(params: &SystemParams, kind: FamilyKind) -> Vec<Observable> {
    let n = params.n();
    let mut out = vec![Observable::new(params, IntegralKind::Hamiltonian)];
    match kind {
        FamilyKind::LeftCasimirs => {
            out.extend((2..=n).map(|m| Observable::new(params, IntegralKind::CasimirLeft(m))))
        }
        FamilyKind::RightCasimirs => {
            out.extend((2..=n).map(|m| Observable::new(params, IntegralKind::CasimirRight(m))))
        }
        FamilyKind::ExtraIi => {
            out.extend((1..=n).map(|i| Observable::new(params, IntegralKind::Extra(i))))
        }
    }
    out
}

/// Values of an involutive family at one state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegralFamily {
    pub labels: Vec<String>,
    pub values: Vec<f64>,
    pub family_kind: FamilyKind,
}

impl IntegralFamily {
    pub fn evaluate(params: &SystemParams, kind: FamilyKind, s: &PhasePoint) -> Result<Self> {
        params.check_state(s)?;
        let obs = family_observables(params, kind);
        Ok(Self {
            labels: obs.iter().map(|o| o.label()).collect(),
            values: obs.iter().map(|o| o.eval(&s.q, &s.p)).collect(),
            family_kind: kind,
        })
    }
}

/// Maximal independent set (H, C^(2..n−1), C_(2..n), I_extra), 2n−1 members.
pub fn full_integral_observables(params: &SystemParams, extra: usize) -> Result<Vec<Observable>> {
    check_i(params, extra)?;
    let n = params.n();
    let mut out = vec![Observable::new(params, IntegralKind::Hamiltonian)];
    out.extend((2..n).map(|m| Observable::new(params, IntegralKind::CasimirLeft(m))));
    out.extend((2..=n).map(|m| Observable::new(params, IntegralKind::CasimirRight(m))));
    out.push(Observable::new(params, IntegralKind::Extra(extra)));
    Ok(out)
}

/// Values of the canonical independent set with I_1 as the extra integral.
pub fn full_integral_set(params: &SystemParams, s: &PhasePoint) -> Result<Vec<f64>> {
    full_integral_set_with(params, s, 1)
}

pub fn full_integral_set_with(
    params: &SystemParams,
    s: &PhasePoint,
    extra: usize,
) -> Result<Vec<f64>> {
    params.check_state(s)?;
    Ok(full_integral_observables(params, extra)?
        .iter()
        .map(|o| o.eval(&s.q, &s.p))
        .collect())
}
