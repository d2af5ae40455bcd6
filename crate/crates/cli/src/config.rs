//! Run configuration: a single JSON document whose sections mirror the
//! library modules. Every field has a default, so `{}` is a valid config.

use std::path::Path;

use serde::{Deserialize, Serialize};
use supint_core::algebra::IntegralKind;
use supint_core::dynamics::Scheme;
use supint_core::{PhasePoint, SystemParams};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub system: SystemSection,
    pub initial_state: InitialState,
    pub integrator: IntegratorSection,
    pub verification: VerificationSection,
    pub outputs: OutputsSection,
    pub geometry: GeometrySection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemSection {
    pub n: usize,
    pub kappa: f64,
    pub omega_sq: f64,
    pub b: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitialState {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorSection {
    pub scheme: Scheme,
    pub step: f64,
    pub t_final: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerificationSection {
    /// Random states per involution / identity check.
    pub samples: usize,
    /// Random states for the rank check.
    pub rank_samples: usize,
    pub seed: u64,
    pub tolerances: Tolerances,
    /// Negative-control hook: perturbs one integral's formula.
    pub fault: Option<Fault>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub involution: f64,
    pub rank: f64,
    pub sum_identity: f64,
    pub lie_poisson: f64,
    /// Relative drift bound; `null` uses the scheme's own bound.
    pub drift: Option<f64>,
    pub closed_form: f64,
}

/// Adds `amount · q_1` to the integral labelled `integral` (e.g. `"I_1"`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fault {
    pub integral: String,
    #[serde(default = "default_fault_amount")]
    pub amount: f64,
}

fn default_fault_amount() -> f64 {
    1.0
}

/// File names, relative to the output directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputsSection {
    pub trajectory: String,
    pub drift: String,
    pub verify: String,
    pub closed_form: String,
    pub comparison: String,
    pub geometry: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometrySection {
    pub radii: Vec<f64>,
    /// Strength K of the intrinsic potentials.
    pub k: f64,
}

impl Default for SystemSection {
    fn default() -> Self {
        Self {
            n: 3,
            kappa: 1.0,
            omega_sq: 1.0,
            b: vec![1.0, 0.5, 2.0],
        }
    }
}

impl Default for InitialState {
    fn default() -> Self {
        Self {
            q: vec![1.0, 0.8, 1.2],
            p: vec![0.3, -0.5, 0.4],
        }
    }
}

impl Default for IntegratorSection {
    fn default() -> Self {
        Self {
            scheme: Scheme::ImplicitMidpoint,
            step: 1e-3,
            t_final: 10.0,
        }
    }
}

impl Default for VerificationSection {
    fn default() -> Self {
        Self {
            samples: 100,
            rank_samples: 20,
            seed: 42,
            tolerances: Tolerances::default(),
            fault: None,
        }
    }
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            involution: 1e-9,
            rank: 1e-8,
            sum_identity: 1e-12,
            lie_poisson: 1e-10,
            drift: None,
            closed_form: 1e-6,
        }
    }
}

impl Default for OutputsSection {
    fn default() -> Self {
        Self {
            trajectory: "trajectory.csv".into(),
            drift: "drift.json".into(),
            verify: "verify.json".into(),
            closed_form: "closed_form.csv".into(),
            comparison: "closed_form_comparison.json".into(),
            geometry: "geometry.json".into(),
        }
    }
}

impl Default for GeometrySection {
    fn default() -> Self {
        Self {
            radii: vec![0.0, 0.01, 0.1, 0.5, 1.0, 2.0, 10.0, 100.0, 1000.0],
            k: 1.0,
        }
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            system: SystemSection::default(),
            initial_state: InitialState::default(),
            integrator: IntegratorSection::default(),
            verification: VerificationSection::default(),
            outputs: OutputsSection::default(),
            geometry: GeometrySection::default(),
        }
    }
}

/// 1-based line of `"field"` inside `"section"`, if both keys appear.
fn locate(text: &str, section: &str, field: Option<&str>) -> Option<usize> {
    let start = text.find(&format!("\"{section}\""))?;
    let offset = match field {
        Some(f) => start + text[start..].find(&format!("\"{f}\""))?,
        None => start,
    };
    Some(text[..offset].matches('\n').count() + 1)
}

/// A validation failure: dotted key path plus message.
struct Invalid {
    section: &'static str,
    field: Option<&'static str>,
    message: String,
}

fn invalid(section: &'static str, field: &'static str, message: impl Into<String>) -> Invalid {
    Invalid {
        section,
        field: Some(field),
        message: message.into(),
    }
}

impl RunConfig {
    /// Parses and validates `text`; `path` is used in messages only.
    pub fn from_json(text: &str, path: &Path) -> Result<Self> {
        let config: RunConfig = serde_json::from_str(text).map_err(|e| CliError::Config {
            path: path.to_path_buf(),
            line: Some(e.line()),
            message: e.to_string(),
        })?;
        config.validate().map_err(|bad| {
            let key = match bad.field {
                Some(f) => format!("{}.{f}", bad.section),
                None => bad.section.to_string(),
            };
            CliError::Config {
                path: path.to_path_buf(),
                line: locate(text, bad.section, bad.field),
                message: format!("{key}: {}", bad.message),
            }
        })?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text, path)
    }

    pub fn to_json(&self) -> Result<String> {
        crate::output::to_sorted_json(self)
    }

    pub fn params(&self) -> SystemParams {
        let s = &self.system;
        SystemParams::new(s.kappa, s.omega_sq, s.b.clone())
            .expect("validated configuration")
    }

    pub fn initial_state(&self) -> PhasePoint {
        PhasePoint::new(self.initial_state.q.clone(), self.initial_state.p.clone())
    }

    fn validate(&self) -> std::result::Result<(), Invalid> {
        let s = &self.system;
        if s.n == 0 {
            return Err(invalid("system", "n", "dimension n must be >= 1"));
        }
        if s.b.len() != s.n {
            return Err(invalid(
                "system",
                "b",
                format!("expected {} entries (n), got {}", s.n, s.b.len()),
            ));
        }
        if !(s.kappa.is_finite() && s.kappa > 0.0) {
            return Err(invalid("system", "kappa", format!("kappa = {} must be > 0", s.kappa)));
        }
        if !(s.omega_sq.is_finite() && s.omega_sq >= 0.0) {
            return Err(invalid(
                "system",
                "omega_sq",
                format!("omega_sq = {} must be >= 0", s.omega_sq),
            ));
        }
        if let Some(j) = s.b.iter().position(|b| !(b.is_finite() && *b >= 0.0)) {
            return Err(invalid("system", "b", format!("b_{} = {} must be >= 0", j + 1, s.b[j])));
        }

        let st = &self.initial_state;
        for (field, v) in [("q", &st.q), ("p", &st.p)] {
            if v.len() != s.n {
                return Err(invalid(
                    "initial_state",
                    field,
                    format!("expected {} entries (n), got {}", s.n, v.len()),
                ));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(invalid("initial_state", field, "entries must be finite"));
            }
        }
        if let Some(i) = (0..s.n).find(|&i| s.b[i] > 0.0 && st.q[i] == 0.0) {
            return Err(invalid(
                "initial_state",
                "q",
                format!("q_{0} = 0 while b_{0} = {1} > 0 (singular)", i + 1, s.b[i]),
            ));
        }

        let it = &self.integrator;
        if !(it.step.is_finite() && it.step > 0.0) {
            return Err(invalid("integrator", "step", format!("step = {} must be > 0", it.step)));
        }
        if !(it.t_final.is_finite() && it.t_final >= 0.0) {
            return Err(invalid(
                "integrator",
                "t_final",
                format!("t_final = {} must be >= 0", it.t_final),
            ));
        }
        if it.scheme == Scheme::ClosedForm {
            return Err(invalid(
                "integrator",
                "scheme",
                "numerical scheme must be implicit-midpoint or rk4-oracle",
            ));
        }

        let ver = &self.verification;
        if ver.samples == 0 {
            return Err(invalid("verification", "samples", "samples must be >= 1"));
        }
        if ver.rank_samples == 0 {
            return Err(invalid("verification", "rank_samples", "rank_samples must be >= 1"));
        }
        let t = &ver.tolerances;
        let mut tols = vec![
            ("involution", t.involution),
            ("rank", t.rank),
            ("sum_identity", t.sum_identity),
            ("lie_poisson", t.lie_poisson),
            ("closed_form", t.closed_form),
        ];
        if let Some(d) = t.drift {
            tols.push(("drift", d));
        }
        if let Some((name, v)) = tols.into_iter().find(|(_, v)| !(v.is_finite() && *v > 0.0)) {
            return Err(Invalid {
                section: "tolerances",
                field: None,
                message: format!("{name} = {v} must be > 0"),
            });
        }
        if let Some(f) = &ver.fault {
            let kind: IntegralKind = f.integral.parse().map_err(|e: supint_core::Error| {
                invalid("fault", "integral", e.to_string())
            })?;
            let params = SystemParams::new(s.kappa, s.omega_sq, s.b.clone())
                .map_err(|e| invalid("system", "b", e.to_string()))?;
            supint_core::algebra::Observable::try_new(&params, kind)
                .map_err(|e| invalid("fault", "integral", e.to_string()))?;
            if !f.amount.is_finite() {
                return Err(invalid("fault", "amount", "amount must be finite"));
            }
        }

        let g = &self.geometry;
        if let Some(r) = g.radii.iter().find(|r| !(r.is_finite() && **r >= 0.0)) {
            return Err(invalid("geometry", "radii", format!("radius {r} must be >= 0")));
        }
        if !g.k.is_finite() {
            return Err(invalid("geometry", "k", "k must be finite"));
        }
        Ok(())
    }

    /// The configured fault as (kind, amount), if any.
    pub fn fault(&self) -> Option<(IntegralKind, f64)> {
        self.verification
            .fault
            .as_ref()
            .map(|f| (f.integral.parse().expect("validated fault label"), f.amount))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_is_the_default() {
        let c = RunConfig::from_json("{}", Path::new("c.json")).unwrap();
        assert_eq!(c, RunConfig::default());
    }

    #[test]
    fn dump_round_trips() {
        let mut c = RunConfig::default();
        c.verification.fault = Some(Fault {
            integral: "C_(2)".into(),
            amount: 0.5,
        });
        c.verification.tolerances.drift = Some(3e-7);
        let text = c.to_json().unwrap();
        assert_eq!(RunConfig::from_json(&text, Path::new("x")).unwrap(), c);
    }

    #[test]
    fn bad_kappa_names_the_line() {
        let text = "{\n  \"system\": {\n    \"n\": 2,\n    \"kappa\": 0.0,\n    \"b\": [1, 1]\n  },\n  \"initial_state\": {\"q\": [1, 1], \"p\": [0, 0]}\n}\n";
        let err = RunConfig::from_json(text, Path::new("c.json")).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        let msg = err.to_string();
        assert!(msg.starts_with("c.json:4: system.kappa"), "{msg}");
    }

    #[test]
    fn singular_initial_state_is_rejected() {
        let text = r#"{"system": {"n": 2, "b": [1, 0]}, "initial_state": {"q": [0, 1], "p": [1, 1]}}"#;
        let msg = RunConfig::from_json(text, Path::new("c.json")).unwrap_err().to_string();
        assert!(msg.contains("initial_state.q") && msg.contains("singular"), "{msg}");
        // b_i = 0 allows q_i = 0.
        let ok = r#"{"system": {"n": 2, "b": [0, 1]}, "initial_state": {"q": [0, 1], "p": [1, 1]}}"#;
        assert!(RunConfig::from_json(ok, Path::new("c.json")).is_ok());
    }

    #[test]
    fn syntax_errors_carry_line() {
        let err = RunConfig::from_json("{\n\"system\": {\n\"kappa\": ,\n}}", Path::new("c.json")).unwrap_err();
        assert!(err.to_string().starts_with("c.json:3:"), "{err}");
    }

    #[test]
    fn unknown_keys_and_bad_faults_are_rejected() {
        assert!(RunConfig::from_json(r#"{"sytem": {}}"#, Path::new("c")).is_err());
        let bad = r#"{"verification": {"fault": {"integral": "I_9"}}}"#;
        let msg = RunConfig::from_json(bad, Path::new("c")).unwrap_err().to_string();
        assert!(msg.contains("fault.integral"), "{msg}");
        let good = r#"{"verification": {"fault": {"integral": "I_2"}}}"#;
        let c = RunConfig::from_json(good, Path::new("c")).unwrap();
        assert_eq!(c.fault(), Some((IntegralKind::Extra(2), 1.0)));
    }
}
