//! `depol micro-validate`: the atomic reservoir against the effective rate.

use depol_core::reservoir::{assign_random_phases, validate_adiabatic, AdiabaticReport, AtomConfig};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{MicroSpec, ScenarioConfig};
use crate::error::{CliError, Result};
use crate::output::Status;

#[derive(Clone, Debug, Serialize)]
pub struct SweepPoint {
    pub detuning_ratio: f64,
    pub gamma_predicted: f64,
    pub rate_fitted: f64,
    pub ratio: Option<f64>,
    /// `|ratio - 1|`.
    pub mismatch: Option<f64>,
    pub regime_violation: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct MicroReport {
    #[serde(flatten)]
    pub report: AdiabaticReport,
    pub tolerance: f64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub sweep: Vec<SweepPoint>,
    /// Whether the mismatch shrinks strictly along increasing detuning ratios.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mismatch_monotone: Option<bool>,
    pub warnings: Vec<String>,
    pub status: Status,
}

fn prepared_atoms(spec: &MicroSpec, seed: u64) -> (Vec<AtomConfig>, Option<u64>) {
    let mut atoms = spec.atoms.clone();
    if spec.random_phases {
        assign_random_phases(&mut atoms, seed);
        (atoms, Some(seed))
    } else {
        (atoms, None)
    }
}

fn rescaled(atoms: &[AtomConfig], ratio: f64) -> Vec<AtomConfig> {
    atoms
        .iter()
        .map(|a| {
            let sign = if a.detuning < 0.0 { -1.0 } else { 1.0 };
            AtomConfig { detuning: sign * ratio * a.g_abs, ..*a }
        })
        .collect()
}

pub fn run_micro(cfg: &ScenarioConfig) -> Result<MicroReport> {
    let spec = cfg.micro()?;
    if spec.atoms.is_empty() {
        return Err(CliError::Invalid("micro section lists no atoms".into()));
    }
    let (atoms, seed) = prepared_atoms(spec, cfg.seed);
    let mut warnings = Vec::new();
    for (i, a) in atoms.iter().enumerate() {
        if a.nbar < 10.0 {
            warnings.push(format!("atom {i}: nbar = {} is not large; the effective rate assumes nbar >> 1", a.nbar));
        }
        if !a.is_dispersive() {
            warnings.push(format!("atom {i}: |g|/|detuning| exceeds the far-detuned limit"));
        }
    }
    let report = validate_adiabatic(&atoms, &spec.options, seed)?;

    let sweep: Vec<SweepPoint> = spec
        .detuning_ratios
        .par_iter()
        .map(|&ratio| -> Result<SweepPoint> {
            let r = validate_adiabatic(&rescaled(&atoms, ratio), &spec.options, seed)?;
            Ok(SweepPoint {
                detuning_ratio: ratio,
                gamma_predicted: r.gamma_predicted,
                rate_fitted: r.rate_fitted,
                ratio: r.ratio,
                mismatch: r.ratio.map(|x| (x - 1.0).abs()),
                regime_violation: r.regime_violation(),
            })
        })
        .collect::<Result<_>>()?;
    let mismatch_monotone = (sweep.len() >= 2).then(|| {
        let mut ordered: Vec<&SweepPoint> = sweep.iter().collect();
        ordered.sort_by(|a, b| a.detuning_ratio.total_cmp(&b.detuning_ratio));
        ordered.windows(2).all(|w| match (w[0].mismatch, w[1].mismatch) {
            (Some(a), Some(b)) => b < a,
            _ => false,
        })
    });

    let status = if report.regime_violation() {
        warnings.push(format!(
            "regime violation: dispersive = {}, non-exponential = {} (residual {:e})",
            report.dispersive, report.non_exponential, report.residual
        ));
        Status::Warning
    } else if report.within_tolerance(spec.tolerance) {
        Status::Pass
    } else {
        Status::Violation
    };
    for w in &warnings {
        log::warn!("{w}");
    }
    Ok(MicroReport { report, tolerance: spec.tolerance, sweep, mismatch_monotone, warnings, status })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scenario(g: f64, detuning: f64, extra: &str) -> ScenarioConfig {
        let text = format!(
            r#"{{"seed": 7, "micro": {{"atoms": [{{"g_abs": {g}, "detuning": {detuning}, "gamma_a": 0.001, "nbar": 20.0}}]{extra}}}}}"#
        );
        ScenarioConfig::from_json(&text, "test").unwrap()
    }

    #[test]
    fn uncoupled_atom_is_a_degenerate_pass() {
        let r = run_micro(&scenario(0.0, 1.0, "")).unwrap();
        assert!(r.report.both_zero);
        assert_eq!(r.status, Status::Pass);
        let json = serde_json::to_string(&r).unwrap();
        assert!(json.contains("\"ratio\":null") && !json.contains("NaN"));
    }

    #[test]
    fn near_resonance_is_a_regime_warning() {
        assert_eq!(run_micro(&scenario(0.1, 0.2, "")).unwrap().status, Status::Warning);
    }

    #[test]
    fn seeded_phases_are_recorded() {
        let r = run_micro(&scenario(0.1, 1.0, r#", "random_phases": true"#)).unwrap();
        assert_eq!(r.report.seed, Some(7));
        assert!(r.report.phases[0] != 0.0);
    }
}
