//! `depol evolve`: Stokes trajectories and their decay rates.

use std::path::Path;

use depol_core::algebra::TwoModeState;
use depol_core::depolarizer::{generator_spectrum, DepolarizerRates, Evolver};
use depol_core::fit::fit_decay_rate;
use depol_core::metrics::{one_photon_rate, Trajectory};
use serde::Serialize;

use crate::config::ScenarioConfig;
use crate::error::Result;
use crate::output::{csv_text, ensure_dir, json_text, write_text, Status};

pub const TRAJECTORY_HEADER: [&str; 7] = ["t", "s0", "s1", "s2", "s3", "dop", "purity"];
/// Allowed drift of `⟨S₀⟩` relative to its initial value.
pub const S0_TOLERANCE: f64 = 1e-9;
/// Samples below this fraction of the largest one are left out of rate fits.
const FIT_FLOOR: f64 = 1e-10;
const TRUNCATION_WARNING: f64 = 1e-6;

#[derive(Clone, Debug, Serialize)]
pub struct ComponentFit {
    pub rate: f64,
    pub predicted: f64,
    pub relative_error: f64,
    pub relative_residual: f64,
    pub non_exponential: bool,
    pub samples: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct Predictions {
    /// Smallest nonzero decay rate of the one-photon generator.
    pub one_photon_rate: f64,
    pub s1: f64,
    pub s2: f64,
    pub s3: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct BlockSpectrum {
    pub n: usize,
    /// Generator eigenvalues, largest first; the generator is Hermitian so they are real.
    pub eigenvalues: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct BlockSummary {
    pub n: usize,
    pub weight: f64,
    /// `Tr(ρ_N²)/p_N²` of the normalized block at the last time.
    pub purity: f64,
    pub unpolarized_purity: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Checks {
    pub s0_drift: f64,
    pub dop_min: f64,
    pub dop_max: f64,
    pub dop_monotone: bool,
    pub purity_monotone: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct EvolveSummary {
    pub initial_state: String,
    pub rates: DepolarizerRates,
    pub n_max: usize,
    pub points: usize,
    pub fits: Fits,
    pub predictions: Predictions,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spectrum: Option<Vec<BlockSpectrum>>,
    pub final_blocks: Vec<BlockSummary>,
    pub final_purity: f64,
    pub discarded_weight: f64,
    pub checks: Checks,
    pub warnings: Vec<String>,
    pub status: Status,
}

/// `None` for components that vanish or change sign.
#[derive(Clone, Debug, Serialize)]
pub struct Fits {
    pub s1: Option<ComponentFit>,
    pub s2: Option<ComponentFit>,
    pub s3: Option<ComponentFit>,
}

pub struct EvolveOutput {
    pub trajectory: Trajectory,
    pub summary: EvolveSummary,
}

fn fit_component(times: &[f64], values: &[f64], scale: f64, predicted: f64) -> Option<ComponentFit> {
    let peak = values.iter().map(|v| v.abs()).fold(0.0, f64::max);
    if peak <= FIT_FLOOR * scale.max(1.0) {
        return None;
    }
    let sign = values[0].signum();
    let (t, v): (Vec<f64>, Vec<f64>) = times
        .iter()
        .zip(values)
        .filter(|(_, v)| v.abs() > FIT_FLOOR * peak)
        .map(|(t, v)| (*t, v * sign))
        .unzip();
    let fit = fit_decay_rate(&t, &v).ok()?;
    Some(ComponentFit {
        rate: fit.rate,
        predicted,
        relative_error: if predicted > 0.0 { (fit.rate - predicted).abs() / predicted } else { fit.rate.abs() },
        relative_residual: fit.relative_residual,
        non_exponential: fit.non_exponential,
        samples: t.len(),
    })
}

fn non_increasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] <= w[0] + 1e-12)
}

pub fn run_evolve(cfg: &ScenarioConfig) -> Result<EvolveOutput> {
    let rates = cfg.rates()?;
    let times = cfg.times()?;
    let state = cfg.state()?;
    let label = cfg.initial_state.as_ref().map(|s| s.label()).unwrap_or_default();
    let trajectory = Trajectory::compute(&state, &rates, &times, label.clone())?;

    let r = one_photon_rate(&rates);
    let predictions = Predictions { one_photon_rate: r, s1: r, s2: r, s3: 2.0 * r };
    let s0 = trajectory.s0[0];
    let fits = Fits {
        s1: fit_component(&times, &trajectory.s1, s0, predictions.s1),
        s2: fit_component(&times, &trajectory.s2, s0, predictions.s2),
        s3: fit_component(&times, &trajectory.s3, s0, predictions.s3),
    };

    let diagonal: Vec<usize> = state.blocks().keys().filter(|(a, b)| a == b).map(|(a, _)| a).collect();
    let spectrum = cfg.outputs.spectrum.then(|| {
        diagonal
            .iter()
            .map(|&n| {
                let mut eigenvalues: Vec<f64> = generator_spectrum(n, n, &rates).iter().map(|z| z.re).collect();
                eigenvalues.sort_by(|a, b| b.total_cmp(a));
                BlockSpectrum { n, eigenvalues }
            })
            .collect()
    });

    let t_last = *times.last().expect("time grids have at least two points");
    let last: TwoModeState = Evolver::for_state(&state, &rates).evolve(&state, t_last);
    let final_blocks = diagonal
        .iter()
        .map(|&n| {
            let weight = last.block_weight(n);
            let block = last.block(n, n).expect("diagonal block present");
            let purity = if weight > 0.0 { block.norm_squared() / (weight * weight) } else { 0.0 };
            BlockSummary { n, weight, purity, unpolarized_purity: 1.0 / (n + 1) as f64 }
        })
        .collect();

    let s0_drift = trajectory.s0.iter().map(|v| (v - s0).abs()).fold(0.0, f64::max);
    let checks = Checks {
        s0_drift,
        dop_min: trajectory.dop.iter().copied().fold(f64::INFINITY, f64::min),
        dop_max: trajectory.dop.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        dop_monotone: non_increasing(&trajectory.dop),
        purity_monotone: non_increasing(&trajectory.purity),
    };

    let mut warnings = Vec::new();
    let mut status = Status::Pass;
    if state.discarded_weight() > TRUNCATION_WARNING {
        warnings.push(format!(
            "truncation at n_max={} discards weight {:e}",
            state.n_max(),
            state.discarded_weight()
        ));
        status = Status::Warning;
    }
    for (name, fit) in [("s1", &fits.s1), ("s2", &fits.s2), ("s3", &fits.s3)] {
        if fit.as_ref().is_some_and(|f| f.non_exponential) {
            warnings.push(format!("{name} is not a single exponential"));
            status = Status::Warning;
        }
    }
    let violated = s0_drift > S0_TOLERANCE * s0.max(1.0)
        || checks.dop_min < 0.0
        || checks.dop_max > 1.0 + 1e-12
        || !checks.dop_monotone
        || !checks.purity_monotone;
    if violated {
        status = Status::Violation;
    }
    for w in &warnings {
        log::warn!("{w}");
    }

    let summary = EvolveSummary {
        initial_state: label,
        rates,
        n_max: state.n_max(),
        points: times.len(),
        fits,
        predictions,
        spectrum,
        final_blocks,
        final_purity: trajectory.purity[trajectory.len() - 1],
        discarded_weight: state.discarded_weight(),
        checks,
        warnings,
        status,
    };
    Ok(EvolveOutput { trajectory, summary })
}

pub fn trajectory_csv(tr: &Trajectory) -> String {
    let rows = (0..tr.len()).map(|i| vec![tr.times[i], tr.s0[i], tr.s1[i], tr.s2[i], tr.s3[i], tr.dop[i], tr.purity[i]]);
    csv_text(&TRAJECTORY_HEADER, rows)
}

/// Writes `trajectory.csv` (when enabled) and `summary.json` into `out`.
pub fn cmd_evolve(cfg: &ScenarioConfig, out: &Path) -> Result<Status> {
    let result = run_evolve(cfg)?;
    ensure_dir(out)?;
    if cfg.outputs.trajectory {
        write_text(&out.join("trajectory.csv"), &trajectory_csv(&result.trajectory))?;
    }
    write_text(&out.join("summary.json"), &json_text(&result.summary)?)?;
    Ok(result.summary.status)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scenario(state: &str, grid: &str) -> ScenarioConfig {
        let text = format!(
            r#"{{"rates": {{"gamma": 1.0, "gamma0": 0.0}}, "n_max": 2, "initial_state": {state}, "time_grid": {grid}}}"#
        );
        ScenarioConfig::from_json(&text, "test").unwrap()
    }

    #[test]
    fn fock_dop_decays() {
        let cfg = scenario(
            r#"{"type": "fock", "n": 1, "k": 1}"#,
            r#"{"kind": "log", "t_min": 0.001, "t_max": 2.0, "points": 30}"#,
        );
        let out = run_evolve(&cfg).unwrap();
        assert!(out.summary.checks.dop_monotone);
        assert!(*out.trajectory.dop.last().unwrap() < 1e-3);
        let s3 = out.summary.fits.s3.as_ref().unwrap();
        assert!(s3.relative_error < 1e-8, "{s3:?}");
        assert!(out.summary.fits.s1.is_none());
        assert_eq!(out.summary.status, Status::Pass);
    }

    #[test]
    fn coherent_s0_is_constant() {
        let cfg = scenario(
            r#"{"type": "su2_coherent", "n": 2, "theta": 1.5707963267948966, "phi": 0.0}"#,
            r#"{"kind": "linear", "t_min": 0.0, "t_max": 1.0, "points": 11}"#,
        );
        let out = run_evolve(&cfg).unwrap();
        assert!(out.trajectory.s0.iter().all(|v| (v - 2.0).abs() < 1e-9));
        let s1 = out.summary.fits.s1.as_ref().unwrap();
        assert!((s1.rate - 8.0).abs() < 1e-6);
    }

    #[test]
    fn mixed_blocks_become_unpolarized() {
        let cfg = scenario(
            r#"{"type": "mixed", "components": [
                {"weight": 0.5, "state": {"type": "fock", "n": 1, "k": 0}},
                {"weight": 0.5, "state": {"type": "su2_coherent", "n": 2, "theta": 0.4, "phi": 0.1}}]}"#,
            r#"{"kind": "linear", "t_min": 0.0, "t_max": 4.0, "points": 9}"#,
        );
        let out = run_evolve(&cfg).unwrap();
        let purities: Vec<f64> = out.summary.final_blocks.iter().map(|b| b.purity).collect();
        assert!((purities[0] - 0.5).abs() < 1e-12 && (purities[1] - 1.0 / 3.0).abs() < 1e-12);
        assert!((out.summary.final_purity - 0.25 * (0.5 + 1.0 / 3.0)).abs() < 1e-12);
        let csv = trajectory_csv(&out.trajectory);
        assert!(csv.starts_with("t,s0,s1,s2,s3,dop,purity\n"));
        assert_eq!(csv.lines().count(), 10);
    }
}
