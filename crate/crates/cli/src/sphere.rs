//! `depol sphere`: Husimi functions on the Poincaré sphere and their multipoles.

use std::path::Path;

use depol_core::algebra::{CMatrix, TwoModeState};
use depol_core::depolarizer::{DepolarizerRates, Evolver};
use depol_core::sphere::{
    depolarization_measure, multipole_transform, propagate_multipoles, su2_q_sphere, Kappa, MultipoleCoefficients,
    SphereGrid, StateMultipoles,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::ScenarioConfig;
use crate::error::{CliError, Result};
use crate::output::{csv_text, ensure_dir, write_json, write_text, Status};

/// Largest relative disagreement allowed between propagated and sampled multipoles.
pub const SPHERE_TOLERANCE: f64 = 1e-8;

#[derive(Clone, Debug, Serialize)]
pub struct CoefficientRow {
    pub s: usize,
    pub m: i32,
    pub c_re: f64,
    pub c_im: f64,
    pub oracle_re: f64,
    pub oracle_im: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct BlockSnapshot {
    pub n: usize,
    pub weight: f64,
    pub coefficients: Vec<CoefficientRow>,
    pub discrepancy: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Snapshot {
    pub t: f64,
    pub blocks: Vec<BlockSnapshot>,
    /// Same comparison over every block pair, coherences included.
    pub pair_discrepancy: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct MeasureSeries {
    pub n: usize,
    pub analytic: Vec<f64>,
    /// `∫Q² dΩ` of the evolved block.
    pub oracle: Vec<f64>,
    pub asymptote: f64,
    pub monotone: bool,
    pub relative_error: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct MultipoleReport {
    pub rates: DepolarizerRates,
    pub kappa: Kappa,
    pub grid_band_limit: usize,
    pub s_max: usize,
    pub tolerance: f64,
    pub snapshots: Vec<Snapshot>,
    pub max_discrepancy: f64,
    pub max_pair_discrepancy: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub measure: Option<Vec<MeasureSeries>>,
    pub status: Status,
}

pub struct SphereOutputData {
    pub grid: SphereGrid,
    /// `(N, per-time samples)` for every populated diagonal block.
    pub q: Vec<(usize, Vec<Vec<f64>>)>,
    pub report: MultipoleReport,
}

fn normalized_block(state: &TwoModeState, n: usize) -> CMatrix {
    let block = state.block(n, n).expect("populated diagonal block");
    block.unscale(block.trace().re)
}

pub fn run_sphere(cfg: &ScenarioConfig) -> Result<SphereOutputData> {
    let rates = cfg.rates()?;
    let times = cfg.times()?;
    let state = cfg.state()?;
    let kappa = Kappa::default();
    let diagonal: Vec<usize> = state
        .blocks()
        .keys()
        .filter(|(a, b)| a == b && state.block_weight(*a) > 0.0)
        .map(|(a, _)| a)
        .collect();
    let n_top = diagonal.iter().copied().max().unwrap_or(0);
    let s_max = cfg.outputs.sphere.map_or(n_top, |s| s.s_max);
    let band = match cfg.outputs.sphere.and_then(|s| s.grid) {
        Some(l) if l < n_top.max(s_max) => {
            return Err(CliError::Invalid(format!(
                "sphere grid band limit {l} cannot resolve N={n_top} with s_max={s_max}"
            )))
        }
        Some(l) => l,
        None => n_top.max(s_max).max(1),
    };
    let grid = SphereGrid::new(band);

    let initial: Vec<MultipoleCoefficients> = diagonal
        .iter()
        .map(|&n| {
            let q = su2_q_sphere(&normalized_block(&state, n), &grid)?;
            multipole_transform(&q, &grid, n)
        })
        .collect::<depol_core::Result<_>>()?;
    let pairs0 = StateMultipoles::from_state(&state, &grid)?;
    let evolver = Evolver::for_state(&state, &rates);

    let per_time: Vec<(Snapshot, Vec<Vec<f64>>, Vec<f64>)> = times
        .par_iter()
        .map(|&t| -> Result<_> {
            let rho = evolver.evolve(&state, t);
            let mut blocks = Vec::with_capacity(diagonal.len());
            let mut samples = Vec::with_capacity(diagonal.len());
            let mut q_norms = Vec::with_capacity(diagonal.len());
            for (&n, c0) in diagonal.iter().zip(&initial) {
                let q = su2_q_sphere(&normalized_block(&rho, n), &grid)?;
                let oracle = multipole_transform(&q, &grid, n)?;
                let analytic = propagate_multipoles(c0, t, &rates, &kappa)?;
                let coefficients = analytic
                    .iter()
                    .filter(|(ch, _)| ch.s.value() <= s_max as f64)
                    .map(|(ch, c)| {
                        let o = oracle.get(ch);
                        CoefficientRow {
                            s: ch.s.twice() as usize / 2,
                            m: ch.m.twice() / 2,
                            c_re: c.re,
                            c_im: c.im,
                            oracle_re: o.re,
                            oracle_im: o.im,
                        }
                    })
                    .collect();
                blocks.push(BlockSnapshot {
                    n,
                    weight: rho.block_weight(n),
                    coefficients,
                    discrepancy: oracle.relative_error(&analytic),
                });
                q_norms.push(grid.integrate(&q.iter().map(|v| v * v).collect::<Vec<_>>()));
                samples.push(q);
            }
            let pair_discrepancy =
                StateMultipoles::from_state(&rho, &grid)?.relative_error(&pairs0.propagate(t, &rates, &kappa)?);
            Ok((Snapshot { t, blocks, pair_discrepancy }, samples, q_norms))
        })
        .collect::<Result<_>>()?;

    let mut snapshots = Vec::with_capacity(times.len());
    let mut q: Vec<(usize, Vec<Vec<f64>>)> = diagonal.iter().map(|&n| (n, Vec::new())).collect();
    let mut oracle_norms: Vec<Vec<f64>> = vec![Vec::new(); diagonal.len()];
    for (snap, samples, norms) in per_time {
        for (j, s) in samples.into_iter().enumerate() {
            q[j].1.push(s);
            oracle_norms[j].push(norms[j]);
        }
        snapshots.push(snap);
    }

    let max_discrepancy =
        snapshots.iter().flat_map(|s| s.blocks.iter().map(|b| b.discrepancy)).fold(0.0, f64::max);
    let max_pair_discrepancy = snapshots.iter().map(|s| s.pair_discrepancy).fold(0.0, f64::max);
    let mut status = if max_discrepancy.max(max_pair_discrepancy) <= SPHERE_TOLERANCE {
        Status::Pass
    } else {
        Status::Violation
    };

    let measure = if cfg.outputs.measure {
        let series = diagonal
            .iter()
            .zip(&initial)
            .zip(oracle_norms)
            .map(|((&n, c0), oracle)| {
                let analytic =
                    times.iter().map(|&t| depolarization_measure(c0, &rates, &kappa, t)).collect::<depol_core::Result<Vec<_>>>()?;
                let relative_error = analytic
                    .iter()
                    .zip(&oracle)
                    .map(|(a, o)| (a - o).abs() / o.abs())
                    .fold(0.0, f64::max);
                Ok(MeasureSeries {
                    n,
                    monotone: analytic.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-14)),
                    asymptote: 1.0 / (4.0 * std::f64::consts::PI),
                    analytic,
                    oracle,
                    relative_error,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if series.iter().any(|s| !s.monotone || s.relative_error > SPHERE_TOLERANCE) {
            status = Status::Violation;
        }
        Some(series)
    } else {
        None
    };

    let report = MultipoleReport {
        rates,
        kappa,
        grid_band_limit: band,
        s_max,
        tolerance: SPHERE_TOLERANCE,
        snapshots,
        max_discrepancy,
        max_pair_discrepancy,
        measure,
        status,
    };
    Ok(SphereOutputData { grid, q, report })
}

pub fn q_csv(grid: &SphereGrid, q: &[f64]) -> String {
    csv_text(&["theta", "phi", "q"], grid.nodes().zip(q).map(|((t, p, _), v)| vec![t, p, *v]))
}

/// Writes `q_N{N}_t{i:03}.csv` per block and time plus `multipoles.json`.
pub fn cmd_sphere(cfg: &ScenarioConfig, out: &Path) -> Result<Status> {
    let data = run_sphere(cfg)?;
    ensure_dir(out)?;
    for (n, series) in &data.q {
        for (i, q) in series.iter().enumerate() {
            write_text(&out.join(format!("q_N{n}_t{i:03}.csv")), &q_csv(&data.grid, q))?;
        }
    }
    write_json(&out.join("multipoles.json"), &data.report)?;
    if data.report.status != Status::Pass {
        log::error!(
            "multipole discrepancy {:e} (pairs {:e}) exceeds {SPHERE_TOLERANCE:e} or the measure is not monotone",
            data.report.max_discrepancy,
            data.report.max_pair_discrepancy
        );
    }
    Ok(data.report.status)
}
