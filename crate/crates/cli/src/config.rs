//! Scenario files.

use std::path::Path;

use depol_core::algebra::{su2_coherent_state, two_mode_coherent_state, TwoModeState};
use depol_core::depolarizer::DepolarizerRates;
use depol_core::metrics::TimeGrid;
use depol_core::reservoir::{AdiabaticOptions, AtomConfig};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// One scenario document. Sections a command does not use may be omitted.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub rates: Option<DepolarizerRates>,
    pub n_max: Option<usize>,
    pub initial_state: Option<StateSpec>,
    pub time_grid: Option<TimeGrid>,
    #[serde(default)]
    pub outputs: Outputs,
    #[serde(default)]
    pub seed: u64,
    pub micro: Option<MicroSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum StateSpec {
    Fock {
        #[serde(alias = "N")]
        n: usize,
        k: usize,
    },
    Su2Coherent {
        #[serde(alias = "N")]
        n: usize,
        theta: f64,
        phi: f64,
        #[serde(default)]
        psi: f64,
    },
    TwoModeCoherent {
        alpha_plus: [f64; 2],
        alpha_minus: [f64; 2],
    },
    Mixed {
        components: Vec<MixComponent>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixComponent {
    pub weight: f64,
    pub state: StateSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Outputs {
    pub trajectory: bool,
    pub sphere: Option<SphereOutput>,
    /// Include the `𝔻(t)` series in the multipole report.
    pub measure: bool,
    /// Include generator eigenvalues of the populated blocks in the summary.
    pub spectrum: bool,
}

impl Default for Outputs {
    fn default() -> Self {
        Outputs { trajectory: true, sphere: None, measure: true, spectrum: true }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SphereOutput {
    /// Largest multipole order kept in the report.
    pub s_max: usize,
    /// Band limit of the sampling grid; defaults to the smallest exact one.
    pub grid: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MicroSpec {
    pub atoms: Vec<AtomConfig>,
    /// Draw every atom phase from the scenario seed instead of using the given ones.
    #[serde(default)]
    pub random_phases: bool,
    #[serde(default)]
    pub options: AdiabaticOptions,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    /// Extra runs with every detuning rescaled to `ratio · |g|`.
    #[serde(default)]
    pub detuning_ratios: Vec<f64>,
}

fn default_tolerance() -> f64 {
    0.3
}

impl ScenarioConfig {
    pub fn from_json(text: &str, origin: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            CliError::Config {
                origin: origin.to_string(),
                message: format!("at `{path}` (line {}, column {}): {inner}", inner.line(), inner.column()),
            }
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(path.display().to_string(), e))?;
        Self::from_json(&text, &path.display().to_string())
    }

    pub fn rates(&self) -> Result<DepolarizerRates> {
        let rates = self.rates.ok_or_else(|| missing("rates"))?;
        rates.check()?;
        Ok(rates)
    }

    pub fn times(&self) -> Result<Vec<f64>> {
        Ok(self.time_grid.ok_or_else(|| missing("time_grid"))?.times()?)
    }

    pub fn state(&self) -> Result<TwoModeState> {
        let n_max = self.n_max.ok_or_else(|| missing("n_max"))?;
        let spec = self.initial_state.as_ref().ok_or_else(|| missing("initial_state"))?;
        let state = spec.build(n_max)?;
        if let Some(top) = state.blocks().max_block() {
            if top > n_max {
                return Err(CliError::Invalid(format!("initial state populates N={top} above n_max={n_max}")));
            }
        }
        Ok(state)
    }

    pub fn micro(&self) -> Result<&MicroSpec> {
        self.micro.as_ref().ok_or_else(|| missing("micro"))
    }
}

fn missing(field: &str) -> CliError {
    CliError::Invalid(format!("scenario has no `{field}` section"))
}

impl StateSpec {
    pub fn build(&self, n_max: usize) -> Result<TwoModeState> {
        Ok(match *self {
            StateSpec::Fock { n, k } => TwoModeState::fock(n, k)?,
            StateSpec::Su2Coherent { n, theta, phi, psi } => su2_coherent_state(n, theta, phi, psi)?,
            StateSpec::TwoModeCoherent { alpha_plus, alpha_minus } => two_mode_coherent_state(
                Complex64::new(alpha_plus[0], alpha_plus[1]),
                Complex64::new(alpha_minus[0], alpha_minus[1]),
                n_max,
            ),
            StateSpec::Mixed { ref components } => {
                let parts = components
                    .iter()
                    .map(|c| c.state.build(n_max).map(|s| (c.weight, s)))
                    .collect::<Result<Vec<_>>>()?;
                TwoModeState::mixture(&parts)?
            }
        })
    }

    /// Short label recorded with trajectories.
    pub fn label(&self) -> String {
        match self {
            StateSpec::Fock { n, k } => format!("fock(N={n},k={k})"),
            StateSpec::Su2Coherent { n, theta, phi, psi } => {
                format!("su2_coherent(N={n},theta={theta},phi={phi},psi={psi})")
            }
            StateSpec::TwoModeCoherent { alpha_plus, alpha_minus } => format!(
                "two_mode_coherent(alpha_plus={}{:+}i,alpha_minus={}{:+}i)",
                alpha_plus[0], alpha_plus[1], alpha_minus[0], alpha_minus[1]
            ),
            StateSpec::Mixed { components } => {
                let parts: Vec<String> =
                    components.iter().map(|c| format!("{}*{}", c.weight, c.state.label())).collect();
                format!("mixed({})", parts.join(","))
            }
        }
    }
}
