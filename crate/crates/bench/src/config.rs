//! Experiment description, read from a flat JSON document.

use std::fmt;
use std::path::Path;

use outage_core::model::estimation_error_variance;
use serde::{Deserialize, Serialize};

use crate::BenchError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "PCSI-General")]
    PcsiGeneral,
    #[serde(rename = "RCI-General")]
    RciGeneral,
    #[serde(rename = "ZF-General")]
    ZfGeneral,
    #[serde(rename = "ZF-CoordDescent")]
    ZfCoordDescent,
    #[serde(rename = "ZF-CoordUpdate")]
    ZfCoordUpdate,
}

impl Method {
    pub const ALL: [Method; 5] =
        [Method::PcsiGeneral, Method::RciGeneral, Method::ZfGeneral, Method::ZfCoordDescent, Method::ZfCoordUpdate];

    pub fn name(self) -> &'static str {
        match self {
            Method::PcsiGeneral => "PCSI-General",
            Method::RciGeneral => "RCI-General",
            Method::ZfGeneral => "ZF-General",
            Method::ZfCoordDescent => "ZF-CoordDescent",
            Method::ZfCoordUpdate => "ZF-CoordUpdate",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.name() == name)
    }

    /// Methods driven by the doubling search and descent.
    pub fn is_descent(self) -> bool {
        self != Method::ZfCoordUpdate
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany {
    One(f64),
    Many(Vec<f64>),
}

impl OneOrMany {
    fn values(&self) -> Vec<f64> {
        match self {
            OneOrMany::One(x) => vec![*x],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

/// How the estimation error variance is obtained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum Training {
    /// Uplink pilots: `σ_e² = σ_BS² / (σ_BS² + L_UT P_UT)`, one value per `P_ut`.
    Uplink {
        #[serde(rename = "L_ut")]
        l_ut: u32,
        #[serde(rename = "P_ut")]
        p_ut: OneOrMany,
    },
    Direct {
        sigma_e2: OneOrMany,
    },
}

fn default_sigma2() -> f64 {
    0.01
}

fn default_gamma_db() -> Vec<f64> {
    (0..=10).map(f64::from).collect()
}

fn default_epsilon() -> f64 {
    0.05
}

fn default_delta_min() -> f64 {
    1e-3
}

fn default_quad_tol() -> f64 {
    1e-8
}

fn default_i_max() -> usize {
    50
}

fn default_eta_multiple() -> f64 {
    outage_core::zf::DEFAULT_ETA_MULTIPLE
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub n_tx: usize,
    pub n_users: usize,
    #[serde(default = "default_sigma2")]
    pub sigma2: f64,
    #[serde(default = "default_sigma2")]
    pub sigma2_bs: f64,
    pub training: Training,
    #[serde(default = "default_gamma_db")]
    pub gamma_db: Vec<f64>,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    pub n_trials: usize,
    pub seed: u64,
    pub methods: Vec<Method>,
    #[serde(default = "default_delta_min")]
    pub delta_min: f64,
    #[serde(default = "default_quad_tol")]
    pub quad_tol: f64,
    #[serde(default = "default_i_max")]
    pub i_max: usize,
    #[serde(default = "default_eta_multiple")]
    pub eta_multiple: f64,
    #[serde(default)]
    pub eta_refinement: bool,
    /// Monte Carlo samples per user for an extra certification; 0 disables it.
    #[serde(default)]
    pub mc_certify_samples: usize,
    /// Write wall-clock times; off keeps the output byte-reproducible.
    #[serde(default)]
    pub record_runtime: bool,
}

impl ExperimentConfig {
    /// Desk-scale defaults for `n_tx = n_users = 3` and `σ_e² = 0.002`.
    pub fn desk(n_trials: usize, seed: u64, methods: Vec<Method>) -> Self {
        Self {
            n_tx: 3,
            n_users: 3,
            sigma2: default_sigma2(),
            sigma2_bs: default_sigma2(),
            training: Training::Direct { sigma_e2: OneOrMany::One(0.002) },
            gamma_db: default_gamma_db(),
            epsilon: default_epsilon(),
            n_trials,
            seed,
            methods,
            delta_min: default_delta_min(),
            quad_tol: default_quad_tol(),
            i_max: default_i_max(),
            eta_multiple: default_eta_multiple(),
            eta_refinement: false,
            mc_certify_samples: 0,
            record_runtime: false,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, BenchError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| BenchError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self, BenchError> {
        let text = std::fs::read_to_string(path).map_err(|source| BenchError::Io { path: path.into(), source })?;
        Self::from_json(&text)
    }

    pub fn sigma_e2_values(&self) -> Vec<f64> {
        match &self.training {
            Training::Direct { sigma_e2 } => sigma_e2.values(),
            Training::Uplink { l_ut, p_ut } => {
                p_ut.values().into_iter().map(|p| estimation_error_variance(self.sigma2_bs, *l_ut, p)).collect()
            }
        }
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        let bad = |msg: &str| Err(BenchError::Config(msg.into()));
        if self.n_tx == 0 || self.n_users == 0 || self.n_trials == 0 {
            return bad("n_tx, n_users and n_trials must be positive");
        }
        if self.n_users > self.n_tx && self.methods.iter().any(|m| *m != Method::PcsiGeneral) {
            return bad("zero-forcing and regularised inversion need n_users <= n_tx");
        }
        if !(self.sigma2 > 0.0) || !(self.sigma2_bs > 0.0) {
            return bad("noise variances must be positive");
        }
        if let Training::Uplink { l_ut, p_ut } = &self.training {
            if *l_ut == 0 || p_ut.values().iter().any(|p| !(*p > 0.0)) {
                return bad("L_ut and P_ut must be positive");
            }
        }
        let sigma_e2 = self.sigma_e2_values();
        if sigma_e2.is_empty() || sigma_e2.iter().any(|s| !(*s >= 0.0) || !s.is_finite()) {
            return bad("sigma_e2 values must be finite and nonnegative");
        }
        if self.gamma_db.is_empty() || self.gamma_db.iter().any(|g| !g.is_finite()) {
            return bad("gamma_db must be a non-empty list of finite values");
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return bad("epsilon must lie in (0, 1)");
        }
        if self.methods.is_empty() {
            return bad("methods must be non-empty");
        }
        let mut seen = self.methods.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.methods.len() {
            return bad("methods must not repeat");
        }
        if !(self.delta_min > 0.0) || !(self.quad_tol > 0.0) || self.i_max == 0 {
            return bad("delta_min, quad_tol and i_max must be positive");
        }
        if !(self.eta_multiple <= 0.0) {
            return bad("eta_multiple must be nonpositive");
        }
        Ok(())
    }
}
