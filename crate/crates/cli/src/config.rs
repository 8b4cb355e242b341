//! Run configuration: one JSON document naming an experiment and its parameters.

use std::path::PathBuf;

use kinschauder::nonlocal::KernelConfig;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: Option<String>,
    pub experiment: Experiment,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub cache: CachePolicy,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CachePolicy {
    #[default]
    Use,
    Off,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Experiment {
    GroupAxioms {
        #[serde(default = "one_usize")]
        d: usize,
        #[serde(default = "one")]
        s: f64,
        #[serde(default = "default_samples")]
        samples: usize,
        #[serde(default = "default_tol")]
        tol: f64,
    },
    IndicatorScaling {
        #[serde(default = "one")]
        s: f64,
        #[serde(default = "one_usize")]
        d: usize,
        #[serde(default = "default_radii")]
        radii: Vec<f64>,
        #[serde(default = "default_res4")]
        res: [usize; 3],
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default = "default_slope_tol")]
        tol: f64,
    },
    SeminormEquivalence {
        #[serde(default = "one")]
        s: f64,
        #[serde(default = "default_betas")]
        betas: Vec<f64>,
        #[serde(default = "two")]
        p: f64,
        #[serde(default = "default_levels")]
        levels: usize,
        #[serde(default = "two_usize")]
        per_axis: usize,
        #[serde(default = "default_res6")]
        res: [usize; 3],
    },
    Hypoellipticity {
        b: Vec<Vec<f64>>,
    },
    Kernel {
        kernel: KernelConfig,
        #[serde(default = "one_usize")]
        d: usize,
        s: f64,
        #[serde(default = "default_kernel_radii")]
        radii: Vec<f64>,
        #[serde(default = "default_kernel_checks")]
        checks: Vec<KernelCheck>,
        #[serde(default = "half")]
        alpha: f64,
    },
    Bouchut {
        #[serde(default = "default_pairs")]
        pairs: usize,
        #[serde(default = "default_transport_shape")]
        shape: [usize; 3],
        #[serde(default = "one")]
        beta: f64,
    },
    Schauder {
        #[serde(default)]
        level: u32,
        #[serde(default = "three")]
        m: u32,
        #[serde(default = "half")]
        alpha: f64,
    },
    Freeze {
        #[serde(default = "default_eps")]
        eps: Vec<f64>,
        #[serde(default = "default_rho")]
        rho: f64,
        #[serde(default = "default_freeze_shape")]
        shape: [usize; 3],
        #[serde(default = "default_lag")]
        lag_order: usize,
    },
    Absorption {
        #[serde(default = "one")]
        c0: f64,
        eps: f64,
        #[serde(default = "one")]
        beta: f64,
        tau: f64,
        #[serde(default = "default_terms")]
        terms: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelCheck {
    Upperbound,
    CancellationFirst,
    CancellationSecond,
    Holder,
}

fn one() -> f64 {
    1.0
}
fn two() -> f64 {
    2.0
}
fn half() -> f64 {
    0.5
}
fn one_usize() -> usize {
    1
}
fn two_usize() -> usize {
    2
}
fn three() -> u32 {
    3
}
fn default_samples() -> usize {
    200
}
fn default_tol() -> f64 {
    1e-4
}
fn default_slope_tol() -> f64 {
    0.1
}
fn default_radii() -> Vec<f64> {
    vec![0.125, 0.25, 0.5, 1.0, 1.25]
}
fn default_res4() -> [usize; 3] {
    [4, 4, 4]
}
fn default_res6() -> [usize; 3] {
    [6, 6, 6]
}
fn default_betas() -> Vec<f64> {
    vec![0.5, 1.2, 2.3]
}
fn default_levels() -> usize {
    3
}
fn default_kernel_radii() -> Vec<f64> {
    vec![0.1, 0.5, 1.0, 4.0]
}
fn default_kernel_checks() -> Vec<KernelCheck> {
    vec![KernelCheck::Upperbound, KernelCheck::CancellationFirst]
}
fn default_pairs() -> usize {
    20
}
fn default_transport_shape() -> [usize; 3] {
    [48, 128, 64]
}
fn default_eps() -> Vec<f64> {
    vec![0.05, 0.1, 0.2]
}
fn default_rho() -> f64 {
    0.4
}
fn default_freeze_shape() -> [usize; 3] {
    [33, 29, 45]
}
fn default_lag() -> usize {
    8
}
fn default_terms() -> usize {
    50
}

fn check_s(errs: &mut Vec<String>, s: f64) {
    if !(s > 0.0 && s <= 1.0) {
        errs.push(format!("s out of (0,1]: {s}"));
    }
}

fn check_positive(errs: &mut Vec<String>, name: &str, v: f64) {
    if !(v > 0.0 && v.is_finite()) {
        errs.push(format!("{name} must be positive and finite, got {v}"));
    }
}

fn check_res(errs: &mut Vec<String>, name: &str, res: &[usize; 3], min: usize) {
    if res.iter().any(|&n| n < min) {
        errs.push(format!("{name} entries must be at least {min}, got {res:?}"));
    }
}

impl Experiment {
    pub fn kind(&self) -> &'static str {
        match self {
            Experiment::GroupAxioms { .. } => "group_axioms",
            Experiment::IndicatorScaling { .. } => "indicator_scaling",
            Experiment::SeminormEquivalence { .. } => "seminorm_equivalence",
            Experiment::Hypoellipticity { .. } => "hypoellipticity",
            Experiment::Kernel { .. } => "kernel",
            Experiment::Bouchut { .. } => "bouchut",
            Experiment::Schauder { .. } => "schauder",
            Experiment::Freeze { .. } => "freeze",
            Experiment::Absorption { .. } => "absorption",
        }
    }

    /// Every violated precondition, in field order.
    pub fn validate(&self) -> Vec<String> {
        let mut errs = Vec::new();
        match self {
            Experiment::GroupAxioms { d, s, samples, tol } => {
                if !(1..=3).contains(d) {
                    errs.push(format!("d must be 1, 2 or 3, got {d}"));
                }
                check_s(&mut errs, *s);
                if *samples == 0 {
                    errs.push("samples must be positive".into());
                }
                check_positive(&mut errs, "tol", *tol);
            }
            Experiment::IndicatorScaling { s, d, radii, res, amplitude, tol } => {
                check_s(&mut errs, *s);
                if *d != 1 {
                    errs.push(format!("indicator scaling is implemented for d = 1, got {d}"));
                }
                if radii.len() < 4 || radii.iter().any(|r| !(*r > 0.0)) {
                    errs.push("radii must hold at least four positive values".into());
                } else {
                    let lo = radii.iter().copied().fold(f64::INFINITY, f64::min);
                    let hi = radii.iter().copied().fold(0.0, f64::max);
                    if hi < 10.0 * lo * (1.0 - 1e-9) {
                        errs.push("radii must span at least a decade".into());
                    }
                }
                check_res(&mut errs, "res", res, 1);
                if !amplitude.is_finite() {
                    errs.push("amplitude must be finite".into());
                }
                check_positive(&mut errs, "tol", *tol);
            }
            Experiment::SeminormEquivalence { s, betas, p, levels, per_axis, res } => {
                check_s(&mut errs, *s);
                if betas.is_empty() {
                    errs.push("betas must not be empty".into());
                }
                for b in betas {
                    check_positive(&mut errs, "beta", *b);
                }
                if !(*p >= 1.0) {
                    errs.push(format!("p must be at least 1, got {p}"));
                }
                if *levels == 0 || *per_axis == 0 {
                    errs.push("levels and per_axis must be positive".into());
                }
                check_res(&mut errs, "res", res, 2);
            }
            Experiment::Hypoellipticity { b } => {
                let n = b.len();
                if n < 2 || b.iter().any(|row| row.len() != n) {
                    errs.push("b must be a square matrix of size at least 2".into());
                }
                if b.iter().flatten().any(|v| !v.is_finite()) {
                    errs.push("b entries must be finite".into());
                }
            }
            Experiment::Kernel { d, s, radii, checks, alpha, .. } => {
                if !(*s > 0.0 && *s < 1.0) {
                    errs.push(format!("s out of (0,1) for a nonlocal kernel: {s}"));
                }
                if !(1..=3).contains(d) {
                    errs.push(format!("d must be 1, 2 or 3, got {d}"));
                }
                if radii.len() < 3 || radii.iter().any(|r| !(*r > 0.0)) {
                    errs.push("radii must hold at least three positive values".into());
                }
                if checks.is_empty() {
                    errs.push("checks must not be empty".into());
                }
                if checks.contains(&KernelCheck::Holder) && *d != 1 {
                    errs.push("the holder check samples pairs in d = 1".into());
                }
                check_positive(&mut errs, "alpha", *alpha);
            }
            Experiment::Bouchut { pairs, shape, beta } => {
                if *pairs == 0 {
                    errs.push("pairs must be positive".into());
                }
                check_res(&mut errs, "shape", shape, 8);
                check_positive(&mut errs, "beta", *beta);
            }
            Experiment::Schauder { level, m, alpha } => {
                if *level > 3 {
                    errs.push(format!("level must be at most 3, got {level}"));
                }
                if *m < 2 {
                    errs.push(format!("m must be at least 2, got {m}"));
                }
                if !(*alpha > 0.0 && *alpha < 1.0) {
                    errs.push(format!("alpha out of (0,1): {alpha}"));
                }
            }
            Experiment::Freeze { eps, rho, shape, lag_order } => {
                if eps.len() < 2 {
                    errs.push("eps needs at least two values for a slope".into());
                }
                if eps.iter().any(|e| !(*e > 0.0 && *e < 1.0)) {
                    errs.push("eps values must lie in (0,1)".into());
                }
                if !(*rho > 0.0 && *rho <= 0.5) {
                    errs.push(format!("rho out of (0,1/2]: {rho}"));
                }
                check_res(&mut errs, "shape", shape, 9);
                if *lag_order == 0 {
                    errs.push("lag_order must be positive".into());
                }
            }
            Experiment::Absorption { c0, eps, beta, tau, terms } => {
                check_positive(&mut errs, "c0", *c0);
                if !(*eps >= 0.0 && *eps < 1.0) {
                    errs.push(format!("eps out of [0,1): {eps}"));
                }
                check_positive(&mut errs, "beta", *beta);
                if !(*tau > 0.0 && *tau < 1.0) {
                    errs.push(format!("tau out of (0,1): {tau}"));
                } else if *beta > 0.0 && *eps * tau.powf(-*beta) >= 1.0 {
                    errs.push(format!("eps·tau^(-beta) = {} must be below 1", *eps * tau.powf(-*beta)));
                }
                if *terms == 0 {
                    errs.push("terms must be positive".into());
                }
            }
        }
        errs
    }
}
