//! Execution of one configured experiment into reports and CSV tables.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use kinschauder::geometry::{group_compose, group_inverse, kinetic_distance, kinetic_norm, scale, Cylinder, KineticPoint};
use kinschauder::kolmogorov::{indicator_scaling_probe, shared_table_traced, CacheOutcome, TableOptions};
use kinschauder::linalg::loglog_slope;
use kinschauder::nonlocal::{check_cancellation, check_kernel_holder, check_upperbound, Cancellation, HolderVariant};
use kinschauder::norms::{equivalence_ratio, Scan};
use kinschauder::report::CheckReport;
use kinschauder::verify::{
    absorption_partial_sums, absorption_sum, bouchut_corpus, freeze_decompose, hypoellipticity_check, schauder_constant,
    schauder_corpus, transport_corpus, BouchutOptions, FreezeInstance, FreezeOptions, OperatorStructure, SchauderOptions,
};
use kinschauder::{Point, Result};

use crate::config::{Experiment, KernelCheck};

/// Rows of one CSV file; cells are already formatted.
pub struct Table {
    pub file: String,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(file: &str, header: &[&'static str]) -> Self {
        Table { file: file.to_string(), header: header.to_vec(), rows: Vec::new() }
    }

    fn push(&mut self, row: &[f64]) {
        self.rows.push(row.iter().map(|v| format!("{v:?}")).collect());
    }
}

#[derive(Default)]
pub struct CacheStats {
    pub hits: usize,
    pub builds: usize,
}

impl CacheStats {
    fn record(&mut self, outcome: CacheOutcome) {
        match outcome {
            CacheOutcome::Memory | CacheOutcome::Disk => self.hits += 1,
            CacheOutcome::Built => self.builds += 1,
        }
    }
}

pub struct Outcome {
    pub reports: Vec<CheckReport>,
    pub tables: Vec<Table>,
    pub cache: CacheStats,
}

fn random_point(rng: &mut ChaCha8Rng, d: usize) -> Point {
    let mut c = || rng.gen_range(-1.0..1.0);
    let t = c();
    let x = (0..d).map(|_| c()).collect();
    let v = (0..d).map(|_| c()).collect();
    KineticPoint { t, x, v }
}

fn max_abs_diff(a: &Point, b: &Point) -> f64 {
    a.to_vec().iter().zip(b.to_vec()).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

fn group_axioms(d: usize, s: f64, samples: usize, tol: f64, seed: u64) -> Result<(CheckReport, Table)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let o = Point::origin(d);
    let mut rep = CheckReport::new("group_axioms").param("d", d).param("s", s).param("samples", samples);
    rep.set_param("tol", tol);
    rep.seed = Some(seed);
    let mut table = Table::new("samples.csv", &["sample", "axiom_error", "invariance_error", "dilation_error"]);
    let (mut axiom, mut inv, mut dil) = (0.0f64, 0.0f64, 0.0f64);
    for k in 0..samples {
        let (a, b, c) = (random_point(&mut rng, d), random_point(&mut rng, d), random_point(&mut rng, d));
        let r = rng.gen_range(0.25..2.0);
        let ab_c = group_compose(&group_compose(&a, &b)?, &c)?;
        let a_bc = group_compose(&a, &group_compose(&b, &c)?)?;
        let e_ax = max_abs_diff(&ab_c, &a_bc)
            .max(max_abs_diff(&group_compose(&a, &group_inverse(&a))?, &o))
            .max(max_abs_diff(&group_compose(&o, &a)?, &a));
        let base = kinetic_distance(&b, &c, s, tol)?;
        let moved = kinetic_distance(&group_compose(&a, &b)?, &group_compose(&a, &c)?, s, tol)?;
        let scaled = kinetic_distance(&scale(&b, r, s)?, &scale(&c, r, s)?, s, tol)?;
        let e_inv = (base - moved).abs();
        let e_dil = (scaled - r * base).abs() / r.max(1.0);
        axiom = axiom.max(e_ax);
        inv = inv.max(e_inv);
        dil = dil.max(e_dil);
        table.push(&[k as f64, e_ax, e_inv, e_dil]);
    }
    rep.measure("axiom_error", axiom);
    rep.measure("invariance_error", inv);
    rep.measure("dilation_error", dil);
    rep.assert_le("axioms", axiom, 1e-12);
    rep.assert_le("left_invariance", inv, 2.0 * tol);
    rep.assert_le("dilation", dil, 2.0 * tol);
    Ok((rep, table))
}

fn prepare_table(s: f64, cache: Option<&Path>, stats: &mut CacheStats) -> Result<()> {
    if s < 1.0 {
        let (_, outcome) = shared_table_traced(s, 1, TableOptions::for_s(s), cache)?;
        stats.record(outcome);
    }
    Ok(())
}

pub fn execute(exp: &Experiment, seed: u64, cache: Option<&Path>) -> Result<Outcome> {
    let mut stats = CacheStats::default();
    let mut reports = Vec::new();
    let mut tables = Vec::new();
    match exp {
        Experiment::GroupAxioms { d, s, samples, tol } => {
            let (rep, table) = group_axioms(*d, *s, *samples, *tol, seed)?;
            reports.push(rep);
            tables.push(table);
        }
        Experiment::IndicatorScaling { s, d, radii, res, amplitude, tol } => {
            prepare_table(*s, cache, &mut stats)?;
            let rep = indicator_scaling_probe(&Point::origin(*d), radii, *s, *res, *amplitude, *tol, cache)?;
            let mut table = Table::new("scaling.csv", &["r", "norm"]);
            if let Some(norms) = rep.witnesses.get("norms").and_then(|v| v.as_array()) {
                for (r, n) in radii.iter().zip(norms) {
                    table.push(&[*r, n.as_f64().unwrap_or(f64::NAN)]);
                }
            }
            reports.push(rep);
            tables.push(table);
        }
        Experiment::SeminormEquivalence { s, betas, p, levels, per_axis, res } => {
            let om = Cylinder::new(Point::origin(1), 1.0, *s)?;
            let scan = Scan::policy(&om, *levels, *per_axis, *res)?;
            let mut table = Table::new("equivalence.csv", &["beta", "holder", "campanato", "ratio"]);
            for &beta in betas {
                let s = *s;
                let f = move |z: &Point| kinetic_norm(z, s).powf(beta);
                let mut rep = equivalence_ratio(&f, beta, *p, &om, &scan)?;
                rep.set_param("function", format!("|z|^{beta}"));
                let g = |k: &str| rep.get(k).unwrap_or(f64::NAN);
                table.push(&[beta, g("holder"), g("campanato"), g("ratio")]);
                reports.push(rep);
            }
            tables.push(table);
        }
        Experiment::Hypoellipticity { b } => {
            reports.push(hypoellipticity_check(&OperatorStructure::new(b)?)?);
        }
        Experiment::Kernel { kernel, d, s, radii, checks, alpha } => {
            let k = kernel.build(*d, *s)?;
            let mut zs = vec![Point::origin(*d)];
            let mut shifted = Point::origin(*d);
            shifted.v[0] = 0.7;
            zs.push(shifted);
            for check in checks {
                let rep = match check {
                    KernelCheck::Upperbound => check_upperbound(&k, &zs, radii)?,
                    KernelCheck::CancellationFirst => check_cancellation(&k, &zs, radii, Cancellation::First)?,
                    KernelCheck::CancellationSecond => check_cancellation(&k, &zs, radii, Cancellation::Second)?,
                    KernelCheck::Holder => {
                        let pairs = vec![
                            (Point::new1(0.0, 0.0, 0.0), Point::new1(0.0, 0.0, 0.3)),
                            (Point::new1(0.0, 0.0, 0.5), Point::new1(-0.2, 0.1, 0.9)),
                        ];
                        let variant = match kernel {
                            kinschauder::nonlocal::KernelConfig::SkewedDivergence { .. } => HolderVariant::Divergence,
                            _ => HolderVariant::Standard,
                        };
                        check_kernel_holder(&k, &pairs, radii, *alpha, variant)?
                    }
                };
                reports.push(rep);
            }
        }
        Experiment::Bouchut { pairs, shape, beta } => {
            let sampled: Vec<_> = transport_corpus(*pairs).iter().map(|p| p.sample(*shape)).collect::<Result<_>>()?;
            let rep = bouchut_corpus(&sampled, *beta, &BouchutOptions::default())?;
            let mut table = Table::new("ratios.csv", &["pair", "ratio"]);
            for i in 0..*pairs {
                table.push(&[i as f64, rep.get(&format!("ratio.{i:02}")).unwrap_or(f64::NAN)]);
            }
            reports.push(rep);
            tables.push(table);
        }
        Experiment::Schauder { level, m, alpha } => {
            let rep = schauder_constant(&schauder_corpus(*level)?, *m, *alpha, &SchauderOptions::default())?;
            let mut table = Table::new("ratios.csv", &["instance", "lhs", "rhs", "ratio"]);
            for key in rep.measured.keys().filter_map(|k| k.strip_prefix("ratio.")) {
                let g = |p: &str| rep.get(&format!("{p}.{key}")).unwrap_or(f64::NAN);
                table.rows.push(vec![key.to_string(), format!("{:?}", g("lhs")), format!("{:?}", g("rhs")), format!("{:?}", g("ratio"))]);
            }
            reports.push(rep);
            tables.push(table);
        }
        Experiment::Freeze { eps, rho, shape, lag_order } => {
            let opts = FreezeOptions { rho: *rho, lag_order: *lag_order, cache: cache.map(Path::to_path_buf), ..Default::default() };
            let z0 = Point::origin(1);
            let z1 = Point::new1(-0.05, 0.02, 0.1);
            let mut table = Table::new("freeze.csv", &["eps", "g1_residual", "oscillation_source"]);
            let mut res = Vec::new();
            for &e in eps {
                let (f, data) = FreezeInstance { eps: e }.sample(*rho, *shape)?;
                let dec = freeze_decompose(&f, &data, &z0, &z1, &opts)?;
                let mut rep = dec.report;
                rep.set_param("eps", e);
                let r = rep.get("g1_residual").unwrap_or(f64::NAN);
                table.push(&[e, r, rep.get("oscillation_source").unwrap_or(f64::NAN)]);
                res.push(r);
                reports.push(rep);
            }
            let (slope, _, r2) = loglog_slope(eps, &res);
            let mut sweep = CheckReport::new("freeze_sweep").param("eps", eps);
            sweep.measure("slope", slope);
            sweep.measure("fit_r2", r2);
            sweep.assert_close("residual_order", slope, 1.0, 0.2);
            reports.push(sweep);
            tables.push(table);
        }
        Experiment::Absorption { c0, eps, beta, tau, terms } => {
            let a = absorption_sum(*c0, *eps, *beta, *tau)?;
            let partial = absorption_partial_sums(*eps, *beta, *tau, *terms)?;
            let mut rep = CheckReport::new("absorption").param("c0", c0).param("eps", eps).param("beta", beta).param("tau", tau);
            rep.measure("factor", a.factor);
            rep.measure("ratio", a.ratio);
            rep.measure("constant", a.constant);
            let last = *partial.last().unwrap_or(&0.0);
            rep.measure("partial_sum", last);
            rep.assert_le("ratio_below_one", a.ratio, 1.0 - 1e-12);
            let mut table = Table::new("partial_sums.csv", &["k", "partial_sum"]);
            for (k, p) in partial.iter().enumerate() {
                table.push(&[k as f64, *p]);
            }
            reports.push(rep);
            tables.push(table);
        }
    }
    Ok(Outcome { reports, tables, cache: stats })
}
