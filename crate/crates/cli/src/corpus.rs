//! Manufactured-solution bundles: `f`, the coefficients and the matching source as KGF1 grids.
//!
//! Each bundle solves `∂_t f + v ∂_x f = A ∂_vv f + B ∂_v f + c f + h` exactly with
//! `f = exp(−(v−v0)²) cos(kx + ωt + φ)` and `A = a + ε sin(2v + x − t + ψ)`; the
//! parameters `(v0, k, ω, φ, ψ)` are drawn from the seed.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};

use kinschauder::calculus::{residual, save_kgf, EquationForm, GridFunction, PdeData};
use kinschauder::geometry::Cylinder;
use kinschauder::norms::{holder_seminorm, Scan};
use kinschauder::{Point, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusSpec {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_shape")]
    pub shape: [usize; 3],
    #[serde(default = "default_lo")]
    pub lo: [f64; 3],
    #[serde(default = "default_hi")]
    pub hi: [f64; 3],
    #[serde(default = "one")]
    pub a: f64,
    #[serde(default)]
    pub b: f64,
    #[serde(default)]
    pub c: f64,
    #[serde(default = "default_eps")]
    pub eps: Vec<f64>,
    #[serde(default = "half")]
    pub alpha: f64,
}

fn default_shape() -> [usize; 3] {
    [9, 17, 17]
}
fn default_lo() -> [f64; 3] {
    [-0.5, -1.0, -1.0]
}
fn default_hi() -> [f64; 3] {
    [0.0, 1.0, 1.0]
}
fn one() -> f64 {
    1.0
}
fn half() -> f64 {
    0.5
}
fn default_eps() -> Vec<f64> {
    vec![0.0]
}

impl CorpusSpec {
    pub fn validate(&self) -> Vec<String> {
        let mut errs = Vec::new();
        if self.shape.iter().any(|&n| n < 5) {
            errs.push(format!("shape entries must be at least 5, got {:?}", self.shape));
        }
        for k in 0..3 {
            if !(self.hi[k] > self.lo[k]) {
                errs.push(format!("box axis {k} is empty: [{}, {}]", self.lo[k], self.hi[k]));
            }
        }
        if self.eps.is_empty() {
            errs.push("eps must not be empty".into());
        }
        if self.eps.iter().any(|e| !(*e >= 0.0)) {
            errs.push("eps values must be nonnegative".into());
        }
        let emax = self.eps.iter().copied().fold(0.0, f64::max);
        if !(self.a > emax) {
            errs.push(format!("a = {} must exceed every eps (ellipticity), max eps = {emax}", self.a));
        }
        if ![self.b, self.c].iter().all(|v| v.is_finite()) {
            errs.push("b and c must be finite".into());
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            errs.push(format!("alpha out of (0,1): {}", self.alpha));
        }
        errs
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
struct Manufactured {
    v0: f64,
    k: f64,
    omega: f64,
    phi: f64,
    psi: f64,
}

impl Manufactured {
    fn draw(rng: &mut ChaCha8Rng) -> Self {
        Manufactured {
            v0: rng.gen_range(-0.3..0.3),
            k: rng.gen_range(0.5..1.5),
            omega: rng.gen_range(-1.0..1.0),
            phi: rng.gen_range(0.0..2.0 * PI),
            psi: rng.gen_range(0.0..2.0 * PI),
        }
    }

    fn f(&self, z: &Point) -> f64 {
        let w = z.v[0] - self.v0;
        (-w * w).exp() * (self.k * z.x[0] + self.omega * z.t + self.phi).cos()
    }

    fn a(&self, a0: f64, eps: f64, z: &Point) -> f64 {
        a0 + eps * (2.0 * z.v[0] + z.x[0] - z.t + self.psi).sin()
    }

    /// `𝒯f − A f_vv − B f_v − c f`.
    fn h(&self, spec: &CorpusSpec, eps: f64, z: &Point) -> f64 {
        let w = z.v[0] - self.v0;
        let g = (-w * w).exp();
        let th = self.k * z.x[0] + self.omega * z.t + self.phi;
        let (sn, cs) = th.sin_cos();
        let tf = -g * sn * (self.omega + z.v[0] * self.k);
        let fv = -2.0 * w * g * cs;
        let fvv = (4.0 * w * w - 2.0) * g * cs;
        tf - self.a(spec.a, eps, z) * fvv - spec.b * fv - spec.c * g * cs
    }
}

fn sha256_file(path: &Path) -> std::io::Result<String> {
    Ok(format!("{:x}", Sha256::digest(fs::read(path)?)))
}

/// Writes `bundle_XX/{f,a,b,c,h}.kgf` with a manifest each, plus a top-level `manifest.json`.
pub fn generate(spec: &CorpusSpec, out: &Path) -> Result<serde_json::Value> {
    fs::create_dir_all(out)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let grid = |f: &(dyn Fn(&Point) -> f64 + Sync)| GridFunction::on_box(1, &spec.lo, &spec.hi, &spec.shape, 1.0, &|z: &Point| f(z));
    let t_ext = spec.hi[0] - spec.lo[0];
    let x_half = 0.5 * (spec.hi[1] - spec.lo[1]);
    let v_half = 0.5 * (spec.hi[2] - spec.lo[2]);
    let radius = 0.5 * t_ext.sqrt().min(x_half.cbrt()).min(v_half);
    let center = Point::new1(spec.hi[0], 0.5 * (spec.lo[1] + spec.hi[1]), 0.5 * (spec.lo[2] + spec.hi[2]));
    let omega = Cylinder::new(center, radius, 1.0)?;
    let scan = Scan::policy(&omega, 2, 2, [5, 5, 5])?;
    let mut bundles = Vec::new();
    for (i, &eps) in spec.eps.iter().enumerate() {
        let m = Manufactured::draw(&mut rng);
        let name = format!("bundle_{i:02}");
        let dir = out.join(&name);
        fs::create_dir_all(&dir)?;
        let f = grid(&|z| m.f(z))?;
        let a = grid(&|z| m.a(spec.a, eps, z))?;
        let b = f.map(|_| spec.b);
        let c = f.map(|_| spec.c);
        let h = grid(&|z| m.h(spec, eps, z))?;
        let a_min = a.values.iter().copied().fold(f64::INFINITY, f64::min);
        let a_max = a.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let a_holder = holder_seminorm(&|z: &Point| m.a(spec.a, eps, z), spec.alpha, &omega, &scan)?.value;
        let data = PdeData { a: vec![a.clone()], b: vec![b.clone()], c: c.clone(), h: h.clone(), form: EquationForm::Nondivergence, s: 1.0 };
        let r = residual(&f, &data)?;
        let res_max = (0..r.len()).filter(|&k| r.is_trusted(&r.unravel(k))).map(|k| r.values[k].abs()).fold(0.0, f64::max);
        let mut files = serde_json::Map::new();
        for (stem, g) in [("f", &f), ("a", &a), ("b", &b), ("c", &c), ("h", &h)] {
            let path = dir.join(format!("{stem}.kgf"));
            save_kgf(g, &path)?;
            files.insert(format!("{stem}.kgf"), json!(sha256_file(&path)?));
        }
        let manifest = json!({
            "bundle": name,
            "seed": spec.seed,
            "index": i,
            "eps": eps,
            "equation": "∂_t f + v·∂_x f = A ∂_vv f + B ∂_v f + c f + h",
            "parameters": m,
            "a": spec.a,
            "b": spec.b,
            "c": spec.c,
            "shape": spec.shape,
            "lo": spec.lo,
            "hi": spec.hi,
            "a_min": a_min,
            "a_max": a_max,
            "a_constant": a_min == a_max,
            "a_holder": { "alpha": spec.alpha, "seminorm": a_holder, "radius": radius },
            "discrete_residual_max": res_max,
            "files": files,
        });
        write_json(&dir.join("manifest.json"), &manifest)?;
        bundles.push(json!({ "bundle": name, "eps": eps, "a_holder": a_holder, "a_constant": a_min == a_max }));
    }
    let top = json!({
        "tool": "kinschauder",
        "version": env!("CARGO_PKG_VERSION"),
        "spec": spec,
        "bundles": bundles,
    });
    write_json(&out.join("manifest.json"), &top)?;
    Ok(top)
}

pub fn write_json(path: &Path, v: &serde_json::Value) -> Result<()> {
    let mut s = serde_json::to_string_pretty(v).map_err(|e| kinschauder::Error::Format(e.to_string()))?;
    s.push('\n');
    fs::write(path, s)?;
    Ok(())
}
