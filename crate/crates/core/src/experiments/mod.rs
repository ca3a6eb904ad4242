//! Reproducible experiment drivers for the 1D model problem: minimax errors,
//! l2 errors of the discrete fractional Poisson problem, and figure data.
//!
//! Every driver writes CSV files plus a `manifest.json` recording the config
//! and its SHA-256, and the SHA-256 of every file written. No timestamps are
//! recorded, so identical configs give byte-identical output.

mod rhs;

pub use rhs::{f1, f2, irwin_hall4, RhsKind, RhsSpec, SUPPORT};

use crate::error::{BuraError, Result};
use crate::matrix::laplacian_1d;
use crate::par;
use crate::rational::{
    bura_compute, check_positivity_conditions, partial_fractions, stahl_bound, BuraParams, PartialFractionForm,
    RationalApprox, RemezOptions,
};
use crate::solver::{apply_bura_inverse, norm2, SolverConfig};
use crate::spectral::EigenDecomposition;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// Largest mesh exponent (`N = 2^m - 1`) accepted by the drivers.
pub const MAX_MESH_EXPONENT: u32 = 12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub alphas: Vec<f64>,
    pub ks: Vec<usize>,
    pub beta: u32,
    /// `h = 2^-m` for each `m`.
    pub mesh_exponents: Vec<u32>,
    pub rhs: RhsSpec,
    pub outputs: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub precision_bits: Option<u32>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            alphas: vec![0.25, 0.5, 0.75],
            ks: vec![5, 6, 7],
            beta: 1,
            mesh_exponents: (5..=11).collect(),
            rhs: RhsSpec::f2(),
            outputs: PathBuf::from("out"),
            precision_bits: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(s: &str) -> Result<Self> {
        let c: Self = serde_json::from_str(s)?;
        c.validate()?;
        Ok(c)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.alphas.is_empty() || self.ks.is_empty() {
            return Err(BuraError::InvalidConfig("alphas and ks must be nonempty".into()));
        }
        for &a in &self.alphas {
            BuraParams::new(a, self.beta.max(1), 0, 0).map_err(|e| BuraError::InvalidConfig(e.to_string()))?;
        }
        if self.beta == 0 {
            return Err(BuraError::InvalidConfig("beta must be at least 1".into()));
        }
        if let Some(&m) = self.mesh_exponents.iter().find(|&&m| m == 0 || m > MAX_MESH_EXPONENT) {
            return Err(BuraError::InvalidConfig(format!(
                "mesh exponent {m} outside 1..={MAX_MESH_EXPONENT}"
            )));
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON encoding.
    pub fn hash(&self) -> String {
        sha256_hex(serde_json::to_string(self).unwrap_or_default().as_bytes())
    }

    fn remez_options(&self) -> RemezOptions {
        match self.precision_bits {
            Some(b) => RemezOptions::with_precision(b),
            None => RemezOptions::default(),
        }
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    let d = Sha256::digest(bytes);
    let mut s = String::with_capacity(64);
    for b in d.iter() {
        let _ = write!(s, "{b:02x}");
    }
    s
}

/// One `(alpha, k)` approximant and its decomposition.
#[derive(Clone, Debug)]
pub struct BuraEntry {
    pub alpha: f64,
    pub k: usize,
    pub approx: RationalApprox,
    pub pf: PartialFractionForm,
}

/// Computes the `(k, k, beta)` approximants for the config grid, one job per
/// pair, in parallel. Results follow `alphas x ks` order.
pub fn compute_approximants(cfg: &ExperimentConfig) -> Result<Vec<BuraEntry>> {
    cfg.validate()?;
    let jobs: Vec<(f64, usize)> = cfg.alphas.iter().flat_map(|&a| cfg.ks.iter().map(move |&k| (a, k))).collect();
    let opts = cfg.remez_options();
    par::map_slice(&jobs, |&(alpha, k)| -> Result<BuraEntry> {
        let params = BuraParams::new(alpha, cfg.beta, k, k)?;
        let approx = bura_compute(&params, &opts)?;
        let pf = partial_fractions(&approx)?;
        Ok(BuraEntry { alpha, k, approx, pf })
    })
    .into_iter()
    .collect()
}

/// Files written by a driver, name -> content, flushed together.
#[derive(Default)]
struct Bundle {
    files: BTreeMap<String, String>,
}

impl Bundle {
    fn add(&mut self, name: &str, content: String) {
        self.files.insert(name.to_string(), content);
    }

    fn write(self, dir: &Path, command: &str, cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        let mut hashes = BTreeMap::new();
        for (name, content) in &self.files {
            let p = dir.join(name);
            std::fs::write(&p, content)?;
            hashes.insert(name.clone(), sha256_hex(content.as_bytes()));
            written.push(p);
        }
        let manifest = serde_json::json!({
            "command": command,
            "package_version": env!("CARGO_PKG_VERSION"),
            "config": cfg,
            "config_sha256": cfg.hash(),
            "files": hashes,
        });
        let p = dir.join("manifest.json");
        std::fs::write(&p, serde_json::to_string_pretty(&manifest)? + "\n")?;
        written.push(p);
        Ok(written)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Table1Row {
    pub alpha: f64,
    pub k: usize,
    pub error: f64,
    pub stahl_bound: f64,
    pub certified: bool,
}

/// Minimax errors `E_alpha(k, k; beta)` over the config grid; writes
/// `table1.csv` with five significant digits.
pub fn run_table1(cfg: &ExperimentConfig) -> Result<Vec<Table1Row>> {
    let entries = compute_approximants(cfg)?;
    let rows: Vec<Table1Row> = entries
        .iter()
        .map(|e| Table1Row {
            alpha: e.alpha,
            k: e.k,
            error: e.approx.minimax_error,
            stahl_bound: stahl_bound(e.alpha, e.k),
            certified: check_positivity_conditions(&e.pf, &e.pf.params).certified,
        })
        .collect();
    let mut csv = String::from("alpha,k,E,stahl_bound,certified\n");
    for r in &rows {
        let _ = writeln!(csv, "{},{},{:.4e},{:.4e},{}", r.alpha, r.k, r.error, r.stahl_bound, r.certified);
    }
    let mut b = Bundle::default();
    b.add("table1.csv", csv);
    b.write(&cfg.outputs, "table1", cfg)?;
    Ok(rows)
}

/// `(4/h)^(2(1-alpha)) |sin pi(1-alpha)| exp(-2 pi sqrt((1-alpha) k))`.
pub fn mesh_error_bound(alpha: f64, k: usize, h: f64) -> f64 {
    let a = 1.0 - alpha;
    (4.0 / h).powf(2.0 * a) * (std::f64::consts::PI * a).sin().abs() * (-2.0 * std::f64::consts::PI * (a * k as f64).sqrt()).exp()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Table2Cell {
    pub mesh_exponent: u32,
    pub h: f64,
    pub alpha: f64,
    pub k: usize,
    /// `||u_{h,r} - u_h||_2 / ||f||_2`.
    pub rel_l2_error: f64,
    /// `||u_r - u||_{A^2} / ||f||_{A^0}` (unscaled).
    pub rel_energy_error: f64,
    pub mesh_error_bound: f64,
    pub below_bound: bool,
    /// `min(u_{h,r}) / max|u_{h,r}|`.
    pub min_over_max: f64,
}

struct MeshResult {
    cells: Vec<Table2Cell>,
    /// `(x, u_h, [u_{h,r} per entry])` kept only when requested.
    profiles: Option<(Vec<f64>, Vec<Vec<f64>>, Vec<Vec<f64>>)>,
}

/// Runs every approximant on one mesh; with `keep_profiles` the scaled exact
/// and approximate solutions are returned as well.
fn run_mesh(entries: &[BuraEntry], m: u32, rhs: &RhsSpec, keep_profiles: bool) -> Result<MeshResult> {
    let n = (1usize << m) - 1;
    let h = 1.0 / (n + 1) as f64;
    let a = laplacian_1d(n)?;
    let eig = EigenDecomposition::of(&a)?;
    let f = rhs.sample(n)?;
    let fnorm = norm2(&f);
    let cf = eig.forward(&f);
    let fa0 = eig.energy_norm_coeffs(0.0, &cf);
    let cfg = SolverConfig { parallel_shifted_solves: false, ..SolverConfig::for_matrix(&a) };
    let results = par::map_slice(entries, |e| -> Result<(Table2Cell, Vec<f64>, Vec<f64>)> {
        let u_r = apply_bura_inverse(&e.pf, &a, &f, &cfg)?.u_r;
        let cu = eig.forward(&u_r);
        let diff: Vec<f64> =
            cu.iter().zip(&cf).zip(&eig.eigenvalues).map(|((&u, &c), &l)| u - l.powf(-e.alpha) * c).collect();
        let scale = (h / 2.0).powf(2.0 * e.alpha);
        let l2 = scale * eig.energy_norm_coeffs(0.0, &diff);
        let rel_l2_error = if fnorm > 0.0 { l2 / fnorm } else { 0.0 };
        let en = eig.energy_norm_coeffs(2.0, &diff);
        let rel_energy_error = if fa0 > 0.0 { en / fa0 } else { 0.0 };
        let bound = mesh_error_bound(e.alpha, e.k, h);
        let umax = u_r.iter().fold(0.0f64, |s, v| s.max(v.abs()));
        let umin = u_r.iter().cloned().fold(f64::INFINITY, f64::min);
        let cell = Table2Cell {
            mesh_exponent: m,
            h,
            alpha: e.alpha,
            k: e.k,
            rel_l2_error,
            rel_energy_error,
            mesh_error_bound: bound,
            below_bound: rel_l2_error <= bound,
            min_over_max: if umax > 0.0 { umin / umax } else { 0.0 },
        };
        let (uh, uhr) = if keep_profiles {
            let u = eig.frac_apply(e.alpha, &f);
            (u.iter().map(|v| v * scale).collect(), u_r.iter().map(|v| v * scale).collect())
        } else {
            (Vec::new(), Vec::new())
        };
        Ok((cell, uh, uhr))
    });
    let mut cells = Vec::with_capacity(entries.len());
    let mut exact = Vec::new();
    let mut approx = Vec::new();
    for r in results {
        let (c, u, ur) = r?;
        cells.push(c);
        exact.push(u);
        approx.push(ur);
    }
    let profiles = keep_profiles.then(|| ((1..=n).map(|i| i as f64 * h).collect(), exact, approx));
    Ok(MeshResult { cells, profiles })
}

fn table2_csv(cells: &[Table2Cell]) -> String {
    let mut s = String::from("mesh_exponent,h,alpha,k,rel_l2_error,rel_energy_error,mesh_error_bound,below_bound,min_over_max\n");
    for c in cells {
        let _ = writeln!(
            s,
            "{},{:e},{},{},{:e},{:e},{:e},{},{:e}",
            c.mesh_exponent, c.h, c.alpha, c.k, c.rel_l2_error, c.rel_energy_error, c.mesh_error_bound, c.below_bound, c.min_over_max
        );
    }
    s
}

/// Relative l2 errors of the approximate discrete fractional Poisson solution
/// for every `(h, alpha, k)`; writes `table2.csv`.
pub fn run_table2(cfg: &ExperimentConfig) -> Result<Vec<Table2Cell>> {
    let entries = compute_approximants(cfg)?;
    let mut cells = Vec::new();
    for &m in &cfg.mesh_exponents {
        cells.extend(run_mesh(&entries, m, &cfg.rhs, false)?.cells);
    }
    let mut b = Bundle::default();
    b.add("table2.csv", table2_csv(&cells));
    b.write(&cfg.outputs, "table2", cfg)?;
    Ok(cells)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SlopeFit {
    pub alpha: f64,
    /// `None` for the fit pooled over all `k`.
    pub k: Option<usize>,
    pub slope: f64,
    pub expected: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Fig3Point {
    pub alpha: f64,
    pub k: usize,
    pub mesh_exponent: u32,
    pub h: f64,
    /// l2 relative error divided by the `A^2`-relative error.
    pub ratio: f64,
}

#[derive(Clone, Debug)]
pub struct FiguresOutput {
    pub fig3: Vec<Fig3Point>,
    pub slopes: Vec<SlopeFit>,
    /// Per `(alpha, k)` at the finest mesh: `max|u_{h,r} - u_h| / max|u_h|`.
    pub fig2_deviation: Vec<(f64, usize, f64)>,
    /// Smallest `min(u)/max|u|` over all figure-1 oracle solutions.
    pub fig1_min_over_max: f64,
}

/// Least-squares slope of `log2(ratio)` against `log2(h)`.
pub fn fit_slope(h: &[f64], ratio: &[f64]) -> f64 {
    let x: Vec<f64> = h.iter().map(|v| v.log2()).collect();
    let y: Vec<f64> = ratio.iter().map(|v| v.log2()).collect();
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

fn fmt_alpha(a: f64) -> String {
    format!("{a}").replace('.', "p")
}

/// Data for the three figures:
/// * `fig1.csv`: `f1`, `f2` and their exact fractional solutions on the finest mesh;
/// * `fig2_alpha<a>.csv`: exact and approximate solutions for `f1`, one column per `k`;
/// * `fig3.csv`, `fig3_slopes.csv`: error-ratio growth in `h` and its fitted slopes.
pub fn run_figures(cfg: &ExperimentConfig) -> Result<FiguresOutput> {
    let entries = compute_approximants(cfg)?;
    let finest = *cfg
        .mesh_exponents
        .iter()
        .max()
        .ok_or_else(|| BuraError::InvalidConfig("mesh_exponents must be nonempty".into()))?;
    let mut b = Bundle::default();

    // fig1: data and exact solutions.
    let n = (1usize << finest) - 1;
    let h = 1.0 / (n + 1) as f64;
    let eig = EigenDecomposition::analytic_laplacian(n);
    let data = [RhsSpec::f1().sample(n)?, RhsSpec::f2().sample(n)?];
    let mut header = String::from("x,f1,f2");
    let mut cols: Vec<Vec<f64>> = Vec::new();
    for (name, f) in ["f1", "f2"].iter().zip(&data) {
        for &a in &cfg.alphas {
            let _ = write!(header, ",u_{name}_alpha{}", fmt_alpha(a));
            let s = (h / 2.0).powf(2.0 * a);
            cols.push(eig.frac_apply(a, f).into_iter().map(|v| v * s).collect());
        }
    }
    let fig1_min_over_max = cols
        .iter()
        .map(|c| {
            let mx = c.iter().fold(0.0f64, |s, v| s.max(v.abs()));
            c.iter().cloned().fold(f64::INFINITY, f64::min) / mx
        })
        .fold(f64::INFINITY, f64::min);
    let mut s = header + "\n";
    for i in 0..n {
        let _ = write!(s, "{:e},{:e},{:e}", (i + 1) as f64 * h, data[0][i], data[1][i]);
        for c in &cols {
            let _ = write!(s, ",{:e}", c[i]);
        }
        s.push('\n');
    }
    b.add("fig1.csv", s);

    // fig2 and fig3 use f1.
    let f1spec = RhsSpec::f1();
    let mut fig3 = Vec::new();
    let mut fig2_deviation = Vec::new();
    for &m in &cfg.mesh_exponents {
        let res = run_mesh(&entries, m, &f1spec, m == finest)?;
        for c in &res.cells {
            fig3.push(Fig3Point {
                alpha: c.alpha,
                k: c.k,
                mesh_exponent: m,
                h: c.h,
                ratio: if c.rel_energy_error > 0.0 { c.rel_l2_error / c.rel_energy_error } else { 0.0 },
            });
        }
        if let Some((x, exact, approx)) = res.profiles {
            for &a in &cfg.alphas {
                let idx: Vec<usize> = (0..entries.len()).filter(|&i| entries[i].alpha == a).collect();
                let mut s = String::from("x,exact");
                for &i in &idx {
                    let _ = write!(s, ",k{}", entries[i].k);
                }
                s.push('\n');
                for j in 0..x.len() {
                    let _ = write!(s, "{:e},{:e}", x[j], exact[idx[0]][j]);
                    for &i in &idx {
                        let _ = write!(s, ",{:e}", approx[i][j]);
                    }
                    s.push('\n');
                }
                b.add(&format!("fig2_alpha{}.csv", fmt_alpha(a)), s);
                for &i in &idx {
                    let mx = exact[i].iter().fold(0.0f64, |s, v| s.max(v.abs()));
                    let dev = exact[i].iter().zip(&approx[i]).fold(0.0f64, |s, (u, v)| s.max((u - v).abs()));
                    fig2_deviation.push((a, entries[i].k, dev / mx));
                }
            }
        }
    }

    let mut slopes = Vec::new();
    for &a in &cfg.alphas {
        let expected = -2.0 * (1.0 - a);
        let pts: Vec<&Fig3Point> = fig3.iter().filter(|p| p.alpha == a).collect();
        for &k in &cfg.ks {
            let sel: Vec<&&Fig3Point> = pts.iter().filter(|p| p.k == k).collect();
            let hs: Vec<f64> = sel.iter().map(|p| p.h).collect();
            let rs: Vec<f64> = sel.iter().map(|p| p.ratio).collect();
            slopes.push(SlopeFit { alpha: a, k: Some(k), slope: fit_slope(&hs, &rs), expected });
        }
        let hs: Vec<f64> = pts.iter().map(|p| p.h).collect();
        let rs: Vec<f64> = pts.iter().map(|p| p.ratio).collect();
        slopes.push(SlopeFit { alpha: a, k: None, slope: fit_slope(&hs, &rs), expected });
    }

    let mut s = String::from("alpha,k,mesh_exponent,h,ratio\n");
    for p in &fig3 {
        let _ = writeln!(s, "{},{},{},{:e},{:e}", p.alpha, p.k, p.mesh_exponent, p.h, p.ratio);
    }
    b.add("fig3.csv", s);
    let mut s = String::from("alpha,k,slope,expected\n");
    for f in &slopes {
        let k = f.k.map_or("all".to_string(), |k| k.to_string());
        let _ = writeln!(s, "{},{},{:.6},{:.6}", f.alpha, k, f.slope, f.expected);
    }
    b.add("fig3_slopes.csv", s);
    b.write(&cfg.outputs, "figures", cfg)?;
    Ok(FiguresOutput { fig3, slopes, fig2_deviation, fig1_min_over_max })
}
