//! End-to-end acceptance checks. Runs as a plain binary so that every
//! criterion prints exactly one PASS/FAIL line; exits non-zero if any fails.

use bura::experiments::{compute_approximants, run_figures, run_table2, BuraEntry, ExperimentConfig, RhsSpec};
use bura::matrix::{
    dense_inverse, is_m_matrix, is_monotone_dense, is_z_matrix, laplacian_1d, normalize, CsrMatrix, NormalizationBound,
    SparseSpdMatrix, TridiagonalLdl, tridiagonal_bands, tridiagonal_max_eigenvalue, DENSE_INVERSE_CAP,
};
use bura::rational::{
    check_positivity_conditions, stahl_bound, verify_equioscillation, zeros_poles_interlace, SPREAD_TOL,
};
use bura::solver::{apply_bura_inverse, verify_doubly_nonnegative, SolverConfig, DNN_CAP};
use bura::spectral::{exact_frac_apply, EigenDecomposition, SpectralOracle};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::{Duration, Instant};

const ALPHAS: [f64; 3] = [0.25, 0.5, 0.75];
const KS: [usize; 3] = [5, 6, 7];

/// Minimax errors E_alpha(k, k; 1), rows alpha, columns k.
const TABLE1: [[f64; 3]; 3] = [
    [2.8676e-5, 9.2522e-6, 3.2566e-6],
    [2.6896e-4, 1.0747e-4, 4.6037e-5],
    [2.7162e-3, 1.4312e-3, 7.8966e-4],
];

/// Relative l2 errors for f2, rows h = 2^-5 .. 2^-11, columns (alpha, k) in
/// alpha-major order.
const TABLE2: [[f64; 9]; 7] = [
    [6.3e-5, 1.2e-4, 7.5e-5, 1.9e-4, 3.1e-4, 1.0e-4, 8.5e-4, 3.5e-4, 2.1e-4],
    [6.8e-4, 2.1e-4, 1.2e-4, 9.3e-4, 6.2e-4, 2.6e-4, 3.0e-4, 7.3e-4, 1.9e-4],
    [4.9e-3, 9.9e-4, 2.2e-4, 3.2e-3, 1.3e-3, 5.5e-4, 1.6e-3, 1.0e-3, 6.6e-5],
    [1.2e-2, 4.9e-3, 1.0e-3, 5.0e-3, 2.4e-3, 1.0e-3, 2.7e-3, 6.7e-4, 4.4e-4],
    [3.7e-2, 9.6e-3, 4.9e-3, 5.6e-3, 1.3e-3, 1.2e-3, 8.2e-4, 1.3e-3, 1.1e-3],
    [2.1e-2, 3.6e-2, 9.5e-3, 2.4e-2, 8.8e-3, 1.4e-3, 5.8e-3, 3.0e-3, 1.5e-3],
    [1.9e-1, 2.3e-2, 3.6e-2, 4.2e-2, 1.4e-2, 8.9e-3, 1.6e-3, 9.9e-4, 4.3e-4],
];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn grid_index(alpha: f64, k: usize) -> (usize, usize) {
    (ALPHAS.iter().position(|&a| a == alpha).unwrap(), KS.iter().position(|&x| x == k).unwrap())
}

fn rel_max_diff(a: &[f64], b: &[f64]) -> f64 {
    let scale = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs())) / scale
}

fn table1(entries: &[BuraEntry], elapsed: Duration) -> Outcome {
    let mut worst = 0.0f64;
    for e in entries {
        let (i, j) = grid_index(e.alpha, e.k);
        worst = worst.max((e.approx.minimax_error - TABLE1[i][j]).abs() / TABLE1[i][j]);
    }
    outcome(
        worst <= 0.01 && elapsed.as_secs_f64() <= 60.0,
        format!("max relative deviation {worst:.2e} (<= 1e-2), {:.2} s (<= 60 s)", elapsed.as_secs_f64()),
    )
}

fn equioscillation(entries: &[BuraEntry]) -> Outcome {
    let mut ok = true;
    let mut worst = 0.0f64;
    let mut notes = Vec::new();
    for e in entries {
        match verify_equioscillation(&e.approx) {
            Ok(r) => {
                worst = worst.max(r.spread);
                let good = r.points.len() == 2 * e.k + 2 && r.alternation_ok && r.spread <= SPREAD_TOL;
                if !good {
                    notes.push(format!("({}, {})", e.alpha, e.k));
                }
                ok &= good;
            }
            Err(err) => {
                ok = false;
                notes.push(format!("({}, {}): {err}", e.alpha, e.k));
            }
        }
    }
    outcome(ok, format!("2k+2 alternating extrema, max spread {worst:.2e} (<= 1e-6) {}", notes.join(" ")))
}

fn inverse_part_identities(entries: &[BuraEntry]) -> Outcome {
    let mut c0_dev = 0.0f64;
    let mut res_dev = 0.0f64;
    for e in entries {
        let err = e.pf.minimax_error;
        c0_dev = c0_dev.max((e.pf.inverse_part[0] - err).abs() / err);
        let diag = e.pf.diagnostics.as_ref().expect("computed decomposition carries diagnostics");
        for ((c, d), cs) in e.pf.residues.iter().zip(&e.pf.poles).zip(&diag.r_residues) {
            res_dev = res_dev.max((c * d - cs).abs() / cs.abs());
        }
    }
    outcome(
        c0_dev <= 1e-8 && res_dev <= 1e-8,
        format!("max |c01 - E|/E = {c0_dev:.2e}, max |c_j d_j - c*_j|/|c*_j| = {res_dev:.2e} (<= 1e-8)"),
    )
}

fn sign_structure(entries: &[BuraEntry]) -> Outcome {
    let bad: Vec<String> = entries
        .iter()
        .filter(|e| {
            let c = check_positivity_conditions(&e.pf, &e.pf.params);
            !(c.certified && c.d_negative && c.residues_positive && zeros_poles_interlace(&e.pf))
        })
        .map(|e| format!("({}, {})", e.alpha, e.k))
        .collect();
    outcome(bad.is_empty(), format!("d < 0, c > 0, interlacing, certified for {}/9 {}", 9 - bad.len(), bad.join(" ")))
}

fn asymptotic_bound(entries: &[BuraEntry]) -> Outcome {
    let worst = entries
        .iter()
        .map(|e| e.approx.minimax_error / stahl_bound(e.alpha, e.k))
        .fold(0.0f64, f64::max);
    outcome(worst <= 1.0, format!("max E / bound = {worst:.3} (<= 1)"))
}

fn energy_bound(entries: &[BuraEntry]) -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut worst = 0.0f64;
    let mut failures = 0usize;
    let mut checks = 0usize;
    for n in [255usize, 511, 1023, 2047] {
        let a = laplacian_1d(n).unwrap();
        let oracle = SpectralOracle::new(&a).unwrap();
        let cfg = SolverConfig::for_matrix(&a);
        let mut rhs = vec![RhsSpec::f1().sample(n).unwrap(), RhsSpec::f2().sample(n).unwrap()];
        for _ in 0..5 {
            rhs.push((0..n).map(|_| rng.random_range(-1.0..1.0)).collect());
        }
        for e in entries {
            for f in &rhs {
                let u_r = apply_bura_inverse(&e.pf, &a, f, &cfg).unwrap().u_r;
                for gamma in [0.0, 1.0] {
                    let r = oracle.report_for(&e.pf, e.alpha, f, &u_r, gamma).unwrap();
                    checks += 1;
                    worst = worst.max(r.ratio / r.bound_e);
                    failures += usize::from(!r.bound_satisfied);
                }
            }
        }
    }
    let t = start.elapsed().as_secs_f64();
    outcome(
        failures == 0 && t <= 300.0,
        format!("{checks} checks, {failures} violations, max ratio/E = {worst:.4}, {t:.2} s (<= 300 s)"),
    )
}

fn doubly_nonnegative(entries: &[BuraEntry]) -> Outcome {
    let mut ok = true;
    let mut worst_min = f64::INFINITY;
    let mut worst_sym = 0.0f64;
    for n in [100usize, 255] {
        let a = laplacian_1d(n).unwrap();
        for e in entries {
            let r = verify_doubly_nonnegative(&e.pf, &a, DNN_CAP).unwrap();
            ok &= r.min_entry >= -1e-12 * r.max_entry && r.symmetry_defect <= 1e-12;
            worst_min = worst_min.min(r.min_entry / r.max_entry);
            worst_sym = worst_sym.max(r.symmetry_defect);
        }
    }
    outcome(ok, format!("min entry / max entry >= {worst_min:.3e}, symmetry defect <= {worst_sym:.2e}"))
}

fn monotonicity_fixtures() -> Outcome {
    let a1 = CsrMatrix::from_dense(&[&[-1.0, 3.0], &[2.0, -4.0]]).unwrap();
    let a2 = CsrMatrix::from_dense(&[&[5.0, 3.0], &[2.0, 2.0]]).unwrap();
    let inv1 = dense_inverse(&a1, DENSE_INVERSE_CAP).unwrap();
    let inv1_ok = [[2.0, 1.5], [1.0, 0.5]]
        .iter()
        .enumerate()
        .all(|(i, r)| r.iter().enumerate().all(|(j, &v)| (inv1[(i, j)] - v).abs() <= 1e-15));
    let e11 = inv1_ok && is_monotone_dense(&a1, DENSE_INVERSE_CAP).unwrap() && !is_m_matrix(&a1).unwrap();
    let e12 = !is_monotone_dense(&a2, DENSE_INVERSE_CAP).unwrap();

    let lap = laplacian_1d(63).unwrap();
    let lap_ok = lap.matrix.is_m_matrix();
    let t = SparseSpdMatrix::new(CsrMatrix::tridiagonal(63, -1.0, 2.0).unwrap()).unwrap();
    let tri_ok = t.is_m_matrix() && is_z_matrix(t.csr());
    let norm_ok = [NormalizationBound::Gershgorin, NormalizationBound::Exact].into_iter().all(|b| {
        let nm = normalize(&t, b).unwrap();
        let (d, e) = tridiagonal_bands(nm.csr());
        // spectrum inside (0, 1]
        nm.matrix.is_m_matrix() && tridiagonal_max_eigenvalue(&d, &e) <= 1.0
    });
    outcome(
        e11 && e12 && lap_ok && tri_ok && norm_ok,
        format!("monotone non-M 2x2 {e11}, shifted 2x2 not monotone {e12}, laplacian {lap_ok}, tridiag(-1,2,-1) {tri_ok}, normalized {norm_ok}"),
    )
}

fn table2_and_slopes() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig { outputs: dir.path().join("table2"), ..ExperimentConfig::default() };
    let cells = run_table2(&cfg).unwrap();
    let mut worst_factor = 1.0f64;
    let mut above = 0usize;
    for c in &cells {
        let (i, j) = grid_index(c.alpha, c.k);
        let printed = TABLE2[(c.mesh_exponent - 5) as usize][3 * i + j];
        let f = (c.rel_l2_error / printed).max(printed / c.rel_l2_error);
        worst_factor = worst_factor.max(f);
        above += usize::from(!c.below_bound);
    }
    let cells_ok = cells.len() == 63 && worst_factor <= 2.0 && above == 0;

    let cfg = ExperimentConfig { outputs: dir.path().join("figures"), ..ExperimentConfig::default() };
    let figs = run_figures(&cfg).unwrap();
    let pooled: Vec<_> = figs.slopes.iter().filter(|s| s.k.is_none()).collect();
    let slopes_ok = pooled.len() == 3 && pooled.iter().all(|s| (s.slope - s.expected).abs() <= 0.2);
    let per_k_dev = figs.slopes.iter().filter(|s| s.k.is_some()).map(|s| (s.slope - s.expected).abs()).fold(0.0, f64::max);
    let slopes: Vec<String> = pooled.iter().map(|s| format!("{:.3}/{:.1}", s.slope, s.expected)).collect();
    outcome(
        cells_ok && slopes_ok,
        format!(
            "{} cells, worst factor {worst_factor:.3} (<= 2), {above} above bound; slopes per alpha {} (+-0.2), per (alpha, k) max dev {per_k_dev:.3}",
            cells.len(),
            slopes.join(", ")
        ),
    )
}

fn oracle_consistency() -> Outcome {
    let mut semigroup = 0.0f64;
    let mut direct = 0.0f64;
    for n in [64usize, 255, 512] {
        let a = laplacian_1d(n).unwrap();
        let eig = EigenDecomposition::of(&a).unwrap();
        let f: Vec<f64> = (0..n).map(|i| ((i * 7919) % 101) as f64 / 101.0 - 0.3).collect();
        for (a1, a2) in [(0.25, 0.5), (0.3, 0.45), (0.5, 0.5), (0.1, 0.85)] {
            let two = eig.frac_apply(a2, &eig.frac_apply(a1, &f));
            let one = exact_frac_apply(&a, a1 + a2, &f).unwrap();
            semigroup = semigroup.max(rel_max_diff(&two, &one));
        }
        let (d, e) = tridiagonal_bands(a.csr());
        let x = TridiagonalLdl::factor(&d, &e, 0.0).unwrap().solve(&f);
        direct = direct.max(rel_max_diff(&exact_frac_apply(&a, 1.0, &f).unwrap(), &x));
    }
    // a general (non-tridiagonal) SPD M-matrix exercises the dense eigensolver
    let n = 144;
    let mut t = Vec::new();
    for i in 0..12 {
        for j in 0..12 {
            let p = 12 * i + j;
            t.push((p, p, 4.0));
            if j > 0 {
                t.push((p, p - 1, -1.0));
                t.push((p - 1, p, -1.0));
            }
            if i > 0 {
                t.push((p, p - 12, -1.0));
                t.push((p - 12, p, -1.0));
            }
        }
    }
    let g = normalize(&SparseSpdMatrix::new(CsrMatrix::from_triplets(n, &t).unwrap()).unwrap(), NormalizationBound::Exact).unwrap();
    let f: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
    let eig = EigenDecomposition::of(&g).unwrap();
    semigroup = semigroup.max(rel_max_diff(&eig.frac_apply(0.4, &eig.frac_apply(0.35, &f)), &eig.frac_apply(0.75, &f)));
    let inv = dense_inverse(g.csr(), DENSE_INVERSE_CAP).unwrap();
    let x: Vec<f64> = (0..n).map(|i| (0..n).map(|j| inv[(i, j)] * f[j]).sum()).collect();
    direct = direct.max(rel_max_diff(&eig.frac_apply(1.0, &f), &x));
    outcome(
        semigroup <= 1e-10 && direct <= 1e-11,
        format!("semigroup defect {semigroup:.2e} (<= 1e-10), alpha = 1 vs direct solve {direct:.2e} (<= 1e-11)"),
    )
}

fn main() {
    // `cargo test` passes harness flags such as `--nocapture`; none apply here.
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let cfg = ExperimentConfig::default();
    let start = Instant::now();
    let entries = compute_approximants(&cfg).expect("approximants");
    let elapsed = start.elapsed();

    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome + '_>)> = vec![
        ("table 1 minimax errors", Box::new(|| table1(&entries, elapsed))),
        ("equioscillation", Box::new(|| equioscillation(&entries))),
        ("inverse-part and residue identities", Box::new(|| inverse_part_identities(&entries))),
        ("sign structure and interlacing", Box::new(|| sign_structure(&entries))),
        ("asymptotic error bound", Box::new(|| asymptotic_bound(&entries))),
        ("energy-norm error bound", Box::new(|| energy_bound(&entries))),
        ("double nonnegativity", Box::new(|| doubly_nonnegative(&entries))),
        ("monotonicity fixtures", Box::new(monotonicity_fixtures)),
        ("table 2 and error-ratio slopes", Box::new(table2_and_slopes)),
        ("spectral oracle consistency", Box::new(oracle_consistency)),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        failed += usize::from(!o.pass);
        println!("criterion {:>2} {}: {} - {}", i + 1, if o.pass { "PASS" } else { "FAIL" }, name, o.detail);
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
