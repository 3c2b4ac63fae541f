//! Exit criteria. Each criterion prints one `PASS`/`FAIL` line; the process
//! exits non-zero if any criterion fails.

use std::error::Error;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use entcost::dilution::{self, CurtailedBinomial};
use entcost::entropy::{self, g_function};
use entcost::eof::{self, EofOptions};
use entcost::gibbs::{self, DiagonalHamiltonian};
use entcost::majorization;
use entcost::typicality::TypicalityMode;
use entcost::{rng, sampling, BipartiteState, CMatrix, Ensemble, PureBipartite, Spectrum};

type Check = Result<Outcome, Box<dyn Error>>;
type Criterion = (&'static str, fn() -> Check);

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self { pass, detail: detail.into() }
    }
}

const SEED: u64 = 20_240_601;

fn within(elapsed: Duration, limit_s: f64) -> bool {
    elapsed.as_secs_f64() < limit_s
}

fn integral_representation() -> Check {
    let start = Instant::now();
    let mut spectra = vec![Spectrum::pure(), Spectrum::uniform(1), Spectrum::uniform(2), Spectrum::uniform(64)];
    for i in 0..200 {
        let len = 1 + (rng::child_seed(SEED, i) % 64) as usize;
        spectra.push(sampling::random_spectrum(&mut rng::stream(SEED, i), len)?);
    }
    let (mut worst_rel, mut worst_quad) = (0.0f64, 0.0f64);
    for s in &spectra {
        let vn = entropy::von_neumann_entropy(s)?;
        let cf = entropy::entropy_integral_closed_form(s)?;
        let quad = entropy::entropy_integral_quadrature(s, 16)?;
        worst_rel = worst_rel.max((cf - vn).abs() / vn.max(1.0));
        worst_quad = worst_quad.max((quad - cf).abs());
    }
    let elapsed = start.elapsed();
    Ok(Outcome::new(
        worst_rel <= 1e-9 && worst_quad <= 1e-9 && within(elapsed, 5.0),
        format!(
            "{} spectra, closed-form rel dev {worst_rel:.2e}, quadrature dev {worst_quad:.2e}, {:.2}s",
            spectra.len(),
            elapsed.as_secs_f64()
        ),
    ))
}

fn majorization_sweep() -> Check {
    let start = Instant::now();
    let rep = majorization::majorization_sweep(1000, 6, SEED)?;
    let elapsed = start.elapsed();
    Ok(Outcome::new(
        rep.violations == 0 && rep.min_margin >= -1e-10 && within(elapsed, 60.0),
        format!("{} trials, {} violations, min margin {:.3e}, {:.2}s", rep.trials, rep.violations, rep.min_margin, elapsed.as_secs_f64()),
    ))
}

fn operator_sweeps() -> Check {
    let start = Instant::now();
    let sh = majorization::schur_horn_sweep(500, 16, SEED)?;
    let l1 = majorization::tail_sum_operator_sweep(500, 12, rng::child_seed(SEED, 1))?;
    let elapsed = start.elapsed();
    Ok(Outcome::new(
        sh.violations == 0 && sh.min_margin >= -1e-10 && l1.violations == 0 && l1.min_margin >= -1e-10 && within(elapsed, 30.0),
        format!(
            "schur-horn {} violations (min {:.3e}), tail-sum operator {} violations (min {:.3e}), {:.2}s",
            sh.violations,
            sh.min_margin,
            l1.violations,
            l1.min_margin,
            elapsed.as_secs_f64()
        ),
    ))
}

fn entropy_monotonicity() -> Check {
    let start = Instant::now();
    let rep = majorization::monotonicity_sweep(1000, 6, SEED)?;
    let elapsed = start.elapsed();
    Ok(Outcome::new(
        rep.violations == 0 && rep.min_margin >= -1e-9 && within(elapsed, 60.0),
        format!("{} trials, min margin {:.3e}, {:.2}s", rep.trials, rep.min_margin, elapsed.as_secs_f64()),
    ))
}

fn pure_dilution() -> Check {
    let delta = 0.05;
    let psi = dilution::schmidt_state(&[0.8, 0.2])?;
    let h = psi.entanglement_entropy();
    let mut first_below = None;
    let mut rate_ok = true;
    for n in 1..=2000u64 {
        let t = dilution::pure_dilution(&psi, delta, n, TypicalityMode::Exact)?;
        if first_below.is_none() && t.error < 0.1 {
            first_below = Some(n);
        }
        rate_ok &= t.rate <= h + delta + 1.0 / n as f64 + 1e-12;
    }
    let ebit = PureBipartite::ebit();
    let mut ebit_ok = true;
    for n in 1..=2000u64 {
        let t = dilution::pure_dilution(&ebit, delta, n, TypicalityMode::Exact)?;
        ebit_ok &= t.error == 0.0 && t.ebits == n;
    }
    Ok(Outcome::new(
        first_below.is_some() && rate_ok && ebit_ok,
        format!("error < 0.1 first at n = {first_below:?}, rate bound held: {rate_ok}, ebit exact: {ebit_ok}"),
    ))
}

fn wasteful_term() -> Check {
    let members = 61u64;
    let mut states = Vec::new();
    for x in 0..members {
        states.push(sampling::random_pure_state(&mut rng::stream(SEED, x), 4, 4)?);
    }
    let max_entropy = states.iter().map(PureBipartite::entanglement_entropy).fold(0.0, f64::max);
    let raw: Vec<f64> = (0..members).map(|x| 0.5f64.powi(x as i32)).collect();
    let total: f64 = raw.iter().sum();
    let ensemble = Ensemble::pure(raw.iter().map(|w| w / total).collect(), states)?;
    let terms: Vec<f64> = (0..=40)
        .map(|n| dilution::mixed_dilution_rate(&ensemble, n).map(|m| m.wasteful_term))
        .collect::<entcost::Result<_>>()?;
    let decreasing = terms.windows(2).all(|w| w[1] < w[0]);
    let first_below = terms.iter().position(|&t| t < 1e-3);
    Ok(Outcome::new(
        max_entropy <= 2.0 + 1e-12 && decreasing && first_below.is_some(),
        format!(
            "max member entropy {max_entropy:.3} bits, strictly decreasing: {decreasing}, below 1e-3 from N = {first_below:?}, at N = 40: {:.3e}",
            terms[40]
        ),
    ))
}

fn convexity_error() -> Check {
    let (p0, xi) = (0.3, 0.05);
    let mut found = None;
    for n in 1..=10_000u64 {
        let e = dilution::convexity_mixing_error(p0, xi, n)?;
        if e.raw_bound < 1e-2 {
            found = Some((n, e.raw_bound));
            break;
        }
    }
    let Some((n, err)) = found else {
        return Ok(Outcome::new(false, "error never fell below 1e-2 for n <= 10^4"));
    };
    let tv = CurtailedBinomial::new(p0, xi, n)?.empirical_tv(100_000, SEED);
    Ok(Outcome::new(tv <= 0.01, format!("2(1 - mass) = {err:.3e} first below 1e-2 at n = {n}, sampler TV over 1e5 draws {tv:.4}")))
}

fn gibbs_machinery() -> Check {
    let h = DiagonalHamiltonian::harmonic(1);
    let mut worst = 0.0f64;
    for e in [0.1, 1.0, 10.0, 100.0] {
        worst = worst.max((gibbs::f_h(&h, e)? - g_function(e)?).abs());
    }
    let grid: Vec<f64> = (0..=30).map(|i| 0.1 * 10f64.powf(i as f64 / 10.0)).collect();
    let probe = gibbs::f_h_sublinearity_probe(&h, &grid)?;
    let bounds: Vec<f64> = [1e-2, 1e-3, 1e-4]
        .iter()
        .map(|&eps| gibbs::one_sided_continuity_bound(&h, 1.0, eps))
        .collect::<entcost::Result<_>>()?;
    let bounds_decreasing = bounds.windows(2).all(|w| w[1] < w[0]);
    let assoc = gibbs::associated_hamiltonian(&Spectrum::new(vec![0.8, 0.2], 0.0)?)?;
    let second = assoc.hamiltonian.level_energy(1).unwrap_or(f64::NAN);
    let clauses = [
        ("F_H = g", worst <= 1e-8),
        ("F_H(E)/E decreasing", probe.top_decade_decreasing),
        ("continuity bound decreasing", bounds_decreasing),
        ("continuity bound < 0.02 at 1e-4", bounds[2] < 0.02),
        ("associated level", (second - 5.347).abs() <= 1e-3),
        ("beta-grid check", assoc.gibbs_hypothesis_holds()),
    ];
    let failed: Vec<&str> = clauses.iter().filter(|c| !c.1).map(|c| c.0).collect();
    Ok(Outcome::new(
        failed.is_empty(),
        format!(
            "max |F_H - g| {worst:.2e}, bound(E=1) over eps 1e-2..1e-4 = {bounds:.4?}, second level {second:.4}; failed: {failed:?}"
        ),
    ))
}

fn diagonal_state(p: &[f64], d: usize) -> entcost::Result<BipartiteState> {
    let dim = d * d;
    let mut m = CMatrix::zeros(dim, dim);
    for (i, &w) in p.iter().enumerate() {
        m[(i * d + i, i * d + i)] = entcost::linalg::c(w, 0.0);
    }
    BipartiteState::new(d, d, m)
}

fn eof_sanity() -> Check {
    let mut worst_pure = 0.0f64;
    for i in 0..50u64 {
        let mut r = rng::stream(SEED, i);
        let (da, db) = (1 + (i % 4) as usize, 1 + ((i / 4) % 4) as usize);
        let psi = sampling::random_pure_state(&mut r, da, db)?;
        let est = eof::eof_estimate(&psi.to_state(), 2, 2, i)?;
        worst_pure = worst_pure.max((est.upper_bound_bits - psi.entanglement_entropy()).abs());
    }
    let ebit = eof::eof_estimate(&PureBipartite::ebit().to_state(), 2, 2, SEED)?.upper_bound_bits;
    let mut worst_sep = 0.0f64;
    for i in 0..10u64 {
        let d = 2 + (i % 3) as usize;
        let p = sampling::random_spectrum(&mut rng::stream(SEED + 1, i), d)?;
        let est = eof::eof_estimate(&diagonal_state(p.values(), d)?, 2 * d, 2, i)?;
        worst_sep = worst_sep.max(est.upper_bound_bits);
    }
    let mut worst_gap = f64::NEG_INFINITY;
    for i in 0..3u64 {
        let mut r = rng::stream(SEED + 2, i);
        let rho = BipartiteState::new(2, 2, sampling::random_density(&mut r, 4, 2))?;
        let probe = eof::regularized_probe(&rho, 2, &EofOptions::new(4, 2, i))?;
        worst_gap = worst_gap.max(probe.per_copy_bits[1] - probe.per_copy_bits[0]);
    }
    Ok(Outcome::new(
        worst_pure <= 1e-6 && (ebit - 1.0).abs() <= 1e-6 && worst_sep <= 1e-6 && worst_gap <= 1e-6,
        format!(
            "pure dev {worst_pure:.2e}, ebit {ebit:.9}, separable max {worst_sep:.2e}, two-copy minus one-copy max {worst_gap:.2e}"
        ),
    ))
}

fn converse_consistency() -> Check {
    let rho = PureBipartite::ebit().to_state();
    let h = DiagonalHamiltonian::harmonic(1);
    let opts = EofOptions::new(2, 1, SEED);
    let reports: Vec<_> = [1e-2, 1e-3, 1e-4]
        .iter()
        .map(|&eps| dilution::converse_bound(&rho, 1.0, eps, &h, 1000, &opts))
        .collect::<entcost::Result<_>>()?;
    let subtracted = |c: &dilution::ConverseReport| (c.energy_term, c.g_term);
    let decreasing = reports.windows(2).all(|w| {
        let (a, b) = (subtracted(&w[0]), subtracted(&w[1]));
        b.0 < a.0 && b.1 < a.1
    });
    let rate = reports[2].rate_lower_bound;
    Ok(Outcome::new(
        rate > 1.0 - 0.02 && decreasing,
        format!(
            "rate lower bound at eps = 1e-4: {rate:.4} (energy term/copy {:.4}), subtracted terms decreasing: {decreasing}",
            reports[2].energy_term / 1000.0
        ),
    ))
}

fn config_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn reproducibility() -> Check {
    let out = std::env::temp_dir().join(format!("entcost-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&out)?;
    let mut configs: Vec<PathBuf> = std::fs::read_dir(config_dir())?
        .map(|e| e.map(|e| e.path()))
        .collect::<Result<_, _>>()?;
    configs.retain(|p| p.extension().is_some_and(|x| x == "json"));
    configs.sort();
    let mut mismatched = Vec::new();
    for cfg in &configs {
        let mut artifacts = Vec::new();
        for threads in [1, 4] {
            let path = out.join(format!("{}-{threads}", cfg.file_stem().unwrap().to_string_lossy()));
            let status = Command::new(env!("CARGO_BIN_EXE_entcost"))
                .arg("--config")
                .arg(cfg)
                .args(["--threads", &threads.to_string(), "--out"])
                .arg(&path)
                .status()?;
            artifacts.push((status.code(), std::fs::read(&path).unwrap_or_default()));
        }
        if artifacts[0] != artifacts[1] || artifacts[0].1.is_empty() {
            mismatched.push(cfg.file_name().unwrap().to_string_lossy().into_owned());
        }
    }
    std::fs::remove_dir_all(&out)?;
    Ok(Outcome::new(
        !configs.is_empty() && mismatched.is_empty(),
        format!("{} configs, threads 1 vs 4, mismatched: {mismatched:?}", configs.len()),
    ))
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("integral representation of entropy", integral_representation),
        ("majorization under product-Kraus instruments", majorization_sweep),
        ("schur-horn and tail-sum operator inequalities", operator_sweeps),
        ("entropy monotonicity under separable instruments", entropy_monotonicity),
        ("pure-state dilution convergence", pure_dilution),
        ("wasteful term vanishes", wasteful_term),
        ("convexity construction error and sampler", convexity_error),
        ("gibbs machinery", gibbs_machinery),
        ("entanglement of formation estimator", eof_sanity),
        ("converse chain consistency", converse_consistency),
        ("reproducible CLI artifacts", reproducibility),
    ];
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let (pass, detail) = match check() {
            Ok(o) => (o.pass, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failures += 1;
        }
        println!("{} {:>2} {name}: {detail}", if pass { "PASS" } else { "FAIL" }, i + 1);
    }
    println!("{} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
