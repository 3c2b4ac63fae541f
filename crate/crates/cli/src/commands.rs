//! One function per subcommand: typed params in, artifact out.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use entcost::dilution::{self, CurtailedBinomial};
use entcost::entropy::{self, Bits};
use entcost::eof::{self, EofOptions};
use entcost::gibbs::{self, Beta, DiagonalHamiltonian};
use entcost::majorization::{self, SweepReport};
use entcost::spectra::MatrixJson;
use entcost::typicality::{self, ModeReport, SourceDistribution, TypicalKind, TypicalityMode};
use entcost::{rng, BipartiteState, CMatrix, Ensemble, PureBipartite, Spectrum};

use crate::config::CommandName;
use crate::error::{CliError, CliResult};
use crate::output::{Artifact, Cell, Table};

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T> OneOrMany<T> {
    fn into_vec(self) -> Vec<T> {
        match self {
            OneOrMany::One(x) => vec![x],
            OneOrMany::Many(v) => v,
        }
    }
}

fn parse<T: DeserializeOwned>(params: &Value) -> CliResult<T> {
    serde_json::from_value(params.clone()).map_err(|e| CliError::Schema(format!("params: {e}")))
}

pub fn run(command: CommandName, params: &Value, seed: u64) -> CliResult<Artifact> {
    match command {
        CommandName::Entropy => entropy_cmd(parse(params)?),
        CommandName::Typicality => typicality_cmd(parse(params)?, seed),
        CommandName::Eof => eof_cmd(parse(params)?, seed),
        CommandName::DilutePure => dilute_pure_cmd(parse(params)?, seed),
        CommandName::DiluteMixed => dilute_mixed_cmd(parse(params)?, seed),
        CommandName::ConverseBound => converse_cmd(parse(params)?, seed),
        CommandName::MajorizationCheck => majorization_cmd(parse(params)?, seed),
        CommandName::Gibbs => gibbs_cmd(parse(params)?),
    }
}

fn state_from(state: Option<BipartiteState>, pure: Option<PureBipartite>, schmidt: Option<Vec<f64>>) -> CliResult<BipartiteState> {
    match (state, pure, schmidt) {
        (Some(s), None, None) => Ok(s),
        (None, Some(p), None) => Ok(p.to_state()),
        (None, None, Some(s)) => Ok(dilution::schmidt_state(&s)?.to_state()),
        _ => Err(CliError::Schema("give exactly one of `state`, `pure`, `schmidt`".into())),
    }
}

// ---------------------------------------------------------------- entropy

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EntropyParams {
    spectrum: Spectrum,
    #[serde(default)]
    tail_levels: Option<u64>,
    #[serde(default = "default_nodes")]
    quadrature_nodes: usize,
}

fn default_nodes() -> usize {
    16
}

#[derive(Serialize)]
struct EntropyResult {
    entropy_bits: f64,
    tail_uncertainty_bits: Bits,
    closed_form_bits: Option<f64>,
    quadrature_bits: Option<f64>,
}

fn entropy_cmd(p: EntropyParams) -> CliResult<Artifact> {
    let report = entropy::entropy_report(&p.spectrum, p.tail_levels)?;
    let resolved = p.spectrum.tail_mass() == 0.0 && p.spectrum.is_normalized();
    let closed_form_bits = resolved.then(|| entropy::entropy_integral_closed_form(&p.spectrum)).transpose()?;
    let quadrature_bits = resolved
        .then(|| entropy::entropy_integral_quadrature(&p.spectrum, p.quadrature_nodes))
        .transpose()?;
    let mut t = Table::new(&["entropy_bits", "tail_uncertainty_bits", "closed_form_bits", "quadrature_bits"]);
    t.push(vec![
        report.entropy_bits.into(),
        report.tail_uncertainty_bits.finite().unwrap_or(f64::INFINITY).into(),
        closed_form_bits.into(),
        quadrature_bits.into(),
    ]);
    Artifact::new(
        EntropyResult {
            entropy_bits: report.entropy_bits,
            tail_uncertainty_bits: report.tail_uncertainty_bits,
            closed_form_bits,
            quadrature_bits,
        },
        t,
    )
}

// ------------------------------------------------------------- typicality

#[derive(Deserialize, Clone, Copy, PartialEq, Eq, Default)]
#[serde(rename_all = "lowercase")]
enum ModeName {
    #[default]
    Exact,
    Mc,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TypicalityParams {
    dist: Vec<f64>,
    n: OneOrMany<u64>,
    delta: f64,
    #[serde(default)]
    kind: Option<TypicalKind>,
    #[serde(default)]
    mode: ModeName,
    #[serde(default = "default_samples")]
    samples: u64,
}

fn default_samples() -> u64 {
    100_000
}

fn mode_for(name: ModeName, samples: u64, seed: u64, index: usize) -> TypicalityMode {
    match name {
        ModeName::Exact => TypicalityMode::Exact,
        ModeName::Mc => TypicalityMode::MonteCarlo { samples, seed: rng::child_seed(seed, index as u64) },
    }
}

fn typicality_cmd(p: TypicalityParams, seed: u64) -> CliResult<Artifact> {
    let dist = SourceDistribution::new(p.dist)?;
    let kind = p.kind.unwrap_or(TypicalKind::Weak);
    let mut t = Table::new(&["n", "kind", "delta", "mass", "atypical_mass", "log2_cardinality_bound", "ci_low", "ci_high"]);
    let mut reports = Vec::new();
    let mut aep = Vec::new();
    for (i, n) in p.n.into_vec().into_iter().enumerate() {
        let mode = mode_for(p.mode, p.samples, seed, i);
        let r = match kind {
            TypicalKind::Weak => typicality::weak_typical_mass(&dist, n, p.delta, mode)?,
            TypicalKind::Strong => typicality::strong_typical_mass(&dist, n, p.delta, mode)?,
        };
        let (lo, hi) = match r.report {
            ModeReport::MonteCarlo { ci_low, ci_high, .. } => (Some(ci_low), Some(ci_high)),
            ModeReport::Exact { .. } => (None, None),
        };
        t.push(vec![
            n.into(),
            if kind == TypicalKind::Weak { "weak" } else { "strong" }.into(),
            p.delta.into(),
            r.mass.into(),
            r.atypical_mass.into(),
            r.log2_cardinality_bound.into(),
            lo.into(),
            hi.into(),
        ]);
        if kind == TypicalKind::Weak && p.mode == ModeName::Exact {
            aep.push(json!({ "n": n, "holds": typicality::aep_bounds_check(&dist, n, p.delta)? }));
        }
        reports.push(r);
    }
    let mut a = Artifact::new(json!({ "entropy_bits": dist.entropy_bits(), "reports": reports, "aep": aep }), t)?;
    if aep.iter().any(|x| x["holds"] == false) {
        a.failure = Some("AEP bounds violated on a typical type".into());
    }
    Ok(a)
}

// -------------------------------------------------------------------- eof

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EofParams {
    #[serde(default)]
    state: Option<BipartiteState>,
    #[serde(default)]
    pure: Option<PureBipartite>,
    #[serde(default)]
    schmidt: Option<Vec<f64>>,
    #[serde(default)]
    ensemble_size: Option<usize>,
    #[serde(default = "default_restarts")]
    restarts: usize,
    #[serde(default)]
    anneal_sweeps: Option<usize>,
    #[serde(default)]
    polish_sweeps: Option<usize>,
    #[serde(default = "one")]
    n_max: usize,
}

fn default_restarts() -> usize {
    4
}

fn one() -> usize {
    1
}

fn rank_of(rho: &BipartiteState) -> usize {
    rho.spectrum().values().iter().filter(|&&v| v > 1e-13).count().max(1)
}

fn eof_options(
    rho: &BipartiteState,
    ensemble_size: Option<usize>,
    restarts: usize,
    seed: u64,
    anneal: Option<usize>,
    polish: Option<usize>,
) -> EofOptions {
    let mut o = EofOptions::new(ensemble_size.unwrap_or(2 * rank_of(rho)), restarts, seed);
    if let Some(a) = anneal {
        o.anneal_sweeps = a;
    }
    if let Some(p) = polish {
        o.polish_sweeps = p;
    }
    o
}

fn eof_cmd(p: EofParams, seed: u64) -> CliResult<Artifact> {
    let rho = state_from(p.state, p.pure, p.schmidt)?;
    let opts = eof_options(&rho, p.ensemble_size, p.restarts, seed, p.anneal_sweeps, p.polish_sweeps);
    let probe = eof::regularized_probe(&rho, p.n_max, &opts)?;
    let est = &probe.estimates[0];
    let mut t = Table::new(&["restart", "upper_bound_bits"]);
    for (i, v) in est.restart_values.iter().enumerate() {
        t.push(vec![i.into(), (*v).into()]);
    }
    let mut a = Artifact::new(json!({ "estimate": est, "per_copy_bits": probe.per_copy_bits }), t)?;
    if p.n_max == 2 && probe.per_copy_bits[1] > probe.per_copy_bits[0] + 1e-6 {
        a.failure = Some("two-copy bound exceeds the one-copy bound".into());
    }
    Ok(a)
}

// ------------------------------------------------------------ dilute-pure

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DilutePureParams {
    #[serde(default)]
    schmidt: Option<Vec<f64>>,
    #[serde(default)]
    pure: Option<PureBipartite>,
    delta: f64,
    n: OneOrMany<u64>,
    #[serde(default)]
    mode: ModeName,
    #[serde(default = "default_samples")]
    samples: u64,
}

fn dilute_pure_cmd(p: DilutePureParams, seed: u64) -> CliResult<Artifact> {
    let psi = match (p.pure, p.schmidt) {
        (Some(psi), None) => psi,
        (None, Some(s)) => dilution::schmidt_state(&s)?,
        _ => return Err(CliError::Schema("give exactly one of `pure`, `schmidt`".into())),
    };
    let mut t = Table::new(&["n", "ebits", "cbits", "error", "rate", "error_kind"]);
    let mut traces = Vec::new();
    for (i, n) in p.n.into_vec().into_iter().enumerate() {
        let tr = dilution::pure_dilution(&psi, p.delta, n, mode_for(p.mode, p.samples, seed, i))?;
        t.push(vec![
            tr.n.into(),
            tr.ebits.into(),
            tr.cbits.into(),
            tr.error.into(),
            tr.rate.into(),
            if tr.error_kind == dilution::ErrorKind::Exact { "exact" } else { "bound" }.into(),
        ]);
        traces.push(tr);
    }
    let s = psi.entanglement_entropy();
    let mut a = Artifact::new(json!({ "entropy_bits": s, "delta": p.delta, "traces": traces }), t)?;
    if let Some(bad) = traces.iter().find(|tr| tr.rate > s + p.delta + 1.0 / tr.n as f64 + 1e-12) {
        a.failure = Some(format!("rate {} exceeds S + delta + 1/n at n = {}", bad.rate, bad.n));
    }
    Ok(a)
}

// ----------------------------------------------------------- dilute-mixed

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MemberParams {
    weight: f64,
    #[serde(default)]
    schmidt: Option<Vec<f64>>,
    #[serde(default)]
    amplitudes: Option<MatrixJson>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MixingParams {
    p0: f64,
    xi: f64,
    n: OneOrMany<u64>,
    #[serde(default)]
    tv_samples: Option<u64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DiluteMixedParams {
    members: Vec<MemberParams>,
    #[serde(default)]
    n_cut: Option<OneOrMany<usize>>,
    #[serde(default)]
    mixing: Option<MixingParams>,
}

fn build_ensemble(members: Vec<MemberParams>) -> CliResult<Ensemble> {
    let width = members.iter().filter_map(|m| m.schmidt.as_ref().map(Vec::len)).max().unwrap_or(0);
    let mut weights = Vec::new();
    let mut states = Vec::new();
    for m in members {
        let psi = match (m.schmidt, m.amplitudes) {
            (Some(mut s), None) => {
                s.resize(width, 0.0);
                dilution::schmidt_state(&s)?
            }
            (None, Some(a)) => PureBipartite::new(CMatrix::try_from(&a)?)?,
            _ => return Err(CliError::Schema("each member needs exactly one of `schmidt`, `amplitudes`".into())),
        };
        weights.push(m.weight);
        states.push(psi);
    }
    Ok(Ensemble::pure(weights, states)?)
}

fn dilute_mixed_cmd(p: DiluteMixedParams, seed: u64) -> CliResult<Artifact> {
    let ensemble = build_ensemble(p.members)?;
    let cuts = p.n_cut.map_or_else(|| (0..ensemble.len()).collect(), OneOrMany::into_vec);
    let mut t = Table::new(&["n_cut", "delta_n", "common_term", "wasteful_term", "rate_bound"]);
    let mut rows = Vec::new();
    for cut in cuts {
        let m = dilution::mixed_dilution_rate(&ensemble, cut)?;
        t.push(vec![cut.into(), m.delta_n.into(), m.common_term.into(), m.wasteful_term.into(), m.rate_bound.into()]);
        rows.push(m);
    }
    let mut mixing = Vec::new();
    if let Some(mx) = p.mixing {
        for (i, n) in mx.n.into_vec().into_iter().enumerate() {
            let e = dilution::convexity_mixing_error(mx.p0, mx.xi, n)?;
            let tv = match mx.tv_samples {
                Some(s) if e.mass > 0.0 => Some(CurtailedBinomial::new(mx.p0, mx.xi, n)?.empirical_tv(s, rng::child_seed(seed, i as u64))),
                _ => None,
            };
            mixing.push(json!({ "n": n, "error": e, "sampler_tv": tv }));
        }
    }
    Artifact::new(
        json!({
            "decomposition_rate_bits": eof::dilution_rate_upper_bound(&ensemble)?,
            "splits": rows,
            "mixing": mixing,
        }),
        t,
    )
}

// --------------------------------------------------------- converse-bound

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ConverseParams {
    #[serde(default)]
    state: Option<BipartiteState>,
    #[serde(default)]
    pure: Option<PureBipartite>,
    #[serde(default)]
    schmidt: Option<Vec<f64>>,
    r: f64,
    epsilon: OneOrMany<f64>,
    n: u64,
    #[serde(default)]
    hamiltonian: Option<DiagonalHamiltonian>,
    #[serde(default)]
    ensemble_size: Option<usize>,
    #[serde(default = "default_restarts")]
    restarts: usize,
}

fn converse_cmd(p: ConverseParams, seed: u64) -> CliResult<Artifact> {
    let rho = state_from(p.state, p.pure, p.schmidt)?;
    let h = p.hamiltonian.unwrap_or_else(|| DiagonalHamiltonian::harmonic(1));
    let opts = eof_options(&rho, p.ensemble_size, p.restarts, seed, None, None);
    let mut t = Table::new(&[
        "epsilon",
        "epsilon_prime",
        "energy",
        "lhs",
        "eof_surrogate",
        "energy_term",
        "g_term",
        "rhs",
        "slack",
        "rate_lower_bound",
    ]);
    let mut reports = Vec::new();
    for eps in p.epsilon.into_vec() {
        let c = dilution::converse_bound(&rho, p.r, eps, &h, p.n, &opts)?;
        t.push(vec![
            c.epsilon.into(),
            c.epsilon_prime.into(),
            c.energy.into(),
            c.lhs.into(),
            c.eof_surrogate.into(),
            c.energy_term.into(),
            c.g_term.into(),
            c.rhs.into(),
            c.slack.into(),
            c.rate_lower_bound.into(),
        ]);
        reports.push(c);
    }
    Artifact::new(json!({ "hamiltonian": h, "reports": reports }), t)
}

// ----------------------------------------------------- majorization-check

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MajorizationParams {
    #[serde(default = "default_trials")]
    pub trials: u64,
    #[serde(default = "default_max_dim")]
    pub max_dim: usize,
    #[serde(default = "default_schur_dim")]
    pub schur_horn_max_dim: usize,
    #[serde(default = "default_tail_sum_dim")]
    pub tail_sum_max_dim: usize,
    #[serde(default)]
    pub checks: Option<Vec<String>>,
}

fn default_trials() -> u64 {
    1000
}
fn default_max_dim() -> usize {
    6
}
fn default_schur_dim() -> usize {
    16
}
fn default_tail_sum_dim() -> usize {
    12
}

fn majorization_cmd(p: MajorizationParams, seed: u64) -> CliResult<Artifact> {
    let all = ["majorization", "schur_horn", "tail_sum_operator", "monotonicity"];
    let checks = p.checks.unwrap_or_else(|| all.iter().map(|s| s.to_string()).collect());
    let mut sweeps: Vec<SweepReport> = Vec::new();
    for (i, name) in checks.iter().enumerate() {
        let s = rng::child_seed(seed, i as u64);
        let rep = match name.as_str() {
            "majorization" => majorization::majorization_sweep(p.trials, p.max_dim, s)?,
            "schur_horn" => majorization::schur_horn_sweep(p.trials, p.schur_horn_max_dim, s)?,
            "tail_sum_operator" => majorization::tail_sum_operator_sweep(p.trials, p.tail_sum_max_dim, s)?,
            "monotonicity" => majorization::monotonicity_sweep(p.trials, p.max_dim, s)?,
            other => return Err(CliError::Schema(format!("unknown check {other:?}; expected one of {all:?}"))),
        };
        sweeps.push(rep);
    }
    let failures: u64 = sweeps.iter().map(|s| s.violations).sum();
    let min_margin = sweeps.iter().map(|s| s.min_margin).fold(f64::INFINITY, f64::min);
    let mut t = Table::new(&["check", "trials", "violations", "min_margin"]);
    for s in &sweeps {
        t.push(vec![s.name.clone().into(), s.trials.into(), s.violations.into(), s.min_margin.into()]);
    }
    let mut a = Artifact::new(json!({ "min_margin": min_margin, "failures": failures, "sweeps": sweeps }), t)?;
    if failures > 0 {
        a.failure = Some(format!("{failures} trials violated a majorization inequality"));
    }
    Ok(a)
}

// ------------------------------------------------------------------ gibbs

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GibbsParams {
    #[serde(default)]
    hamiltonian: Option<DiagonalHamiltonian>,
    energies: Vec<f64>,
    #[serde(default)]
    epsilon: Option<Vec<f64>>,
    #[serde(default)]
    associated_spectrum: Option<Spectrum>,
}

fn gibbs_cmd(p: GibbsParams) -> CliResult<Artifact> {
    let h = p.hamiltonian.unwrap_or_else(|| DiagonalHamiltonian::harmonic(1));
    let mut t = Table::new(&["energy", "beta", "entropy_bits", "ratio"]);
    let mut points = Vec::new();
    for &e in &p.energies {
        let g = gibbs::beta_of_energy(&h, e)?;
        let beta: Cell = match g.beta {
            Beta::Finite(b) => b.into(),
            Beta::Infinite => f64::INFINITY.into(),
        };
        let ratio = if e > 0.0 { Some(g.entropy_bits / e) } else { None };
        t.push(vec![e.into(), beta, g.entropy_bits.into(), ratio.into()]);
        points.push(g);
    }
    let positive: Vec<f64> = p.energies.iter().copied().filter(|&e| e > 0.0).collect();
    let sublinearity = gibbs::f_h_sublinearity_probe(&h, &positive).ok();
    let mut continuity = Vec::new();
    for &eps in p.epsilon.iter().flatten() {
        for &e in &p.energies {
            continuity.push(json!({ "energy": e, "terms": gibbs::one_sided_continuity_terms(&h, e, eps)? }));
        }
    }
    let associated = p.associated_spectrum.as_ref().map(gibbs::associated_hamiltonian).transpose()?;
    let mut a = Artifact::new(
        json!({
            "hamiltonian": h,
            "points": points,
            "sublinearity": sublinearity,
            "continuity": continuity,
            "associated": associated,
        }),
        t,
    )?;
    if associated.as_ref().is_some_and(|x| !x.gibbs_hypothesis_holds()) {
        a.failure = Some("associated Hamiltonian failed the partition-function check".into());
    }
    Ok(a)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entropy_of_fair_coin() {
        let a = run(CommandName::Entropy, &json!({ "spectrum": [0.5, 0.5] }), 0).unwrap();
        assert!((a.result["entropy_bits"].as_f64().unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn schema_errors() {
        assert!(matches!(run(CommandName::Entropy, &json!({ "spectrum": [0.5, 0.5], "x": 1 }), 0), Err(CliError::Schema(_))));
        assert!(matches!(run(CommandName::Entropy, &json!({ "spectrum": [0.2, 0.5] }), 0), Err(CliError::Schema(_))));
        assert!(matches!(run(CommandName::Eof, &json!({ "schmidt": [1.0], "pure": {"amplitudes": [[[1.0, 0.0]]]} }), 0), Err(CliError::Schema(_))));
    }

    #[test]
    fn dilute_pure_rows() {
        let a = run(CommandName::DilutePure, &json!({ "schmidt": [0.8, 0.2], "delta": 0.05, "n": [100, 400, 1600] }), 1).unwrap();
        assert_eq!(a.table.rows.len(), 3);
        assert!(a.failure.is_none());
        let errs: Vec<f64> = a.result["traces"].as_array().unwrap().iter().map(|t| t["error"].as_f64().unwrap()).collect();
        assert!(errs.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn small_majorization_check() {
        let a = run(CommandName::MajorizationCheck, &json!({ "trials": 20 }), 7).unwrap();
        assert_eq!(a.result["failures"], 0);
        assert!(a.result["min_margin"].as_f64().unwrap() >= -1e-10);
    }

    #[test]
    fn gibbs_and_converse() {
        let a = run(CommandName::Gibbs, &json!({ "energies": [0.0, 1.0, 10.0], "associated_spectrum": [0.8, 0.2] }), 0).unwrap();
        assert!((a.result["points"][1]["entropy_bits"].as_f64().unwrap() - 2.0).abs() < 1e-9);
        let a = run(CommandName::ConverseBound, &json!({ "schmidt": [0.8, 0.2], "r": 0.8, "epsilon": 1e-4, "n": 4 }), 0).unwrap();
        assert!(a.result["reports"][0]["slack"].as_f64().unwrap() >= 0.0);
    }

    #[test]
    fn dilute_mixed_with_mixing() {
        let a = run(
            CommandName::DiluteMixed,
            &json!({
                "members": [{ "weight": 0.5, "schmidt": [0.5, 0.5] }, { "weight": 0.5, "schmidt": [1.0] }],
                "mixing": { "p0": 0.3, "xi": 0.05, "n": [100, 1000], "tv_samples": 1000 }
            }),
            3,
        )
        .unwrap();
        assert!((a.result["decomposition_rate_bits"].as_f64().unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(a.result["mixing"].as_array().unwrap().len(), 2);
    }
}
