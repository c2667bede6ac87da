use std::path::Path;

use cqcovert::channel::{ChannelSpec, WeakCovertRefinement};
use cqcovert::operator::checked_power_dim;
use cqcovert::scaling::{optimize_model, sqrtnlogn_coefficient, CoefficientModel, Objective};
use cqcovert::sim::{nogo_experiment, orthogonal_overlaps, run_experiment, write_csv, ExperimentConfig, NoGoReport};
use cqcovert::verify::{run_suites, Suite};
use cqcovert::{
    classify_scenario, Codebook, CqChannelPair, EnsembleDistribution, Error, Povm, ScenarioClass, ScenarioReport,
};
use serde::Serialize;
use serde_json::json;

use crate::output::{csv_table, emit, format_or, join, json};
use crate::{Format, RunConfig};

pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn input(message: impl Into<String>) -> Self {
        Self { code: 2, message: message.into() }
    }

    fn regime(message: impl Into<String>) -> Self {
        Self { code: 3, message: message.into() }
    }

    fn cap(message: impl Into<String>) -> Self {
        Self { code: 4, message: message.into() }
    }

    fn verify(message: impl Into<String>) -> Self {
        Self { code: 5, message: message.into() }
    }

    /// Maps a library error onto the exit-code contract.
    fn core(context: &str, e: Error) -> Self {
        let message = if context.is_empty() { e.to_string() } else { format!("{context}: {e}") };
        let code = match e {
            Error::DimensionCapExceeded { .. } => 4,
            Error::WrongRegime { .. } | Error::NoLeakage(_) => 3,
            _ => 2,
        };
        Self { code, message }
    }
}

type CliResult<T = ()> = Result<T, CliError>;

fn read(flag: &str, path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::input(format!("{flag} {}: {e}", path.display())))
}

fn load(cfg: &RunConfig) -> CliResult<(CqChannelPair, ChannelSpec)> {
    let path = cfg.channel.as_deref().ok_or_else(|| CliError::input("--channel is required"))?;
    let text = read("--channel", path)?;
    let ctx = format!("--channel {}", path.display());
    let spec = ChannelSpec::parse(&text).map_err(|e| CliError::core(&ctx, e))?;
    let ch = spec.build().map_err(|e| CliError::core(&ctx, e))?;
    eprintln!("loaded {} symbols (bob dim {}, willie dim {})", ch.alphabet_size(), ch.bob_dim(), ch.willie_dim());
    Ok((ch, spec))
}

fn load_povm(cfg: &RunConfig) -> CliResult<Option<Povm>> {
    let Some(path) = cfg.povm.as_deref() else { return Ok(None) };
    let text = read("--povm", path)?;
    Povm::parse(&text).map(Some).map_err(|e| CliError::core(&format!("--povm {}", path.display()), e))
}

fn verdict(ch: &CqChannelPair) -> CliResult<ScenarioReport> {
    classify_scenario(ch).map_err(|e| CliError::core("classification", e))
}

/// Emits the classifier verdict and returns the regime-mismatch error.
fn mismatch(cfg: &RunConfig, rep: &ScenarioReport, why: &str) -> CliResult {
    let bytes = match format_or(cfg, Format::Json) {
        Format::Json => json(&json!({ "error": why, "verdict": rep })),
        Format::Csv => verdict_csv(rep),
    };
    emit(cfg, &bytes)?;
    Err(CliError::regime(format!("{why}; channel is {}", rep.class)))
}

fn refinement_name(r: &WeakCovertRefinement) -> String {
    match r {
        WeakCovertRefinement::ConstantBits { pairs } => {
            format!("ConstantBits({})", pairs.iter().map(|(a, b)| format!("{a}-{b}")).collect::<Vec<_>>().join(" "))
        }
        WeakCovertRefinement::LogLaw { symbols } => format!("LogLaw({})", join(symbols).replace(';', " ")),
        WeakCovertRefinement::NoBits => "NoBits".into(),
        WeakCovertRefinement::Unresolved => "Unresolved".into(),
    }
}

pub fn classify(cfg: &RunConfig) -> CliResult {
    let (ch, _) = load(cfg)?;
    let rep = verdict(&ch)?;
    eprintln!("regime: {}", rep.class);
    let bytes = match format_or(cfg, Format::Json) {
        Format::Json => json(&rep),
        Format::Csv => verdict_csv(&rep),
    };
    emit(cfg, &bytes)
}

fn verdict_csv(rep: &ScenarioReport) -> Vec<u8> {
    let row = vec![
        rep.class.to_string(),
        join(&rep.admissible),
        join(&rep.bob_leaking),
        rep.mixture.as_ref().map(|m| m.feasible.to_string()).unwrap_or_default(),
        join(&rep.weak_covert.iter().map(refinement_name).collect::<Vec<_>>()),
    ];
    csv_table(&["class", "admissible", "bob_leaking", "mixture_feasible", "weak_covert"], &[row])
}

fn parse_objective(s: &str) -> CliResult<Objective> {
    match s {
        "max-message" => Ok(Objective::MaxMessage),
        "min-key" => Ok(Objective::MinKey),
        _ => match s.strip_prefix("tradeoff:").map(str::parse::<f64>) {
            Some(Ok(w)) if w.is_finite() && w >= 0.0 => Ok(Objective::WeightedTradeoff(w)),
            _ => Err(CliError::input(format!(
                "--optimize: unknown objective {s:?} (expected max-message, min-key or tradeoff:<weight>)"
            ))),
        },
    }
}

fn given_ptilde(cfg: &RunConfig, num_active: usize) -> CliResult<Option<EnsembleDistribution>> {
    if cfg.ptilde.is_empty() {
        return Ok(None);
    }
    if cfg.ptilde.len() != num_active {
        return Err(CliError::input(format!(
            "--ptilde: {} entries for {num_active} non-innocent symbols",
            cfg.ptilde.len()
        )));
    }
    EnsembleDistribution::new(cfg.ptilde.clone()).map(Some).map_err(|e| CliError::core("--ptilde", e))
}

fn uniform_over(symbols: &[usize], num_active: usize) -> EnsembleDistribution {
    let mut p = vec![0.0; num_active];
    for &x in symbols {
        p[x - 1] = 1.0 / symbols.len() as f64;
    }
    EnsembleDistribution::normalized(p).expect("nonempty admissible set")
}

pub fn coefficients(cfg: &RunConfig) -> CliResult {
    let (ch, _) = load(cfg)?;
    let povm = load_povm(cfg)?;
    let rep = verdict(&ch)?;
    let measurement = match &cfg.povm {
        Some(p) => format!("product POVM {}", p.display()),
        None => "optimal".to_string(),
    };
    match rep.class {
        ScenarioClass::SquareRootLaw => {}
        ScenarioClass::SqrtNLogN if povm.is_none() => return sqrtnlogn(cfg, &ch, &rep),
        ScenarioClass::SqrtNLogN => {}
        _ => return mismatch(cfg, &rep, "coefficients need the SquareRootLaw or SqrtNLogN regime"),
    }
    let model = match &povm {
        Some(p) => CoefficientModel::with_povm(&ch, p),
        None => CoefficientModel::new(&ch),
    }
    .map_err(|e| CliError::core("coefficients", e))?;

    let (mut report, source, optimizer) = if let Some(name) = &cfg.optimize {
        let objective = parse_objective(name)?;
        eprintln!("optimizing ptilde for {name}");
        let res = optimize_model(&model, objective, cfg.seed).map_err(|e| CliError::core("--optimize", e))?;
        let trace = json!({
            "objective": res.objective,
            "value": res.value,
            "restarts": res.restarts,
            "grid_value": res.grid_value,
            "seed": cfg.seed,
        });
        (res.report, "optimized", Some(trace))
    } else {
        let (p, source) = match given_ptilde(cfg, ch.num_active())? {
            Some(p) => (p, "given"),
            None => (uniform_over(model.admissible(), ch.num_active()), "uniform over admissible symbols"),
        };
        (model.report(&p).map_err(|e| CliError::core("--ptilde", e))?, source, None)
    };
    if cfg.bits {
        report = report.in_bits();
    }
    let bytes = match format_or(cfg, Format::Json) {
        Format::Json => json(&json!({
            "measurement": measurement,
            "ptilde_source": source,
            "report": report,
            "optimizer": optimizer,
        })),
        Format::Csv => csv_table(
            &["regime", "unit", "message_coeff", "key_coeff", "chi_squared", "ptilde"],
            &[vec![
                report.regime.to_string(),
                unit_name(cfg).into(),
                report.message_coeff.to_string(),
                report.key_coeff.to_string(),
                report.chi_squared.to_string(),
                join(report.ptilde.probs()),
            ]],
        ),
    };
    emit(cfg, &bytes)
}

fn unit_name(cfg: &RunConfig) -> &'static str {
    if cfg.bits {
        "bits"
    } else {
        "nats"
    }
}

fn sqrtnlogn(cfg: &RunConfig, ch: &CqChannelPair, rep: &ScenarioReport) -> CliResult {
    if cfg.optimize.is_some() {
        return Err(CliError::input("--optimize: only available in the SquareRootLaw regime"));
    }
    let p = match given_ptilde(cfg, ch.num_active())? {
        Some(p) => p,
        None => uniform_over(&rep.admissible, ch.num_active()),
    };
    let mut r = sqrtnlogn_coefficient(ch, &p).map_err(|e| CliError::core("coefficients", e))?;
    if cfg.bits {
        r.leading_constant /= std::f64::consts::LN_2;
        r.annotation = format!("+ {:.6} * lim log(1/iota_n) / log n", 2.0 * r.leading_constant);
    }
    let bytes = match format_or(cfg, Format::Json) {
        Format::Json => json(&json!({ "unit": unit_name(cfg), "report": r })),
        Format::Csv => csv_table(
            &["regime", "unit", "message_coeff", "key_coeff", "chi_squared", "ptilde"],
            &[vec![
                r.regime.to_string(),
                unit_name(cfg).into(),
                r.leading_constant.to_string(),
                String::new(),
                r.chi_squared.to_string(),
                join(r.ptilde.probs()),
            ]],
        ),
    };
    emit(cfg, &bytes)
}

fn experiment_config(cfg: &RunConfig, num_active: usize) -> CliResult<ExperimentConfig> {
    if cfg.n.is_empty() {
        return Err(CliError::input("--n is required (comma-separated blocklengths)"));
    }
    if let Some(&bad) = cfg.n.iter().find(|&&n| n == 0) {
        return Err(CliError::input(format!("--n: blocklength {bad} must be positive")));
    }
    let gamma = cfg.gamma.ok_or_else(|| CliError::input("--gamma is required"))?;
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(CliError::input(format!("--gamma: {gamma} must be positive")));
    }
    let mut e = ExperimentConfig { seed: cfg.seed, ..ExperimentConfig::new(cfg.n.clone(), gamma) };
    if let Some(t) = cfg.trials {
        if t == 0 {
            return Err(CliError::input("--trials must be positive"));
        }
        e.trials = t;
    }
    if let Some(d) = cfg.delta {
        if !(d > 0.0 && d < 1.0) {
            return Err(CliError::input(format!("--delta: {d} outside (0, 1)")));
        }
        e.delta_target = d;
    }
    if let Some(eps) = cfg.epsilon {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(CliError::input(format!("--epsilon: {eps} must be positive")));
        }
        e.epsilon_target = eps;
    }
    if !cfg.sigma_knobs.is_empty() {
        let [s, m, n] = cfg.sigma_knobs[..] else {
            return Err(CliError::input("--sigma-knobs: expected three values varsigma,mu,nu"));
        };
        for (name, v) in [("varsigma", s), ("mu", m), ("nu", n)] {
            if !(0.0..1.0).contains(&v) {
                return Err(CliError::input(format!("--sigma-knobs: {name} = {v} outside [0, 1)")));
            }
        }
        (e.varsigma, e.mu, e.nu) = (s, m, n);
    }
    if let Some(p) = given_ptilde(cfg, num_active)? {
        e.ptilde = Some(p.probs().to_vec());
    }
    for &n in &e.n_values {
        let alpha = gamma / (n as f64).sqrt();
        if alpha >= 1.0 {
            return Err(CliError::input(format!("--gamma: gamma/sqrt(n) = {alpha} is not below 1 at n = {n}")));
        }
    }
    Ok(e)
}

pub fn simulate(cfg: &RunConfig) -> CliResult {
    let (ch, _) = load(cfg)?;
    let ecfg = experiment_config(cfg, ch.num_active())?;
    let rep = verdict(&ch)?;
    if rep.class != ScenarioClass::SquareRootLaw {
        return mismatch(cfg, &rep, "simulate needs the SquareRootLaw regime");
    }
    for &n in &ecfg.n_values {
        let d = ch.bob_dim().max(ch.willie_dim());
        if let Err(e) = checked_power_dim(d, n) {
            return Err(CliError::cap(format!("n = {n}: {e}")));
        }
    }
    if cfg.bits {
        eprintln!("note: simulate output columns are in nats; --bits is ignored");
    }
    eprintln!("simulating n = {:?} with {} trials each", ecfg.n_values, ecfg.trials);
    let res = run_experiment(&ch, &ecfg).map_err(|e| CliError::core("simulate", e))?;
    for s in &res.summaries {
        eprintln!(
            "n = {}: M = {}, K = {}, best pe_bob = {:.4}, D = {:.4}",
            s.n, s.sizes.m, s.sizes.k, s.best.pe_bob, s.best.covert_d
        );
    }
    let bytes = match format_or(cfg, Format::Csv) {
        Format::Csv => {
            let mut out = Vec::new();
            write_csv(&res, &mut out).expect("in-memory write");
            out
        }
        Format::Json => json(&res),
    };
    emit(cfg, &bytes)
}

fn parse_suites(cfg: &RunConfig) -> CliResult<Vec<Suite>> {
    match cfg.suite.as_deref() {
        None | Some("all") => Ok(Suite::ALL.to_vec()),
        Some(list) => list
            .split(',')
            .map(|s| {
                Suite::parse(s.trim()).map_err(|_| {
                    CliError::input(format!(
                        "--suite: unknown suite {s:?}, expected one of {} or all",
                        join(&Suite::ALL.map(|x| x.name())).replace(';', ", ")
                    ))
                })
            })
            .collect(),
    }
}

pub fn verify(cfg: &RunConfig) -> CliResult {
    let suites = parse_suites(cfg)?;
    if cfg.trials == Some(0) {
        return Err(CliError::input("--trials must be positive"));
    }
    let results = run_suites(&suites, cfg.trials, cfg.seed).map_err(|e| CliError::core("verify", e))?;
    for r in &results {
        let verdict = if r.passed { "PASS" } else { "FAIL" };
        eprintln!(
            "{verdict} {}: {} cases, {} checks, {} failures, worst margin {:.3e}",
            r.suite, r.cases, r.checks, r.failures, r.worst_margin
        );
    }
    let bytes = match format_or(cfg, Format::Json) {
        Format::Json => json(&results),
        Format::Csv => csv_table(
            &["suite", "cases", "checks", "failures", "worst_margin", "passed"],
            &results
                .iter()
                .map(|r| {
                    vec![
                        r.suite.to_string(),
                        r.cases.to_string(),
                        r.checks.to_string(),
                        r.failures.to_string(),
                        r.worst_margin.to_string(),
                        r.passed.to_string(),
                    ]
                })
                .collect::<Vec<_>>(),
        ),
    };
    emit(cfg, &bytes)?;
    let failed: Vec<_> = results.iter().filter(|r| !r.passed).collect();
    if failed.is_empty() {
        return Ok(());
    }
    let mut msg = String::from("verification failed");
    for r in failed {
        msg.push_str(&format!("\n  suite {} ({} failing checks):", r.suite, r.failures));
        for f in &r.failing {
            msg.push_str(&format!(
                "\n    case {} dim {} seed {}: {} slack {:.3e} (tolerance {:.1e}), inputs {}",
                f.case,
                f.dim,
                f.seed,
                f.check,
                f.slack,
                f.tolerance,
                serde_json::to_string(&f.inputs).expect("matrices serialize")
            ));
        }
        if r.failures > r.failing.len() {
            msg.push_str(&format!("\n    ... {} more in the report", r.failures - r.failing.len()));
        }
    }
    Err(CliError::verify(msg))
}

/// Every codeword with a single non-innocent symbol.
fn weight_one_codebook(alphabet: usize, n: usize) -> Codebook {
    let mut words = Vec::new();
    for x in 1..alphabet {
        for i in 0..n {
            let mut w = vec![0; n];
            w[i] = x;
            words.push(w);
        }
    }
    let m = words.len();
    Codebook::from_codewords(words, m, 1, alphabet).expect("well-formed codebook")
}

#[derive(Serialize)]
struct NoGoRow {
    #[serde(flatten)]
    report: NoGoReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    note: Option<String>,
}

pub fn nogo(cfg: &RunConfig) -> CliResult {
    let (ch, spec) = load(cfg)?;
    let n = match cfg.n[..] {
        [] => 2,
        [n] if n > 0 => n,
        _ => return Err(CliError::input("--n: nogo takes a single positive blocklength")),
    };
    let (overlaps, source) = match &spec.input_overlaps {
        Some(o) => (o.clone(), "channel file"),
        None => (orthogonal_overlaps(ch.alphabet_size()), "orthogonal inputs"),
    };
    eprintln!("input overlaps from {source}: {overlaps:?}");
    let codebook = weight_one_codebook(ch.alphabet_size(), n);
    let probe = match nogo_experiment(&ch, &codebook, &overlaps, 1.0) {
        Ok(r) => r,
        Err(Error::NoLeakage(x)) => {
            let rep = verdict(&ch)?;
            let why = format!("hypothesis not met: symbol {x} has Willie support inside the innocent support");
            return mismatch(cfg, &rep, &why);
        }
        Err(e) => return Err(CliError::core("nogo", e)),
    };
    let c_min = probe.c_min;
    let grid = match cfg.epsilon {
        Some(e) if e > 0.0 && e.is_finite() => vec![e],
        Some(e) => return Err(CliError::input(format!("--epsilon: {e} must be positive"))),
        None => vec![c_min / 64.0, c_min / 16.0],
    };
    let mut rows = Vec::with_capacity(grid.len());
    for eps in grid {
        let report = nogo_experiment(&ch, &codebook, &overlaps, eps).map_err(|e| CliError::core("nogo", e))?;
        let note = if !report.valid {
            Some("epsilon exceeds c_min/16; bound clamped at 0".to_string())
        } else if report.bob_lower_bound == 0.0 {
            Some("bound reaches 0 at epsilon = c_min/16".to_string())
        } else {
            None
        };
        rows.push(NoGoRow { report, note });
    }
    let bytes = match format_or(cfg, Format::Json) {
        Format::Json => json(&json!({
            "n": n,
            "codewords": codebook.m,
            "overlaps": overlaps,
            "overlap_source": source,
            "c_min": c_min,
            "rows": rows,
        })),
        Format::Csv => csv_table(
            &["epsilon", "c_min", "pe_willie", "covert", "bob_lower_bound", "paired_bound", "valid", "note"],
            &rows
                .iter()
                .map(|r| {
                    vec![
                        r.report.epsilon.to_string(),
                        r.report.c_min.to_string(),
                        r.report.pe_willie.to_string(),
                        r.report.covert.to_string(),
                        r.report.bob_lower_bound.to_string(),
                        r.report.paired_bound.to_string(),
                        r.report.valid.to_string(),
                        r.note.clone().unwrap_or_default(),
                    ]
                })
                .collect::<Vec<_>>(),
        ),
    };
    emit(cfg, &bytes)
}
