//! Square-root-law coefficients, simplex optimization of the non-innocent
//! input distribution, converse bounds and the second-order expansion check.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{classify_scenario, induce_dmc, CqChannelPair, Povm, ScenarioClass, ScenarioReport};
use crate::divergence::{
    chi_squared, holevo_information, kubo_mori_chi_squared, relative_entropy, EnsembleDistribution,
};
use crate::error::{Error, Result};
use crate::operator::{trace_product, CMatrix, DensityOperator, MatrixFunction, C64};
use crate::random::{derive_seed, random_simplex};

const LN2: f64 = std::f64::consts::LN_2;
const CHI2_FLOOR: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Unit {
    Nats,
    Bits,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScalingReport {
    pub message_coeff: f64,
    pub key_coeff: f64,
    /// Key expression before the `[.]^+` clamp.
    pub raw_key: f64,
    pub ptilde: EnsembleDistribution,
    pub regime: ScenarioClass,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    pub chi_squared: f64,
    /// `sum p(x) D(sigma_x || sigma_0)` (classical KL under a fixed POVM).
    pub bob_divergence: f64,
    /// `sum p(x) D(rho_x || rho_0)`.
    pub willie_divergence: f64,
    pub unit: Unit,
}

impl ScalingReport {
    /// Divergence numerators expressed in bits; `chi_squared` is unitless.
    pub fn in_bits(&self) -> Self {
        if self.unit == Unit::Bits {
            return self.clone();
        }
        Self {
            message_coeff: self.message_coeff / LN2,
            key_coeff: self.key_coeff / LN2,
            raw_key: self.raw_key / LN2,
            bob_divergence: self.bob_divergence / LN2,
            willie_divergence: self.willie_divergence / LN2,
            unit: Unit::Bits,
            ..self.clone()
        }
    }
}

/// Per-symbol quantities of a square-root-law channel. `chi2(p) = p^T Q p`.
#[derive(Clone, Debug)]
pub struct CoefficientModel {
    regime: ScenarioClass,
    admissible: Vec<usize>,
    num_active: usize,
    bob_div: Vec<f64>,
    willie_div: Vec<f64>,
    q: Vec<Vec<f64>>,
}

fn wrong_regime(expected: &str, rep: &ScenarioReport) -> Error {
    Error::WrongRegime { expected: expected.into(), found: rep.class.to_string() }
}

/// `Re Tr{(rho_x - rho_0)(rho_y - rho_0) rho_0^{-1}}` over the given symbols.
fn chi2_gram(willie: &[DensityOperator], symbols: &[usize]) -> Vec<Vec<f64>> {
    let r0 = &willie[0];
    let inv = r0.apply(MatrixFunction::Pinv).into_matrix();
    let deltas: Vec<CMatrix> = symbols.iter().map(|&x| willie[x].matrix() - r0.matrix()).collect();
    let right: Vec<CMatrix> = deltas.iter().map(|d| d * &inv).collect();
    let k = symbols.len();
    let mut q = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in i..k {
            let v = trace_product(&deltas[i], &right[j]).re;
            q[i][j] = v;
            q[j][i] = v;
        }
    }
    q
}

impl CoefficientModel {
    /// Requires the square-root-law regime.
    pub fn new(ch: &CqChannelPair) -> Result<Self> {
        let rep = classify_scenario(ch)?;
        if rep.class != ScenarioClass::SquareRootLaw {
            return Err(wrong_regime("SquareRootLaw", &rep));
        }
        let bob: Vec<f64> = (1..ch.alphabet_size())
            .map(|x| relative_entropy(&ch.bob()[x], &ch.bob()[0]).map(|d| d.value()))
            .collect::<Result<_>>()?;
        Self::build(ch, rep, bob)
    }

    /// Bob restricted to a fixed product measurement; Willie unrestricted.
    pub fn with_povm(ch: &CqChannelPair, povm: &Povm) -> Result<Self> {
        let rep = classify_scenario(ch)?;
        if !matches!(rep.class, ScenarioClass::SquareRootLaw | ScenarioClass::SqrtNLogN) {
            return Err(wrong_regime("SquareRootLaw or SqrtNLogN", &rep));
        }
        let dmc = induce_dmc(ch.bob(), povm)?;
        let p0 = &dmc.rows[0];
        let mut bob = Vec::with_capacity(ch.num_active());
        for (x, row) in dmc.rows.iter().enumerate().skip(1) {
            let mut d = 0.0;
            for (y, (&p, &q)) in row.iter().zip(p0).enumerate() {
                if p <= 1e-12 {
                    continue;
                }
                if q <= 1e-12 {
                    if rep.admissible.contains(&x) {
                        return Err(Error::SupportViolationClassical(format!(
                            "outcome {y} has probability {p:.3e} under symbol {x} but not under symbol 0"
                        )));
                    }
                    d = f64::INFINITY;
                    break;
                }
                d += p * (p / q).ln();
            }
            bob.push(d.max(0.0));
        }
        Self::build(ch, rep, bob)
    }

    fn build(ch: &CqChannelPair, rep: ScenarioReport, bob_div: Vec<f64>) -> Result<Self> {
        let willie_div: Vec<f64> = (1..ch.alphabet_size())
            .map(|x| relative_entropy(&ch.willie()[x], &ch.willie()[0]).map(|d| d.value()))
            .collect::<Result<_>>()?;
        let q = chi2_gram(ch.willie(), &rep.admissible);
        Ok(Self { regime: rep.class, admissible: rep.admissible, num_active: ch.num_active(), bob_div, willie_div, q })
    }

    pub fn admissible(&self) -> &[usize] {
        &self.admissible
    }

    /// Restricts a full-length `ptilde` to the admissible symbols.
    fn restrict(&self, ptilde: &EnsembleDistribution) -> Result<Vec<f64>> {
        if ptilde.len() != self.num_active {
            return Err(Error::InvalidDistribution(format!(
                "ptilde has {} entries for {} non-innocent symbols",
                ptilde.len(),
                self.num_active
            )));
        }
        for (i, &p) in ptilde.probs().iter().enumerate() {
            if p > 0.0 && !self.admissible.contains(&(i + 1)) {
                return Err(Error::InvalidDistribution(format!(
                    "ptilde puts mass on symbol {} whose Willie support leaks",
                    i + 1
                )));
            }
        }
        Ok(self.admissible.iter().map(|&x| ptilde.probs()[x - 1]).collect())
    }

    fn expand(&self, p: &[f64]) -> EnsembleDistribution {
        let mut full = vec![0.0; self.num_active];
        for (&x, &v) in self.admissible.iter().zip(p) {
            full[x - 1] = v;
        }
        EnsembleDistribution::normalized(full).expect("nonempty simplex point")
    }

    fn chi2(&self, p: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (i, pi) in p.iter().enumerate() {
            for (j, pj) in p.iter().enumerate() {
                acc += pi * pj * self.q[i][j];
            }
        }
        acc
    }

    fn linear(&self, p: &[f64], which: &[f64]) -> f64 {
        self.admissible.iter().zip(p).map(|(&x, &w)| if w > 0.0 { w * which[x - 1] } else { 0.0 }).sum()
    }

    /// Message and raw key coefficients with gradients in `p`.
    fn eval(&self, p: &[f64]) -> Eval {
        let v = self.chi2(p);
        let g = (0.5 * v).sqrt();
        let u = self.linear(p, &self.bob_div);
        let wd = self.linear(p, &self.willie_div);
        let a: Vec<f64> = self.admissible.iter().map(|&x| self.bob_div[x - 1]).collect();
        let b: Vec<f64> = self.admissible.iter().map(|&x| self.willie_div[x - 1] - self.bob_div[x - 1]).collect();
        let qp: Vec<f64> = (0..p.len()).map(|i| (0..p.len()).map(|j| self.q[i][j] * p[j]).sum()).collect();
        let raw = wd - u;
        let grad_ratio = |num: f64, dnum: &[f64]| -> Vec<f64> {
            (0..p.len()).map(|i| dnum[i] / g - num * qp[i] / (2.0 * g * g * g)).collect()
        };
        Eval {
            chi2: v,
            bob: u,
            willie: wd,
            message: u / g,
            raw_key: raw / g,
            d_message: grad_ratio(u, &a),
            d_key: if raw > 0.0 { grad_ratio(raw, &b) } else { vec![0.0; p.len()] },
        }
    }

    pub fn report(&self, ptilde: &EnsembleDistribution) -> Result<ScalingReport> {
        let p = self.restrict(ptilde)?;
        let e = self.eval(&p);
        if !(e.chi2 > CHI2_FLOOR) {
            return Err(Error::ZeroChiSquared);
        }
        Ok(self.to_report(&e, ptilde.clone()))
    }

    fn to_report(&self, e: &Eval, ptilde: EnsembleDistribution) -> ScalingReport {
        ScalingReport {
            message_coeff: e.message.max(0.0),
            key_coeff: e.raw_key.max(0.0),
            raw_key: e.raw_key,
            ptilde,
            regime: self.regime,
            kappa: None,
            chi_squared: e.chi2,
            bob_divergence: e.bob,
            willie_divergence: e.willie,
            unit: Unit::Nats,
        }
    }
}

struct Eval {
    chi2: f64,
    bob: f64,
    willie: f64,
    message: f64,
    raw_key: f64,
    d_message: Vec<f64>,
    d_key: Vec<f64>,
}

pub fn coefficients(ch: &CqChannelPair, ptilde: &EnsembleDistribution) -> Result<ScalingReport> {
    CoefficientModel::new(ch)?.report(ptilde)
}

pub fn message_coefficient(ch: &CqChannelPair, ptilde: &EnsembleDistribution) -> Result<f64> {
    Ok(coefficients(ch, ptilde)?.message_coeff)
}

pub fn key_coefficient(ch: &CqChannelPair, ptilde: &EnsembleDistribution) -> Result<f64> {
    Ok(coefficients(ch, ptilde)?.key_coeff)
}

pub fn product_measurement_coefficients(
    ch: &CqChannelPair,
    povm: &Povm,
    ptilde: &EnsembleDistribution,
) -> Result<ScalingReport> {
    CoefficientModel::with_povm(ch, povm)?.report(ptilde)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SqrtNLogNReport {
    pub kappa: f64,
    pub chi_squared: f64,
    /// `kappa / (2 sqrt(chi2 / 2))`.
    pub leading_constant: f64,
    /// Schedule-dependent remainder of the upper bound, left symbolic.
    pub annotation: String,
    pub ptilde: EnsembleDistribution,
    pub regime: ScenarioClass,
}

pub fn sqrtnlogn_coefficient(ch: &CqChannelPair, ptilde: &EnsembleDistribution) -> Result<SqrtNLogNReport> {
    let rep = classify_scenario(ch)?;
    if rep.class != ScenarioClass::SqrtNLogN {
        return Err(wrong_regime("SqrtNLogN", &rep));
    }
    if ptilde.len() != ch.num_active() {
        return Err(Error::InvalidDistribution(format!(
            "ptilde has {} entries for {} non-innocent symbols",
            ptilde.len(),
            ch.num_active()
        )));
    }
    for (i, &p) in ptilde.probs().iter().enumerate() {
        if p > 0.0 && !rep.admissible.contains(&(i + 1)) {
            return Err(Error::InvalidDistribution(format!(
                "ptilde puts mass on symbol {} whose Willie support leaks",
                i + 1
            )));
        }
    }
    let p0 = ch.bob()[0].support_projector();
    let inside: f64 =
        ptilde.probs().iter().enumerate().map(|(i, &p)| p * p0.expectation(ch.bob()[i + 1].matrix())).sum();
    let kappa = (1.0 - inside).clamp(0.0, 1.0);
    if kappa <= 1e-12 {
        return Err(Error::InvalidDistribution("ptilde places no mass on Bob-leaking symbols".into()));
    }
    let refs: Vec<&DensityOperator> = ch.willie().iter().collect();
    let mut weights = vec![0.0];
    weights.extend_from_slice(ptilde.probs());
    let mix = DensityOperator::mixture(&weights, &refs)?;
    let chi2 = chi_squared(&mix, &ch.willie()[0])?.value();
    if !(chi2 > CHI2_FLOOR) {
        return Err(Error::ZeroChiSquared);
    }
    let g = (0.5 * chi2).sqrt();
    Ok(SqrtNLogNReport {
        kappa,
        chi_squared: chi2,
        leading_constant: kappa / (2.0 * g),
        annotation: format!("+ {:.6} * lim log(1/iota_n) / log n", kappa / g),
        ptilde: ptilde.clone(),
        regime: rep.class,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Objective {
    MaxMessage,
    MinKey,
    /// Maximize `message - w * key`.
    WeightedTradeoff(f64),
}

impl Objective {
    fn score(self, e: &Eval) -> (f64, Vec<f64>) {
        let key = e.raw_key.max(0.0);
        match self {
            Objective::MaxMessage => (e.message, e.d_message.clone()),
            Objective::MinKey => (-key, e.d_key.iter().map(|g| -g).collect()),
            Objective::WeightedTradeoff(w) => {
                (e.message - w * key, e.d_message.iter().zip(&e.d_key).map(|(a, b)| a - w * b).collect())
            }
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OptimizeResult {
    pub objective: Objective,
    pub value: f64,
    pub report: ScalingReport,
    pub restarts: usize,
    /// Best grid value, when the admissible alphabet is small enough to grid.
    pub grid_value: Option<f64>,
}

pub const OPTIMIZER_RESTARTS: usize = 20;
const GRID_STEP: f64 = 1e-3;

/// Euclidean projection onto the probability simplex.
pub fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut css = 0.0;
    let mut theta = 0.0;
    for (i, &ui) in u.iter().enumerate() {
        css += ui;
        let t = (css - 1.0) / (i + 1) as f64;
        if ui - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|x| (x - theta).max(0.0)).collect()
}

fn ascend(model: &CoefficientModel, obj: Objective, start: Vec<f64>) -> (Vec<f64>, f64) {
    let mut p = start;
    let (mut val, mut grad) = obj.score(&model.eval(&p));
    let mut step = 1.0;
    for _ in 0..10_000 {
        let mut moved = false;
        while step > 1e-14 {
            let cand: Vec<f64> = project_simplex(&p.iter().zip(&grad).map(|(a, g)| a + step * g).collect::<Vec<_>>());
            let e = model.eval(&cand);
            let (cv, cg) = obj.score(&e);
            if e.chi2 > CHI2_FLOOR && cv > val {
                let change = cv - val;
                p = cand;
                val = cv;
                grad = cg;
                step = (step * 2.0).min(1e6);
                moved = change >= 1e-9;
                break;
            }
            step *= 0.5;
        }
        if !moved {
            break;
        }
    }
    (p, val)
}

fn grid_best(model: &CoefficientModel, obj: Objective) -> Option<(Vec<f64>, f64)> {
    let k = model.admissible.len();
    let steps = (1.0 / GRID_STEP).round() as usize;
    let eval = |p: &[f64]| {
        let e = model.eval(p);
        (e.chi2 > CHI2_FLOOR).then(|| obj.score(&e).0)
    };
    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut consider = |p: Vec<f64>| {
        if let Some(v) = eval(&p) {
            if best.as_ref().is_none_or(|b| v > b.1) {
                best = Some((p, v));
            }
        }
    };
    match k {
        1 => consider(vec![1.0]),
        2 => (0..=steps).for_each(|i| {
            let a = i as f64 / steps as f64;
            consider(vec![a, 1.0 - a]);
        }),
        3 => {
            for i in 0..=steps {
                for j in 0..=(steps - i) {
                    let (a, b) = (i as f64 / steps as f64, j as f64 / steps as f64);
                    consider(vec![a, b, (1.0 - a - b).max(0.0)]);
                }
            }
        }
        _ => return None,
    }
    best
}

pub fn optimize_ptilde(ch: &CqChannelPair, objective: Objective) -> Result<OptimizeResult> {
    optimize_ptilde_seeded(ch, objective, 0)
}

/// Projected-gradient search over the admissible simplex with random restarts.
/// Heuristic: the objective is a ratio of a linear form to the square root of
/// a quadratic form. Small alphabets are cross-checked on a grid.
pub fn optimize_ptilde_seeded(ch: &CqChannelPair, objective: Objective, seed: u64) -> Result<OptimizeResult> {
    let model = CoefficientModel::new(ch)?;
    optimize_model(&model, objective, seed)
}

pub fn optimize_model(model: &CoefficientModel, objective: Objective, seed: u64) -> Result<OptimizeResult> {
    let k = model.admissible.len();
    let mut runs: Vec<(usize, Vec<f64>, f64)> = (0..OPTIMIZER_RESTARTS)
        .into_par_iter()
        .map(|r| {
            let start = if r == 0 {
                vec![1.0 / k as f64; k]
            } else if r <= k {
                let mut v = vec![0.0; k];
                v[r - 1] = 1.0;
                v
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, r as u64));
                random_simplex(&mut rng, k)
            };
            let (p, v) = ascend(model, objective, start);
            (r, p, v)
        })
        .collect();
    runs.sort_by(|a, b| b.2.total_cmp(&a.2).then(a.0.cmp(&b.0)));
    let (_, mut p, mut value) = runs.swap_remove(0);
    let grid = grid_best(model, objective);
    if let Some((gp, gv)) = &grid {
        if *gv > value + 1e-12 {
            let (pp, pv) = ascend(model, objective, gp.clone());
            p = pp;
            value = pv;
        }
    }
    let e = model.eval(&p);
    if !(e.chi2 > CHI2_FLOOR) {
        return Err(Error::ZeroChiSquared);
    }
    let report = model.to_report(&e, model.expand(&p));
    Ok(OptimizeResult { objective, value, report, restarts: OPTIMIZER_RESTARTS, grid_value: grid.map(|g| g.1) })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TradeoffPoint {
    pub weight: f64,
    pub message_coeff: f64,
    pub key_coeff: f64,
    pub ptilde: EnsembleDistribution,
}

/// Message/key coefficients of the weighted optimum for each weight.
pub fn tradeoff_curve(ch: &CqChannelPair, weights: &[f64]) -> Result<Vec<TradeoffPoint>> {
    let model = CoefficientModel::new(ch)?;
    weights
        .iter()
        .map(|&w| {
            let r = optimize_model(&model, Objective::WeightedTradeoff(w), 0)?;
            Ok(TradeoffPoint {
                weight: w,
                message_coeff: r.report.message_coeff,
                key_coeff: r.report.key_coeff,
                ptilde: r.report.ptilde,
            })
        })
        .collect()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConverseBounds {
    pub holevo_bob: f64,
    pub holevo_willie: f64,
    /// `(n chi_B + 1) / (1 - delta)`.
    pub log_m_upper: f64,
    /// `n chi_W - epsilon`.
    pub log_mk_lower: f64,
    /// `mu sum p D(sigma_x||sigma_0) - D(sigma_mu||sigma_0)`; equals `holevo_bob` when finite.
    pub bob_identity: f64,
    pub bob_linear: f64,
    pub willie_identity: f64,
    pub willie_linear: f64,
}

/// Converse quantities at the average input distribution `(1 - mu, mu ptilde)`.
pub fn converse_bounds(
    ch: &CqChannelPair,
    ptilde: &EnsembleDistribution,
    mu: f64,
    n: usize,
    delta: f64,
    epsilon: f64,
) -> Result<ConverseBounds> {
    if !(0.0..1.0).contains(&mu) {
        return Err(Error::InvalidArgument(format!("mu = {mu} outside [0, 1)")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidArgument(format!("delta = {delta} outside (0, 1)")));
    }
    if ptilde.len() != ch.num_active() {
        return Err(Error::InvalidDistribution("ptilde length differs from the non-innocent alphabet".into()));
    }
    let mut pbar = vec![1.0 - mu];
    pbar.extend(ptilde.probs().iter().map(|p| mu * p));
    let pbar = EnsembleDistribution::normalized(pbar)?;
    let side = |states: &[DensityOperator]| -> Result<(f64, f64, f64)> {
        let chi = holevo_information(&pbar, states)?;
        let refs: Vec<&DensityOperator> = states.iter().collect();
        let mix = DensityOperator::mixture(pbar.probs(), &refs)?;
        let mut linear = 0.0;
        for (i, &p) in ptilde.probs().iter().enumerate() {
            if p > 0.0 {
                linear += mu * p * relative_entropy(&states[i + 1], &states[0])?.value();
            }
        }
        let identity = linear - relative_entropy(&mix, &states[0])?.value();
        Ok((chi, identity, linear))
    };
    let (hb, bi, bl) = side(ch.bob())?;
    let (hw, wi, wl) = side(ch.willie())?;
    Ok(ConverseBounds {
        holevo_bob: hb,
        holevo_willie: hw,
        log_m_upper: (n as f64 * hb + 1.0) / (1.0 - delta),
        log_mk_lower: n as f64 * hw - epsilon,
        bob_identity: bi,
        bob_linear: bl,
        willie_identity: wi,
        willie_linear: wl,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Lemma7Row {
    pub alpha: f64,
    pub divergence: f64,
    /// `alpha^2 chi2(C||B) / 2`.
    pub leading: f64,
    pub residual: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Lemma7Report {
    pub radius: f64,
    pub chi_squared: f64,
    /// Exact curvature of `D` along the segment; see [`kubo_mori_chi_squared`].
    pub kubo_mori: f64,
    pub rows: Vec<Lemma7Row>,
    /// Least-squares slope of `ln residual` against `ln alpha`.
    pub slope: Option<f64>,
}

/// Compares `D(alpha C + (1 - alpha) B || B)` with `alpha^2 chi2(C||B) / 2`.
pub fn lemma7_expansion_check(b: &DensityOperator, c: &DensityOperator, alphas: &[f64]) -> Result<Lemma7Report> {
    let chi = chi_squared(c, b)?;
    if !chi.is_finite() {
        return Err(Error::SupportViolation("C leaks outside the support of B".into()));
    }
    let inv = b.apply(MatrixFunction::Pinv).into_matrix();
    let x = inv * (c.matrix() - b.matrix());
    let norm = x.singular_values().iter().fold(0.0f64, |m, v| m.max(*v));
    let radius = if norm > 0.0 { (1.0 / norm).min(1.0) } else { 1.0 };
    let mut rows = Vec::with_capacity(alphas.len());
    for &alpha in alphas {
        if !(alpha >= 0.0 && alpha <= radius) {
            return Err(Error::AlphaOutOfRadius { alpha, radius });
        }
        let a = c.matrix() * C64::new(alpha, 0.0) + b.matrix() * C64::new(1.0 - alpha, 0.0);
        let a = DensityOperator::from_hermitian(crate::operator::HermitianMatrix::symmetrized(a), b.rank_tolerance())?;
        let d = relative_entropy(&a, b)?.value();
        let leading = 0.5 * alpha * alpha * chi.value();
        rows.push(Lemma7Row { alpha, divergence: d, leading, residual: (d - leading).abs() });
    }
    let kubo_mori = kubo_mori_chi_squared(c, b)?.value();
    Ok(Lemma7Report { radius, chi_squared: chi.value(), kubo_mori, slope: loglog_slope(&rows), rows })
}

fn loglog_slope(rows: &[Lemma7Row]) -> Option<f64> {
    let pts: Vec<(f64, f64)> =
        rows.iter().filter(|r| r.alpha > 0.0 && r.residual > 0.0).map(|r| (r.alpha.ln(), r.residual.ln())).collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Logarithmically spaced grid from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    if points < 2 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..points).map(|i| (a + (b - a) * i as f64 / (points - 1) as f64).exp()).collect()
}
