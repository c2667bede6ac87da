//! Classical-quantum channel pairs, support relations and regime classification.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::divergence::{trace_distance, EnsembleDistribution, SUPPORT_TOL};
use crate::error::{Error, Result, Side};
use crate::operator::{
    same_dim, trace_product, CMatrix, DensityOperator, HermitianMatrix, MatrixJson, DEFAULT_RANK_TOL,
};

/// Frobenius residual below which `rho0` counts as a mixture.
pub const MIXTURE_TOL: f64 = 1e-8;
pub const POVM_SUM_TOL: f64 = 1e-9;

/// Bob and Willie output states indexed by input symbol; symbol 0 is innocent.
#[derive(Clone, Debug)]
pub struct CqChannelPair {
    bob: Vec<DensityOperator>,
    willie: Vec<DensityOperator>,
}

/// JSON document describing a channel pair.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChannelSpec {
    pub bob: Vec<MatrixJson>,
    pub willie: Vec<MatrixJson>,
    /// `|<0|phi_x>|^2` for Alice's pure input kets; used by the no-go analysis.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_overlaps: Option<Vec<f64>>,
}

impl ChannelSpec {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn build(&self) -> Result<CqChannelPair> {
        if self.bob.is_empty() || self.willie.is_empty() {
            return Err(Error::Parse("missing innocent symbol 0".into()));
        }
        if self.bob.len() != self.willie.len() {
            return Err(Error::Parse(format!(
                "bob lists {} symbols but willie lists {}",
                self.bob.len(),
                self.willie.len()
            )));
        }
        if self.bob.len() < 2 {
            return Err(Error::Parse("channel needs at least one non-innocent symbol".into()));
        }
        if let Some(o) = &self.input_overlaps {
            if o.len() != self.bob.len() || o.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return Err(Error::Parse("input_overlaps must hold one value in [0, 1] per symbol".into()));
            }
        }
        let load = |side: Side, list: &[MatrixJson]| -> Result<Vec<DensityOperator>> {
            list.iter()
                .enumerate()
                .map(|(symbol, mj)| {
                    let m = mj.to_matrix().map_err(|e| Error::Validation { side, symbol, source: Box::new(e) })?;
                    DensityOperator::new(m).map_err(|e| Error::Validation { side, symbol, source: Box::new(e) })
                })
                .collect()
        };
        CqChannelPair::new(load(Side::Bob, &self.bob)?, load(Side::Willie, &self.willie)?)
    }

    pub fn from_channel(ch: &CqChannelPair) -> Self {
        Self {
            bob: ch.bob.iter().map(|s| MatrixJson::from_matrix(s.matrix())).collect(),
            willie: ch.willie.iter().map(|s| MatrixJson::from_matrix(s.matrix())).collect(),
            input_overlaps: None,
        }
    }
}

pub fn load_channel(text: &str) -> Result<CqChannelPair> {
    ChannelSpec::parse(text)?.build()
}

impl CqChannelPair {
    pub fn new(bob: Vec<DensityOperator>, willie: Vec<DensityOperator>) -> Result<Self> {
        if bob.is_empty() || willie.is_empty() {
            return Err(Error::Parse("missing innocent symbol 0".into()));
        }
        if bob.len() != willie.len() {
            return Err(Error::DimensionMismatch("bob and willie alphabets differ".into()));
        }
        for (side, list) in [(Side::Bob, &bob), (Side::Willie, &willie)] {
            let d = list[0].dim();
            for (symbol, s) in list.iter().enumerate() {
                if s.dim() != d {
                    return Err(Error::Validation {
                        side,
                        symbol,
                        source: Box::new(Error::DimensionMismatch(format!("dim {} vs {d}", s.dim()))),
                    });
                }
            }
        }
        Ok(Self { bob, willie })
    }

    /// Same states at both receivers.
    pub fn symmetric(states: Vec<DensityOperator>) -> Result<Self> {
        Self::new(states.clone(), states)
    }

    /// Qubit pair with `sigma_0 = rho_0 = diag(0.9, 0.1)` and `sigma_1 = rho_1 = diag(0.6, 0.4)`.
    pub fn qubit_diagonal() -> Self {
        let s0 = DensityOperator::diagonal(&[0.9, 0.1]).expect("valid");
        let s1 = DensityOperator::diagonal(&[0.6, 0.4]).expect("valid");
        Self::symmetric(vec![s0, s1]).expect("valid")
    }

    pub fn alphabet_size(&self) -> usize {
        self.bob.len()
    }

    /// Number of non-innocent symbols.
    pub fn num_active(&self) -> usize {
        self.bob.len() - 1
    }

    pub fn bob(&self) -> &[DensityOperator] {
        &self.bob
    }

    pub fn willie(&self) -> &[DensityOperator] {
        &self.willie
    }

    pub fn bob_dim(&self) -> usize {
        self.bob[0].dim()
    }

    pub fn willie_dim(&self) -> usize {
        self.willie[0].dim()
    }

    pub fn states(&self, side: Side) -> &[DensityOperator] {
        match side {
            Side::Bob => &self.bob,
            Side::Willie => &self.willie,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SupportRelation {
    Contained,
    Overlapping,
    Disjoint,
}

/// Relation of `state`'s support to `reference`'s support.
pub fn support_relation(state: &DensityOperator, reference: &DensityOperator) -> SupportRelation {
    let outside = state.leakage_outside(reference);
    if outside <= SUPPORT_TOL {
        SupportRelation::Contained
    } else if 1.0 - outside <= SUPPORT_TOL {
        SupportRelation::Disjoint
    } else {
        SupportRelation::Overlapping
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SymbolSupport {
    pub symbol: usize,
    pub bob: SupportRelation,
    pub willie: SupportRelation,
    /// `Tr{(I - P_0) sigma_x}`.
    pub bob_leakage: f64,
    /// `Tr{(I - P_0) rho_x}`.
    pub willie_leakage: f64,
}

pub fn support_relations(ch: &CqChannelPair) -> Vec<SymbolSupport> {
    (1..ch.alphabet_size())
        .map(|x| SymbolSupport {
            symbol: x,
            bob: support_relation(&ch.bob[x], &ch.bob[0]),
            willie: support_relation(&ch.willie[x], &ch.willie[0]),
            bob_leakage: ch.bob[x].leakage_outside(&ch.bob[0]),
            willie_leakage: ch.willie[x].leakage_outside(&ch.willie[0]),
        })
        .collect()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MixtureResult {
    pub feasible: bool,
    /// Best nonnegative weights found, normalized; a witness when feasible.
    pub pi: Option<EnsembleDistribution>,
    /// `||sum pi_x rho_x - rho_0||_F`.
    pub residual: f64,
}

/// Decides whether `rho0` is a convex combination of `states`.
pub fn mixture_feasibility(rho0: &DensityOperator, states: &[&DensityOperator]) -> Result<MixtureResult> {
    if states.is_empty() {
        return Err(Error::InvalidArgument("no non-innocent states".into()));
    }
    let d = rho0.dim();
    for s in states {
        same_dim(d, s.dim())?;
    }
    let k = states.len();
    let rows = 2 * d * d + 1;
    let vectorize = |m: &CMatrix, out: &mut dyn FnMut(usize, f64)| {
        for i in 0..d {
            for j in 0..d {
                out(2 * (i * d + j), m[(i, j)].re);
                out(2 * (i * d + j) + 1, m[(i, j)].im);
            }
        }
    };
    let mut a = DMatrix::<f64>::zeros(rows, k);
    for (c, s) in states.iter().enumerate() {
        vectorize(s.matrix(), &mut |r, v| a[(r, c)] = v);
        a[(rows - 1, c)] = 1.0;
    }
    let mut b = DVector::<f64>::zeros(rows);
    vectorize(rho0.matrix(), &mut |r, v| b[r] = v);
    b[rows - 1] = 1.0;

    let x = nnls(&a, &b);
    let total: f64 = x.iter().sum();
    if !(total > 0.0) {
        let residual = rho0.hermitian().matrix().norm();
        return Ok(MixtureResult { feasible: false, pi: None, residual });
    }
    let weights: Vec<f64> = x.iter().map(|v| v / total).collect();
    let mut recon = -rho0.matrix().clone();
    for (w, s) in weights.iter().zip(states) {
        recon += s.matrix() * crate::C64::new(*w, 0.0);
    }
    let residual = recon.norm();
    let pi = EnsembleDistribution::normalized(weights).ok();
    Ok(MixtureResult { feasible: residual <= MIXTURE_TOL, pi, residual })
}

/// Lawson-Hanson nonnegative least squares: `min ||Ax - b||`, `x >= 0`.
pub fn nnls(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let (m, n) = a.shape();
    let mut x = DVector::<f64>::zeros(n);
    let mut passive = vec![false; n];
    let tol = 10.0 * f64::EPSILON * a.norm().max(1.0) * m.max(n) as f64;
    let solve_passive = |passive: &[bool]| -> DVector<f64> {
        let idx: Vec<usize> = (0..n).filter(|&j| passive[j]).collect();
        let mut s = DVector::<f64>::zeros(n);
        if idx.is_empty() {
            return s;
        }
        let sub = DMatrix::from_fn(m, idx.len(), |r, c| a[(r, idx[c])]);
        let sol = sub.svd(true, true).solve(b, 1e-14).expect("SVD with vectors");
        for (c, &j) in idx.iter().enumerate() {
            s[j] = sol[c];
        }
        s
    };
    for _ in 0..(3 * n + 10) {
        let w = a.transpose() * (b - a * &x);
        let cand = (0..n).filter(|&j| !passive[j] && w[j] > tol).max_by(|&i, &j| w[i].total_cmp(&w[j]));
        let Some(j) = cand else { break };
        passive[j] = true;
        loop {
            let s = solve_passive(&passive);
            let bad: Vec<usize> = (0..n).filter(|&i| passive[i] && s[i] <= 0.0).collect();
            if bad.is_empty() {
                x = s;
                break;
            }
            let step = bad.iter().map(|&i| x[i] / (x[i] - s[i])).fold(f64::INFINITY, f64::min);
            x = &x + (s - &x) * step;
            for i in 0..n {
                if passive[i] && x[i] <= tol {
                    passive[i] = false;
                    x[i] = 0.0;
                }
            }
            if !passive.iter().any(|&p| p) {
                break;
            }
        }
    }
    x
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScenarioClass {
    NoGo,
    ConstantBits,
    LogLaw,
    SquareRootLaw,
    SqrtNLogN,
    ConstantRate,
}

impl std::fmt::Display for ScenarioClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            ScenarioClass::NoGo => "NoGo",
            ScenarioClass::ConstantBits => "ConstantBits",
            ScenarioClass::LogLaw => "LogLaw",
            ScenarioClass::SquareRootLaw => "SquareRootLaw",
            ScenarioClass::SqrtNLogN => "SqrtNLogN",
            ScenarioClass::ConstantRate => "ConstantRate",
        };
        f.write_str(s)
    }
}

/// What remains possible in the no-go regime when a constant detection
/// advantage is tolerated.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum WeakCovertRefinement {
    /// O(1) bits; pairs of non-innocent symbols with orthogonal Bob supports.
    ConstantBits { pairs: Vec<(usize, usize)> },
    /// O(log n) bits; symbols whose Bob support is orthogonal to the innocent one.
    LogLaw { symbols: Vec<usize> },
    /// Every Bob state stays inside the innocent support: nothing even under weak covertness.
    NoBits,
    /// Bob leaks but no pair of symbols is perfectly distinguishable.
    Unresolved,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub class: ScenarioClass,
    pub relations: Vec<SymbolSupport>,
    /// Non-innocent symbols whose Willie state stays inside the innocent support.
    pub admissible: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mixture: Option<MixtureResult>,
    /// Admissible symbols whose Bob state leaks outside the innocent support.
    pub bob_leaking: Vec<usize>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub weak_covert: Vec<WeakCovertRefinement>,
}

pub fn classify_scenario(ch: &CqChannelPair) -> Result<ScenarioReport> {
    let relations = support_relations(ch);
    let admissible: Vec<usize> =
        relations.iter().filter(|r| r.willie == SupportRelation::Contained).map(|r| r.symbol).collect();

    if admissible.is_empty() {
        let leaking: Vec<usize> =
            relations.iter().filter(|r| r.bob != SupportRelation::Contained).map(|r| r.symbol).collect();
        let disjoint: Vec<usize> =
            relations.iter().filter(|r| r.bob == SupportRelation::Disjoint).map(|r| r.symbol).collect();
        let mut pairs = Vec::new();
        if !leaking.is_empty() {
            for x in 1..ch.alphabet_size() {
                for y in (x + 1)..ch.alphabet_size() {
                    if ch.bob[y].leakage_outside(&ch.bob[x]) >= 1.0 - SUPPORT_TOL {
                        pairs.push((x, y));
                    }
                }
            }
        }
        let mut weak = Vec::new();
        if !pairs.is_empty() {
            weak.push(WeakCovertRefinement::ConstantBits { pairs });
        }
        if !disjoint.is_empty() {
            weak.push(WeakCovertRefinement::LogLaw { symbols: disjoint });
        }
        if weak.is_empty() {
            weak.push(if leaking.is_empty() { WeakCovertRefinement::NoBits } else { WeakCovertRefinement::Unresolved });
        }
        return Ok(ScenarioReport {
            class: ScenarioClass::NoGo,
            relations,
            admissible,
            mixture: None,
            bob_leaking: Vec::new(),
            weak_covert: weak,
        });
    }

    let states: Vec<&DensityOperator> = admissible.iter().map(|&x| &ch.willie[x]).collect();
    let mixture = mixture_feasibility(&ch.willie[0], &states)?;
    let bob_leaking: Vec<usize> =
        admissible.iter().copied().filter(|&x| relations[x - 1].bob != SupportRelation::Contained).collect();
    let class = if mixture.feasible {
        ScenarioClass::ConstantRate
    } else if !bob_leaking.is_empty() {
        ScenarioClass::SqrtNLogN
    } else {
        ScenarioClass::SquareRootLaw
    };
    Ok(ScenarioReport { class, relations, admissible, mixture: Some(mixture), bob_leaking, weak_covert: Vec::new() })
}

/// Quantum measurement with PSD elements summing to the identity.
#[derive(Clone, Debug)]
pub struct Povm {
    elements: Vec<HermitianMatrix>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PovmSpec {
    pub elements: Vec<MatrixJson>,
}

impl Povm {
    pub fn new(elements: Vec<HermitianMatrix>) -> Result<Self> {
        let Some(first) = elements.first() else {
            return Err(Error::InvalidPovm("no elements".into()));
        };
        let d = first.dim();
        let mut sum = CMatrix::zeros(d, d);
        for (i, e) in elements.iter().enumerate() {
            if e.dim() != d {
                return Err(Error::InvalidPovm(format!("element {i} has dim {} instead of {d}", e.dim())));
            }
            let min = e.eigenvalues().last().copied().unwrap_or(0.0);
            if min < -DEFAULT_RANK_TOL {
                return Err(Error::InvalidPovm(format!("element {i} has eigenvalue {min:.3e}")));
            }
            sum += e.matrix();
        }
        let dev = (sum - CMatrix::identity(d, d)).norm();
        if dev > POVM_SUM_TOL {
            return Err(Error::InvalidPovm(format!("elements sum to identity only within {dev:.3e}")));
        }
        Ok(Self { elements })
    }

    pub fn parse(text: &str) -> Result<Self> {
        let spec: PovmSpec = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let elems = spec
            .elements
            .iter()
            .map(|m| HermitianMatrix::new(m.to_matrix()?))
            .collect::<Result<Vec<_>>>()
            .map_err(|e| Error::InvalidPovm(e.to_string()))?;
        Self::new(elems)
    }

    pub fn computational_basis(d: usize) -> Self {
        let elements = (0..d)
            .map(|i| {
                let mut v = vec![0.0; d];
                v[i] = 1.0;
                HermitianMatrix::from_real_diagonal(&v)
            })
            .collect();
        Self { elements }
    }

    pub fn trivial(d: usize) -> Self {
        Self { elements: vec![HermitianMatrix::identity(d)] }
    }

    pub fn elements(&self) -> &[HermitianMatrix] {
        &self.elements
    }

    pub fn dim(&self) -> usize {
        self.elements[0].dim()
    }

    pub fn num_outcomes(&self) -> usize {
        self.elements.len()
    }
}

/// Row-stochastic matrix `p(y|x)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StochasticMatrix {
    pub rows: Vec<Vec<f64>>,
}

pub fn induce_dmc(states: &[DensityOperator], povm: &Povm) -> Result<StochasticMatrix> {
    let mut rows = Vec::with_capacity(states.len());
    for s in states {
        same_dim(s.dim(), povm.dim())?;
        let row: Vec<f64> = povm
            .elements()
            .iter()
            .map(|e| {
                let p = trace_product(e.matrix(), s.matrix()).re;
                if (-1e-12..0.0).contains(&p) {
                    0.0
                } else {
                    p
                }
            })
            .collect();
        let total: f64 = row.iter().sum();
        if row.iter().any(|p| *p < 0.0) || (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidPovm(format!("induced row sums to {total}")));
        }
        rows.push(row);
    }
    Ok(StochasticMatrix { rows })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WeakCovertBudget {
    pub l_bar: f64,
    pub x_star: usize,
    pub trace_distance: f64,
}

/// Number of non-innocent symbols `4 eps0 / ||rho_{x*} - rho_0||_1` tolerated
/// under a weak covertness budget `eps0`.
pub fn weak_covert_budget(ch: &CqChannelPair, eps0: f64) -> Result<WeakCovertBudget> {
    if !(eps0 > 0.0) {
        return Err(Error::InvalidArgument(format!("epsilon0 = {eps0} must be positive")));
    }
    let mut best = (0usize, 0.0f64);
    for x in 1..ch.alphabet_size() {
        let t = trace_distance(&ch.willie[x], &ch.willie[0])?;
        if t > best.1 {
            best = (x, t);
        }
    }
    if best.1 <= 1e-12 {
        return Err(Error::DegenerateChannel);
    }
    Ok(WeakCovertBudget { l_bar: 4.0 * eps0 / best.1, x_star: best.0, trace_distance: best.1 })
}
