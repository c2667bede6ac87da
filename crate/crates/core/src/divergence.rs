//! Divergences and distances between density operators, in nats.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::{
    same_dim, spectral_projection_nonneg, trace_product, CMatrix, DensityOperator, HermitianMatrix, MatrixFunction,
    Projector, C64,
};

/// Trace mass outside the support above which a divergence is infinite.
pub const SUPPORT_TOL: f64 = 1e-9;
const NEG_CLIP: f64 = 1e-9;

/// Nonnegative divergence value or the `+inf` sentinel.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "DivergenceRepr", into = "DivergenceRepr")]
pub struct DivergenceValue {
    value: f64,
}

#[derive(Serialize, Deserialize)]
struct DivergenceRepr {
    value: Option<f64>,
    finite: bool,
}

impl From<DivergenceValue> for DivergenceRepr {
    fn from(d: DivergenceValue) -> Self {
        Self { value: d.is_finite().then_some(d.value), finite: d.is_finite() }
    }
}

impl From<DivergenceRepr> for DivergenceValue {
    fn from(r: DivergenceRepr) -> Self {
        match (r.finite, r.value) {
            (true, Some(v)) => DivergenceValue::finite(v),
            _ => DivergenceValue::INFINITE,
        }
    }
}

impl DivergenceValue {
    pub const INFINITE: DivergenceValue = DivergenceValue { value: f64::INFINITY };

    /// Wraps a computed value, clipping round-off in `(-1e-9, 0)` to zero.
    pub fn finite(v: f64) -> Self {
        let value = if v < 0.0 && v > -NEG_CLIP { 0.0 } else { v };
        Self { value }
    }

    pub fn is_finite(&self) -> bool {
        self.value.is_finite()
    }

    /// Value in nats; `f64::INFINITY` for the sentinel.
    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn bits(&self) -> f64 {
        self.value / std::f64::consts::LN_2
    }
}

impl std::fmt::Display for DivergenceValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.is_finite() {
            write!(f, "{}", self.value)
        } else {
            f.write_str("inf")
        }
    }
}

/// Probability vector; sums to one within 1e-12.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct EnsembleDistribution {
    probs: Vec<f64>,
}

impl TryFrom<Vec<f64>> for EnsembleDistribution {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<EnsembleDistribution> for Vec<f64> {
    fn from(d: EnsembleDistribution) -> Self {
        d.probs
    }
}

impl EnsembleDistribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidDistribution("empty".into()));
        }
        if let Some(p) = probs.iter().find(|p| !(**p >= 0.0)) {
            return Err(Error::InvalidDistribution(format!("negative or NaN entry {p}")));
        }
        let s: f64 = probs.iter().sum();
        if (s - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidDistribution(format!("sums to {s}")));
        }
        Ok(Self { probs })
    }

    /// Rescales nonnegative weights to sum to one.
    pub fn normalized(weights: Vec<f64>) -> Result<Self> {
        let s: f64 = weights.iter().sum();
        if weights.iter().any(|w| !(*w >= 0.0)) || !(s > 0.0) {
            return Err(Error::InvalidDistribution("weights must be nonnegative with positive sum".into()));
        }
        Ok(Self { probs: weights.iter().map(|w| w / s).collect() })
    }

    pub fn uniform(k: usize) -> Self {
        Self { probs: vec![1.0 / k as f64; k] }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }
}

/// `Tr{(I - P_sigma) rho}`.
pub fn support_leakage(rho: &DensityOperator, sigma: &DensityOperator) -> Result<f64> {
    same_dim(rho.dim(), sigma.dim())?;
    Ok(rho.leakage_outside(sigma))
}

pub fn support_contained(rho: &DensityOperator, sigma: &DensityOperator) -> Result<bool> {
    Ok(support_leakage(rho, sigma)? <= SUPPORT_TOL)
}

pub fn relative_entropy(rho: &DensityOperator, sigma: &DensityOperator) -> Result<DivergenceValue> {
    if !support_contained(rho, sigma)? {
        return Ok(DivergenceValue::INFINITE);
    }
    let neg_entropy = -rho.entropy();
    let tol = sigma.rank_tolerance();
    let v = sigma.spectrum().vectors();
    let rv = rho.matrix() * v;
    let mut cross = 0.0;
    for (j, &mu) in sigma.eigenvalues().iter().enumerate() {
        if mu > tol {
            let w: f64 = v.column(j).iter().zip(rv.column(j).iter()).map(|(a, b)| (a.conj() * b).re).sum();
            cross += w * mu.ln();
        }
    }
    Ok(DivergenceValue::finite(neg_entropy - cross))
}

/// `Tr{(rho - sigma)^2 sigma^{-1}}` with the pseudo-inverse on the support.
pub fn chi_squared(rho: &DensityOperator, sigma: &DensityOperator) -> Result<DivergenceValue> {
    if !support_contained(rho, sigma)? {
        return Ok(DivergenceValue::INFINITE);
    }
    let tol = sigma.rank_tolerance();
    let v = sigma.spectrum().vectors();
    let y = v.adjoint() * rho.matrix() * v;
    let d = y.nrows();
    let mut acc = 0.0;
    for (j, &mu) in sigma.eigenvalues().iter().enumerate() {
        if mu > tol {
            let mut row = 0.0;
            for k in 0..d {
                let mut z = y[(j, k)];
                if k == j {
                    z -= C64::new(mu, 0.0);
                }
                row += z.norm_sqr();
            }
            acc += row / mu;
        }
    }
    // Deliberate defect for checking that the verification suites catch it.
    #[cfg(feature = "mutate-chi2-sign")]
    let acc = -acc;
    Ok(DivergenceValue::finite(acc))
}

/// `||rho - sigma||_1`, clamped to `[0, 2]`.
pub fn trace_distance(rho: &DensityOperator, sigma: &DensityOperator) -> Result<f64> {
    same_dim(rho.dim(), sigma.dim())?;
    let diff = HermitianMatrix::symmetrized(rho.matrix() - sigma.matrix());
    Ok(diff.trace_norm().clamp(0.0, 2.0))
}

/// Minimum error probability for equal priors.
pub fn helstrom_error(rho_bar: &DensityOperator, rho0: &DensityOperator) -> Result<f64> {
    Ok(helstrom_from_distance(trace_distance(rho_bar, rho0)?))
}

pub fn helstrom_from_distance(t: f64) -> f64 {
    (0.5 * (1.0 - 0.5 * t)).clamp(0.0, 0.5)
}

/// Optimal test `Q = {rho_bar - rho0 >= 0}`: deciding "rho_bar" on `Q`.
pub fn helstrom_measurement(rho_bar: &DensityOperator, rho0: &DensityOperator) -> Result<Projector> {
    same_dim(rho_bar.dim(), rho0.dim())?;
    let diff = HermitianMatrix::symmetrized(rho_bar.matrix() - rho0.matrix());
    Ok(spectral_projection_nonneg(&diff, false))
}

/// `D - ||rho - sigma||_1^2 / 2`; infinite when `D` is.
pub fn pinsker_gap(rho: &DensityOperator, sigma: &DensityOperator) -> Result<f64> {
    let d = relative_entropy(rho, sigma)?;
    if !d.is_finite() {
        return Ok(f64::INFINITY);
    }
    let t = trace_distance(rho, sigma)?;
    Ok(d.value() - 0.5 * t * t)
}

pub fn entropy(rho: &DensityOperator) -> f64 {
    rho.entropy()
}

/// `H(sum p_x s_x) - sum p_x H(s_x)`.
pub fn holevo_information(p: &EnsembleDistribution, states: &[DensityOperator]) -> Result<f64> {
    if p.len() != states.len() || states.is_empty() {
        return Err(Error::DimensionMismatch(format!("{} probabilities for {} states", p.len(), states.len())));
    }
    let refs: Vec<&DensityOperator> = states.iter().collect();
    let avg = DensityOperator::mixture(p.probs(), &refs)?;
    let cond: f64 = p.probs().iter().zip(states).map(|(w, s)| w * s.entropy()).sum();
    let cap = (states[0].dim() as f64).ln();
    Ok((avg.entropy() - cond).clamp(0.0, cap))
}

fn require_support(inner: &DensityOperator, outer: &DensityOperator, what: &str) -> Result<()> {
    let leak = support_leakage(inner, outer)?;
    if leak > SUPPORT_TOL {
        return Err(Error::SupportViolation(format!("{what}: trace {leak:.3e} outside the reference support")));
    }
    Ok(())
}

/// `phi(r) = -ln Tr{s1 s0^{r/2} s1^{-r} s0^{r/2}}` and its derivative in `r`.
pub fn phi_functional(sigma1: &DensityOperator, sigma0: &DensityOperator, r: f64) -> Result<(f64, f64)> {
    check_unit_interval(r)?;
    require_support(sigma1, sigma0, "phi")?;
    let s1 = sigma1.matrix();
    let half = sigma0.apply(MatrixFunction::Pow(r / 2.0)).into_matrix();
    let inv = sigma1.apply(MatrixFunction::Pow(-r)).into_matrix();
    let l0 = sigma0.apply(MatrixFunction::Log).into_matrix();
    let l1 = sigma1.apply(MatrixFunction::Log).into_matrix();

    // K = s0^{r/2} s1^{-r} s0^{r/2}, T = Tr{s1 K}.
    let k = &half * &inv * &half;
    let t = trace_product(s1, &k).re;
    // dT/dr = Tr{s1 (L0 K + K L0)}/2 - Tr{s1 s0^{r/2} L1 s1^{-r} s0^{r/2}}
    let sym = trace_product(&(s1 * &l0), &k).re;
    let mid = trace_product(&(s1 * &half * &l1 * &inv), &half).re;
    let dt = sym - mid;
    Ok((-t.ln(), -dt / t))
}

/// `psi(r) = ln Tr{r1^{1+r} r0^{-r}}` and its derivative in `r`.
pub fn psi_functional(rho1: &DensityOperator, rho0: &DensityOperator, r: f64) -> Result<(f64, f64)> {
    check_unit_interval(r)?;
    require_support(rho1, rho0, "psi")?;
    let a = rho1.apply(MatrixFunction::Pow(1.0 + r)).into_matrix();
    let b = rho0.apply(MatrixFunction::Pow(-r)).into_matrix();
    let l1 = rho1.apply(MatrixFunction::Log).into_matrix();
    let l0 = rho0.apply(MatrixFunction::Log).into_matrix();
    let ba = &b * &a;
    let t = trace_product(&a, &b).re;
    let dt = trace_product(&ba, &(l1 - l0)).re;
    Ok((t.ln(), dt / t))
}

fn check_unit_interval(r: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&r) {
        return Err(Error::InvalidArgument(format!("r = {r} outside [0, 1]")));
    }
    Ok(())
}

/// `Tr{sigma0^{-1} sigma1^2}` with the pseudo-inverse.
pub fn overlap_trace(sigma0: &DensityOperator, sigma1: &DensityOperator) -> Result<f64> {
    require_support(sigma1, sigma0, "overlap")?;
    let inv = sigma0.apply(MatrixFunction::Pinv).into_matrix();
    let sq: CMatrix = sigma1.matrix() * sigma1.matrix();
    Ok(trace_product(&inv, &sq).re.max(0.0))
}

/// Kubo-Mori metric `sum_ij |X_ij|^2 (ln l_i - ln l_j)/(l_i - l_j)` of
/// `X = rho - sigma` in the eigenbasis of `sigma`. This is the exact second
/// derivative of `D(sigma + a X || sigma)` at `a = 0`; it equals
/// `chi_squared` when the two states commute and is smaller otherwise.
pub fn kubo_mori_chi_squared(rho: &DensityOperator, sigma: &DensityOperator) -> Result<DivergenceValue> {
    if !support_contained(rho, sigma)? {
        return Ok(DivergenceValue::INFINITE);
    }
    let tol = sigma.rank_tolerance();
    let v = sigma.spectrum().vectors();
    let l = sigma.eigenvalues();
    let x = v.adjoint() * (rho.matrix() - sigma.matrix()) * v;
    let mut acc = 0.0;
    for i in 0..l.len() {
        for j in 0..l.len() {
            if l[i] <= tol || l[j] <= tol {
                continue;
            }
            let w = if (l[i] - l[j]).abs() <= 1e-12 * l[i].max(l[j]) {
                2.0 / (l[i] + l[j])
            } else {
                (l[i].ln() - l[j].ln()) / (l[i] - l[j])
            };
            acc += x[(i, j)].norm_sqr() * w;
        }
    }
    Ok(DivergenceValue::finite(acc))
}

/// Lower and upper bounds `(1/c) Tr{A - A^{1-c} B^c}` and
/// `(1/c) Tr{A^{1+c} B^{-c} - A}` on `D(A||B)`, for `c` in `(0, 1]`.
pub fn relative_entropy_sandwich(a: &DensityOperator, b: &DensityOperator, c: f64) -> Result<(f64, f64)> {
    if !(c > 0.0 && c <= 1.0) {
        return Err(Error::InvalidArgument(format!("c = {c} outside (0, 1]")));
    }
    require_support(a, b, "sandwich")?;
    let a_lo = a.apply(MatrixFunction::Pow(1.0 - c)).into_matrix();
    let b_lo = b.apply(MatrixFunction::Pow(c)).into_matrix();
    let a_hi = a.apply(MatrixFunction::Pow(1.0 + c)).into_matrix();
    let b_hi = b.apply(MatrixFunction::Pow(-c)).into_matrix();
    let lower = (1.0 - trace_product(&a_lo, &b_lo).re) / c;
    let upper = (trace_product(&a_hi, &b_hi).re - 1.0) / c;
    Ok((lower, upper))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{kron_power, pinching, tensor};
    use crate::random::{random_density, random_full_rank};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn diag(p: &[f64]) -> DensityOperator {
        DensityOperator::diagonal(p).unwrap()
    }

    fn kl(p: &[f64], q: &[f64]) -> f64 {
        p.iter().zip(q).filter(|(a, _)| **a > 0.0).map(|(a, b)| a * (a / b).ln()).sum()
    }

    #[test]
    fn canonical_pair_values() {
        let (r, s) = (diag(&[0.6, 0.4]), diag(&[0.9, 0.1]));
        let d = relative_entropy(&r, &s).unwrap().value();
        assert!((d - kl(&[0.6, 0.4], &[0.9, 0.1])).abs() < 1e-12);
        assert!((d - 0.311239).abs() < 1e-6);
        assert!((chi_squared(&r, &s).unwrap().value() - 1.0).abs() < 1e-9);
        assert!((trace_distance(&r, &s).unwrap() - 0.6).abs() < 1e-12);
        assert!((helstrom_error(&r, &s).unwrap() - 0.35).abs() < 1e-12);
        assert!((pinsker_gap(&r, &s).unwrap() - 0.131239).abs() < 1e-6);
        assert!((overlap_trace(&s, &r).unwrap() - 2.0).abs() < 1e-12);
        let c2 = chi_squared(&diag(&[0.75, 0.25]), &diag(&[0.5, 0.5])).unwrap().value();
        assert!((c2 - 0.25).abs() < 1e-9);
    }

    #[test]
    fn disjoint_supports_give_sentinel() {
        let (a, b) = (diag(&[1.0, 0.0]), diag(&[0.0, 1.0]));
        assert!(!relative_entropy(&a, &b).unwrap().is_finite());
        assert!(!chi_squared(&a, &b).unwrap().is_finite());
        assert_eq!(trace_distance(&a, &b).unwrap(), 2.0);
        assert_eq!(helstrom_error(&a, &b).unwrap(), 0.0);
        assert!(matches!(phi_functional(&a, &b, 0.5), Err(Error::SupportViolation(_))));
    }

    #[test]
    fn sentinel_serializes_without_infinity() {
        let s = serde_json::to_string(&DivergenceValue::INFINITE).unwrap();
        assert_eq!(s, r#"{"value":null,"finite":false}"#);
        let back: DivergenceValue = serde_json::from_str(&s).unwrap();
        assert!(!back.is_finite());
    }

    #[test]
    fn kubo_mori_matches_chi_squared_when_commuting() {
        let (r, s) = (diag(&[0.6, 0.4]), diag(&[0.9, 0.1]));
        assert!((kubo_mori_chi_squared(&r, &s).unwrap().value() - 1.0).abs() < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        for _ in 0..10 {
            let a = random_density(&mut rng, 3, 3);
            let b = random_full_rank(&mut rng, 3, 0.2);
            let km = kubo_mori_chi_squared(&a, &b).unwrap().value();
            assert!(km <= chi_squared(&a, &b).unwrap().value() + 1e-12);
            // Second difference of D along the segment.
            let h = 1e-4;
            let mix = |t: f64| {
                let m = a.matrix() * C64::new(t, 0.0) + b.matrix() * C64::new(1.0 - t, 0.0);
                relative_entropy(&DensityOperator::new(HermitianMatrix::symmetrized(m).into_matrix()).unwrap(), &b)
                    .unwrap()
                    .value()
            };
            let second = (mix(2.0 * h) - 2.0 * mix(h)) / (h * h);
            assert!((second - km).abs() < 1e-2 * km.max(1.0), "{second} vs {km}");
        }
    }

    #[test]
    fn holevo_examples() {
        let z = diag(&[1.0, 0.0]);
        let o = diag(&[0.0, 1.0]);
        let p = EnsembleDistribution::uniform(2);
        assert!((holevo_information(&p, &[z, o]).unwrap() - 2f64.ln()).abs() < 1e-12);
        let h = |v: &[f64]| -> f64 { v.iter().filter(|x| **x > 0.0).map(|x| -x * x.ln()).sum() };
        let want = h(&[0.75, 0.25]) - 0.5 * h(&[0.9, 0.1]) - 0.5 * h(&[0.6, 0.4]);
        let got = holevo_information(&p, &[diag(&[0.9, 0.1]), diag(&[0.6, 0.4])]).unwrap();
        assert!((got - want).abs() < 1e-12);
    }

    #[test]
    fn distribution_validation() {
        assert!(EnsembleDistribution::new(vec![0.5, 0.6]).is_err());
        assert!(EnsembleDistribution::new(vec![1.5, -0.5]).is_err());
        assert!(EnsembleDistribution::new(vec![0.3, 0.7]).is_ok());
    }

    #[test]
    fn phi_and_psi_at_zero_give_relative_entropy() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let a = random_full_rank(&mut rng, 3, 0.2);
            let b = random_full_rank(&mut rng, 3, 0.2);
            let d = relative_entropy(&a, &b).unwrap().value();
            let (p0, dp0) = phi_functional(&a, &b, 0.0).unwrap();
            let (q0, dq0) = psi_functional(&a, &b, 0.0).unwrap();
            assert!(p0.abs() < 1e-12 && q0.abs() < 1e-12);
            assert!((dp0 - d).abs() < 1e-8, "phi' {dp0} vs {d}");
            assert!((dq0 - d).abs() < 1e-8, "psi' {dq0} vs {d}");
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let h = 1e-5;
        for _ in 0..10 {
            let a = random_full_rank(&mut rng, 3, 0.2);
            let b = random_full_rank(&mut rng, 3, 0.2);
            for r in [0.1, 0.5, 0.9] {
                let fd =
                    (phi_functional(&a, &b, r + h).unwrap().0 - phi_functional(&a, &b, r - h).unwrap().0) / (2.0 * h);
                assert!((phi_functional(&a, &b, r).unwrap().1 - fd).abs() < 1e-6);
                let fd =
                    (psi_functional(&a, &b, r + h).unwrap().0 - psi_functional(&a, &b, r - h).unwrap().0) / (2.0 * h);
                assert!((psi_functional(&a, &b, r).unwrap().1 - fd).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn psi_commuting_scalar_oracle() {
        let (p, q) = ([0.6, 0.4], [0.9, 0.1]);
        for r in [0.0, 0.3, 1.0] {
            let want: f64 = p.iter().zip(&q).map(|(a, b): (&f64, &f64)| a.powf(1.0 + r) * b.powf(-r)).sum::<f64>().ln();
            assert!((psi_functional(&diag(&p), &diag(&q), r).unwrap().0 - want).abs() < 1e-12);
        }
    }

    #[test]
    fn sandwich_and_additivity() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..20 {
            let a = random_full_rank(&mut rng, 2, 0.1);
            let b = random_full_rank(&mut rng, 2, 0.1);
            let d = relative_entropy(&a, &b).unwrap().value();
            for c in [0.1, 0.5, 1.0] {
                let (lo, hi) = relative_entropy_sandwich(&a, &b, c).unwrap();
                assert!(lo - 1e-8 <= d && d <= hi + 1e-8);
            }
            let d2 = relative_entropy(&kron_power(&a, 2).unwrap(), &tensor(&b, &b).unwrap()).unwrap().value();
            assert!((d2 - 2.0 * d).abs() < 1e-9);
        }
    }

    #[test]
    fn helstrom_projector_attains_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        for _ in 0..20 {
            let a = random_density(&mut rng, 3, 2);
            let b = random_density(&mut rng, 3, 3);
            let q = helstrom_measurement(&a, &b).unwrap();
            let err = 0.5 * (q.expectation(b.matrix()) + 1.0 - q.expectation(a.matrix()));
            assert!((err - helstrom_error(&a, &b).unwrap()).abs() < 1e-10);
        }
    }

    #[test]
    fn pinching_does_not_increase_divergence() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        for _ in 0..20 {
            let rho = random_density(&mut rng, 3, 3);
            let s0 = random_full_rank(&mut rng, 3, 0.1);
            let p = pinching(s0.hermitian(), rho.hermitian()).unwrap();
            let pinched = DensityOperator::from_hermitian(p, 1e-10).unwrap();
            let before = relative_entropy(&rho, &s0).unwrap().value();
            let after = relative_entropy(&pinched, &s0).unwrap().value();
            assert!(after <= before + 1e-9);
        }
    }
}
