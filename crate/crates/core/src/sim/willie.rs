use serde::{Deserialize, Serialize};

use crate::channel::CqChannelPair;
use crate::divergence::{helstrom_from_distance, DivergenceValue, SUPPORT_TOL};
use crate::error::{Error, Result};
use crate::operator::{
    checked_power_dim, entropy_of_values, quadratic_form, CMatrix, DensityOperator, HermitianMatrix, C64,
};

use super::decoder::product_matrix;
use super::Codebook;

const COMMUTE_TOL: f64 = 1e-10;

/// `(1/MK) sum_{m,k} rho^n(m,k)` on Willie's output.
pub fn willie_average_state(codebook: &Codebook, ch: &CqChannelPair) -> Result<DensityOperator> {
    check_alphabet(codebook, ch)?;
    let d = ch.willie_dim();
    let dim = checked_power_dim(d, codebook.n)?;
    let mut acc = CMatrix::zeros(dim, dim);
    for cw in &codebook.codewords {
        acc += product_matrix(ch.willie(), cw)?;
    }
    acc /= C64::new(codebook.codewords.len() as f64, 0.0);
    DensityOperator::from_hermitian(HermitianMatrix::symmetrized(acc), crate::operator::DEFAULT_RANK_TOL)
}

fn check_alphabet(codebook: &Codebook, ch: &CqChannelPair) -> Result<()> {
    if codebook.alphabet != ch.alphabet_size() {
        return Err(Error::IndexMismatch(format!(
            "codebook alphabet {} differs from channel alphabet {}",
            codebook.alphabet,
            ch.alphabet_size()
        )));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CovertnessMethod {
    /// All Willie states share an eigenbasis; computed over the product distribution.
    Commuting,
    Dense,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CovertnessReport {
    /// `D(rho_bar^n || rho_0^{(x)n})` in nats.
    pub divergence: DivergenceValue,
    /// Minimum error of a test between `rho_bar^n` and `rho_0^{(x)n}`.
    pub helstrom_pe: f64,
    pub trace_distance: f64,
    pub method: CovertnessMethod,
}

/// Exact covertness divergence and Helstrom error for a fixed codebook.
pub fn covertness_report(codebook: &Codebook, ch: &CqChannelPair) -> Result<CovertnessReport> {
    check_alphabet(codebook, ch)?;
    checked_power_dim(ch.willie_dim(), codebook.n)?;
    match common_eigenbasis(ch.willie()) {
        Some(dists) => Ok(commuting_report(codebook, &dists)),
        None => dense_report(codebook, ch),
    }
}

/// Eigenvalue distributions of every state in a shared eigenbasis, if one exists.
fn common_eigenbasis(states: &[DensityOperator]) -> Option<Vec<Vec<f64>>> {
    for (i, a) in states.iter().enumerate() {
        for b in &states[i + 1..] {
            if !a.commutes_with(b, COMMUTE_TOL) {
                return None;
            }
        }
    }
    let d = states[0].dim();
    let mut gen = CMatrix::zeros(d, d);
    for (x, s) in states.iter().enumerate() {
        // Irrational weights avoid accidental degeneracy of the combination.
        let w = 1.0 + ((x as f64 + 1.0) * 0.618_033_988_749_895).fract();
        gen += s.matrix() * C64::new(w, 0.0);
    }
    let basis = HermitianMatrix::symmetrized(gen).eigen();
    let v = basis.vectors();
    let mut out = Vec::with_capacity(states.len());
    for s in states {
        let rot = v.adjoint() * s.matrix() * v;
        for r in 0..d {
            for c in 0..d {
                if r != c && rot[(r, c)].norm() > COMMUTE_TOL {
                    return None;
                }
            }
        }
        out.push((0..d).map(|j| rot[(j, j)].re.max(0.0)).collect());
    }
    Some(out)
}

fn product_vector(dists: &[Vec<f64>], cw: &[usize]) -> Vec<f64> {
    let mut acc = vec![1.0];
    for &x in cw {
        let p = &dists[x];
        let mut next = Vec::with_capacity(acc.len() * p.len());
        for a in &acc {
            next.extend(p.iter().map(|b| a * b));
        }
        acc = next;
    }
    acc
}

fn commuting_report(codebook: &Codebook, dists: &[Vec<f64>]) -> CovertnessReport {
    let reference = product_vector(dists, &vec![0; codebook.n]);
    let mut avg = vec![0.0; reference.len()];
    let w = 1.0 / codebook.codewords.len() as f64;
    for cw in &codebook.codewords {
        for (a, b) in avg.iter_mut().zip(product_vector(dists, cw)) {
            *a += w * b;
        }
    }
    let mut kl = 0.0;
    let mut outside = 0.0;
    let mut tv = 0.0;
    for (&q, &p) in avg.iter().zip(&reference) {
        tv += (q - p).abs();
        if q <= 0.0 {
            continue;
        }
        if p <= 0.0 {
            outside += q;
        } else {
            kl += q * (q / p).ln();
        }
    }
    let divergence = if outside > SUPPORT_TOL { DivergenceValue::INFINITE } else { DivergenceValue::finite(kl) };
    let t = tv.clamp(0.0, 2.0);
    CovertnessReport {
        divergence,
        helstrom_pe: helstrom_from_distance(t),
        trace_distance: t,
        method: CovertnessMethod::Commuting,
    }
}

fn dense_report(codebook: &Codebook, ch: &CqChannelPair) -> Result<CovertnessReport> {
    let avg = willie_average_state(codebook, ch)?;
    let rho0 = &ch.willie()[0];
    let tol = rho0.rank_tolerance();
    let v = rho0.spectrum().vectors();
    // Per symbol: mass inside supp(rho_0) and Tr{rho_x ln rho_0} on the support.
    let mut inside = Vec::with_capacity(ch.alphabet_size());
    let mut cross = Vec::with_capacity(ch.alphabet_size());
    for s in ch.willie() {
        let (mut t, mut l) = (0.0, 0.0);
        for (j, &lam) in rho0.eigenvalues().iter().enumerate() {
            if lam > tol {
                let q = quadratic_form(s.matrix(), v, j);
                t += q;
                l += q * lam.ln();
            }
        }
        inside.push(t.min(1.0));
        cross.push(l);
    }
    let w = 1.0 / codebook.codewords.len() as f64;
    let mut leak = 0.0;
    let mut cross_avg = 0.0;
    for cw in &codebook.codewords {
        leak += w * (1.0 - cw.iter().map(|&x| inside[x]).product::<f64>());
        cross_avg += w * cw.iter().map(|&x| cross[x]).sum::<f64>();
    }
    let divergence = if leak > SUPPORT_TOL {
        DivergenceValue::INFINITE
    } else {
        DivergenceValue::finite(-entropy_of_values(avg.eigenvalues(), avg.rank_tolerance()) - cross_avg)
    };
    let reference = product_matrix(ch.willie(), &vec![0; codebook.n])?;
    let t = HermitianMatrix::symmetrized(avg.matrix() - reference).trace_norm().clamp(0.0, 2.0);
    Ok(CovertnessReport {
        divergence,
        helstrom_pe: helstrom_from_distance(t),
        trace_distance: t,
        method: CovertnessMethod::Dense,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::divergence::{helstrom_error, relative_entropy, trace_distance};
    use crate::operator::kron_power;
    use crate::random::{random_density, random_full_rank};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn generic_channel(seed: u64) -> CqChannelPair {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b: Vec<DensityOperator> = (0..3).map(|_| random_full_rank(&mut rng, 2, 0.1)).collect();
        CqChannelPair::symmetric(b).unwrap()
    }

    #[test]
    fn innocent_codebook_is_perfectly_covert() {
        for ch in [CqChannelPair::qubit_diagonal(), generic_channel(1)] {
            let cb = Codebook::from_codewords(vec![vec![0; 3]; 2], 2, 1, ch.alphabet_size()).unwrap();
            let avg = willie_average_state(&cb, &ch).unwrap();
            let r0 = kron_power(&ch.willie()[0], 3).unwrap();
            assert!((avg.matrix() - r0.matrix()).norm() < 1e-14);
            let rep = covertness_report(&cb, &ch).unwrap();
            assert!(rep.divergence.value().abs() < 1e-12);
            assert!((rep.helstrom_pe - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn single_letter_reduces_to_state_divergence() {
        for ch in [CqChannelPair::qubit_diagonal(), generic_channel(2)] {
            let cb = Codebook::from_codewords(vec![vec![1]], 1, 1, ch.alphabet_size()).unwrap();
            let rep = covertness_report(&cb, &ch).unwrap();
            let want = relative_entropy(&ch.willie()[1], &ch.willie()[0]).unwrap().value();
            assert!((rep.divergence.value() - want).abs() < 1e-10);
        }
    }

    #[test]
    fn helstrom_matches_trace_distance() {
        let ch = generic_channel(3);
        let cb = Codebook::from_codewords(vec![vec![1, 0, 2], vec![0, 0, 1]], 2, 1, 3).unwrap();
        let rep = covertness_report(&cb, &ch).unwrap();
        assert_eq!(rep.method, CovertnessMethod::Dense);
        let avg = willie_average_state(&cb, &ch).unwrap();
        let r0 = kron_power(&ch.willie()[0], 3).unwrap();
        let t = trace_distance(&avg, &r0).unwrap();
        assert!((rep.helstrom_pe - 0.5 * (1.0 - 0.5 * t)).abs() < 1e-10);
        assert!((rep.helstrom_pe - helstrom_error(&avg, &r0).unwrap()).abs() < 1e-10);
        let d = relative_entropy(&avg, &r0).unwrap().value();
        assert!((rep.divergence.value() - d).abs() < 1e-9);
    }

    #[test]
    fn commuting_path_agrees_with_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let u = crate::random::random_unitary(&mut rng, 3);
        let states: Vec<DensityOperator> = [[0.7, 0.2, 0.1], [0.3, 0.3, 0.4], [0.1, 0.1, 0.8]]
            .iter()
            .map(|p| {
                let m = &u * HermitianMatrix::from_real_diagonal(p).matrix() * u.adjoint();
                DensityOperator::new(HermitianMatrix::symmetrized(m).into_matrix()).unwrap()
            })
            .collect();
        let ch = CqChannelPair::symmetric(states).unwrap();
        let cb = Codebook::from_codewords(vec![vec![1, 0], vec![2, 1], vec![0, 0]], 3, 1, 3).unwrap();
        let fast = covertness_report(&cb, &ch).unwrap();
        assert_eq!(fast.method, CovertnessMethod::Commuting);
        let slow = dense_report(&cb, &ch).unwrap();
        assert!((fast.divergence.value() - slow.divergence.value()).abs() < 1e-9);
        assert!((fast.helstrom_pe - slow.helstrom_pe).abs() < 1e-9);
    }

    #[test]
    fn leaked_support_is_infinite() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let r0 = random_density(&mut rng, 3, 2);
        let r1 = random_density(&mut rng, 3, 3);
        let ch = CqChannelPair::symmetric(vec![r0, r1]).unwrap();
        let cb = Codebook::from_codewords(vec![vec![1, 0]], 1, 1, 2).unwrap();
        let rep = covertness_report(&cb, &ch).unwrap();
        assert!(!rep.divergence.is_finite());
    }
}
