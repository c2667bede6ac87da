use serde::{Deserialize, Serialize};

use crate::channel::{support_relation, CqChannelPair, SupportRelation};
use crate::error::{Error, Result};

use super::Codebook;

/// Quantities of the impossibility argument for one `epsilon`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoGoReport {
    pub epsilon: f64,
    /// `min_m Tr{(I - P_0^n) rho_m^n} / (1 - |<0^n|psi_m>|^2)` over flagged codewords.
    pub c_min: f64,
    /// Error of the detector `{P_0^n, I - P_0^n}`: `(1/2M) sum_m Tr{P_0^n rho_m^n}`.
    pub pe_willie: f64,
    /// The code meets `P_e^W >= 1/2 - epsilon` against this detector.
    pub covert: bool,
    /// `epsilon <= c_min / 16`, where the final bound applies.
    pub valid: bool,
    /// Codewords with `1 - |a_0(m)|^2 <= 4 epsilon / c_min`.
    pub near_innocent: Vec<usize>,
    /// Adjacent-index pairing of `near_innocent`; the last one is dropped when odd.
    pub pairs: Vec<(usize, usize)>,
    /// `(1/M) sum over paired messages` of the two-state fidelity bound.
    pub paired_bound: f64,
    /// `max(0, 1/4 - sqrt(epsilon / c_min))`.
    pub bob_lower_bound: f64,
}

/// Bob's error lower bound and Willie's projector-detector error for a code
/// whose symbol `x` is sent as a pure input with `|<0|phi_x>|^2 = overlaps[x]`.
pub fn nogo_experiment(ch: &CqChannelPair, codebook: &Codebook, overlaps: &[f64], epsilon: f64) -> Result<NoGoReport> {
    let q = ch.alphabet_size();
    if codebook.alphabet != q || overlaps.len() != q {
        return Err(Error::IndexMismatch(format!(
            "channel has {q} symbols, codebook {} and overlaps {}",
            codebook.alphabet,
            overlaps.len()
        )));
    }
    if overlaps.iter().any(|o| !(0.0..=1.0).contains(o)) || (overlaps[0] - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidArgument("overlaps must lie in [0, 1] with the innocent overlap equal to 1".into()));
    }
    if !(epsilon > 0.0) {
        return Err(Error::InvalidArgument(format!("epsilon = {epsilon} must be positive")));
    }
    let rho0 = &ch.willie()[0];
    for x in 1..q {
        if support_relation(&ch.willie()[x], rho0) == SupportRelation::Contained {
            return Err(Error::NoLeakage(x));
        }
    }
    let inside: Vec<f64> = ch.willie().iter().map(|s| (1.0 - s.leakage_outside(rho0)).clamp(0.0, 1.0)).collect();
    let words = &codebook.codewords;
    let m = words.len() as f64;
    let a0: Vec<f64> = words.iter().map(|w| w.iter().map(|&x| overlaps[x]).product()).collect();
    let stay: Vec<f64> = words.iter().map(|w| w.iter().map(|&x| inside[x]).product()).collect();
    let pe_willie = stay.iter().sum::<f64>() / (2.0 * m);

    let mut c_min = f64::INFINITY;
    for (a, s) in a0.iter().zip(&stay) {
        let away = 1.0 - a;
        if away > 1e-12 {
            c_min = c_min.min((1.0 - s) / away);
        }
    }
    if !c_min.is_finite() {
        return Err(Error::InvalidArgument("every codeword is the innocent input".into()));
    }
    if !(c_min > 0.0) {
        return Err(Error::InvalidArgument("some codeword never leaves the innocent support".into()));
    }

    let radius = 4.0 * epsilon / c_min;
    let near_innocent: Vec<usize> = (0..words.len()).filter(|&i| 1.0 - a0[i] <= radius).collect();
    let pairs: Vec<(usize, usize)> = near_innocent.chunks_exact(2).map(|c| (c[0], c[1])).collect();
    let pair_bound =
        |i: usize, j: usize| ((1.0 - (1.0 - a0[i]).max(0.0).sqrt() - (1.0 - a0[j]).max(0.0).sqrt()) / 2.0).max(0.0);
    let paired_bound = pairs.iter().map(|&(i, j)| 2.0 * pair_bound(i, j)).sum::<f64>() / m;
    Ok(NoGoReport {
        epsilon,
        c_min,
        pe_willie,
        covert: pe_willie >= 0.5 - epsilon,
        valid: epsilon <= c_min / 16.0,
        near_innocent,
        pairs,
        paired_bound,
        bob_lower_bound: (0.25 - (epsilon / c_min).sqrt()).max(0.0),
    })
}

/// Overlaps when no inputs are given: innocent `|0>`, every other input orthogonal to it.
pub fn orthogonal_overlaps(alphabet: usize) -> Vec<f64> {
    let mut o = vec![0.0; alphabet];
    o[0] = 1.0;
    o
}
