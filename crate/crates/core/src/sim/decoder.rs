use std::sync::Arc;

use crate::channel::CqChannelPair;
use crate::error::{Error, Result};
use crate::operator::{
    checked_power_dim, kron, trace_product, CMatrix, HermitianMatrix, C64, CLUSTER_REL_TOL, DEFAULT_RANK_TOL,
    SIGN_TIE_TOL,
};

use super::Codebook;

/// Eigenbasis of `sigma_0^{(x)n}` built from the single-letter decomposition,
/// with product eigenvalues grouped into degenerate eigenspaces.
///
/// Every operator commuting with `sigma_0^{(x)n}`, and every pinched
/// codeword state, is block diagonal in this basis.
#[derive(Debug)]
pub struct ProductEigenbasis {
    d: usize,
    n: usize,
    unitary: CMatrix,
    digits: Vec<u16>,
    clusters: Vec<Cluster>,
    /// `U† sigma_x U` per Bob symbol.
    rotated: Vec<CMatrix>,
}

#[derive(Debug)]
struct Cluster {
    indices: Vec<usize>,
    value: f64,
}

impl ProductEigenbasis {
    pub fn new(ch: &CqChannelPair, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("blocklength must be positive".into()));
        }
        let s0 = &ch.bob()[0];
        let d = s0.dim();
        let dim = checked_power_dim(d, n)?;
        let unitary = s0.spectrum().vectors().clone();
        let single = s0.eigenvalues().to_vec();
        let mut digits = vec![0u16; dim * n];
        let mut values = vec![1.0f64; dim];
        for a in 0..dim {
            let mut rest = a;
            for i in (0..n).rev() {
                let dig = rest % d;
                rest /= d;
                digits[a * n + i] = dig as u16;
                values[a] *= single[dig];
            }
        }
        let mut order: Vec<usize> = (0..dim).collect();
        order.sort_by(|&i, &j| values[j].total_cmp(&values[i]).then(i.cmp(&j)));
        let mut clusters: Vec<Cluster> = Vec::new();
        let mut start = 0;
        for pos in 1..=dim {
            let split = pos == dim || {
                let (x, y) = (values[order[pos - 1]], values[order[pos]]);
                !((x - y).abs() <= CLUSTER_REL_TOL * x.abs().max(y.abs()))
            };
            if split {
                let mut indices: Vec<usize> = order[start..pos].to_vec();
                indices.sort_unstable();
                let value = indices.iter().map(|&a| values[a]).sum::<f64>() / indices.len() as f64;
                clusters.push(Cluster { indices, value });
                start = pos;
            }
        }
        let ud = unitary.adjoint();
        let rotated = ch.bob().iter().map(|s| &ud * s.matrix() * &unitary).collect();
        Ok(Self { d, n, unitary, digits, clusters, rotated })
    }

    pub fn dim(&self) -> usize {
        self.digits.len() / self.n
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_clusters(&self) -> usize {
        self.clusters.len()
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        self.clusters.iter().map(|c| c.indices.len()).collect()
    }

    pub fn cluster_values(&self) -> Vec<f64> {
        self.clusters.iter().map(|c| c.value).collect()
    }

    fn digit(&self, a: usize, i: usize) -> usize {
        self.digits[a * self.n + i] as usize
    }

    /// Diagonal blocks of `sigma^n(x)` in this basis, i.e. the pinched state.
    pub fn codeword_blocks(&self, codeword: &[usize]) -> Vec<CMatrix> {
        debug_assert_eq!(codeword.len(), self.n);
        let ws: Vec<&CMatrix> = codeword.iter().map(|&x| &self.rotated[x]).collect();
        self.clusters
            .iter()
            .map(|c| {
                let s = c.indices.len();
                let mut blk = CMatrix::zeros(s, s);
                for p in 0..s {
                    let ap = c.indices[p];
                    for q in p..s {
                        let aq = c.indices[q];
                        let mut z = C64::new(1.0, 0.0);
                        for (i, w) in ws.iter().enumerate() {
                            z *= w[(self.digit(ap, i), self.digit(aq, i))];
                            if z.re == 0.0 && z.im == 0.0 {
                                break;
                            }
                        }
                        blk[(p, q)] = z;
                        blk[(q, p)] = z.conj();
                    }
                }
                blk
            })
            .collect()
    }

    /// `U^{(x)n}`: columns are the product eigenvectors.
    pub fn unitary_power(&self) -> CMatrix {
        let mut acc = self.unitary.clone();
        for _ in 1..self.n {
            acc = kron(&acc, &self.unitary);
        }
        acc
    }

    /// Dense operator in the computational basis from per-cluster blocks.
    pub fn assemble(&self, blocks: &[CMatrix]) -> CMatrix {
        let dim = self.dim();
        let mut m = CMatrix::zeros(dim, dim);
        for (c, blk) in self.clusters.iter().zip(blocks) {
            for (p, &ap) in c.indices.iter().enumerate() {
                for (q, &aq) in c.indices.iter().enumerate() {
                    m[(ap, aq)] = blk[(p, q)];
                }
            }
        }
        let u = self.unitary_power();
        &u * m * u.adjoint()
    }

    fn single_letter_dim(&self) -> usize {
        self.d
    }
}

fn is_diagonal(x: &CMatrix) -> bool {
    let d = x.nrows();
    (0..d).all(|c| (0..d).all(|r| r == c || x[(r, c)] == C64::new(0.0, 0.0)))
}

/// Applies `f` to a Hermitian matrix, skipping the eigensolver when it is diagonal.
fn spectral_map(x: &CMatrix, f: impl Fn(f64) -> f64) -> CMatrix {
    if is_diagonal(x) {
        let d = x.nrows();
        let mut out = CMatrix::zeros(d, d);
        for i in 0..d {
            out[(i, i)] = C64::new(f(x[(i, i)].re), 0.0);
        }
        return out;
    }
    HermitianMatrix::symmetrized(x.clone()).eigen().map(f)
}

fn positive_projector(x: CMatrix) -> CMatrix {
    spectral_map(&x, |v| if v > SIGN_TIE_TOL { 1.0 } else { 0.0 })
}

fn inv_sqrt(s: &CMatrix) -> CMatrix {
    spectral_map(s, |v| if v > DEFAULT_RANK_TOL { 1.0 / v.sqrt() } else { 0.0 })
}

fn min_eigenvalue(m: &CMatrix) -> f64 {
    if is_diagonal(m) {
        return (0..m.nrows()).map(|i| m[(i, i)].re).fold(f64::INFINITY, f64::min);
    }
    HermitianMatrix::symmetrized(m.clone()).eigenvalues().last().copied().unwrap_or(0.0)
}

/// Decoding measurement for every key; per key the leftover
/// `I - sum_m Lambda_{m,k}` means failure.
#[derive(Clone, Debug)]
pub struct DecoderPovm {
    n: usize,
    dim: usize,
    messages: usize,
    repr: Repr,
}

#[derive(Clone, Debug)]
enum Repr {
    Block {
        basis: Arc<ProductEigenbasis>,
        families: Vec<Family>,
    },
    /// One family shared by all keys.
    Dense {
        elements: Vec<CMatrix>,
    },
}

#[derive(Clone, Debug)]
struct Family {
    elements: Vec<Vec<CMatrix>>,
    /// Codewords the family was built from and their pinched blocks.
    source: Vec<Vec<usize>>,
    blocks: Vec<Vec<CMatrix>>,
}

pub const DECODER_TOL: f64 = 1e-8;

fn sub_povm_margin(elems: &[&CMatrix]) -> f64 {
    let d = elems[0].nrows();
    let mut sum = CMatrix::zeros(d, d);
    let mut worst = f64::INFINITY;
    for e in elems {
        worst = worst.min(min_eigenvalue(e));
        sum += *e;
    }
    worst.min(min_eigenvalue(&(CMatrix::identity(d, d) - sum)))
}

impl DecoderPovm {
    /// Key-independent decoder given by dense elements on `(C^d)^{(x)n}`.
    pub fn from_dense(elements: Vec<HermitianMatrix>, n: usize) -> Result<Self> {
        let Some(first) = elements.first() else {
            return Err(Error::InvalidPovm("no elements".into()));
        };
        let dim = first.dim();
        if elements.iter().any(|e| e.dim() != dim) {
            return Err(Error::InvalidPovm("elements differ in dimension".into()));
        }
        let messages = elements.len();
        let dec = Self {
            n,
            dim,
            messages,
            repr: Repr::Dense { elements: elements.into_iter().map(|e| e.into_matrix()).collect() },
        };
        let worst = dec.validity_margin();
        if worst < -DECODER_TOL {
            return Err(Error::InvalidPovm(format!("not a sub-POVM (margin {worst:.3e})")));
        }
        Ok(dec)
    }

    /// Number of messages `M`.
    pub fn len(&self) -> usize {
        self.messages
    }

    pub fn is_empty(&self) -> bool {
        self.messages == 0
    }

    /// Number of key families; `None` when one family serves every key.
    pub fn num_keys(&self) -> Option<usize> {
        match &self.repr {
            Repr::Block { families, .. } => Some(families.len()),
            Repr::Dense { .. } => None,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Smallest eigenvalue over all elements and over `I - sum_m` for each
    /// key. A valid decoder has margin `>= -1e-8`.
    pub fn validity_margin(&self) -> f64 {
        match &self.repr {
            Repr::Block { basis, families } => families
                .iter()
                .flat_map(|f| {
                    (0..basis.num_clusters())
                        .map(move |c| sub_povm_margin(&f.elements.iter().map(|e| &e[c]).collect::<Vec<_>>()))
                })
                .fold(f64::INFINITY, f64::min),
            Repr::Dense { elements } => sub_povm_margin(&elements.iter().collect::<Vec<_>>()),
        }
    }

    pub fn is_valid(&self) -> bool {
        self.validity_margin() >= -DECODER_TOL
    }

    /// `Lambda_{m,key}` in the computational basis.
    pub fn to_dense(&self, key: usize, m: usize) -> CMatrix {
        match &self.repr {
            Repr::Block { basis, families } => basis.assemble(&families[key].elements[m]),
            Repr::Dense { elements } => elements[m].clone(),
        }
    }

    pub fn failure_element(&self, key: usize) -> CMatrix {
        let mut f = CMatrix::identity(self.dim, self.dim);
        for m in 0..self.messages {
            f -= self.to_dense(key, m);
        }
        f
    }
}

/// Square-root measurement for every key:
/// `Lambda_m = S^{-1/2} Pi_m S^{-1/2}`, `S = sum_m Pi_m`, with
/// `Pi_m = {pinch(sigma^n(m)) - e^a sigma_0^{(x)n} > 0}`.
pub fn build_srm_decoder(codebook: &Codebook, ch: &CqChannelPair, a: f64) -> Result<DecoderPovm> {
    let basis = Arc::new(ProductEigenbasis::new(ch, codebook.n)?);
    build_srm_decoder_in(&basis, codebook, a)
}

/// As [`build_srm_decoder`], reusing a precomputed basis for the channel.
pub fn build_srm_decoder_in(basis: &Arc<ProductEigenbasis>, codebook: &Codebook, a: f64) -> Result<DecoderPovm> {
    if !(a >= 0.0) {
        return Err(Error::InvalidArgument(format!("threshold a = {a} must be nonnegative")));
    }
    if basis.n() != codebook.n {
        return Err(Error::IndexMismatch(format!("basis for n = {} used with n = {}", basis.n(), codebook.n)));
    }
    if basis.rotated.len() != codebook.alphabet {
        return Err(Error::IndexMismatch("codebook alphabet differs from the channel".into()));
    }
    let families = (0..codebook.k).map(|k| srm_family(basis, codebook.key_slice(k), a)).collect();
    Ok(DecoderPovm {
        n: codebook.n,
        dim: basis.dim(),
        messages: codebook.m,
        repr: Repr::Block { basis: basis.clone(), families },
    })
}

fn srm_family(basis: &ProductEigenbasis, words: &[Vec<usize>], a: f64) -> Family {
    let source = words.to_vec();
    let blocks: Vec<Vec<CMatrix>> = source.iter().map(|cw| basis.codeword_blocks(cw)).collect();
    let ea = a.exp();
    let nc = basis.num_clusters();
    let mut elements: Vec<Vec<CMatrix>> = vec![Vec::with_capacity(nc); source.len()];
    for (c, cl) in basis.clusters.iter().enumerate() {
        let s = cl.indices.len();
        let projs: Vec<CMatrix> = blocks
            .iter()
            .map(|b| {
                // Scaling by 1/lambda keeps the sign tie window relative to the block.
                let x = if cl.value > 0.0 {
                    &b[c] / C64::new(cl.value, 0.0) - CMatrix::identity(s, s) * C64::new(ea, 0.0)
                } else {
                    b[c].clone()
                };
                positive_projector(x)
            })
            .collect();
        let mut sum = CMatrix::zeros(s, s);
        for p in &projs {
            sum += p;
        }
        let t = inv_sqrt(&sum);
        let diag = is_diagonal(&t) && projs.iter().all(is_diagonal);
        for (m, p) in projs.iter().enumerate() {
            if diag {
                let mut e = CMatrix::zeros(s, s);
                for i in 0..s {
                    e[(i, i)] = t[(i, i)] * p[(i, i)] * t[(i, i)];
                }
                elements[m].push(e);
            } else {
                elements[m].push(&t * p * &t);
            }
        }
    }
    Family { elements, source, blocks }
}

/// Dense `sigma^n(x)` for a codeword.
pub(crate) fn product_matrix(states: &[crate::DensityOperator], codeword: &[usize]) -> Result<CMatrix> {
    let d = states[0].dim();
    checked_power_dim(d, codeword.len())?;
    let mut acc = states[codeword[0]].matrix().clone();
    for &x in &codeword[1..] {
        acc = kron(&acc, states[x].matrix());
    }
    Ok(acc)
}

/// `(1/M) sum_m (1 - Tr{Lambda_{m,key} sigma^n(m, key)})`.
pub fn exact_pe_bob(codebook: &Codebook, ch: &CqChannelPair, decoder: &DecoderPovm, key: usize) -> Result<f64> {
    if key >= codebook.k {
        return Err(Error::IndexMismatch(format!("key {key} outside 0..{}", codebook.k)));
    }
    if decoder.len() != codebook.m || decoder.n != codebook.n {
        return Err(Error::IndexMismatch(format!(
            "decoder has {} elements for n = {}, codebook has M = {} and n = {}",
            decoder.len(),
            decoder.n,
            codebook.m,
            codebook.n
        )));
    }
    if let Some(k) = decoder.num_keys() {
        if k != codebook.k {
            return Err(Error::IndexMismatch(format!("decoder has {k} key families, codebook has K = {}", codebook.k)));
        }
    }
    let words = codebook.key_slice(key);
    let mut success = 0.0;
    match &decoder.repr {
        Repr::Block { basis, families } => {
            if basis.single_letter_dim() != ch.bob_dim() || basis.rotated.len() != ch.alphabet_size() {
                return Err(Error::IndexMismatch("decoder built for a different channel".into()));
            }
            let fam = &families[key];
            let reuse = fam.source.as_slice() == words;
            for (m, cw) in words.iter().enumerate() {
                let fresh;
                let blk = if reuse {
                    &fam.blocks[m]
                } else {
                    fresh = basis.codeword_blocks(cw);
                    &fresh
                };
                success += fam.elements[m].iter().zip(blk).map(|(l, s)| trace_product(l, s).re).sum::<f64>();
            }
        }
        Repr::Dense { elements } => {
            for (m, cw) in words.iter().enumerate() {
                let s = product_matrix(ch.bob(), cw)?;
                if s.nrows() != decoder.dim {
                    return Err(Error::DimensionMismatch(format!(
                        "decoder dim {} vs state dim {}",
                        decoder.dim,
                        s.nrows()
                    )));
                }
                success += trace_product(&elements[m], &s).re;
            }
        }
    }
    Ok((1.0 - success / codebook.m as f64).clamp(0.0, 1.0))
}
