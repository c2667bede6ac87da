//! Random operators and seed derivation.

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::operator::{CMatrix, DensityOperator, HermitianMatrix, C64};

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent child seed for stream `index` of `master`.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    mix64(master ^ mix64(index.wrapping_add(0xA5A5_A5A5_A5A5_A5A5)))
}

pub fn ginibre<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        C64::new(re, im)
    })
}

/// `G G† / Tr` with `G` a `d x rank` Ginibre matrix.
pub fn random_density<R: Rng + ?Sized>(rng: &mut R, d: usize, rank: usize) -> DensityOperator {
    let g = ginibre(rng, d, rank.max(1));
    let m = &g * g.adjoint();
    let tr = m.trace().re;
    let m = m / C64::new(tr, 0.0);
    DensityOperator::from_hermitian(HermitianMatrix::symmetrized(m), crate::operator::DEFAULT_RANK_TOL)
        .expect("Ginibre state is a density operator")
}

/// Full-rank state whose smallest eigenvalue is at least `floor / d`.
pub fn random_full_rank<R: Rng + ?Sized>(rng: &mut R, d: usize, floor: f64) -> DensityOperator {
    let rho = random_density(rng, d, d);
    let m = rho.matrix() * C64::new(1.0 - floor, 0.0) + CMatrix::identity(d, d) * C64::new(floor / d as f64, 0.0);
    DensityOperator::from_hermitian(HermitianMatrix::symmetrized(m), crate::operator::DEFAULT_RANK_TOL)
        .expect("convex mixture is a density operator")
}

pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, d: usize) -> CMatrix {
    let g = ginibre(rng, d, d);
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..d {
        let rjj = r[(j, j)];
        let phase = if rjj.norm() > 0.0 { rjj / rjj.norm() } else { C64::new(1.0, 0.0) };
        for i in 0..d {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Flat-Dirichlet probability vector.
pub fn random_simplex<R: Rng + ?Sized>(rng: &mut R, k: usize) -> Vec<f64> {
    let mut w: Vec<f64> = (0..k).map(|_| Exp1.sample(rng)).collect();
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= s);
    w
}

pub fn random_diagonal_density<R: Rng + ?Sized>(rng: &mut R, d: usize, floor: f64) -> DensityOperator {
    let p = random_simplex(rng, d);
    let p: Vec<f64> = p.iter().map(|x| (1.0 - floor) * x + floor / d as f64).collect();
    DensityOperator::diagonal(&p).expect("simplex point is a density operator")
}

pub fn random_pure<R: Rng + ?Sized>(rng: &mut R, d: usize) -> DensityOperator {
    random_density(rng, d, 1)
}

pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, d: usize) -> HermitianMatrix {
    HermitianMatrix::symmetrized(ginibre(rng, d, d))
}
