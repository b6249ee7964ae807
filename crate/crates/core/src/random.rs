//! Seeded generators for random test fields, tensors, lines and phase points.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::fields::{GaussPoly, GaussPolyField, Poly};
use crate::ray::{Line, PhasePoint};
use crate::symtensor::{sym_dim, SymTensor};

/// Name of the generator algorithm, recorded in reports.
pub const GENERATOR: &str = "ChaCha8Rng (rand_chacha 0.9)";

pub type Rng64 = ChaCha8Rng;

pub fn seeded(seed: u64) -> Rng64 {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// All exponent tuples in `n` variables with total degree `<= degree`.
pub fn monomials(n: usize, degree: u32) -> Vec<Vec<u32>> {
    let mut out = vec![vec![0; n]];
    for _ in 0..degree {
        let mut next = Vec::new();
        for e in &out {
            for j in 0..n {
                let mut f = e.clone();
                f[j] += 1;
                next.push(f);
            }
        }
        out.extend(next);
        out.sort();
        out.dedup();
    }
    out
}

/// Gaussian-polynomial field with standard-normal coefficients on every
/// monomial of degree `<= degree` and width `a` uniform in `[0.8, 1.2]`.
pub fn random_field<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    m: usize,
    degree: u32,
) -> GaussPolyField {
    let a = rng.random_range(0.8..1.2);
    random_field_with_width(rng, n, m, degree, a)
}

pub fn random_field_with_width<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    m: usize,
    degree: u32,
    a: f64,
) -> GaussPolyField {
    let monos = monomials(n, degree);
    let comps = (0..sym_dim(n, m))
        .map(|_| {
            let mut p = Poly::zero(n);
            for mono in &monos {
                p.add_term(mono.clone(), normal(rng));
            }
            p
        })
        .collect();
    GaussPoly::new(n, m, a, comps).expect("consistent layout")
}

pub fn random_vector<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n).map(|_| normal(rng)).collect()
}

pub fn random_unit<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    loop {
        let v = random_vector(rng, n);
        let len = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if len > 1e-3 {
            return v.into_iter().map(|x| x / len).collect();
        }
    }
}

pub fn random_sym<R: Rng + ?Sized>(rng: &mut R, n: usize, m: usize) -> SymTensor {
    SymTensor::from_coeffs(n, m, random_vector(rng, sym_dim(n, m))).expect("layout")
}

/// Line with uniform direction and offset of length at most `radius`.
pub fn random_line<R: Rng + ?Sized>(rng: &mut R, n: usize, radius: f64) -> Line {
    let xi = random_unit(rng, n);
    let raw: Vec<f64> = (0..n).map(|_| rng.random_range(-radius..radius)).collect();
    let mut line = Line::through(&raw, &xi).expect("unit direction");
    let len = line.x().iter().map(|v| v * v).sum::<f64>().sqrt();
    if len > radius {
        let x: Vec<f64> = line.x().iter().map(|v| v * radius / len).collect();
        line = Line::through(&x, &xi).expect("unit direction");
    }
    line
}

/// Phase point with `|x| <~ radius` and `|xi|` in `[0.5, 1.5]`.
pub fn random_phase_point<R: Rng + ?Sized>(rng: &mut R, n: usize, radius: f64) -> PhasePoint {
    let scale = rng.random_range(0.5..1.5);
    let xi = random_unit(rng, n).into_iter().map(|v| v * scale).collect();
    let x = (0..n).map(|_| rng.random_range(-radius..radius)).collect();
    PhasePoint::new(x, xi).expect("nonzero direction")
}
