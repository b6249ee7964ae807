use std::collections::BTreeMap;
use std::fmt::Debug;
use std::ops::Neg;

use num_traits::Num;

/// Coefficient ring for polynomials: `f64` in space, `Complex64` in frequency.
pub trait Scalar: Num + Copy + Neg<Output = Self> + From<f64> + Debug + Send + Sync {
    fn magnitude(&self) -> f64;
}

impl Scalar for f64 {
    fn magnitude(&self) -> f64 {
        self.abs()
    }
}

impl Scalar for num_complex::Complex64 {
    fn magnitude(&self) -> f64 {
        self.norm()
    }
}

/// Sparse multivariate polynomial keyed by exponent tuples.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly<T> {
    n: usize,
    terms: BTreeMap<Vec<u32>, T>,
}

impl<T: Scalar> Poly<T> {
    pub fn zero(n: usize) -> Self {
        Poly {
            n,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(n: usize, c: T) -> Self {
        let mut p = Poly::zero(n);
        p.add_term(vec![0; n], c);
        p
    }

    pub fn monomial(c: T, pow: Vec<u32>) -> Self {
        let mut p = Poly::zero(pow.len());
        p.add_term(pow, c);
        p
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[u32], T)> {
        self.terms.iter().map(|(k, &v)| (k.as_slice(), v))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|k| k.iter().sum()).max().unwrap_or(0)
    }

    pub fn add_term(&mut self, pow: Vec<u32>, c: T) {
        debug_assert_eq!(pow.len(), self.n);
        if c.is_zero() {
            return;
        }
        let slot = self.terms.entry(pow.clone()).or_insert_with(T::zero);
        *slot = *slot + c;
        if slot.is_zero() {
            self.terms.remove(&pow);
        }
    }

    pub fn add(&self, other: &Poly<T>) -> Poly<T> {
        let mut out = self.clone();
        for (k, &v) in &other.terms {
            out.add_term(k.clone(), v);
        }
        out
    }

    pub fn scale(&self, s: T) -> Poly<T> {
        let mut out = Poly::zero(self.n);
        for (k, &v) in &self.terms {
            out.add_term(k.clone(), v * s);
        }
        out
    }

    /// Multiplies by the coordinate `x_j`.
    pub fn mul_var(&self, j: usize) -> Poly<T> {
        let mut out = Poly::zero(self.n);
        for (k, &v) in &self.terms {
            let mut k = k.clone();
            k[j] += 1;
            out.add_term(k, v);
        }
        out
    }

    pub fn diff(&self, j: usize) -> Poly<T> {
        let mut out = Poly::zero(self.n);
        for (k, &v) in &self.terms {
            if k[j] == 0 {
                continue;
            }
            let mut k2 = k.clone();
            let e = k2[j];
            k2[j] -= 1;
            out.add_term(k2, v * T::from(e as f64));
        }
        out
    }

    pub fn eval(&self, x: &[f64]) -> T {
        let mut acc = T::zero();
        for (k, &v) in &self.terms {
            let mono: f64 = k.iter().zip(x).map(|(&e, &xi)| xi.powi(e as i32)).product();
            acc = acc + v * T::from(mono);
        }
        acc
    }

    /// `sum |c| r^{|beta|}`, an upper bound for `|p(x)|` on `|x| <= r`.
    pub fn magnitude_bound(&self, r: f64) -> f64 {
        self.terms
            .iter()
            .map(|(k, v)| v.magnitude() * r.powi(k.iter().sum::<u32>() as i32))
            .sum()
    }
}
