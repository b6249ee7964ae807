//! Packed symmetric tensors over `R^n`.
//!
//! A rank-`m` symmetric tensor is stored as one coefficient per non-decreasing
//! multi-index, laid out in colexicographic order. Axis labels are 0-based in
//! memory and 1-based in the JSON form (`"12"` is the `(1,2)` component).
//!
//! The packed inner product carries multiplicity weights, so
//! `inner(a, b) = sum_alpha mult(alpha) a_alpha b_alpha` equals the Euclidean
//! inner product of the unpacked `n^m` tables.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use serde::de::{self, Deserializer};
use serde::ser::{SerializeStruct, Serializer};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Binomial coefficient, exact in `u64` for the sizes used here.
pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u64 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u64 / (i + 1) as u64;
    }
    acc as usize
}

pub fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, i| acc * i as f64)
}

/// Number of independent components of a rank-`m` symmetric tensor on `R^n`.
pub fn sym_dim(n: usize, m: usize) -> usize {
    assert!(n >= 1, "dimension must be positive");
    binomial(n + m - 1, m)
}

/// A non-decreasing tuple of 0-based axis labels.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex(Vec<usize>);

impl MultiIndex {
    /// Builds a multi-index from axis labels in any order.
    pub fn from_unsorted(mut entries: Vec<usize>, n: usize) -> Result<Self> {
        if let Some(&bad) = entries.iter().find(|&&e| e >= n) {
            return Err(Error::InvalidIndex(format!(
                "axis {} out of range for dimension {}",
                bad + 1,
                n
            )));
        }
        entries.sort_unstable();
        Ok(MultiIndex(entries))
    }

    pub fn from_counts(counts: &[usize]) -> Self {
        let mut entries = Vec::with_capacity(counts.iter().sum());
        for (axis, &c) in counts.iter().enumerate() {
            entries.extend(std::iter::repeat_n(axis, c));
        }
        MultiIndex(entries)
    }

    pub fn entries(&self) -> &[usize] {
        &self.0
    }

    pub fn rank(&self) -> usize {
        self.0.len()
    }

    pub fn counts(&self, n: usize) -> Vec<usize> {
        let mut c = vec![0; n];
        for &e in &self.0 {
            c[e] += 1;
        }
        c
    }

    /// Number of distinct orderings, `m! / prod_i c_i!`.
    pub fn multiplicity(&self) -> f64 {
        let mut m = factorial(self.0.len());
        let mut run = 1;
        for w in self.0.windows(2) {
            if w[0] == w[1] {
                run += 1;
                m /= run as f64;
            } else {
                run = 1;
            }
        }
        m
    }

    /// Position in the colexicographic layout.
    pub fn position(&self) -> usize {
        colex_position(&self.0)
    }

    /// 1-based digit string, e.g. `"112"`. Requires `n <= 9`.
    pub fn key(&self) -> String {
        self.0
            .iter()
            .map(|&e| char::from_digit((e + 1) as u32, 10).unwrap_or('?'))
            .collect()
    }

    pub fn parse_key(key: &str, n: usize, m: usize) -> Result<Self> {
        if key.chars().count() != m {
            return Err(Error::InvalidIndex(format!(
                "key `{key}` has length {} but rank is {m}",
                key.chars().count()
            )));
        }
        let mut entries = Vec::with_capacity(m);
        for ch in key.chars() {
            let d = ch
                .to_digit(10)
                .filter(|&d| d >= 1 && d as usize <= n)
                .ok_or_else(|| {
                    Error::InvalidIndex(format!("key `{key}` has axis `{ch}` outside 1..={n}"))
                })?;
            entries.push(d as usize - 1);
        }
        MultiIndex::from_unsorted(entries, n)
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", e + 1)?;
        }
        write!(f, ")")
    }
}

/// Colex rank of a sorted tuple via the combinatorial number system:
/// `a_0 <= ... <= a_{m-1}` maps to the strict sequence `a_i + i`.
pub(crate) fn colex_position(sorted: &[usize]) -> usize {
    sorted
        .iter()
        .enumerate()
        .map(|(i, &a)| binomial(a + i, i + 1))
        .sum()
}

pub(crate) fn colex_position_of_counts(counts: &[usize]) -> usize {
    let mut pos = 0;
    let mut i = 0;
    for (axis, &c) in counts.iter().enumerate() {
        for _ in 0..c {
            pos += binomial(axis + i, i + 1);
            i += 1;
        }
    }
    pos
}

/// All rank-`m` multi-indices over `n` axes, in colexicographic order.
pub fn multi_indices(n: usize, m: usize) -> Vec<MultiIndex> {
    fn rec(max_axis: usize, m: usize) -> Vec<Vec<usize>> {
        if m == 0 {
            return vec![Vec::new()];
        }
        let mut out = Vec::new();
        for last in 0..max_axis {
            for mut prefix in rec(last + 1, m - 1) {
                prefix.push(last);
                out.push(prefix);
            }
        }
        out
    }
    rec(n, m).into_iter().map(MultiIndex).collect()
}

/// A full (unsymmetrized) rank-`m` table over all `n^m` ordered tuples,
/// row-major in the tuple.
#[derive(Debug, Clone, PartialEq)]
pub struct FullTensor {
    pub n: usize,
    pub m: usize,
    pub data: Vec<f64>,
}

impl FullTensor {
    pub fn zeros(n: usize, m: usize) -> Self {
        FullTensor {
            n,
            m,
            data: vec![0.0; n.pow(m as u32)],
        }
    }

    pub fn from_data(n: usize, m: usize, data: Vec<f64>) -> Result<Self> {
        let expected = n.pow(m as u32);
        if data.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                got: data.len(),
            });
        }
        Ok(FullTensor { n, m, data })
    }

    pub fn offset(&self, tuple: &[usize]) -> usize {
        tuple.iter().fold(0, |acc, &i| acc * self.n + i)
    }

    pub fn get(&self, tuple: &[usize]) -> f64 {
        self.data[self.offset(tuple)]
    }

    pub fn set(&mut self, tuple: &[usize], value: f64) {
        let o = self.offset(tuple);
        self.data[o] = value;
    }

    /// Iterates `(tuple, value)` over every ordered tuple.
    pub fn tuples(&self) -> impl Iterator<Item = (Vec<usize>, f64)> + '_ {
        (0..self.data.len()).map(move |mut flat| {
            let mut t = vec![0; self.m];
            for slot in (0..self.m).rev() {
                t[slot] = flat % self.n;
                flat /= self.n;
            }
            let v = self.data[self.offset(&t)];
            (t, v)
        })
    }
}

/// Symmetrization `sigma`, computed by grouping ordered tuples under their
/// sorted multi-index instead of enumerating `m!` permutations.
pub fn symmetrize(raw: &FullTensor) -> SymTensor {
    let mut acc = vec![0.0; sym_dim(raw.n, raw.m)];
    let mut seen = vec![0usize; acc.len()];
    let mut sorted = vec![0; raw.m];
    for (tuple, v) in raw.tuples() {
        sorted.copy_from_slice(&tuple);
        sorted.sort_unstable();
        let p = colex_position(&sorted);
        acc[p] += v;
        seen[p] += 1;
    }
    for (a, s) in acc.iter_mut().zip(seen) {
        *a /= s as f64;
    }
    SymTensor {
        n: raw.n,
        m: raw.m,
        coeffs: acc,
    }
}

/// Rank-`m` symmetric tensor on `R^n`, packed in colexicographic order.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTensor {
    n: usize,
    m: usize,
    coeffs: Vec<f64>,
}

impl SymTensor {
    pub fn zeros(n: usize, m: usize) -> Self {
        SymTensor {
            n,
            m,
            coeffs: vec![0.0; sym_dim(n, m)],
        }
    }

    pub fn scalar(n: usize, value: f64) -> Self {
        SymTensor {
            n,
            m: 0,
            coeffs: vec![value],
        }
    }

    pub fn vector(v: &[f64]) -> Self {
        SymTensor {
            n: v.len(),
            m: 1,
            coeffs: v.to_vec(),
        }
    }

    pub fn from_coeffs(n: usize, m: usize, coeffs: Vec<f64>) -> Result<Self> {
        let expected = sym_dim(n, m);
        if coeffs.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                got: coeffs.len(),
            });
        }
        Ok(SymTensor { n, m, coeffs })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn rank(&self) -> usize {
        self.m
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    /// Component lookup for any ordering of the index tuple.
    pub fn get(&self, tuple: &[usize]) -> f64 {
        let mut s = tuple.to_vec();
        s.sort_unstable();
        self.coeffs[colex_position(&s)]
    }

    pub fn set(&mut self, tuple: &[usize], value: f64) {
        let mut s = tuple.to_vec();
        s.sort_unstable();
        let p = colex_position(&s);
        self.coeffs[p] = value;
    }

    pub fn get_counts(&self, counts: &[usize]) -> f64 {
        self.coeffs[colex_position_of_counts(counts)]
    }

    pub fn indices(&self) -> Vec<MultiIndex> {
        multi_indices(self.n, self.m)
    }

    /// Multiplicity-weighted inner product.
    pub fn inner(&self, other: &SymTensor) -> f64 {
        debug_assert_eq!((self.n, self.m), (other.n, other.m));
        self.indices()
            .iter()
            .zip(self.coeffs.iter().zip(&other.coeffs))
            .map(|(alpha, (a, b))| alpha.multiplicity() * a * b)
            .sum()
    }

    /// Frobenius norm of the unpacked table.
    pub fn norm(&self) -> f64 {
        self.inner(self).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |acc, c| acc.max(c.abs()))
    }

    pub fn scale(&self, s: f64) -> SymTensor {
        SymTensor {
            n: self.n,
            m: self.m,
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    pub fn unpack(&self) -> FullTensor {
        let mut full = FullTensor::zeros(self.n, self.m);
        let mut sorted = vec![0; self.m];
        for flat in 0..full.data.len() {
            let mut rem = flat;
            for slot in (0..self.m).rev() {
                sorted[slot] = rem % self.n;
                rem /= self.n;
            }
            sorted.sort_unstable();
            full.data[flat] = self.coeffs[colex_position(&sorted)];
        }
        full
    }

    /// The rank-`(m - r)` tensor obtained by fixing the leading `r` indices.
    pub fn restrict(&self, fixed: &[usize]) -> Result<SymTensor> {
        if fixed.len() > self.m {
            return Err(Error::ContractionTooDeep {
                order: fixed.len(),
                rank: self.m,
            });
        }
        let rest = self.m - fixed.len();
        let mut out = SymTensor::zeros(self.n, rest);
        let mut tuple = fixed.to_vec();
        for (p, beta) in multi_indices(self.n, rest).iter().enumerate() {
            tuple.truncate(fixed.len());
            tuple.extend_from_slice(beta.entries());
            out.coeffs[p] = self.get(&tuple);
        }
        Ok(out)
    }
}

fn check_vector(t: &SymTensor, x: &[f64]) -> Result<()> {
    if x.len() != t.n {
        return Err(Error::DimensionMismatch {
            expected: t.n,
            got: x.len(),
        });
    }
    Ok(())
}

/// One step of symmetric multiplication, `sigma(x ⊗ u)`:
/// `(i_x u)_beta = (1/(m+1)) sum_j c_j(beta) x_j u_{beta - e_j}`.
fn sym_mult_once(u: &SymTensor, x: &[f64]) -> SymTensor {
    let n = u.n;
    let m = u.m + 1;
    let mut out = SymTensor::zeros(n, m);
    for (p, beta) in multi_indices(n, m).iter().enumerate() {
        let mut counts = beta.counts(n);
        let mut acc = 0.0;
        for j in 0..n {
            let c = counts[j];
            if c == 0 || x[j] == 0.0 {
                continue;
            }
            counts[j] -= 1;
            acc += c as f64 * x[j] * u.get_counts(&counts);
            counts[j] += 1;
        }
        out.coeffs[p] = acc / m as f64;
    }
    out
}

/// `i_{x⊗k} u = sigma(x^{⊗k} ⊗ u)`.
pub fn sym_mult(u: &SymTensor, x: &[f64], k: usize) -> Result<SymTensor> {
    check_vector(u, x)?;
    let mut out = u.clone();
    for _ in 0..k {
        out = sym_mult_once(&out, x);
    }
    Ok(out)
}

/// `sigma(a ⊗ b)` for two symmetric tensors.
pub fn sym_product(a: &SymTensor, b: &SymTensor) -> Result<SymTensor> {
    if a.n != b.n {
        return Err(Error::DimensionMismatch {
            expected: a.n,
            got: b.n,
        });
    }
    let n = a.n;
    let m = a.m + b.m;
    let mut full = FullTensor::zeros(n, m);
    let fa = a.unpack();
    let fb = b.unpack();
    for (ta, va) in fa.tuples() {
        if va == 0.0 {
            continue;
        }
        for (tb, vb) in fb.tuples() {
            let mut t = ta.clone();
            t.extend_from_slice(&tb);
            full.set(&t, va * vb);
        }
    }
    Ok(symmetrize(&full))
}

fn contract_once(w: &SymTensor, x: &[f64]) -> SymTensor {
    let n = w.n;
    let m = w.m - 1;
    let mut out = SymTensor::zeros(n, m);
    for (p, alpha) in multi_indices(n, m).iter().enumerate() {
        let mut counts = alpha.counts(n);
        let mut acc = 0.0;
        for j in 0..n {
            if x[j] == 0.0 {
                continue;
            }
            counts[j] += 1;
            acc += x[j] * w.get_counts(&counts);
            counts[j] -= 1;
        }
        out.coeffs[p] = acc;
    }
    out
}

/// `j_{x⊗k} w`: contraction of the trailing `k` slots with `x`.
pub fn contract(w: &SymTensor, x: &[f64], k: usize) -> Result<SymTensor> {
    check_vector(w, x)?;
    if k > w.m {
        return Err(Error::ContractionTooDeep {
            order: k,
            rank: w.m,
        });
    }
    let mut out = w.clone();
    for _ in 0..k {
        out = contract_once(&out, x);
    }
    Ok(out)
}

/// `<f, xi^m> = f_{i_1..i_m} xi^{i_1}..xi^{i_m}`.
pub fn eval_power(f: &SymTensor, xi: &[f64]) -> Result<f64> {
    check_vector(f, xi)?;
    Ok(eval_power_unchecked(f, xi))
}

pub(crate) fn eval_power_unchecked(f: &SymTensor, xi: &[f64]) -> f64 {
    multi_indices(f.n, f.m)
        .iter()
        .zip(&f.coeffs)
        .map(|(alpha, c)| {
            let mono: f64 = alpha.entries().iter().map(|&i| xi[i]).product();
            alpha.multiplicity() * c * mono
        })
        .sum()
}

impl Add for &SymTensor {
    type Output = SymTensor;
    fn add(self, rhs: &SymTensor) -> SymTensor {
        assert_eq!((self.n, self.m), (rhs.n, rhs.m), "shape mismatch in add");
        SymTensor {
            n: self.n,
            m: self.m,
            coeffs: self
                .coeffs
                .iter()
                .zip(&rhs.coeffs)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl Sub for &SymTensor {
    type Output = SymTensor;
    fn sub(self, rhs: &SymTensor) -> SymTensor {
        assert_eq!((self.n, self.m), (rhs.n, rhs.m), "shape mismatch in sub");
        SymTensor {
            n: self.n,
            m: self.m,
            coeffs: self
                .coeffs
                .iter()
                .zip(&rhs.coeffs)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

impl AddAssign<&SymTensor> for SymTensor {
    fn add_assign(&mut self, rhs: &SymTensor) {
        assert_eq!((self.n, self.m), (rhs.n, rhs.m), "shape mismatch in add");
        for (a, b) in self.coeffs.iter_mut().zip(&rhs.coeffs) {
            *a += b;
        }
    }
}

impl Mul<f64> for &SymTensor {
    type Output = SymTensor;
    fn mul(self, s: f64) -> SymTensor {
        self.scale(s)
    }
}

impl Neg for &SymTensor {
    type Output = SymTensor;
    fn neg(self) -> SymTensor {
        self.scale(-1.0)
    }
}

impl Serialize for SymTensor {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let map: BTreeMap<String, f64> = self
            .indices()
            .iter()
            .zip(&self.coeffs)
            .map(|(a, &c)| (a.key(), c))
            .collect();
        let mut st = serializer.serialize_struct("SymTensor", 3)?;
        st.serialize_field("n", &self.n)?;
        st.serialize_field("m", &self.m)?;
        st.serialize_field("coeffs", &map)?;
        st.end()
    }
}

impl<'de> Deserialize<'de> for SymTensor {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            n: usize,
            m: usize,
            #[serde(default)]
            coeffs: BTreeMap<String, f64>,
        }
        let raw = Raw::deserialize(deserializer)?;
        if raw.n == 0 || raw.n > 9 {
            return Err(de::Error::custom(format!(
                "dimension n = {} outside 1..=9",
                raw.n
            )));
        }
        let mut t = SymTensor::zeros(raw.n, raw.m);
        for (key, value) in raw.coeffs {
            let alpha = MultiIndex::parse_key(&key, raw.n, raw.m).map_err(de::Error::custom)?;
            t.coeffs[alpha.position()] = value;
        }
        Ok(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dimension_counts() {
        assert_eq!(sym_dim(3, 2), 6);
        assert_eq!(sym_dim(5, 0), 1);
        assert_eq!(sym_dim(2, 3), 4);
        assert_eq!(sym_dim(3, 3), 10);
    }

    #[test]
    fn colex_layout_matches_enumeration() {
        for n in 1..=4 {
            for m in 0..=4 {
                let all = multi_indices(n, m);
                assert_eq!(all.len(), sym_dim(n, m));
                for (p, a) in all.iter().enumerate() {
                    assert_eq!(a.position(), p, "n={n} m={m} {a}");
                    assert_eq!(colex_position_of_counts(&a.counts(n)), p);
                }
            }
        }
        let keys: Vec<_> = multi_indices(2, 2).iter().map(|a| a.key()).collect();
        assert_eq!(keys, ["11", "12", "22"]);
    }

    #[test]
    fn multiplicity_values() {
        let a = MultiIndex::from_unsorted(vec![0, 1, 1], 2).unwrap();
        assert_eq!(a.multiplicity(), 3.0);
        let b = MultiIndex::from_unsorted(vec![2, 0, 1], 3).unwrap();
        assert_eq!(b.multiplicity(), 6.0);
        let c = MultiIndex::from_unsorted(vec![], 3).unwrap();
        assert_eq!(c.multiplicity(), 1.0);
    }

    #[test]
    fn symmetrize_examples() {
        let mut raw = FullTensor::zeros(2, 2);
        raw.set(&[0, 1], 1.0);
        let s = symmetrize(&raw);
        assert_eq!(s.get(&[0, 1]), 0.5);
        assert_eq!(s.get(&[1, 0]), 0.5);

        let mut raw = FullTensor::zeros(2, 2);
        raw.set(&[0, 0], 3.0);
        assert_eq!(symmetrize(&raw).get(&[0, 0]), 3.0);
    }

    #[test]
    fn sym_mult_examples() {
        let u = SymTensor::scalar(2, 1.0);
        let r = sym_mult(&u, &[1.0, 0.0], 1).unwrap();
        assert_eq!(r.coeffs(), &[1.0, 0.0]);

        let u = SymTensor::vector(&[2.0, -3.0]);
        assert_eq!(sym_mult(&u, &[1.0, 0.0], 0).unwrap(), u);

        let (a, b) = (0.7, -1.3);
        let r = sym_mult(&SymTensor::vector(&[a, b]), &[1.0, 0.0], 1).unwrap();
        assert_eq!(r.get(&[0, 0]), a);
        assert_eq!(r.get(&[0, 1]), b / 2.0);
        assert_eq!(r.get(&[1, 1]), 0.0);
    }

    #[test]
    fn contract_examples() {
        let w = SymTensor::vector(&[1.5, -2.0, 0.25]);
        let x = [0.3, 0.4, 2.0];
        assert_eq!(contract(&w, &x, 0).unwrap(), w);
        let c = contract(&w, &x, 1).unwrap();
        assert_eq!(c.rank(), 0);
        assert!((c.coeffs()[0] - (1.5 * 0.3 - 2.0 * 0.4 + 0.25 * 2.0)).abs() < 1e-15);
        assert!(matches!(
            contract(&w, &x, 2),
            Err(Error::ContractionTooDeep { order: 2, rank: 1 })
        ));
    }

    #[test]
    fn eval_power_examples() {
        let xi = [0.6, 0.8];
        let mut f = SymTensor::zeros(2, 2);
        f.set(&[0, 0], 1.0);
        assert!((eval_power(&f, &xi).unwrap() - 0.36).abs() < 1e-15);
        let mut f = SymTensor::zeros(2, 2);
        f.set(&[0, 1], 1.0);
        assert!((eval_power(&f, &xi).unwrap() - 0.96).abs() < 1e-15);
        let f = SymTensor::scalar(2, 4.5);
        assert_eq!(eval_power(&f, &xi).unwrap(), 4.5);
        assert!(eval_power(&f, &[1.0]).is_err());
    }

    #[test]
    fn restrict_fixes_leading_indices() {
        let mut f = SymTensor::zeros(3, 3);
        for (p, c) in f.coeffs_mut().iter_mut().enumerate() {
            *c = p as f64 + 1.0;
        }
        let r = f.restrict(&[2]).unwrap();
        assert_eq!(r.rank(), 2);
        assert_eq!(r.get(&[0, 1]), f.get(&[2, 0, 1]));
        assert_eq!(r.get(&[1, 1]), f.get(&[1, 2, 1]));
        assert!(f.restrict(&[0, 0, 0, 0]).is_err());
    }

    #[test]
    fn json_form() {
        let mut t = SymTensor::zeros(2, 2);
        t.set(&[0, 0], 1.0);
        t.set(&[0, 1], 0.5);
        let s = serde_json::to_string(&t).unwrap();
        assert_eq!(s, r#"{"n":2,"m":2,"coeffs":{"11":1.0,"12":0.5,"22":0.0}}"#);
        let back: SymTensor = serde_json::from_str(r#"{"n":2,"m":2,"coeffs":{"21":0.5}}"#).unwrap();
        assert_eq!(back.get(&[0, 1]), 0.5);
        assert_eq!(back.get(&[0, 0]), 0.0);
        assert!(serde_json::from_str::<SymTensor>(r#"{"n":2,"m":2,"coeffs":{"13":1}}"#).is_err());
    }
}
