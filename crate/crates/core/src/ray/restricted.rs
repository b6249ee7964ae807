use super::PhasePoint;
use crate::error::{Error, Result};
use crate::phase::{mixed_partial, PhaseFunction, Slot};
use crate::symtensor::factorial;

/// `((m-r)!/m!) sigma(i_1..i_r) sum_p (-1)^p C(r,p) d^r J^p / dx^{i_1..i_p} dxi^{i_{p+1}..i_r}`,
/// which equals `J^0` of the field with its first `r` indices fixed to
/// `i_1..i_r`.
///
/// Symmetrizing over the index positions turns the binomially weighted sum
/// into a plain sum over subsets `S` of the positions differentiated in `x`,
/// with `J^{|S|}` and sign `(-1)^{|S|}`. Derivatives are tensor-product
/// central differences with step `h` in every slot.
pub fn restricted_transform(
    js: &[&dyn PhaseFunction],
    m: usize,
    fixed: &[usize],
    p: &PhasePoint,
    h: f64,
) -> Result<f64> {
    let r = fixed.len();
    if r > m {
        return Err(Error::ContractionTooDeep { order: r, rank: m });
    }
    if js.len() <= r {
        return Err(Error::MissingMoment(r));
    }
    if !(h > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "step must be positive, got {h}"
        )));
    }
    let n = p.x().len();
    if let Some(&bad) = fixed.iter().find(|&&i| i >= n) {
        return Err(Error::InvalidIndex(format!(
            "axis {} out of range",
            bad + 1
        )));
    }
    if let Some(floor) = js[..=r]
        .iter()
        .map(|j| j.provenance().min_step())
        .reduce(f64::max)
        .filter(|&f| h < f && r > 0)
    {
        return Err(Error::StepUnderflow { step: h, floor });
    }
    let mut acc = 0.0;
    let mut slots = Vec::with_capacity(r);
    for subset in 0..(1usize << r) {
        slots.clear();
        let mut size = 0;
        for (b, &i) in fixed.iter().enumerate() {
            if (subset >> b) & 1 == 1 {
                slots.push(Slot::X(i));
                size += 1;
            } else {
                slots.push(Slot::Xi(i));
            }
        }
        let sign = if size % 2 == 0 { 1.0 } else { -1.0 };
        acc += sign * mixed_partial(js[size], p.x(), p.xi(), &slots, h);
    }
    Ok(factorial(m - r) / factorial(m) * acc)
}

/// One Richardson step on top of [`restricted_transform`]:
/// `(4 D(h/2) - D(h)) / 3`.
pub fn restricted_transform_richardson(
    js: &[&dyn PhaseFunction],
    m: usize,
    fixed: &[usize],
    p: &PhasePoint,
    h: f64,
) -> Result<f64> {
    let coarse = restricted_transform(js, m, fixed, p, h)?;
    let fine = restricted_transform(js, m, fixed, p, h / 2.0)?;
    Ok((4.0 * fine - coarse) / 3.0)
}
