use super::{dot, Line, MomentSource, PhasePoint};
use crate::error::{Error, Result};
use crate::phase::{PhaseFunction, Provenance};
use crate::symtensor::binomial;

/// `J^q` at an arbitrary phase point from line moments:
///
/// `J^q(x, xi) = |xi|^{m-2q-1} sum_l (-1)^{q-l} C(q,l) |xi|^l <xi,x>^{q-l}
///  I^l(x - <x,xi> xi/|xi|^2, xi/|xi|)`.
///
/// The same sum defines `psi^q` when the source holds given data.
pub fn extend_j<S: MomentSource + ?Sized>(source: &S, p: &PhasePoint, q: usize) -> Result<f64> {
    if q > source.max_order() {
        return Err(Error::MissingMoment(q));
    }
    let xi = p.xi();
    let len = dot(xi, xi).sqrt();
    if !(len > 0.0) {
        return Err(Error::ZeroDirection);
    }
    let line = Line::through(p.x(), xi)?;
    let m = source.rank() as i32;
    let ip = dot(p.x(), xi);
    let mut acc = 0.0;
    for l in 0..=q {
        let coef = binomial(q, l) as f64 * len.powi(l as i32) * ip.powi((q - l) as i32);
        if coef == 0.0 {
            continue;
        }
        let sign = if (q - l) % 2 == 0 { 1.0 } else { -1.0 };
        acc += sign * coef * source.moment(l, &line)?;
    }
    Ok(len.powi(m - 2 * q as i32 - 1) * acc)
}

/// `J^q` (or `psi^q`) of a moment source as a phase function.
pub struct ExtendedMoment<S> {
    source: S,
    q: usize,
}

impl<S: MomentSource> ExtendedMoment<S> {
    pub fn new(source: S, q: usize) -> Result<Self> {
        if q > source.max_order() {
            return Err(Error::MissingMoment(q));
        }
        Ok(ExtendedMoment { source, q })
    }
}

impl<S: MomentSource> PhaseFunction for ExtendedMoment<S> {
    fn dim(&self) -> usize {
        self.source.dim()
    }
    fn eval(&self, x: &[f64], xi: &[f64]) -> f64 {
        let p = PhasePoint::new(x.to_vec(), xi.to_vec()).expect("nonzero direction");
        extend_j(&self.source, &p, self.q).expect("moment available")
    }
    fn degree(&self) -> Option<f64> {
        Some(self.source.rank() as f64 - self.q as f64 - 1.0)
    }
    fn provenance(&self) -> Provenance {
        self.source.provenance()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{GaussPoly, Poly};
    use crate::ray::{moment_oracle, OracleMoments};

    #[test]
    fn collapses_on_lines_and_scales_scalars() {
        let f = GaussPoly::scalar(1.0, Poly::constant(2, 1.0)).unwrap();
        let src = OracleMoments::new(&f);
        let line = Line::new(vec![0.6, 0.0], vec![0.0, 1.0]).unwrap();
        let p: PhasePoint = line.clone().into();
        for q in 0..3 {
            assert_eq!(
                extend_j(&src, &p, q).unwrap(),
                src.moment(q, &line).unwrap()
            );
        }
        let p2 = PhasePoint::new(vec![0.6, 0.0], vec![0.0, 2.0]).unwrap();
        let half = 0.5 * src.moment(0, &line).unwrap();
        assert!((extend_j(&src, &p2, 0).unwrap() - half).abs() < 1e-16);
    }

    #[test]
    fn agrees_with_direct_oracle_off_bundle() {
        let mut p = Poly::zero(3);
        p.add_term(vec![1, 0, 1], 1.3);
        p.add_term(vec![0, 2, 0], -0.4);
        let comps = vec![
            p.clone(),
            Poly::zero(3),
            p.scale(0.5),
            Poly::constant(3, 1.0),
            Poly::zero(3),
            p,
        ];
        let f = GaussPoly::new(3, 2, 1.05, comps).unwrap();
        let src = OracleMoments::new(&f);
        let pp = PhasePoint::new(vec![0.3, -0.2, 0.5], vec![0.7, 1.1, -0.4]).unwrap();
        for q in 0..4 {
            let a = extend_j(&src, &pp, q).unwrap();
            let b = moment_oracle(&f, &pp, q);
            assert!(
                (a - b).abs() <= 1e-12 * b.abs().max(1e-3),
                "q={q}: {a} vs {b}"
            );
        }
    }
}
