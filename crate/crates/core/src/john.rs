//! John operators on phase functions and the range conditions for the
//! moment transforms.
//!
//! Data `phi^0..phi^k` on lines is extended to `psi^l` on all of
//! `R^n x (R^n \ {0})` by the same sum that extends `I^l f` to `J^l f`. Data
//! in the range satisfies a parity law on antipodal lines and an
//! `(m+1)`-fold iterated John equation for `psi^k`.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fields::GaussPolyField;
use crate::phase::{mixed_partial, PhaseFunction, Provenance, Slot, Transport};
use crate::random::{random_line, random_phase_point, seeded};
use crate::ray::{
    extend_j, moment_oracle, restricted_transform, ExtendedMoment, Line, MomentData, MomentSource,
    PhasePoint,
};
use crate::symtensor::{binomial, factorial};

/// Parity residuals at or below this level pass.
pub const PARITY_TOLERANCE: f64 = 1e-12;
/// Accepted window for measured convergence orders of second-order stencils.
pub const ORDER_WINDOW: (f64, f64) = (1.5, 2.5);
/// A residual within this multiple of the predicted noise floor counts as
/// noise.
const FLOOR_MARGIN: f64 = 10.0;
/// Noise floors above this level are too coarse to certify anything.
const USEFUL_FLOOR: f64 = 1e-6;

/// `J_ij = d^2/dx^i dxi^j - d^2/dx^j dxi^i` by central mixed differences.
pub struct John<P> {
    inner: P,
    i: usize,
    j: usize,
    h: f64,
}

pub fn john_apply<P: PhaseFunction>(psi: P, i: usize, j: usize, h: f64) -> Result<John<P>> {
    let n = psi.dim();
    if i >= n || j >= n {
        return Err(Error::InvalidIndex(format!(
            "John pair ({}, {}) in dimension {n}",
            i + 1,
            j + 1
        )));
    }
    if !(h > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "step must be positive, got {h}"
        )));
    }
    let floor = psi.provenance().min_step();
    if h < floor {
        return Err(Error::StepUnderflow { step: h, floor });
    }
    Ok(John {
        inner: psi,
        i,
        j,
        h,
    })
}

impl<P: PhaseFunction> PhaseFunction for John<P> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn eval(&self, x: &[f64], xi: &[f64]) -> f64 {
        if self.i == self.j {
            return 0.0;
        }
        // Always evaluate the ordered pair so that J_ji = -J_ij bit for bit.
        let (a, b, sign) = if self.i < self.j {
            (self.i, self.j, 1.0)
        } else {
            (self.j, self.i, -1.0)
        };
        let ab = mixed_partial(&self.inner, x, xi, &[Slot::X(a), Slot::Xi(b)], self.h);
        let ba = mixed_partial(&self.inner, x, xi, &[Slot::X(b), Slot::Xi(a)], self.h);
        sign * (ab - ba)
    }

    fn degree(&self) -> Option<f64> {
        self.inner.degree().map(|d| d - 1.0)
    }

    fn provenance(&self) -> Provenance {
        self.inner.provenance()
    }
}

/// `J_{i_1 j_1} ... J_{i_r j_r} psi`, innermost pair last.
pub fn john_chain<'a>(
    psi: Box<dyn PhaseFunction + 'a>,
    pairs: &[(usize, usize)],
    h: f64,
) -> Result<Box<dyn PhaseFunction + 'a>> {
    let mut out = psi;
    for &(i, j) in pairs.iter().rev() {
        out = Box::new(john_apply(out, i, j, h)?);
    }
    Ok(out)
}

/// Relative size of rounding noise after `levels` nested John stencils at
/// step `h`: each level sums 8 values with weights `1/(4h^2)`.
pub fn john_noise_floor(provenance: Provenance, levels: usize, h: f64) -> f64 {
    provenance.noise() * (2.0 / (h * h)).powi(levels as i32)
}

/// `psi^l` from line data: the extension sum applied to `phi^0..phi^l`.
pub fn psi_from_phi<S: MomentSource + ?Sized>(source: &S, l: usize, p: &PhasePoint) -> Result<f64> {
    extend_j(source, p, l)
}

/// `<xi, d_x>^l` by `l` nested transport differences.
pub fn transport_power<'a>(
    psi: Box<dyn PhaseFunction + 'a>,
    l: usize,
    h: f64,
) -> Box<dyn PhaseFunction + 'a> {
    let mut out = psi;
    for _ in 0..l {
        out = Box::new(Transport::new(out, h));
    }
    out
}

/// `(-1)^l C(k,l) l!`, and `0` for `l > k`.
pub fn transport_coefficient(k: usize, l: usize) -> f64 {
    if l > k {
        return 0.0;
    }
    let sign = if l % 2 == 0 { 1.0 } else { -1.0 };
    sign * binomial(k, l) as f64 * factorial(l)
}

/// `max_p |<xi, d_x>^l psi^k - (-1)^l C(k,l) l! psi^(k-l)|` over `points`,
/// relative to `max_p |psi^k|`. For `l > k` the lower function is ignored.
pub fn transport_identity_residual(
    psi_k: &dyn PhaseFunction,
    psi_lower: Option<&dyn PhaseFunction>,
    k: usize,
    l: usize,
    h: f64,
    points: &[PhasePoint],
) -> Result<f64> {
    let coef = transport_coefficient(k, l);
    if coef != 0.0 && psi_lower.is_none() {
        return Err(Error::MissingMoment(k - l));
    }
    let lhs = transport_power(Box::new(psi_k), l, h);
    let (worst, scale) = points
        .par_iter()
        .map(|p| {
            let left = lhs.eval(p.x(), p.xi());
            let right = psi_lower.map_or(0.0, |g| coef * g.eval(p.x(), p.xi()));
            ((left - right).abs(), psi_k.eval(p.x(), p.xi()).abs())
        })
        .reduce(|| (0.0, 0.0), |a, b| (a.0.max(b.0), a.1.max(b.1)));
    Ok(worst / scale.max(f64::MIN_POSITIVE))
}

/// `chi^l = ((-1)^l / l!) (psi^l - sum_{s<l} (-1)^s C(l,s) s! J^(l-s) g_s)`.
pub struct Chi<P> {
    psi: P,
    gs: Vec<GaussPolyField>,
    m: usize,
    l: usize,
}

pub fn chi_build<P: PhaseFunction>(
    psi_l: P,
    gs: &[GaussPolyField],
    m: usize,
    l: usize,
) -> Result<Chi<P>> {
    if gs.len() != l {
        return Err(Error::InvalidParameter(format!(
            "need g_0..g_{{l-1}}: {l} fields, got {}",
            gs.len()
        )));
    }
    if l > m {
        return Err(Error::ContractionTooDeep { order: l, rank: m });
    }
    for (s, g) in gs.iter().enumerate() {
        if g.rank() + s != m {
            return Err(Error::RankMismatch(format!(
                "g_{s} must have rank {}, got {}",
                m - s,
                g.rank()
            )));
        }
        if g.dim() != psi_l.dim() {
            return Err(Error::DimensionMismatch {
                expected: psi_l.dim(),
                got: g.dim(),
            });
        }
    }
    Ok(Chi {
        psi: psi_l,
        gs: gs.to_vec(),
        m,
        l,
    })
}

impl<P: PhaseFunction> PhaseFunction for Chi<P> {
    fn dim(&self) -> usize {
        self.psi.dim()
    }

    fn eval(&self, x: &[f64], xi: &[f64]) -> f64 {
        let l = self.l;
        let p = PhasePoint::new(x.to_vec(), xi.to_vec()).expect("nonzero direction");
        let mut acc = self.psi.eval(x, xi);
        for (s, g) in self.gs.iter().enumerate() {
            let sign = if s % 2 == 0 { 1.0 } else { -1.0 };
            acc -= sign * binomial(l, s) as f64 * factorial(s) * moment_oracle(g, &p, l - s);
        }
        let sign = if l % 2 == 0 { 1.0 } else { -1.0 };
        sign / factorial(l) * acc
    }

    fn degree(&self) -> Option<f64> {
        Some(self.m as f64 - self.l as f64 - 1.0)
    }

    fn provenance(&self) -> Provenance {
        self.psi.provenance()
    }
}

/// `f = sum_s d^s g_s` for fields `g_s` of rank `m - s` sharing one width.
pub fn constructed_field(gs: &[GaussPolyField]) -> Result<GaussPolyField> {
    let first = gs
        .first()
        .ok_or_else(|| Error::InvalidParameter("need at least g_0".into()))?;
    let m = first.rank();
    let mut f = first.clone();
    for (s, g) in gs.iter().enumerate().skip(1) {
        if g.rank() + s != m {
            return Err(Error::RankMismatch(format!(
                "g_{s} must have rank {}, got {}",
                m - s,
                g.rank()
            )));
        }
        f = f.add(&g.inner_derivative(s))?;
    }
    Ok(f)
}

/// `Psi_{i_1..i_l}` from `psi^0..psi^l`; the same symmetrized stencil as the
/// restricted transform.
pub fn build_capital_psi(
    psis: &[&dyn PhaseFunction],
    m: usize,
    indices: &[usize],
    p: &PhasePoint,
    h: f64,
) -> Result<f64> {
    restricted_transform(psis, m, indices, p, h)
}

fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(i);
        for mut tail in permutations(&rest) {
            tail.insert(0, head);
            out.push(tail);
        }
    }
    out
}

/// Right side of the decomposition of `Psi` for `f = sum_s d^s g_s`:
///
/// `(1/C(m,l)) d^l chi^l / dx^{i_1..i_l}
///  + (1/C(m,l)) sigma(i_1..i_l) sum_{s<l} C(m-s, l-s)
///    d^s/dx^{i_(l-s+1)..i_l} J^0(g_s with i_1..i_(l-s) fixed)`.
pub fn psi_decomposition(
    chi: &dyn PhaseFunction,
    gs: &[GaussPolyField],
    m: usize,
    indices: &[usize],
    p: &PhasePoint,
    h: f64,
) -> Result<f64> {
    let l = indices.len();
    if gs.len() != l {
        return Err(Error::InvalidParameter(format!(
            "need {l} fields g_s, got {}",
            gs.len()
        )));
    }
    let norm = 1.0 / binomial(m, l) as f64;
    let slots: Vec<Slot> = indices.iter().map(|&i| Slot::X(i)).collect();
    let mut total = norm * mixed_partial(chi, p.x(), p.xi(), &slots, h);
    let perms = permutations(indices);
    let mut sym = 0.0;
    for perm in &perms {
        for (s, g) in gs.iter().enumerate() {
            let restricted = g.restrict(&perm[..l - s])?;
            let j0 = FnJ0(&restricted);
            let slots: Vec<Slot> = perm[l - s..].iter().map(|&i| Slot::X(i)).collect();
            sym += binomial(m - s, l - s) as f64 * mixed_partial(&j0, p.x(), p.xi(), &slots, h);
        }
    }
    total += norm * sym / perms.len() as f64;
    Ok(total)
}

struct FnJ0<'a>(&'a GaussPolyField);

impl PhaseFunction for FnJ0<'_> {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn eval(&self, x: &[f64], xi: &[f64]) -> f64 {
        moment_oracle(
            self.0,
            &PhasePoint::new(x.to_vec(), xi.to_vec()).expect("nonzero direction"),
            0,
        )
    }
}

/// Line data with `phi^0` multiplied by `1 + eps x_1` at the line's base
/// point. Leaves the range for generic fields.
pub struct CorruptedMoments<S> {
    inner: S,
    eps: f64,
}

impl<S: MomentSource> CorruptedMoments<S> {
    pub fn new(inner: S, eps: f64) -> Self {
        CorruptedMoments { inner, eps }
    }
}

impl<S: MomentSource> MomentSource for CorruptedMoments<S> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn rank(&self) -> usize {
        self.inner.rank()
    }
    fn max_order(&self) -> usize {
        self.inner.max_order()
    }
    fn moment(&self, order: usize, line: &Line) -> Result<f64> {
        let v = self.inner.moment(order, line)?;
        Ok(if order == 0 {
            v * (1.0 + self.eps * line.x()[0])
        } else {
            v
        })
    }
    fn provenance(&self) -> Provenance {
        self.inner.provenance()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    /// Measured order inside the accepted window.
    Converged,
    /// Decaying faster than the window allows: the leading error term
    /// nearly cancels and a higher-order term dominates at these steps.
    Superconvergent,
    /// Residual indistinguishable from a small predicted noise floor.
    AtNoiseFloor,
    /// Residual within a noise floor too coarse to certify the identity.
    Inconclusive,
    Failed,
}

impl Verdict {
    pub fn passed(self) -> bool {
        matches!(
            self,
            Verdict::Converged | Verdict::Superconvergent | Verdict::AtNoiseFloor
        )
    }
}

/// Classifies residuals measured at decreasing steps.
pub fn convergence_verdict(
    residuals: &[f64],
    steps: &[f64],
    floor_at_finest: f64,
) -> (Vec<f64>, Verdict) {
    let orders: Vec<f64> = residuals
        .windows(2)
        .zip(steps.windows(2))
        .map(|(r, h)| (r[0] / r[1]).ln() / (h[0] / h[1]).ln())
        .collect();
    let finest = *residuals.last().unwrap_or(&0.0);
    // An in-window order is direct evidence that truncation dominates, so the
    // (pessimistic) floor is consulted only when the order is off. Decay at
    // every halving with the last order above the window counts as well;
    // rounding noise grows as h shrinks and cannot produce that pattern.
    let verdict = match orders.last() {
        Some(&o) if o >= ORDER_WINDOW.0 && o <= ORDER_WINDOW.1 => Verdict::Converged,
        Some(&o) if o > ORDER_WINDOW.1 && orders.iter().all(|&p| p >= ORDER_WINDOW.0) => {
            Verdict::Superconvergent
        }
        _ if finest <= FLOOR_MARGIN * floor_at_finest => {
            if floor_at_finest <= USEFUL_FLOOR {
                Verdict::AtNoiseFloor
            } else {
                Verdict::Inconclusive
            }
        }
        _ => Verdict::Failed,
    };
    (orders, verdict)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParityEntry {
    pub order: usize,
    /// `None` when the line set is not closed under reversal.
    pub residual: Option<f64>,
    pub pass: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceEntry {
    /// John pairs `(i, j)` (1-based) for iterated-John rows; empty for
    /// transport rows.
    pub pairs: Vec<(usize, usize)>,
    /// Fixed indices (1-based) for rows of the `Psi` decomposition.
    pub indices: Vec<usize>,
    /// Moment order `k` and transport power `l` for transport rows.
    pub k: usize,
    pub l: usize,
    pub steps: Vec<f64>,
    pub residuals: Vec<f64>,
    pub orders: Vec<f64>,
    pub noise_floor: f64,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RangeTolerances {
    pub parity: f64,
    pub order_low: f64,
    pub order_high: f64,
    pub floor_margin: f64,
    pub useful_floor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RangeReport {
    pub n: usize,
    pub m: usize,
    pub k: usize,
    pub provenance: Provenance,
    /// `k > n - 1`: the range conditions still apply, but the decomposition
    /// and kernel statements do not cover this case.
    pub outside_decomposition_range: bool,
    /// `n < 3`: the conditions are necessary but no longer characterize the
    /// range, so passing data need not come from a field.
    pub below_characterization_dimension: bool,
    pub parity: Vec<ParityEntry>,
    pub john: Vec<ConvergenceEntry>,
    pub transport: Vec<ConvergenceEntry>,
    pub tolerances: RangeTolerances,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RangeConfig {
    /// Decreasing finite-difference steps.
    pub steps: Vec<f64>,
    /// Phase points per residual.
    pub points: usize,
    /// Random John tuples for `n >= 3`; every tuple of ordered pairs is used
    /// for `n = 2`.
    pub tuples: usize,
    /// Lines for sampled parity checks.
    pub parity_lines: usize,
    /// Sampling radius for base points.
    pub radius: f64,
    pub seed: u64,
}

impl Default for RangeConfig {
    fn default() -> Self {
        RangeConfig {
            steps: vec![0.05, 0.025, 0.0125],
            points: 4,
            tuples: 64,
            parity_lines: 200,
            radius: 1.0,
            seed: 7,
        }
    }
}

/// Where the data for a range test comes from.
pub enum RangeInput<'a> {
    /// A tabulated line set; parity uses its antipodal pairs.
    Data(&'a MomentData),
    /// Any moment source; parity is checked on sampled lines.
    Source(&'a dyn MomentSource),
}

impl RangeInput<'_> {
    fn source(&self) -> &dyn MomentSource {
        match self {
            RangeInput::Data(d) => *d,
            RangeInput::Source(s) => *s,
        }
    }
}

fn john_tuples(n: usize, levels: usize, count: usize, seed: u64) -> Vec<Vec<(usize, usize)>> {
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
        .collect();
    if n == 2 {
        let mut out = vec![vec![]];
        for _ in 0..levels {
            out = out
                .into_iter()
                .flat_map(|t: Vec<(usize, usize)>| {
                    pairs.iter().map(move |&p| {
                        let mut t = t.clone();
                        t.push(p);
                        t
                    })
                })
                .collect();
        }
        return out;
    }
    let mut rng = seeded(seed);
    (0..count)
        .map(|_| {
            (0..levels)
                .map(|_| pairs[rng.random_range(0..pairs.len())])
                .collect()
        })
        .collect()
}

fn parity_sampled(source: &dyn MomentSource, order: usize, lines: &[Line]) -> Result<f64> {
    let sign = if (source.rank() + order) % 2 == 0 {
        1.0
    } else {
        -1.0
    };
    let mut worst = 0.0f64;
    let mut scale = 0.0f64;
    for line in lines {
        let a = source.moment(order, line)?;
        let b = source.moment(order, &line.reversed())?;
        worst = worst.max((b - sign * a).abs());
        scale = scale.max(a.abs());
    }
    Ok(if scale > 0.0 { worst / scale } else { worst })
}

/// Parity, iterated-John and transport checks on data `phi^0..phi^k`.
pub fn range_test(input: RangeInput<'_>, k: usize, config: &RangeConfig) -> Result<RangeReport> {
    let source = input.source();
    let (n, m) = (source.dim(), source.rank());
    if k > source.max_order() {
        return Err(Error::MissingMoment(k));
    }
    if config.steps.is_empty() || config.steps.iter().any(|&h| !(h > 0.0)) {
        return Err(Error::InvalidParameter("steps must be positive".into()));
    }
    if config.steps.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidParameter(
            "steps must be strictly decreasing".into(),
        ));
    }
    if config.points == 0 {
        return Err(Error::InvalidParameter(
            "need at least one phase point".into(),
        ));
    }
    let provenance = source.provenance();
    let mut rng = seeded(config.seed);
    let points: Vec<PhasePoint> = (0..config.points)
        .map(|_| random_phase_point(&mut rng, n, config.radius))
        .collect();
    let lines: Vec<Line> = (0..config.parity_lines)
        .map(|_| random_line(&mut rng, n, config.radius))
        .collect();

    let mut parity = Vec::new();
    for order in 0..=k {
        let residual = match &input {
            RangeInput::Data(d) => d.parity_residual(order),
            RangeInput::Source(s) => Some(parity_sampled(*s, order, &lines)?),
        };
        parity.push(ParityEntry {
            order,
            residual,
            pass: residual.map(|r| r <= PARITY_TOLERANCE * provenance.tolerance_factor()),
        });
    }

    let psis: Vec<ExtendedMoment<&dyn MomentSource>> = (0..=k)
        .map(|q| ExtendedMoment::new(source, q))
        .collect::<Result<_>>()?;
    let psi_k = &psis[k];
    let scale = points
        .iter()
        .map(|p| psi_k.eval(p.x(), p.xi()).abs())
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);

    let levels = m + 1;
    let finest = *config.steps.last().expect("nonempty");
    let tuples = john_tuples(n, levels, config.tuples, config.seed);
    let john: Vec<ConvergenceEntry> = tuples
        .par_iter()
        .map(|pairs| {
            let residuals = config
                .steps
                .iter()
                .map(|&h| {
                    let op = john_chain(Box::new(psi_k), pairs, h)?;
                    Ok(points
                        .iter()
                        .map(|p| op.eval(p.x(), p.xi()).abs())
                        .fold(0.0, f64::max)
                        / scale)
                })
                .collect::<Result<Vec<f64>>>()?;
            let floor = john_noise_floor(provenance, levels, finest);
            let (orders, verdict) = convergence_verdict(&residuals, &config.steps, floor);
            Ok(ConvergenceEntry {
                pairs: pairs.iter().map(|&(i, j)| (i + 1, j + 1)).collect(),
                indices: vec![],
                k,
                l: 0,
                steps: config.steps.clone(),
                residuals,
                orders,
                noise_floor: floor,
                verdict,
            })
        })
        .collect::<Result<_>>()?;

    let mut transport = Vec::new();
    for l in 1..=k + 1 {
        let lower: Option<&dyn PhaseFunction> = if l <= k { Some(&psis[k - l]) } else { None };
        let residuals = config
            .steps
            .iter()
            .map(|&h| transport_identity_residual(psi_k, lower, k, l, h, &points))
            .collect::<Result<Vec<f64>>>()?;
        let floor = provenance.noise() * (1.0 / finest).powi(l as i32);
        let (orders, verdict) = convergence_verdict(&residuals, &config.steps, floor);
        transport.push(ConvergenceEntry {
            pairs: vec![],
            indices: vec![],
            k,
            l,
            steps: config.steps.clone(),
            residuals,
            orders,
            noise_floor: floor,
            verdict,
        });
    }

    let pass = parity.iter().all(|p| p.pass != Some(false))
        && john.iter().all(|e| e.verdict.passed())
        && transport.iter().all(|e| e.verdict.passed());
    Ok(RangeReport {
        n,
        m,
        k,
        provenance,
        outside_decomposition_range: k + 1 > n,
        below_characterization_dimension: n < 3,
        parity,
        john,
        transport,
        tolerances: RangeTolerances {
            parity: PARITY_TOLERANCE * provenance.tolerance_factor(),
            order_low: ORDER_WINDOW.0,
            order_high: ORDER_WINDOW.1,
            floor_margin: FLOOR_MARGIN,
            useful_floor: USEFUL_FLOOR,
        },
        pass,
    })
}

/// Largest iterated-John residual of `psi^k` over `tuples` at one step,
/// relative to `max |psi^k|` on `points`.
pub fn john_residual(
    psi_k: &dyn PhaseFunction,
    tuples: &[Vec<(usize, usize)>],
    points: &[PhasePoint],
    h: f64,
) -> Result<f64> {
    let scale = points
        .iter()
        .map(|p| psi_k.eval(p.x(), p.xi()).abs())
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let worst = tuples
        .par_iter()
        .map(|pairs| {
            let op = john_chain(Box::new(psi_k), pairs, h)?;
            Ok(points
                .iter()
                .map(|p| op.eval(p.x(), p.xi()).abs())
                .fold(0.0, f64::max))
        })
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    Ok(worst / scale)
}

/// Tuples used by [`range_test`]: all ordered-pair tuples for `n = 2`,
/// `count` seeded random ones otherwise.
pub fn sample_john_tuples(
    n: usize,
    levels: usize,
    count: usize,
    seed: u64,
) -> Vec<Vec<(usize, usize)>> {
    john_tuples(n, levels, count, seed)
}

/// Outcome of the chi and Psi identities for one constructed field.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChiReport {
    pub n: usize,
    pub m: usize,
    pub l: usize,
    pub points: usize,
    /// `max |chi^l - J^0 g_l|`, relative to `max |J^0 g_l|`.
    pub chi_vs_lower: f64,
    /// `max |chi^l(x + t xi, xi) - chi^l(x, xi)|`, relative.
    pub translation: f64,
    /// `max |chi^l(x, t xi) - t^(m-l)/|t| chi^l(x, xi)|` for `t = 2, -1`, relative.
    pub homogeneity: f64,
    /// `max |Psi - J^0 f_restricted|` at the finest step, relative.
    pub psi_vs_restricted: f64,
    /// Residual of the decomposition of `Psi` per index tuple.
    pub decomposition: Vec<ConvergenceEntry>,
    pub tolerance: f64,
    pub pass: bool,
}

/// Pointwise tolerance for the analytic chi identities.
pub const CHI_TOLERANCE: f64 = 1e-8;

/// Builds `f = sum_{s<=l} d^s g_s` from `gs = [g_0, .., g_l]` and checks the
/// chi identities and the decomposition of `Psi`.
pub fn chi_suite(
    gs: &[GaussPolyField],
    points: &[PhasePoint],
    steps: &[f64],
    tuples: &[Vec<usize>],
) -> Result<ChiReport> {
    if gs.is_empty() {
        return Err(Error::InvalidParameter("need g_0..g_l".into()));
    }
    if steps.is_empty()
        || steps.windows(2).any(|w| w[1] >= w[0])
        || steps.iter().any(|&h| !(h > 0.0))
    {
        return Err(Error::InvalidParameter(
            "steps must be positive and strictly decreasing".into(),
        ));
    }
    let l = gs.len() - 1;
    let (n, m) = (gs[0].dim(), gs[0].rank());
    if let Some(t) = tuples
        .iter()
        .find(|t| t.len() != l || t.iter().any(|&i| i >= n))
    {
        return Err(Error::InvalidIndex(format!(
            "index tuple {t:?} for l = {l}, n = {n}"
        )));
    }
    let f = constructed_field(gs)?;
    let chi = chi_build(crate::ray::OracleJ::new(f.clone(), l), &gs[..l], m, l)?;
    let psis: Vec<crate::ray::OracleJ> = (0..=l)
        .map(|q| crate::ray::OracleJ::new(f.clone(), q))
        .collect();
    let refs: Vec<&dyn PhaseFunction> = psis.iter().map(|p| p as &dyn PhaseFunction).collect();

    let rel = |pairs: Vec<(f64, f64)>| {
        let worst = pairs.iter().map(|p| (p.0 - p.1).abs()).fold(0.0, f64::max);
        let scale = pairs.iter().map(|p| p.1.abs()).fold(0.0, f64::max);
        worst / scale.max(f64::MIN_POSITIVE)
    };
    let chi_vals: Vec<f64> = points.iter().map(|p| chi.eval(p.x(), p.xi())).collect();
    let chi_vs_lower = rel(points
        .iter()
        .zip(&chi_vals)
        .map(|(p, &c)| (c, moment_oracle(&gs[l], p, 0)))
        .collect());
    let mut shifted = Vec::new();
    let mut scaled = Vec::new();
    for (p, &c) in points.iter().zip(&chi_vals) {
        for t in [0.7, -1.3] {
            let x: Vec<f64> = p.x().iter().zip(p.xi()).map(|(a, b)| a + t * b).collect();
            shifted.push((chi.eval(&x, p.xi()), c));
        }
        for t in [2.0f64, -1.0] {
            let xi: Vec<f64> = p.xi().iter().map(|v| t * v).collect();
            let factor = t.powi((m - l) as i32) / t.abs();
            scaled.push((chi.eval(p.x(), &xi), factor * c));
        }
    }
    let finest = *steps.last().expect("nonempty");
    let mut psi_pairs = Vec::new();
    let mut decomposition = Vec::new();
    for idx in tuples {
        let restricted = f.restrict(idx)?;
        let exact: Vec<f64> = points
            .iter()
            .map(|p| moment_oracle(&restricted, p, 0))
            .collect();
        let scale = exact
            .iter()
            .map(|v| v.abs())
            .fold(0.0, f64::max)
            .max(f64::MIN_POSITIVE);
        let mut residuals = Vec::new();
        for &h in steps {
            let mut worst = 0.0f64;
            for (p, &e) in points.iter().zip(&exact) {
                let big = build_capital_psi(&refs, m, idx, p, h)?;
                let rhs = psi_decomposition(&chi, &gs[..l], m, idx, p, h)?;
                worst = worst.max((big - rhs).abs());
                if h == finest {
                    psi_pairs.push((big, e));
                }
            }
            residuals.push(worst / scale);
        }
        // Two stencils of order l, each with weights summing to h^-l.
        let floor = 4.0 * Provenance::OracleExact.noise() * finest.powi(-(l as i32));
        let (orders, verdict) = convergence_verdict(&residuals, steps, floor);
        decomposition.push(ConvergenceEntry {
            pairs: vec![],
            indices: idx.iter().map(|&i| i + 1).collect(),
            k: l,
            l,
            steps: steps.to_vec(),
            residuals,
            orders,
            noise_floor: floor,
            verdict,
        });
    }
    let translation = rel(shifted);
    let homogeneity = rel(scaled);
    let psi_vs_restricted = if psi_pairs.is_empty() {
        0.0
    } else {
        rel(psi_pairs)
    };
    let pass = chi_vs_lower < CHI_TOLERANCE
        && translation < CHI_TOLERANCE
        && homogeneity < CHI_TOLERANCE
        && decomposition.iter().all(|e| e.verdict.passed());
    Ok(ChiReport {
        n,
        m,
        l,
        points: points.len(),
        chi_vs_lower,
        translation,
        homogeneity,
        psi_vs_restricted,
        decomposition,
        tolerance: CHI_TOLERANCE,
        pass,
    })
}
