use std::path::{Path, PathBuf};

use rand::Rng;
use serde_json::json;

use super::report::{num, opt, Table};
use super::{
    ChiArgs, DecomposeArgs, DiffArg, KernelArgs, OracleDiffArgs, Outcome, RangeArgs, RankProbeArgs,
    SchemeArg, SliceArgs, TransformArgs, VerifyArgs,
};
use crate::error::{Error, Result};
use crate::fields::{DiffScheme, GaussPolyField, GridField, GridSpec};
use crate::helmholtz::{decompose_k, verify_decomposition, DecompositionReport};
use crate::john::{
    chi_suite, range_test, ConvergenceEntry, CorruptedMoments, RangeConfig, RangeInput, RangeReport,
};
use crate::random::{
    random_field, random_field_with_width, random_line, random_phase_point, random_unit,
    random_vector, seeded,
};
use crate::ray::{
    batch_oracle, batch_transform, oracle_diff as diff_orders, GeometrySpec, Line, LineGeometry,
    MomentData, MomentSource, OracleMoments, QuadratureRule, Scheme,
};
use crate::slice::{expected_rows, kernel_check, probe_generic, slice_check as check_slice};
use crate::symtensor::sym_dim;

/// Grid samples below this magnitude at the seam count as decayed.
const GRID_CUTOFF: f64 = 1e-10;

fn load_field(path: &Path) -> Result<GaussPolyField> {
    let text = std::fs::read_to_string(path)?;
    GaussPolyField::from_json_str(&text)
}

fn suffixed(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "--{name} must be positive, got {v}"
        )))
    }
}

fn field_or_random(
    path: &Option<PathBuf>,
    rng: &mut impl Rng,
    n: usize,
    m: usize,
    degree: u32,
) -> Result<GaussPolyField> {
    match path {
        Some(p) => load_field(p),
        None => Ok(random_field(rng, n, m, degree)),
    }
}

pub fn transform(a: &TransformArgs) -> Result<Outcome> {
    positive("extent", a.extent)?;
    let field = load_field(&a.field)?;
    if a.k > field.rank() {
        return Err(Error::InvalidParameter(format!(
            "--k {} exceeds the field rank {}",
            a.k,
            field.rank()
        )));
    }
    let geometry = LineGeometry::build(&GeometrySpec {
        n: field.dim(),
        directions: a.directions,
        offsets: a.offsets,
        extent: a.extent,
    })?;
    let data = if a.oracle {
        batch_oracle(&field, &geometry, a.k)?
    } else {
        let scheme = match a.scheme {
            SchemeArg::GaussLegendre => Scheme::GaussLegendre,
            SchemeArg::Trapezoid => Scheme::Trapezoid,
        };
        let rule = QuadratureRule::new(scheme, a.nodes, field.effective_radius().max(1.0))?;
        batch_transform(&field, &geometry, a.k, &rule)?
    };
    std::fs::write(&a.out, data.to_json()?)?;
    eprintln!("wrote {}", a.out.display());
    let mut table = Table::new("parity", &["order", "residual"]);
    let mut pass = true;
    let mut parity = Vec::new();
    for order in 0..=a.k {
        let r = data.parity_residual(order);
        pass &= r.is_none_or(|r| r <= 1e-12);
        table.push([order.to_string(), opt(r)]);
        parity.push(json!({"order": order, "residual": r}));
    }
    Ok(Outcome {
        results: json!({
            "moments": a.out,
            "n": field.dim(),
            "m": field.rank(),
            "k": a.k,
            "lines": geometry.line_count(),
            "truncated": data.truncated(),
            "parity": parity,
        }),
        tables: vec![table],
        pass,
        seed: None,
        report: Some(suffixed(&a.out.with_extension(""), ".report.json")),
    })
}

fn residual_table(r: &DecompositionReport) -> Table {
    let mut t = Table::new(
        "residuals",
        &[
            "k",
            "reconstruction",
            "solenoidality",
            "g_boundary",
            "v_boundary",
        ],
    );
    t.push([
        r.k.to_string(),
        num(r.reconstruction),
        num(r.solenoidality),
        num(r.g_boundary),
        num(r.v_boundary),
    ]);
    t
}

pub fn decompose(a: &DecomposeArgs) -> Result<Outcome> {
    positive("extent", a.extent)?;
    positive("tol", a.tol)?;
    let field = load_field(&a.field)?;
    let spec = GridSpec::cube(field.dim(), a.grid, a.extent)?;
    let f = GridField::sample(&field, &spec, GRID_CUTOFF)?;
    let d = decompose_k(&f, a.k)?;
    let report = verify_decomposition(&f, &d.g, &d.v, a.k, DiffScheme::Spectral)?;
    for (part, grid) in [("f", &f), ("g", &d.g), ("v", &d.v)] {
        let path = suffixed(&a.out_prefix, &format!(".{part}.bin"));
        grid.write(&path)?;
        eprintln!("wrote {}", path.display());
    }
    if d.boundary_warning {
        eprintln!("warning: field does not decay below {GRID_CUTOFF:e} at the grid seam");
    }
    let pass = report.reconstruction < a.tol && report.solenoidality < a.tol;
    Ok(Outcome {
        results: json!({
            "residuals": report,
            "imag_residue": d.imag_residue,
            "boundary_warning": d.boundary_warning,
            "sample_truncated": f.truncated(),
        }),
        tables: vec![residual_table(&report)],
        pass,
        seed: None,
        report: Some(suffixed(&a.out_prefix, ".report.json")),
    })
}

pub fn verify(a: &VerifyArgs) -> Result<Outcome> {
    positive("tol", a.tol)?;
    let f = GridField::read(&a.f)?;
    let g = GridField::read(&a.g)?;
    let v = GridField::read(&a.v)?;
    let scheme = match a.scheme {
        DiffArg::Spectral => DiffScheme::Spectral,
        DiffArg::Central => DiffScheme::Central,
    };
    let report = verify_decomposition(&f, &g, &v, a.k, scheme)?;
    Ok(Outcome {
        results: json!({ "residuals": report }),
        tables: vec![residual_table(&report)],
        pass: report.reconstruction < a.tol && report.solenoidality < a.tol,
        seed: None,
        report: a.out.clone(),
    })
}

pub fn oracle_diff(a: &OracleDiffArgs) -> Result<Outcome> {
    positive("radius", a.radius)?;
    let mut rng = seeded(a.seed);
    let field = field_or_random(&a.field, &mut rng, a.n, a.m, a.degree)?;
    if a.k > field.rank() {
        return Err(Error::InvalidParameter(format!(
            "--k {} exceeds m = {}",
            a.k,
            field.rank()
        )));
    }
    let lines: Vec<Line> = (0..a.lines)
        .map(|_| random_line(&mut rng, field.dim(), a.radius))
        .collect();
    let rule = QuadratureRule::new(
        Scheme::GaussLegendre,
        a.nodes,
        field.effective_radius().max(1.0),
    )?;
    let orders = diff_orders(&field, &lines, a.k, &rule)?;
    let mut table = Table::new(
        "orders",
        &["order", "max_rel", "mean_rel", "truncated_lines"],
    );
    for o in &orders {
        table.push([
            o.order.to_string(),
            num(o.max_rel),
            num(o.mean_rel),
            o.truncated_lines.to_string(),
        ]);
    }
    let max_rel = orders.iter().map(|o| o.max_rel).fold(0.0, f64::max);
    Ok(Outcome {
        results: json!({
            "n": field.dim(),
            "m": field.rank(),
            "lines": lines.len(),
            "quadrature": {"scheme": "gauss-legendre", "nodes": rule.count(), "radius": rule.radius()},
            "max_rel": max_rel,
            "orders": orders,
        }),
        tables: vec![table],
        pass: max_rel < a.tol,
        seed: Some(a.seed),
        report: a.out.clone(),
    })
}

pub fn rank_probe(a: &RankProbeArgs) -> Result<Outcome> {
    if a.n < 2 || a.k > a.m {
        return Err(Error::InvalidParameter(format!(
            "need n >= 2 and k <= m, got n={}, m={}, k={}",
            a.n, a.m, a.k
        )));
    }
    let trials = probe_generic(a.n, a.m, a.k, a.trials, a.seed)?;
    let full = sym_dim(a.n, a.m);
    let rows = expected_rows(a.n, a.m, a.k);
    let mut header = vec!["trial".to_string()];
    header.extend((1..=a.n).map(|i| format!("y{i}")));
    header.extend(["rank".to_string(), "sigma_min".to_string()]);
    let mut table = Table {
        name: "ranks".into(),
        header,
        rows: vec![],
    };
    let mut pass = rows == full;
    for t in &trials {
        let mut row = vec![t.trial.to_string()];
        row.extend(t.y.iter().map(|v| num(*v)));
        row.extend([t.rank.to_string(), num(t.sigma_min)]);
        table.push(row);
        pass &= t.rows == rows && t.rank == full && t.sigma_min / t.sigma_max > a.min_ratio;
    }
    Ok(Outcome {
        results: json!({
            "sym_dim": full,
            "expected_rows": rows,
            "trials": trials,
        }),
        tables: vec![table],
        pass,
        seed: Some(a.seed),
        report: a.out.clone(),
    })
}

pub fn check_kernel(a: &KernelArgs) -> Result<Outcome> {
    positive("radius", a.radius)?;
    let mut rng = seeded(a.seed);
    let v = match &a.field {
        Some(p) => load_field(p)?,
        None => {
            if a.k + 1 > a.m {
                return Err(Error::InvalidParameter(format!(
                    "need k + 1 <= m, got k={}, m={}",
                    a.k, a.m
                )));
            }
            random_field(&mut rng, a.n, a.m - a.k - 1, a.degree)
        }
    };
    let lines: Vec<Line> = (0..a.lines)
        .map(|_| random_line(&mut rng, v.dim(), a.radius))
        .collect();
    let r = kernel_check(&v, a.k, &lines)?;
    let mut table = Table::new(
        "kernel",
        &[
            "k",
            "lines",
            "scale",
            "residual",
            "control",
            "control_identity",
        ],
    );
    table.push([
        r.k.to_string(),
        r.lines.to_string(),
        num(r.scale),
        num(r.residual),
        num(r.control),
        num(r.control_identity),
    ]);
    let pass = r.residual < a.tol && r.control > a.control_min;
    Ok(Outcome {
        results: json!({ "m": v.rank() + a.k + 1, "kernel": r }),
        tables: vec![table],
        pass,
        seed: Some(a.seed),
        report: a.out.clone(),
    })
}

fn convergence_table(name: &str, entries: &[ConvergenceEntry]) -> Table {
    let mut t = Table::new(
        name,
        &[
            "label",
            "k",
            "l",
            "step",
            "residual",
            "order",
            "noise_floor",
            "verdict",
        ],
    );
    for e in entries {
        let label = if !e.pairs.is_empty() {
            e.pairs
                .iter()
                .map(|(i, j)| format!("J{i}{j}"))
                .collect::<Vec<_>>()
                .join(" ")
        } else if !e.indices.is_empty() {
            e.indices
                .iter()
                .map(|i| i.to_string())
                .collect::<Vec<_>>()
                .join(" ")
        } else {
            String::new()
        };
        for (s, (h, r)) in e.steps.iter().zip(&e.residuals).enumerate() {
            let order = if s == 0 {
                String::new()
            } else {
                num(e.orders[s - 1])
            };
            t.push([
                label.clone(),
                e.k.to_string(),
                e.l.to_string(),
                num(*h),
                num(*r),
                order,
                num(e.noise_floor),
                serde_json::to_value(e.verdict)
                    .ok()
                    .and_then(|v| v.as_str().map(String::from))
                    .unwrap_or_default(),
            ]);
        }
    }
    t
}

fn range_tables(r: &RangeReport) -> Vec<Table> {
    let mut parity = Table::new("parity", &["order", "residual", "pass"]);
    for p in &r.parity {
        parity.push([
            p.order.to_string(),
            opt(p.residual),
            p.pass
                .map(|b| b.to_string())
                .unwrap_or_else(|| "unavailable".into()),
        ]);
    }
    vec![
        parity,
        convergence_table("john", &r.john),
        convergence_table("transport", &r.transport),
    ]
}

pub fn check_range(a: &RangeArgs) -> Result<Outcome> {
    let config = RangeConfig {
        steps: a.steps.clone(),
        points: a.points,
        tuples: a.tuples,
        parity_lines: a.parity_lines,
        radius: a.radius,
        seed: a.seed,
    };
    let data = match &a.moments {
        Some(p) => Some(MomentData::from_json(&std::fs::read_to_string(p)?)?),
        None => None,
    };
    let field;
    let oracle;
    let source: &dyn MomentSource = match (&data, &a.field) {
        (Some(d), None) => d,
        (None, Some(p)) => {
            field = load_field(p)?;
            oracle = OracleMoments::new(&field);
            &oracle
        }
        _ => {
            return Err(Error::InvalidParameter(
                "give exactly one of --moments or --field".into(),
            ))
        }
    };
    if let Some(m) = a.m {
        if m != source.rank() {
            return Err(Error::InvalidParameter(format!(
                "--m {m} but the data has rank {}",
                source.rank()
            )));
        }
    }
    if a.k > source.rank() || a.k > source.max_order() {
        return Err(Error::InvalidParameter(format!(
            "--k {} needs moments up to that order (rank {}, available {})",
            a.k,
            source.rank(),
            source.max_order()
        )));
    }
    let corrupted = a.corrupt.map(|eps| CorruptedMoments::new(source, eps));
    let input = match (&corrupted, &data) {
        (Some(c), _) => RangeInput::Source(c),
        (None, Some(d)) => RangeInput::Data(d),
        (None, None) => RangeInput::Source(source),
    };
    let report = range_test(input, a.k, &config)?;
    if report.below_characterization_dimension {
        eprintln!(
            "note: for n < 3 these conditions are necessary but do not characterize the range"
        );
    }
    if report.outside_decomposition_range {
        eprintln!("note: k > n - 1 lies outside the decomposition hypothesis");
    }
    Ok(Outcome {
        tables: range_tables(&report),
        pass: report.pass,
        results: serde_json::to_value(&report)?,
        seed: Some(a.seed),
        report: a.out.clone(),
    })
}

pub fn chi_verify(a: &ChiArgs) -> Result<Outcome> {
    if a.l > a.m || a.n < 2 {
        return Err(Error::InvalidParameter(format!(
            "need l <= m and n >= 2, got n={}, m={}, l={}",
            a.n, a.m, a.l
        )));
    }
    let mut rng = seeded(a.seed);
    let width = rng.random_range(0.8..1.2);
    let gs: Vec<GaussPolyField> = (0..=a.l)
        .map(|s| random_field_with_width(&mut rng, a.n, a.m - s, a.degree, width))
        .collect();
    let points: Vec<_> = (0..a.points)
        .map(|_| random_phase_point(&mut rng, a.n, 1.0))
        .collect();
    let tuples: Vec<Vec<usize>> = (0..a.tuples.max(1))
        .map(|_| (0..a.l).map(|_| rng.random_range(0..a.n)).collect())
        .collect();
    let r = chi_suite(&gs, &points, &a.steps, &tuples)?;
    let mut ident = Table::new("identities", &["check", "value", "tolerance"]);
    for (name, v) in [
        ("chi_vs_lower", r.chi_vs_lower),
        ("translation", r.translation),
        ("homogeneity", r.homogeneity),
        ("psi_vs_restricted", r.psi_vs_restricted),
    ] {
        ident.push([name.to_string(), num(v), num(r.tolerance)]);
    }
    Ok(Outcome {
        tables: vec![ident, convergence_table("decomposition", &r.decomposition)],
        pass: r.pass,
        results: serde_json::to_value(&r)?,
        seed: Some(a.seed),
        report: a.out.clone(),
    })
}

pub fn slice_check(a: &SliceArgs) -> Result<Outcome> {
    positive("extent", a.extent)?;
    positive("tol", a.tol)?;
    let mut rng = seeded(a.seed);
    let field = field_or_random(&a.field, &mut rng, a.n, a.m, a.degree)?;
    let n = field.dim();
    if n < 2 {
        return Err(Error::InvalidParameter("slice checks need n >= 2".into()));
    }
    let mut table = Table::new(
        "slice",
        &[
            "trial",
            "q",
            "deviation",
            "lhs_re",
            "lhs_im",
            "rhs_re",
            "rhs_im",
        ],
    );
    let mut rows = Vec::new();
    let mut pass = true;
    for trial in 0..a.trials {
        let xi = random_unit(&mut rng, n);
        let raw = random_vector(&mut rng, n);
        let c: f64 = raw.iter().zip(&xi).map(|(a, b)| a * b).sum();
        let y: Vec<f64> = raw.iter().zip(&xi).map(|(r, x)| r - c * x).collect();
        for q in 0..=a.q {
            let s = check_slice(&field, &xi, &y, q, a.samples, a.extent)?;
            pass &= s.deviation < a.tol;
            table.push([
                trial.to_string(),
                q.to_string(),
                num(s.deviation),
                num(s.lhs.re),
                num(s.lhs.im),
                num(s.rhs.re),
                num(s.rhs.im),
            ]);
            rows.push(json!({"trial": trial, "q": q, "xi": xi, "y": y, "check": s}));
        }
    }
    Ok(Outcome {
        results: json!({ "n": n, "m": field.rank(), "checks": rows }),
        tables: vec![table],
        pass,
        seed: Some(a.seed),
        report: a.out.clone(),
    })
}
