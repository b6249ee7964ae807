//! Acceptance run: one PASS/FAIL line per criterion. Exits nonzero when any
//! criterion fails.

use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::Instant;

use momentray::fields::{DiffScheme, GridField, GridSpec};
use momentray::helmholtz::{
    decompose_k, freq_project, projector_formula, verify_decomposition, ComplexSymTensor,
};
use momentray::john::{
    chi_suite, convergence_verdict, range_test, transport_identity_residual, CorruptedMoments,
    RangeConfig, RangeInput, Verdict,
};
use momentray::phase::{PhaseFunction, Provenance};
use momentray::random::{
    random_field, random_field_with_width, random_line, random_phase_point, random_sym,
    random_vector, seeded,
};
use momentray::ray::{
    batch_oracle, moment_oracle, oracle_diff, restricted_transform, GeometrySpec, Line,
    LineGeometry, OracleJ, OracleMoments, QuadratureRule, Scheme,
};
use momentray::slice::{assemble_slice_system, expected_rows, kernel_check, probe_generic};
use momentray::symtensor::{multi_indices, sym_dim};
use momentray::Result;
use rand::Rng;

/// `(n, m, k)` configurations shared by the decomposition, projector, kernel
/// and rank criteria.
const CONFIGS: [(usize, usize, usize); 5] = [(2, 2, 1), (2, 3, 1), (3, 2, 1), (3, 2, 2), (3, 3, 2)];

struct Outcome {
    pass: bool,
    detail: String,
}

type Criterion = (&'static str, fn() -> Result<Outcome>);

fn outcome(pass: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { pass, detail })
}

fn oracle_equivalence() -> Result<Outcome> {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut truncated = 0;
    for n in [2, 3] {
        for m in 0..=3 {
            let mut rng = seeded(1000 + 10 * n as u64 + m as u64);
            let field = random_field(&mut rng, n, m, 2);
            let lines: Vec<Line> = (0..1000).map(|_| random_line(&mut rng, n, 2.0)).collect();
            let rule = QuadratureRule::new(
                Scheme::GaussLegendre,
                200,
                field.effective_radius().max(1.0),
            )?;
            for d in oracle_diff(&field, &lines, m, &rule)? {
                worst = worst.max(d.max_rel);
                truncated += d.truncated_lines;
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst < 1e-8 && secs < 30.0 && truncated == 0,
        format!("max relative error {worst:.2e} (< 1e-8) over 8 configurations x 1000 lines, {secs:.1} s (< 30 s)"),
    )
}

fn decomposition() -> Result<Outcome> {
    let mut pass = true;
    let mut parts = Vec::new();
    for (c, &(n, m, k)) in CONFIGS.iter().enumerate() {
        let nodes = if n == 2 { 128 } else { 64 };
        let spec = GridSpec::cube(n, nodes, 8.0)?;
        let (mut rec, mut sol, mut pot) = (0.0f64, 0.0f64, 0.0f64);
        for trial in 0..10 {
            let mut rng = seeded(2000 + 100 * c as u64 + trial);
            let f = GridField::sample(&random_field(&mut rng, n, m, 2), &spec, 1e-10)?;
            let d = decompose_k(&f, k)?;
            let r = verify_decomposition(&f, &d.g, &d.v, k, DiffScheme::Spectral)?;
            rec = rec.max(r.reconstruction);
            sol = sol.max(r.solenoidality);

            let w = random_field(&mut rng, n, m - k, 2);
            let fp = GridField::sample(&w.inner_derivative(k), &spec, 1e-10)?;
            let dp = decompose_k(&fp, k)?;
            pot = pot.max(dp.g.l2_norm() / fp.l2_norm());
        }
        pass &= rec < 1e-6 && sol < 1e-6 && pot < 1e-6;
        parts.push(format!(
            "{n}{m}{k}: rec {rec:.1e} sol {sol:.1e} pot {pot:.1e}"
        ));
    }
    outcome(
        pass,
        format!("{} (all < 1e-6, 10 fields each)", parts.join("; ")),
    )
}

fn projector_equality() -> Result<Outcome> {
    let mut pass = true;
    let mut parts = Vec::new();
    for (c, &(n, m, k)) in CONFIGS.iter().enumerate() {
        let mut rng = seeded(3000 + c as u64);
        let mut worst: f64 = 0.0;
        for _ in 0..1000 {
            let f = ComplexSymTensor::new(random_sym(&mut rng, n, m), random_sym(&mut rng, n, m))?;
            let y = random_vector(&mut rng, n);
            let solved = freq_project(&f, &y, k)?.g_hat;
            let formula = projector_formula(&f, &y, k)?;
            worst = worst.max(solved.sub(&formula).norm() / f.norm());
        }
        pass &= worst < 1e-10;
        parts.push(format!("{n}{m}{k}: {worst:.1e}"));
    }
    outcome(
        pass,
        format!(
            "max relative gap {} (< 1e-10, 1000 samples each)",
            parts.join("; ")
        ),
    )
}

fn kernel() -> Result<Outcome> {
    let mut pass = true;
    let mut parts = Vec::new();
    for (c, &(n, m, k)) in CONFIGS.iter().enumerate() {
        if m < k + 1 {
            parts.push(format!("{n}{m}{k}: no (k+1)-potential of rank {m}"));
            continue;
        }
        let mut rng = seeded(4000 + c as u64);
        let v = random_field(&mut rng, n, m - k - 1, 2);
        let lines: Vec<Line> = (0..500).map(|_| random_line(&mut rng, n, 2.0)).collect();
        let r = kernel_check(&v, k, &lines)?;
        pass &= r.residual < 1e-8 && r.control > 1e-3;
        parts.push(format!(
            "{n}{m}{k}: residual {:.1e} control {:.1e}",
            r.residual, r.control
        ));
    }
    outcome(
        pass,
        format!(
            "{} (residual < 1e-8, control > 1e-3, 500 lines)",
            parts.join("; ")
        ),
    )
}

/// Count of monomials of degree `d` in `vars` variables, by enumeration.
fn monomial_count(vars: usize, d: usize) -> usize {
    fn go(vars: usize, d: usize) -> usize {
        if vars == 1 {
            return 1;
        }
        (0..=d).map(|e| go(vars - 1, d - e)).sum()
    }
    go(vars, d)
}

fn injectivity() -> Result<Outcome> {
    let mut pass = true;
    let mut parts = Vec::new();
    for (c, &(n, m, k)) in CONFIGS.iter().enumerate() {
        let moments: usize = (0..=k).map(|l| monomial_count(n - 1, m - l)).sum();
        let divergence: usize = (1..=m - k).map(|p| monomial_count(n - 1, m - k - p)).sum();
        let count = moments + divergence;
        let trials = probe_generic(n, m, k, 20, 5000 + c as u64)?;
        let full = sym_dim(n, m);
        let worst = trials
            .iter()
            .map(|t| t.sigma_min / t.sigma_max)
            .fold(f64::INFINITY, f64::min);
        let ranks_ok =
            trials.len() == 20 && trials.iter().all(|t| t.rank == full && t.rows == count);
        let assembled = assemble_slice_system(n, m, k, &trials[0].y)?.row_count();
        let rows_ok = assembled == count && expected_rows(n, m, k) == count;
        pass &= ranks_ok && rows_ok && worst > 1e-6;
        parts.push(format!(
            "{n}{m}{k}: rank {full}/{full} rows {assembled}={count} ratio {worst:.1e}"
        ));
    }
    outcome(
        pass,
        format!("{} (20 draws each, ratio > 1e-6)", parts.join("; ")),
    )
}

fn moment_reduction() -> Result<Outcome> {
    let steps = [4e-3, 2e-3, 1e-3];
    let mut pass = true;
    let mut parts = Vec::new();
    for (c, &(m, r)) in [(1, 1), (2, 1), (2, 2), (3, 2)].iter().enumerate() {
        let n = 3;
        let mut rng = seeded(6000 + c as u64);
        let field = random_field(&mut rng, n, m, 2);
        let js: Vec<OracleJ> = (0..=r).map(|q| OracleJ::new(field.clone(), q)).collect();
        let refs: Vec<&dyn PhaseFunction> = js.iter().map(|j| j as &dyn PhaseFunction).collect();
        let points: Vec<_> = (0..8)
            .map(|_| random_phase_point(&mut rng, n, 1.0))
            .collect();
        let mut errors = vec![0.0f64; steps.len()];
        for idx in multi_indices(n, r) {
            let restricted = field.restrict(idx.entries())?;
            let exact: Vec<f64> = points
                .iter()
                .map(|p| moment_oracle(&restricted, p, 0))
                .collect();
            let scale = exact.iter().map(|v| v.abs()).fold(0.0, f64::max);
            for (s, &h) in steps.iter().enumerate() {
                let mut worst = 0.0f64;
                for (p, e) in points.iter().zip(&exact) {
                    let fd = restricted_transform(&refs, m, idx.entries(), p, h)?;
                    worst = worst.max((fd - e).abs());
                }
                errors[s] = errors[s].max(worst / scale);
            }
        }
        let order = (errors[1] / errors[2]).log2();
        let err = errors[2];
        pass &= err < 1e-4 && (1.5..=2.5).contains(&order);
        parts.push(format!("(m,r)=({m},{r}): {err:.1e} order {order:.2}"));
    }
    outcome(
        pass,
        format!(
            "{} (error at h=1e-3 < 1e-4, order in [1.5, 2.5])",
            parts.join("; ")
        ),
    )
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

fn finest_john(report: &momentray::john::RangeReport) -> Vec<f64> {
    report
        .john
        .iter()
        .map(|e| *e.residuals.last().unwrap())
        .collect()
}

fn range_necessity() -> Result<Outcome> {
    let config = RangeConfig::default();
    let mut pass = true;
    let mut parts = Vec::new();
    for (c, &(n, m, k)) in [(2, 2, 1), (3, 1, 1), (3, 2, 1), (3, 2, 2)]
        .iter()
        .enumerate()
    {
        let mut rng = seeded(7000 + c as u64);
        let field = random_field(&mut rng, n, m, 2);
        let geometry = LineGeometry::build(&GeometrySpec {
            n,
            directions: 16,
            offsets: 9,
            extent: 3.0,
        })?;
        let data = batch_oracle(&field, &geometry, k)?;
        let grid_parity = (0..=k)
            .filter_map(|q| data.parity_residual(q))
            .fold(0.0, f64::max);

        let oracle = OracleMoments::new(&field);
        let clean = range_test(RangeInput::Source(&oracle), k, &config)?;
        let sampled_parity = clean
            .parity
            .iter()
            .filter_map(|p| p.residual)
            .fold(0.0, f64::max);
        let converged = |e: &[momentray::john::ConvergenceEntry]| {
            e.iter().filter(|e| e.verdict == Verdict::Converged).count()
        };
        let john_ok = converged(&clean.john) == clean.john.len();
        // psi^k is a polynomial of degree k along the transport direction, so
        // for k <= 2 the stencil is exact and only rounding remains.
        let transport_ok = clean.transport.iter().all(|e| e.verdict.passed());
        let orders: Vec<f64> = clean
            .john
            .iter()
            .filter_map(|e| e.orders.last().copied())
            .collect();
        let lo = orders.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = orders.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut ok = grid_parity < 1e-12 && sampled_parity < 1e-12 && john_ok && transport_ok;
        let mut detail = format!(
            "{n}{m}{k}: parity {:.1e}, John {}/{} in [{lo:.2}, {hi:.2}], transport {}/{} (max {:.1e})",
            grid_parity.max(sampled_parity),
            converged(&clean.john),
            clean.john.len(),
            clean.transport.iter().filter(|e| e.verdict.passed()).count(),
            clean.transport.len(),
            clean.transport.iter().flat_map(|e| e.residuals.iter().copied()).fold(0.0, f64::max)
        );
        if n >= 3 {
            let corrupted = CorruptedMoments::new(&oracle, 0.1);
            let bad = range_test(RangeInput::Source(&corrupted), k, &config)?;
            let ratio = median(finest_john(&bad)) / median(finest_john(&clean));
            let stalled = bad
                .john
                .iter()
                .filter(|e| e.verdict != Verdict::Converged)
                .count();
            ok &= !bad.pass && ratio >= 10.0 && stalled * 2 > bad.john.len();
            detail.push_str(&format!(
                ", corrupted plateau {ratio:.1}x clean ({stalled}/{} stalled)",
                bad.john.len()
            ));
        }
        pass &= ok;
        parts.push(detail);
    }

    // Cubic transport profile: the stencil now has a truncation error to measure.
    let (n, k) = (3, 3);
    let field = random_field(&mut seeded(7100), n, 3, 2);
    let psis: Vec<OracleJ> = (0..=k).map(|q| OracleJ::new(field.clone(), q)).collect();
    let points: Vec<_> = {
        let mut rng = seeded(7101);
        (0..4)
            .map(|_| random_phase_point(&mut rng, n, 1.0))
            .collect()
    };
    let steps = [0.05, 0.025, 0.0125];
    let mut verdicts = Vec::new();
    for l in 1..=k {
        let r: Vec<f64> = steps
            .iter()
            .map(|&h| transport_identity_residual(&psis[k], Some(&psis[k - l]), k, l, h, &points))
            .collect::<Result<_>>()?;
        let floor = Provenance::OracleExact.noise() * steps[2].powi(-(l as i32));
        let (orders, verdict) = convergence_verdict(&r, &steps, floor);
        verdicts.push(format!(
            "l={l} {verdict:?} ({:.2}, {:.1e})",
            orders[1], r[2]
        ));
        pass &= verdict.passed();
        if l == 1 {
            // The only stencil with a nonzero truncation term on a cubic profile.
            pass &= verdict == Verdict::Converged;
        }
    }
    parts.push(format!("transport at k=3: {}", verdicts.join(", ")));
    outcome(pass, parts.join("; "))
}

fn chi_construction() -> Result<Outcome> {
    let mut pass = true;
    let mut parts = Vec::new();
    for (c, &(n, m, l)) in [(2, 2, 1), (3, 2, 1), (3, 3, 2), (3, 2, 2)]
        .iter()
        .enumerate()
    {
        let mut rng = seeded(8000 + c as u64);
        let width = rng.random_range(0.8..1.2);
        let gs: Vec<_> = (0..=l)
            .map(|s| random_field_with_width(&mut rng, n, m - s, 1, width))
            .collect();
        let points: Vec<_> = (0..6)
            .map(|_| random_phase_point(&mut rng, n, 1.0))
            .collect();
        let tuples: Vec<Vec<usize>> = (0..4)
            .map(|_| (0..l).map(|_| rng.random_range(0..n)).collect())
            .collect();
        let r = chi_suite(&gs, &points, &[0.02, 0.01], &tuples)?;
        let orders: Vec<f64> = r
            .decomposition
            .iter()
            .filter_map(|e| e.orders.last().copied())
            .collect();
        let converged = r
            .decomposition
            .iter()
            .all(|e| e.verdict == Verdict::Converged);
        pass &= r.pass && converged;
        parts.push(format!(
            "{n}{m}{l}: chi {:.1e} translation {:.1e} homogeneity {:.1e} Psi orders {}",
            r.chi_vs_lower,
            r.translation,
            r.homogeneity,
            orders
                .iter()
                .map(|o| format!("{o:.2}"))
                .collect::<Vec<_>>()
                .join("/")
        ));
    }
    outcome(pass, format!("{} (identities < 1e-8)", parts.join("; ")))
}

const FIELD_3D: &str = r#"{"n": 3, "m": 2, "a": 1.0, "components": {
    "11": [{"c": 1.0, "pow": [1, 0, 0]}, {"c": 0.5, "pow": [0, 0, 0]}],
    "23": [{"c": -0.3, "pow": [0, 2, 0]}],
    "33": [{"c": 0.7, "pow": [0, 1, 1]}]}}"#;

fn run_suite(dir: &Path, threads: usize) -> std::io::Result<bool> {
    std::fs::write(dir.join("f3.json"), FIELD_3D)?;
    let runs: [&[&str]; 9] = [
        &[
            "transform",
            "--field",
            "f3.json",
            "--k",
            "2",
            "--directions",
            "8",
            "--offsets",
            "7",
            "--out",
            "tr.json",
        ],
        &[
            "decompose",
            "--field",
            "f3.json",
            "--k",
            "1",
            "--grid",
            "24",
            "--extent",
            "7",
            "--out-prefix",
            "dec",
        ],
        &[
            "verify",
            "--f",
            "dec.f.bin",
            "--g",
            "dec.g.bin",
            "--v",
            "dec.v.bin",
            "--k",
            "1",
            "--out",
            "ver.json",
        ],
        &[
            "oracle-diff",
            "--n",
            "3",
            "--m",
            "3",
            "--k",
            "3",
            "--lines",
            "100",
            "--seed",
            "9",
            "--out",
            "od.csv",
        ],
        &[
            "rank-probe",
            "--n",
            "3",
            "--m",
            "3",
            "--k",
            "2",
            "--trials",
            "20",
            "--seed",
            "9",
            "--out",
            "rp.csv",
        ],
        &[
            "check-kernel",
            "--n",
            "3",
            "--m",
            "3",
            "--k",
            "1",
            "--lines",
            "100",
            "--seed",
            "9",
            "--out",
            "ker.csv",
        ],
        &[
            "check-range",
            "--field",
            "f3.json",
            "--m",
            "2",
            "--k",
            "1",
            "--tuples",
            "16",
            "--seed",
            "9",
            "--out",
            "rg.json",
        ],
        &[
            "chi-verify",
            "--n",
            "3",
            "--m",
            "3",
            "--l",
            "2",
            "--points",
            "4",
            "--seed",
            "9",
            "--out",
            "chi.json",
        ],
        &[
            "slice-check",
            "--n",
            "3",
            "--m",
            "2",
            "--q",
            "2",
            "--trials",
            "3",
            "--samples",
            "48",
            "--seed",
            "9",
            "--out",
            "sl.csv",
        ],
    ];
    let mut ok = true;
    for args in runs {
        let status = Command::new(env!("CARGO_BIN_EXE_momentray"))
            .args(args)
            .current_dir(dir)
            .env("MOMENTRAY_THREADS", threads.to_string())
            .output()?
            .status;
        ok &= status.code() == Some(0);
    }
    Ok(ok)
}

fn csv_bytes(dir: &Path) -> std::io::Result<Vec<(String, Vec<u8>)>> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir)? {
        let p = entry?.path();
        if p.extension().is_some_and(|e| e == "csv") {
            out.push((
                p.file_name().unwrap().to_string_lossy().into_owned(),
                std::fs::read(&p)?,
            ));
        }
    }
    out.sort();
    Ok(out)
}

fn determinism() -> Result<Outcome> {
    let a = tempfile::tempdir()?;
    let b = tempfile::tempdir()?;
    let ran = run_suite(a.path(), 1)? & run_suite(b.path(), 4)?;
    let (ca, cb) = (csv_bytes(a.path())?, csv_bytes(b.path())?);
    let same = ca.len() == cb.len() && ca.iter().zip(&cb).all(|(x, y)| x == y);
    outcome(
        ran && same && !ca.is_empty(),
        format!(
            "9 subcommands, {} CSV files byte-identical across reruns (1 and 4 threads): {same}",
            ca.len()
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("oracle equivalence", oracle_equivalence),
        ("decomposition", decomposition),
        ("projector equality", projector_equality),
        ("kernel", kernel),
        ("injectivity counting", injectivity),
        ("moment reduction", moment_reduction),
        ("range necessity", range_necessity),
        ("chi/Psi construction", chi_construction),
        ("CLI determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (pass, detail) = match check() {
            Ok(o) => (o.pass, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failed += 1;
        }
        println!(
            "criterion {} {}: {} [{:.1} s] {detail}",
            i + 1,
            name,
            if pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
    }
    println!(
        "acceptance: {} of {} criteria pass",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
