//! Parity, iterated-John and transport conditions on clean and corrupted
//! moment data.

use momentray::john::{range_test, CorruptedMoments, RangeConfig, RangeInput, RangeReport};
use momentray::random::{random_field, seeded};
use momentray::ray::OracleMoments;

fn summary(label: &str, r: &RangeReport) {
    let finest: Vec<f64> = r
        .john
        .iter()
        .map(|e| *e.residuals.last().unwrap())
        .collect();
    let worst = finest.iter().copied().fold(0.0, f64::max);
    let passed = r.john.iter().filter(|e| e.verdict.passed()).count();
    println!(
        "{label}: pass={} John {passed}/{} worst finest residual {worst:.3e}",
        r.pass,
        r.john.len()
    );
}

fn main() -> momentray::Result<()> {
    let field = random_field(&mut seeded(31), 3, 2, 2);
    let oracle = OracleMoments::new(&field);
    let config = RangeConfig {
        tuples: 16,
        ..RangeConfig::default()
    };

    let clean = range_test(RangeInput::Source(&oracle), 1, &config)?;
    summary("clean", &clean);
    for e in &clean.transport {
        println!(
            "  transport l={} residuals {:?} {:?}",
            e.l, e.residuals, e.verdict
        );
    }

    let corrupted = CorruptedMoments::new(&oracle, 0.1);
    summary(
        "corrupted",
        &range_test(RangeInput::Source(&corrupted), 1, &config)?,
    );
    Ok(())
}
