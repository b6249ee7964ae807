//! Rank of the slice systems that determine the solenoidal part from
//! I^0..I^k, and the Fourier-slice identity behind them.

use momentray::random::{random_field, random_unit, random_vector, seeded};
use momentray::slice::{expected_rows, probe_generic, slice_check};
use momentray::symtensor::sym_dim;

fn main() -> momentray::Result<()> {
    for (n, m, k) in [(2, 2, 1), (3, 2, 1), (3, 3, 2)] {
        let trials = probe_generic(n, m, k, 5, 11)?;
        let worst = trials
            .iter()
            .map(|t| t.sigma_min / t.sigma_max)
            .fold(f64::INFINITY, f64::min);
        println!(
            "n={n} m={m} k={k}: rows {} rank {} of {}, worst sigma ratio {worst:.2e}",
            expected_rows(n, m, k),
            trials[0].rank,
            sym_dim(n, m)
        );
    }

    let mut rng = seeded(12);
    let field = random_field(&mut rng, 2, 1, 2);
    let xi = random_unit(&mut rng, 2);
    let raw = random_vector(&mut rng, 2);
    let dot = raw[0] * xi[0] + raw[1] * xi[1];
    let y = [raw[0] - dot * xi[0], raw[1] - dot * xi[1]];
    for q in 0..=1 {
        let c = slice_check(&field, &xi, &y, q, 128, 8.0)?;
        println!("slice identity for I^{q}: deviation {:.2e}", c.deviation);
    }
    Ok(())
}
