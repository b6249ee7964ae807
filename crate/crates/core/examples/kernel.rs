//! (k+1)-potential fields are invisible to I^0..I^k but not to I^(k+1).

use momentray::random::{random_field, random_line, seeded};
use momentray::ray::Line;
use momentray::slice::kernel_check;

fn main() -> momentray::Result<()> {
    let mut rng = seeded(21);
    for (n, m, k) in [(2, 2, 1), (3, 3, 1), (3, 3, 2)] {
        let v = random_field(&mut rng, n, m - k - 1, 2);
        let lines: Vec<Line> = (0..200).map(|_| random_line(&mut rng, n, 2.0)).collect();
        let r = kernel_check(&v, k, &lines)?;
        println!(
            "n={n} m={m} k={k}: max |I^l|, l<=k: {:.1e}   |I^(k+1)|: {:.2}   identity {:.1e}",
            r.residual, r.control, r.control_identity
        );
    }
    Ok(())
}
