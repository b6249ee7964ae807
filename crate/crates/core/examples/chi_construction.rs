//! chi^l for f = sum_s d^s g_s recovers J^0 g_l, and Psi splits as the
//! symmetrized chi combination.

use momentray::john::chi_suite;
use momentray::random::{random_field_with_width, random_phase_point, seeded};

fn main() -> momentray::Result<()> {
    let (n, m, l) = (3, 3, 2);
    let mut rng = seeded(41);
    let gs: Vec<_> = (0..=l)
        .map(|s| random_field_with_width(&mut rng, n, m - s, 1, 1.0))
        .collect();
    let points: Vec<_> = (0..5)
        .map(|_| random_phase_point(&mut rng, n, 1.0))
        .collect();
    let tuples = vec![vec![0, 0], vec![0, 2], vec![1, 2]];
    let r = chi_suite(&gs, &points, &[0.02, 0.01, 0.005], &tuples)?;
    println!("chi vs J^0 g_l {:.1e}", r.chi_vs_lower);
    println!("translation    {:.1e}", r.translation);
    println!("homogeneity    {:.1e}", r.homogeneity);
    println!("Psi vs restricted transform {:.1e}", r.psi_vs_restricted);
    for e in &r.decomposition {
        println!(
            "  indices {:?}: residuals {:?} orders {:?}",
            e.indices, e.residuals, e.orders
        );
    }
    Ok(())
}
