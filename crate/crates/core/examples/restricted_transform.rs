//! Fixing r indices of a field through differences of J^0..J^r, with the
//! second-order error visible under step halving.

use momentray::phase::PhaseFunction;
use momentray::random::{random_field, random_phase_point, seeded};
use momentray::ray::{
    moment_oracle, restricted_transform, restricted_transform_richardson, OracleJ,
};

fn main() -> momentray::Result<()> {
    let (n, m) = (3, 2);
    let mut rng = seeded(51);
    let field = random_field(&mut rng, n, m, 2);
    let js: Vec<OracleJ> = (0..=m).map(|q| OracleJ::new(field.clone(), q)).collect();
    let refs: Vec<&dyn PhaseFunction> = js.iter().map(|j| j as &dyn PhaseFunction).collect();
    let p = random_phase_point(&mut rng, n, 1.0);

    for fixed in [vec![0], vec![2], vec![0, 1]] {
        let exact = moment_oracle(&field.restrict(&fixed)?, &p, 0);
        print!("indices {fixed:?}: exact {exact:+.10}");
        for h in [4e-3, 2e-3, 1e-3] {
            let err = restricted_transform(&refs, m, &fixed, &p, h)? - exact;
            print!("  h={h:.0e}: {err:+.2e}");
        }
        let rich = restricted_transform_richardson(&refs, m, &fixed, &p, 4e-3)? - exact;
        println!("  richardson {rich:+.2e}");
    }
    Ok(())
}
