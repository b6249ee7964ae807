//! Momentum ray transforms by quadrature against the closed form, and a
//! tabulated sinogram with its parity residuals.

use momentray::random::{random_field, random_line, seeded};
use momentray::ray::{
    batch_oracle, moment_numeric, moment_oracle, GeometrySpec, LineGeometry, QuadratureRule,
};

fn main() -> momentray::Result<()> {
    let mut rng = seeded(3);
    let field = random_field(&mut rng, 3, 2, 2);
    let rule = QuadratureRule::default_for(field.effective_radius())?;
    for q in 0..=2 {
        let line = random_line(&mut rng, 3, 1.5);
        let num = moment_numeric(&field, &line, q, &rule);
        let exact = moment_oracle(&field, &line.clone().into(), q);
        println!(
            "I^{q}: quadrature {:+.14} closed form {exact:+.14}",
            num.value
        );
    }

    let geometry = LineGeometry::build(&GeometrySpec {
        n: 3,
        directions: 16,
        offsets: 9,
        extent: 3.0,
    })?;
    let data = batch_oracle(&field, &geometry, 2)?;
    for q in 0..=2 {
        println!("parity residual of I^{q}: {:?}", data.parity_residual(q));
    }
    Ok(())
}
