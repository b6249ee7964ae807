//! Spectral k-solenoidal / k-potential decomposition of a sampled field.

use momentray::fields::{DiffScheme, GridField, GridSpec};
use momentray::helmholtz::{decompose_k, verify_decomposition};
use momentray::random::{random_field, seeded};

fn main() -> momentray::Result<()> {
    let (n, m, k) = (2, 2, 1);
    let spec = GridSpec::cube(n, 64, 8.0)?;
    let field = random_field(&mut seeded(4), n, m, 2);
    let f = GridField::sample(&field, &spec, 1e-10)?;
    let d = decompose_k(&f, k)?;
    let r = verify_decomposition(&f, &d.g, &d.v, k, DiffScheme::Spectral)?;
    println!("reconstruction {:.2e}", r.reconstruction);
    println!("solenoidality  {:.2e}", r.solenoidality);
    println!(
        "|g| / |f| = {:.3}, |v| = {:.3}",
        d.g.l2_norm() / f.l2_norm(),
        d.v.l2_norm()
    );

    // a pure potential leaves nothing in g
    let w = random_field(&mut seeded(5), n, m - k, 2);
    let fp = GridField::sample(&w.inner_derivative(k), &spec, 1e-10)?;
    let dp = decompose_k(&fp, k)?;
    println!(
        "potential input: |g| / |f| = {:.2e}",
        dp.g.l2_norm() / fp.l2_norm()
    );
    Ok(())
}
