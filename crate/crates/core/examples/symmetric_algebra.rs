//! Packed symmetric tensors: products, contractions and evaluation on powers.

use momentray::random::{random_sym, seeded};
use momentray::symtensor::{contract, eval_power, multi_indices, sym_dim, sym_mult, sym_product};

fn main() -> momentray::Result<()> {
    let (n, m) = (3, 2);
    println!("sym_dim({n}, {m}) = {}", sym_dim(n, m));
    for alpha in multi_indices(n, m) {
        println!(
            "  {:>3}  multiplicity {}",
            alpha.key(),
            alpha.multiplicity()
        );
    }

    let mut rng = seeded(1);
    let a = random_sym(&mut rng, n, 1);
    let b = random_sym(&mut rng, n, 2);
    let xi = [0.6, -0.8, 0.0];
    let ab = sym_product(&a, &b)?;
    println!(
        "<a b, xi^3> = {:.12}, <a, xi><b, xi^2> = {:.12}",
        eval_power(&ab, &xi)?,
        eval_power(&a, &xi)? * eval_power(&b, &xi)?
    );

    // i_x and j_x are adjoint for the multiplicity-weighted inner product
    let x = [1.0, 2.0, -0.5];
    let lhs = sym_mult(&a, &x, 2)?.inner(&ab);
    let rhs = a.inner(&contract(&ab, &x, 2)?);
    println!("<i_x^2 a, ab> = {lhs:.12}, <a, j_x^2 ab> = {rhs:.12}");
    Ok(())
}
