//! Gaussian-polynomial fields: JSON input, derivatives and the exact Fourier
//! transform.

use momentray::fields::GaussPolyField;

const FIELD: &str = r#"{"n": 2, "m": 1, "a": 1.0, "components": {
    "1": [{"c": 1.0, "pow": [1, 0]}, {"c": 0.5, "pow": [0, 0]}],
    "2": [{"c": -0.3, "pow": [0, 2]}]}}"#;

fn main() -> momentray::Result<()> {
    let f = GaussPolyField::from_json_str(FIELD)?;
    let x = [0.3, -0.4];
    println!("f(x) = {:?}", f.eval(&x).coeffs());
    println!("effective radius {:.3}", f.effective_radius());

    let df = f.inner_derivative(1);
    println!(
        "d f has rank {}, d f(x) = {:?}",
        df.rank(),
        df.eval(&x).coeffs()
    );
    println!("div f(x) = {:?}", f.divergence(1)?.eval(&x).coeffs());

    let fhat = f.fourier();
    let (re, im) = fhat.eval_split(&[0.5, 1.0]);
    println!("f^(0.5, 1) = {:?} + i {:?}", re.coeffs(), im.coeffs());
    Ok(())
}
