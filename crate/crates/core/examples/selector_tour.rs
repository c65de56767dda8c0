//! A short tour: solve one intermediate point, check it against the closed
//! form, then run the selector over a seeded sample and decide
//! measurability exactly.
//!
//! ```bash
//! cargo run -p xipoint --example selector_tour
//! ```

use xipoint::probability::{empirical_space, SampleStream};
use xipoint::selector::{apply_over_sample, solve_selector_uni, SelectionPolicy};
use xipoint::{functions, is_measurable_wrt, sigma_generated_by, DistributionSpec};

fn main() -> xipoint::Result<()> {
    let policy = SelectionPolicy::sup();

    // One realization: exp over [0, 1.5] has the closed form
    // xi = log((e^x - 1) / x).
    let f = functions::exp_field();
    let x = 1.5;
    let res = solve_selector_uni(&f, 0.0, x, 1, &policy)?;
    let xi = res.xi.as_scalar()?;
    let closed_form = (x.exp_m1() / x).ln();
    println!("single solve:   xi = {xi:.12}  (closed form {closed_form:.12})");
    println!("                theta = {:.6}, residual = {:+.3e}", res.theta, res.residual);

    // Many realizations: the same anchor with a random increment. The
    // selected point is a random variable on the same space, and on a
    // finite space its measurability is decided exactly.
    let stream = SampleStream {
        seed: 7,
        dist: DistributionSpec::parse("uniform:-2,2")?,
        count: 1000,
    };
    let (_, increments) = empirical_space(&stream)?;
    let sample = apply_over_sample(&f, &[0.0], &increments, 1, &policy)?;
    let sigma = sigma_generated_by(&increments);
    let max_residual = sample
        .results
        .iter()
        .fold(0.0_f64, |m, r| m.max(r.residual.abs()));
    println!(
        "sample of {}:  measurable w.r.t. sigma(X): {}, max |residual| = {max_residual:.3e}",
        increments.space().len(),
        is_measurable_wrt(&sample.xi, &sigma),
    );
    Ok(())
}
