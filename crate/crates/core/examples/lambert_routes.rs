// The Lambert sums `S_k(λ) = sum_m m^k λ^m / (1 - λ^m)` by two routes, with
// the comparison integrals that bracket them.
//
// ```text
// cargo run --example lambert_routes
// ```

use busymax::exact::{
    integral_i, lambert_s_direct, lambert_s_divisor, q_digamma, sigma_k_sieve,
};
use busymax::{Tolerance, TrafficIntensity};

fn main() {
    let tol = Tolerance::new(1e-14).unwrap();
    println!("σ_1(n), n = 1..12: {:?}", &sigma_k_sieve(1, 12).unwrap()[1..]);

    println!("\n{:>5} {:>2} {:>22} {:>22} {:>10}", "λ", "k", "direct", "divisor sums", "rel gap");
    for lambda in [0.3, 0.9] {
        let t = TrafficIntensity::new(lambda).unwrap();
        for k in 0..=3 {
            let d = lambert_s_direct(k, t, tol).unwrap();
            let s = lambert_s_divisor(k, t, tol).unwrap();
            println!("{lambda:>5} {k:>2} {d:>22.15e} {s:>22.15e} {:>10.1e}", (d - s).abs() / d);
        }
    }

    let t = TrafficIntensity::new(0.99).unwrap();
    println!("\nλ = 0.99, comparison integrals:");
    for j in 0..=3 {
        let s = lambert_s_direct(j, t, tol).unwrap();
        let i = integral_i(j, t).unwrap();
        println!("  S_{j} = {s:.6e}, I_{j} = {i:.6e}, difference {:.3e}", s - i);
    }

    // S_0 through the q-digamma function at x = 1
    let lambda: f64 = 0.9;
    let psi = q_digamma(lambda, 1.0, tol).unwrap();
    let via_psi = (psi + (-lambda).ln_1p()) / lambda.ln();
    let s0 = lambert_s_direct(0, TrafficIntensity::new(lambda).unwrap(), tol).unwrap();
    println!("\nλ = 0.9: (ψ_λ(1) + log(1-λ)) / log λ = {via_psi:.15}, S_0 = {s0:.15}");
}
