// Euler-Maclaurin expansions of the Lambert sums in `h = -log λ`, and the
// measured order of their truncation error.
//
// ```text
// cargo run --example lambert_expansions
// ```

use busymax::asymptotic::{order_of_accuracy_check, s_0_h_expansion, s_j_h_expansion};
use busymax::exact::lambert_s_direct;
use busymax::{Tolerance, TrafficIntensity};

fn main() {
    for j in 1..=3 {
        println!("S_{j} = {}\n", s_j_h_expansion(j, 6).unwrap());
    }
    let s0 = s_0_h_expansion(6).unwrap();
    println!("S_0 = {s0}\n");

    let tol = Tolerance::new(1e-15).unwrap();
    let exact = |h: f64| {
        let t = TrafficIntensity::from_u(-(-h).exp_m1())?;
        lambert_s_direct(0, t, tol)
    };
    let hs = [0.16, 0.08, 0.04, 0.02];
    // the h² coefficient vanishes, so dropping terms from h² up still leaves an h³ error
    let fits = order_of_accuracy_check(&s0, &exact, &hs, &[0, 1, 2, 3]).unwrap();
    println!("S_0 truncation errors at h = {hs:?}");
    for fit in fits {
        match fit.slope {
            Some(slope) => println!("  terms below h^{}: error slope {slope:.3}", fit.truncation),
            None => println!("  terms below h^{}: errors not monotone {:?}", fit.truncation, fit.errors),
        }
    }
}
