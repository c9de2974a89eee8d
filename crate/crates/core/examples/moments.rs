// Exact moments of `L` from Lambert sums, checked against the direct sum
// over the distribution.
//
// ```text
// cargo run --example moments
// ```

use busymax::exact::{brute_force_l_max, brute_force_moment, equilibrium_mean, moment};
use busymax::{Tolerance, TrafficIntensity};

fn main() {
    let tol = Tolerance::default();
    println!("{:>6} {:>2} {:>20} {:>20} {:>8}", "λ", "k", "Lambert route", "direct sum", "terms");
    for lambda in [0.5, 0.9, 0.99] {
        let t = TrafficIntensity::new(lambda).unwrap();
        for k in 1..=3 {
            let m = moment(k, t, tol).unwrap();
            let l_max = brute_force_l_max(k, t, tol).unwrap();
            let b = brute_force_moment(k, t, l_max, tol).unwrap();
            println!("{lambda:>6} {k:>2} {m:>20.12} {b:>20.12} {l_max:>8}");
        }
    }

    // the mean queue length over time dwarfs the mean busy-period maximum
    println!("\n{:>8} {:>12} {:>12}", "λ", "Ex[K]", "Ex[L]");
    for lambda in [0.9, 0.99, 0.999] {
        let t = TrafficIntensity::new(lambda).unwrap();
        println!(
            "{lambda:>8} {:>12.4} {:>12.4}",
            equilibrium_mean(t).unwrap(),
            moment(1, t, tol).unwrap()
        );
    }
}
