// Law of the busy-period maximum `L`, and its gambler's-ruin reading.
//
// ```text
// cargo run --example distribution
// ```

use busymax::exact::{gamblers_ruin_prob, pmf, tail_probability};
use busymax::TrafficIntensity;

fn main() {
    let lambda = TrafficIntensity::new(0.8).unwrap();
    println!("λ = 0.8");
    println!("{:>3} {:>12} {:>12} {:>12}", "l", "Pr[L > l]", "Pr[L = l]", "ruin prob");
    for l in 0..=10u64 {
        let p = if l == 0 { 0.0 } else { pmf(lambda, l).unwrap() };
        // a walk stepping up with probability λ/(1+λ), started at 1, reaches l+1 before 0
        let ruin = gamblers_ruin_prob(0.8 / 1.8, 1, l).unwrap();
        println!("{l:>3} {:>12.8} {p:>12.8} {ruin:>12.8}", tail_probability(lambda, l));
    }

    // at λ = 1 the tail is harmonic
    let critical = TrafficIntensity::with_critical(1.0).unwrap();
    let tails: Vec<f64> = (0..5).map(|l| tail_probability(critical, l)).collect();
    println!("\nλ = 1: Pr[L > l] for l = 0..5 is {tails:?}");

    // light traffic: the first event is almost always a departure
    let light = TrafficIntensity::new(0.01).unwrap();
    println!("λ = 0.01: Pr[L = 1] = {:.6} = 1/(1+λ)", pmf(light, 1).unwrap());
}
