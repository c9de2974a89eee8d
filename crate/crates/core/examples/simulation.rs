// Monte Carlo busy periods on the embedded jump chain, against the exact law.
//
// ```text
// cargo run --release --example simulation
// ```

use busymax::exact::{moment, tail_probability};
use busymax::simulate::{empirical_tail, simulate_many, RngSeed, SimulationReport, DEFAULT_STEP_CAP};
use busymax::{Tolerance, TrafficIntensity};

fn main() {
    let t = TrafficIntensity::new(0.8).unwrap();
    let seed = RngSeed(42);
    let summary = simulate_many(t, 200_000, seed, DEFAULT_STEP_CAP).unwrap();

    println!("{:>3} {:>10} {:>10} {:>10}", "l", "exact", "empirical", "z");
    for l in 0..=8 {
        let p = tail_probability(t, l);
        let est = empirical_tail(&summary, l).unwrap();
        let z = if est.stderr > 0.0 { (est.value - p) / est.stderr } else { 0.0 };
        println!("{l:>3} {p:>10.6} {:>10.6} {z:>10.2}", est.value);
    }

    let m1 = moment(1, t, Tolerance::default()).unwrap();
    println!(
        "\nmean {:.5} ± {:.5} (exact {m1:.5}), largest maximum {}",
        summary.mean(),
        summary.stderr_mean(),
        summary.max_observed()
    );

    let report = SimulationReport::new(&summary, t, seed);
    let json = serde_json::to_string(&report).unwrap();
    println!("report: {}...", &json[..json.len().min(120)]);
}
