// Heavy-traffic expansions of the moments and the variance of `L`, with
// exact coefficients, compared with exact values as λ approaches one.
//
// ```text
// cargo run --example expansions
// ```

use busymax::asymptotic::{moment_expansion_exact, variance_expansion_exact};
use busymax::exact::moment;
use busymax::{Tolerance, TrafficIntensity};

fn main() {
    let m1 = moment_expansion_exact(1, 3).unwrap();
    let m2 = moment_expansion_exact(2, 2).unwrap();
    let var = variance_expansion_exact(2).unwrap();
    println!("Ex[L]   = {m1}\n");
    println!("Ex[L²]  = {m2}\n");
    println!("Var[L]  = {var}\n");

    let (m1, m2, var) = (
        moment_expansion_exact(1, 4).unwrap().to_real(),
        moment_expansion_exact(2, 4).unwrap().to_real(),
        variance_expansion_exact(4).unwrap().to_real(),
    );
    let tol = Tolerance::default();
    println!("{:>8} {:>12} {:>12} {:>12}", "1-λ", "Ex[L] err", "Ex[L²] err", "Var err");
    for u in [1e-1, 1e-2, 1e-3, 1e-4] {
        let t = TrafficIntensity::from_u(u).unwrap();
        let e1 = moment(1, t, tol).unwrap();
        let e2 = moment(2, t, tol).unwrap();
        let ev = e2 - e1 * e1;
        println!(
            "{u:>8.0e} {:>12.2e} {:>12.2e} {:>12.2e}",
            (m1.evaluate(t) - e1) / e1,
            (m2.evaluate(t) - e2) / e2,
            (var.evaluate(t) - ev) / ev
        );
    }
}
