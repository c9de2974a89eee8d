// Truncated series in `u = 1 - λ` with `log(1/u)` coefficients: products,
// order bookkeeping and the JSON form.
//
// ```text
// cargo run --example series_algebra
// ```

use busymax::series::{h_series, inv_h_series, LogPoly};
use busymax::{LogLaurentSeries, TrafficIntensity};

fn main() {
    // 1/h = 1/u - 1/2 - u/12 - u²/24 - ...
    let inv_h: LogLaurentSeries = inv_h_series(6).unwrap();
    println!("1/h = {inv_h}\n");

    // h/(1-λ) = 1 + u/2 + u²/3 + ...; the product with 1/h keeps the lower order
    let h: LogLaurentSeries = h_series(7).unwrap();
    let product = inv_h.checked_mul(&h).unwrap();
    println!("(1/h) h has order {} and equals {} at λ = 0.9\n", product.order(), product.evaluate(TrafficIntensity::new(0.9).unwrap()));

    // a log-carrying product: (log(1/u)/h)²
    let log = LogPoly::monomial(1.0, 1).unwrap();
    let log_over_h = inv_h.mul_log_poly(&log).unwrap();
    let squared = log_over_h.checked_mul(&log_over_h).unwrap();
    println!("(log(1/u)/h)² = {squared}\n");

    let t = TrafficIntensity::new(0.99).unwrap();
    let direct = (t.log_inv_u() / t.h()).powi(2);
    println!("at λ = 0.99: series {:.10}, direct {direct:.10}", squared.evaluate(t));

    println!("\nJSON: {}", serde_json::to_string(&inv_h).unwrap());
}
