// Exact Bernoulli and Cauchy numbers, zeta values and polylogarithms.
//
// ```text
// cargo run --example special_numbers
// ```

use busymax::special::{
    bernoulli_number, bernoulli_polynomial, cauchy_number, euler_gamma, polylog, zeta,
};

fn main() {
    println!("{:>3} {:>24} {:>24}", "n", "B_n", "C_n");
    for n in 0..=12 {
        println!(
            "{n:>3} {:>24} {:>24}",
            bernoulli_number(n).unwrap().to_string(),
            cauchy_number(n).unwrap().to_string()
        );
    }
    println!("\nB_30 = {}", bernoulli_number(30).unwrap());
    println!("B_4(1/2) = {}", bernoulli_polynomial(4, 0.5).unwrap());

    for k in [2, 3, 4, 10] {
        println!("ζ({k}) = {:.16}", zeta(k).unwrap());
    }
    println!("γ = {:.16}", euler_gamma());
    for k in 1..=3 {
        println!("Li_{k}(0.9) = {:.16}", polylog(k, 0.9).unwrap());
    }
}
