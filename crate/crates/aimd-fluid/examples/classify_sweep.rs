//! Sweep the buffer at fixed (β, q) and print the cycle table.
//!
//! ```text
//! cargo run --example classify_sweep
//! ```

use aimd_fluid::classifier::classify;

fn main() {
    let (beta, q) = (0.5, 0.9);
    println!("beta = {beta}, q = {q}");
    println!("{:>8}  {:<28} single-loss", "b", "cycles (order/shape)");
    let mut b = 0.0;
    while b <= 0.8 {
        let report = classify(beta, q, b).expect("valid parameters");
        let cycles = report
            .cycles
            .iter()
            .map(|c| format!("{}-cycle {:?}", c.order, c.shape))
            .collect::<Vec<_>>()
            .join(", ");
        let verdict = match report.single_jump_condition {
            Some(tag) => format!("yes ({tag:?})"),
            None => "no".to_string(),
        };
        println!("{b:>8.4}  {cycles:<28} {verdict}");
        b += 0.05;
    }
}
