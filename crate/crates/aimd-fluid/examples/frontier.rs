//! The goodput/delay frontier of a 10 Mbps bottleneck shared by ten
//! synchronized connections, with the simulator shadowing every point.
//!
//! ```text
//! cargo run --example frontier
//! ```

use aimd_fluid::params::{DataUnit, FluidParams};
use aimd_fluid::pareto::{buffer_grid, knee_buffer, metrics};
use aimd_fluid::sim::{run, SimConfig};

fn main() {
    let p = FluidParams::new(1e7, 0.24, 4e4, 0.0, 0.5, DataUnit::Bits).unwrap();
    let knee = knee_buffer(&p).unwrap();
    println!("full-utilization knee at B = {knee:.1} bits");
    println!(
        "{:>12} {:>14} {:>14} {:>14} {:>12}",
        "B", "g_bar", "lambda_bar", "x_bar", "sim drift"
    );
    for b in buffer_grid(0.0, 3.0 * knee, 13) {
        let analytic = metrics(&p.with_buffer(b)).unwrap();
        let sim = run(&SimConfig::new(p.with_buffer(b)).unwrap()).unwrap();
        let drift = ((analytic.g_bar - sim.g_bar) / sim.g_bar).abs();
        println!(
            "{:>12.0} {:>14.2} {:>14.2} {:>14.2} {:>12.2e}",
            b, analytic.g_bar, analytic.lambda_bar, analytic.x_bar, drift
        );
    }
}
