//! Quantum-memory witness of the Jaynes–Cummings dynamical supermap.

use qsignal::jc::{backflow_scan, EnvMode, JcConfig};
use qsignal::phase_cov::uniform_grid;

fn main() -> qsignal::error::Result<()> {
    let cfg = JcConfig::standard()?;
    let times = uniform_grid(2.0 * std::f64::consts::PI, 12);
    let grid = backflow_scan(&cfg, &times, &times, EnvMode::Coherent)?;
    let classical = backflow_scan(&cfg, &times, &times, EnvMode::MeasurePrepare)?;
    println!("max witness, coherent cavity:        {:+.5}", grid.max());
    println!("max witness, measure-prepare cavity: {:+.5}", classical.max());
    for row in grid.rows().iter().filter(|r| r.2 > 0.0).take(5) {
        println!("s = {:.3}, t = {:.3}: {:+.5}", row.0, row.1, row.2);
    }
    Ok(())
}
