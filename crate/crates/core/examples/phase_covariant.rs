//! κ-model dynamics: closed-form S and P, backflow, and divisibility thresholds.

use qsignal::phase_cov::{divisibility_thresholds, scan, uniform_grid, RateModel, ThresholdOptions, QUAD_TOL};

fn main() -> qsignal::error::Result<()> {
    let model = RateModel::Kappa { kappa: 2.0 };
    println!("t       G         Gamma_z   S         P         lhs");
    for r in scan(&model, &uniform_grid(5.0, 11), QUAD_TOL)? {
        println!(
            "{:<7.2} {:<9.5} {:<9.5} {:<9.5} {:<9.5} {:+.5}",
            r.t, r.g, r.gamma_z, r.s_bits, r.p_value, r.backflow_lhs
        );
    }
    let th = divisibility_thresholds(&ThresholdOptions::default())?;
    println!("thresholds: cp {:.5}  p_div {:.5}  td {:.5}  sp {:.5}", th.cp, th.p_div, th.td, th.sp);
    Ok(())
}
