//! Adaptive Gauss–Kronrod (G7/K15) quadrature.

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_8,
];
// Gauss weights for the odd Kronrod nodes 1, 3, 5 and the centre.
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

pub const MAX_INTERVALS: usize = 4000;

/// One K15 panel: (Kronrod estimate, |K15 − G7|).
pub fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// `∫_a^b f` to absolute tolerance `abs_tol` by bisecting the worst panel.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let (v, e) = gk15(&f, lo, hi);
    let mut panels = vec![(lo, hi, v, e)];
    loop {
        let (total, err) = panels
            .iter()
            .fold((0.0, 0.0), |(s, r), p| (s + p.2, r + p.3));
        if !total.is_finite() {
            return Err(Error::QuadratureFailure {
                tol: abs_tol,
                estimate: f64::INFINITY,
            });
        }
        if err <= abs_tol {
            return Ok(sign * total);
        }
        if panels.len() >= MAX_INTERVALS {
            return Err(Error::QuadratureFailure {
                tol: abs_tol,
                estimate: err,
            });
        }
        let worst = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .map(|(i, _)| i)
            .unwrap_or(0);
        let (pa, pb, _, _) = panels.swap_remove(worst);
        let m = 0.5 * (pa + pb);
        if m <= pa || m >= pb {
            return Err(Error::QuadratureFailure {
                tol: abs_tol,
                estimate: err,
            });
        }
        let (v1, e1) = gk15(&f, pa, m);
        let (v2, e2) = gk15(&f, m, pb);
        panels.push((pa, m, v1, e1));
        panels.push((m, pb, v2, e2));
    }
}

/// Running integral `∫_{t_0}^{t_k} f` at every grid node.
pub fn cumulative<F: Fn(f64) -> f64>(f: &F, grid: &[f64], abs_tol: f64) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(grid.len());
    let mut acc = 0.0;
    out.push(0.0);
    let per = abs_tol / grid.len().max(1) as f64;
    for w in grid.windows(2) {
        acc += integrate(f, w[0], w[1], per.max(1e-15))?;
        out.push(acc);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact() {
        let v = integrate(|x| x.powi(5) - 2.0 * x, 0.0, 2.0, 1e-12).unwrap();
        assert!((v - (64.0 / 6.0 - 4.0)).abs() < 1e-12);
    }

    #[test]
    fn oscillatory_and_reversed() {
        let v = integrate(|x| (-0.375 * x).exp() * (2.0 * x).cos(), 0.0, 20.0, 1e-10).unwrap();
        // ∫ e^{-ax} cos(bx) = [e^{-ax}(b sin bx − a cos bx)]/(a²+b²)
        let (a, b) = (0.375_f64, 2.0_f64);
        let prim = |x: f64| (-a * x).exp() * (b * (b * x).sin() - a * (b * x).cos()) / (a * a + b * b);
        assert!((v - (prim(20.0) - prim(0.0))).abs() < 1e-10);
        let r = integrate(|x| x, 1.0, 0.0, 1e-12).unwrap();
        assert!((r + 0.5).abs() < 1e-14);
    }

    #[test]
    fn non_finite_fails() {
        assert!(matches!(
            integrate(|x| 1.0 / x, 0.0, 1.0, 1e-10),
            Err(Error::QuadratureFailure { .. })
        ));
    }

    #[test]
    fn cumulative_matches_primitive() {
        let grid: Vec<f64> = (0..=50).map(|k| k as f64 * 0.2).collect();
        let c = cumulative(&|x: f64| x.sin(), &grid, 1e-10).unwrap();
        for (t, v) in grid.iter().zip(c) {
            assert!((v - (1.0 - t.cos())).abs() < 1e-10);
        }
    }
}
