//! Adaptive Gauss-Kronrod (7, 15) quadrature on finite intervals.

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
#[error("quadrature on [{a}, {b}] did not reach tolerance {tolerance} (estimate {error_estimate})")]
pub struct QuadratureFailure {
    pub a: f64,
    pub b: f64,
    pub tolerance: f64,
    pub error_estimate: f64,
}

const KRONROD_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const KRONROD_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];

/// Gauss weights for the odd-indexed Kronrod nodes (and the center).
const GAUSS_WEIGHTS: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const MAX_DEPTH: u32 = 40;

/// One (7, 15) rule on `[a, b]`: `(kronrod, |kronrod - gauss|)`.
fn rule<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = KRONROD_WEIGHTS[7] * fc;
    let mut gauss = GAUSS_WEIGHTS[3] * fc;
    for i in 0..7 {
        let dx = half * KRONROD_NODES[i];
        let pair = f(center - dx) + f(center + dx);
        kronrod += KRONROD_WEIGHTS[i] * pair;
        if i % 2 == 1 {
            gauss += GAUSS_WEIGHTS[i / 2] * pair;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

fn adapt<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    whole: (f64, f64),
    tol: f64,
    depth: u32,
) -> Result<f64, QuadratureFailure> {
    let (value, err) = whole;
    if err <= tol || (b - a) <= 1e-15 * a.abs().max(b.abs()).max(1.0) {
        return Ok(value);
    }
    if depth == MAX_DEPTH {
        return Err(QuadratureFailure {
            a,
            b,
            tolerance: tol,
            error_estimate: err,
        });
    }
    let mid = 0.5 * (a + b);
    let left = rule(f, a, mid);
    let right = rule(f, mid, b);
    Ok(adapt(f, a, mid, left, 0.5 * tol, depth + 1)? + adapt(f, mid, b, right, 0.5 * tol, depth + 1)?)
}

/// Integral of `f` over `[a, b]` to absolute tolerance `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64, QuadratureFailure> {
    if a == b {
        return Ok(0.0);
    }
    if b < a {
        return integrate(f, b, a, tol).map(|v| -v);
    }
    let whole = rule(&f, a, b);
    adapt(&f, a, b, whole, tol, 0)
}

/// Integral over `[a, b]` split at every breakpoint strictly inside it,
/// so kinks of the integrand sit on panel edges.
pub fn integrate_with_breaks<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    breaks: &[f64],
    tol: f64,
) -> Result<f64, QuadratureFailure> {
    let mut points: Vec<f64> = breaks
        .iter()
        .copied()
        .filter(|p| p.is_finite() && *p > a && *p < b)
        .collect();
    points.sort_by(f64::total_cmp);
    points.dedup();
    let pieces = points.len() + 1;
    let mut total = 0.0;
    let mut left = a;
    for right in points.into_iter().chain(std::iter::once(b)) {
        total += integrate(&f, left, right, tol / pieces as f64)?;
        left = right;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomials_are_exact() {
        let v = integrate(|x| x.powi(7) - 3.0 * x * x, 0.0, 2.0, 1e-14).unwrap();
        assert!((v - (32.0 - 8.0)).abs() < 1e-12);
    }

    #[test]
    fn smooth_and_kinked_integrands() {
        let v = integrate(|x: f64| (-2.0 * x).exp(), 0.0, 3.0, 1e-12).unwrap();
        assert!((v - (1.0 - (-6.0f64).exp()) / 2.0).abs() < 1e-12);
        let kink = |x: f64| (x - 0.3).abs();
        let v = integrate_with_breaks(kink, 0.0, 1.0, &[0.3], 1e-13).unwrap();
        assert!((v - (0.045 + 0.245)).abs() < 1e-13);
        let reversed = integrate(|x: f64| x, 1.0, 0.0, 1e-12).unwrap();
        assert!((reversed + 0.5).abs() < 1e-14);
    }

    #[test]
    fn reports_failure_on_singularity() {
        assert!(integrate(|x: f64| 1.0 / x, 0.0, 1.0, 1e-12).is_err());
    }
}
