//! Least-squares power-law fits.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitResult {
    pub slope: f64,
    pub intercept: f64,
    /// Coefficient of determination, clamped to `[0, 1]`.
    pub r_squared: f64,
    pub points: usize,
}

impl FitResult {
    pub fn predict(&self, x: f64) -> f64 {
        (self.intercept + self.slope * x.ln()).exp()
    }
}

/// Straight line through `(x, y)`; `None` with fewer than two distinct `x`.
pub fn fit_line(x: &[f64], y: &[f64]) -> Option<FitResult> {
    let n = x.len().min(y.len());
    if n < 2 {
        return None;
    }
    let mx = x[..n].iter().sum::<f64>() / n as f64;
    let my = y[..n].iter().sum::<f64>() / n as f64;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let (dx, dy) = (x[i] - mx, y[i] - my);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0)
    };
    Some(FitResult {
        slope,
        intercept: my - slope * mx,
        r_squared,
        points: n,
    })
}

/// `log y = intercept + slope log x` over the pairs with `x, y > 0`.
pub fn fit_power_law(x: &[f64], y: &[f64]) -> Option<FitResult> {
    let (lx, ly): (Vec<f64>, Vec<f64>) = x
        .iter()
        .zip(y)
        .filter(|(a, b)| **a > 0.0 && **b > 0.0 && a.is_finite() && b.is_finite())
        .map(|(a, b)| (a.ln(), b.ln()))
        .unzip();
    fit_line(&lx, &ly)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn degenerate_inputs() {
        assert!(fit_power_law(&[1.0], &[2.0]).is_none());
        assert!(fit_power_law(&[1.0, 1.0], &[2.0, 3.0]).is_none());
        assert!(fit_power_law(&[1.0, -1.0], &[2.0, 3.0]).is_none());
        let f = fit_power_law(&[1.0, 2.0], &[3.0, 3.0]).unwrap();
        assert_eq!(f.slope, 0.0);
        assert_eq!(f.r_squared, 1.0);
    }

    proptest! {
        #[test]
        fn recovers_exact_power_laws(slope in -3.0f64..3.0, c in 0.01f64..100.0, n in 2usize..12) {
            let x: Vec<f64> = (0..n).map(|i| 0.4 * 0.5f64.powi(i as i32)).collect();
            let y: Vec<f64> = x.iter().map(|v| c * v.powf(slope)).collect();
            let f = fit_power_law(&x, &y).unwrap();
            prop_assert!((f.slope - slope).abs() <= 1e-6);
            prop_assert!((f.predict(0.3) / (c * 0.3f64.powf(slope)) - 1.0).abs() <= 1e-6);
            prop_assert!((0.0..=1.0).contains(&f.r_squared));
            prop_assert_eq!(f.points, n);
        }

        #[test]
        fn r_squared_stays_in_range(pts in proptest::collection::vec((0.1f64..10.0, 0.1f64..10.0), 2..20)) {
            let (x, y): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
            if let Some(f) = fit_power_law(&x, &y) {
                prop_assert!((0.0..=1.0).contains(&f.r_squared));
            }
        }
    }
}
