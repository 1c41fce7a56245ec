//! Small numeric helpers shared across the crate.

use num_complex::Complex64;

/// `e(z) = exp(2*pi*i*z)`, the phase convention used by every transform here.
#[inline]
pub fn e2pi(z: f64) -> Complex64 {
    let (s, c) = (2.0 * std::f64::consts::PI * z).sin_cos();
    Complex64::new(c, s)
}

/// Smallest integer `>= min` whose prime factors are all in {2, 3, 5}.
///
/// FFT sizes are chosen from this set so the transforms stay on fast
/// mixed-radix paths.
pub fn fft_friendly_size(min: usize) -> usize {
    let mut n = min.max(1);
    loop {
        let mut m = n;
        for p in [2usize, 3, 5] {
            while m % p == 0 {
                m /= p;
            }
        }
        if m == 1 {
            return n;
        }
        n += 1;
    }
}

/// Ordinary least squares for `y = slope*x + intercept`.
///
/// Returns `(slope, intercept, rms_residual)`. Needs at least two distinct
/// abscissae; callers validate that.
pub fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    assert_eq!(xs.len(), ys.len());
    assert!(xs.len() >= 2, "least_squares needs at least two points");
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    assert!(sxx > 0.0, "least_squares needs distinct abscissae");
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let r = y - (slope * x + intercept);
            r * r
        })
        .sum();
    (slope, intercept, (ss / n).sqrt())
}

/// Relative difference `|a - b| / max(|a|, |b|)`, zero when both vanish.
#[inline]
pub fn rel_diff(a: f64, b: f64) -> f64 {
    let m = a.abs().max(b.abs());
    if m == 0.0 {
        0.0
    } else {
        (a - b).abs() / m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn friendly_sizes_are_5_smooth_and_minimal() {
        assert_eq!(fft_friendly_size(1), 1);
        assert_eq!(fft_friendly_size(17), 18);
        assert_eq!(fft_friendly_size(2050), 2160);
        assert_eq!(fft_friendly_size(257), 270);
    }

    #[test]
    fn least_squares_recovers_exact_line() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys: Vec<f64> = xs.iter().map(|x| 2.5 * x - 1.0).collect();
        let (s, i, r) = least_squares(&xs, &ys);
        assert!((s - 2.5).abs() < 1e-12);
        assert!((i + 1.0).abs() < 1e-12);
        assert!(r < 1e-12);
    }

    #[test]
    fn phase_has_unit_modulus_and_right_quarter_turn() {
        let z = e2pi(0.25);
        assert!((z.re).abs() < 1e-15);
        assert!((z.im - 1.0).abs() < 1e-15);
    }
}
