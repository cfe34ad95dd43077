//! Shape-preserving interpolation of scores sampled at integer frame positions.
//!
//! With four or more points this is the monotone piecewise cubic Hermite
//! interpolant (Fritsch–Butland slopes, one-sided three-point end slopes with
//! the usual sign and magnitude limits). It never overshoots the data between
//! neighbouring points, so a non-negative score curve stays non-negative.
//! Two or three points fall back to straight lines.

/// Interpolates the points `(xs[i], ys[i])` onto every integer in
/// `0..len`. `xs` must be strictly increasing, start at 0 and end at
/// `len - 1`.
pub fn interpolate(xs: &[usize], ys: &[f64], len: usize) -> Vec<f64> {
    debug_assert_eq!(xs.len(), ys.len());
    debug_assert!(xs.windows(2).all(|w| w[0] < w[1]));
    debug_assert!(xs.first() == Some(&0) && xs.last() == Some(&(len - 1)));
    match xs.len() {
        0 => vec![0.0; len],
        1 => vec![ys[0]; len],
        2 | 3 => linear(xs, ys, len),
        _ => {
            let slopes = pchip_slopes(xs, ys);
            hermite(xs, ys, &slopes, len)
        }
    }
}

fn linear(xs: &[usize], ys: &[f64], len: usize) -> Vec<f64> {
    let mut out = vec![0.0; len];
    for seg in 0..xs.len() - 1 {
        let (x0, x1) = (xs[seg], xs[seg + 1]);
        let (y0, y1) = (ys[seg], ys[seg + 1]);
        let h = (x1 - x0) as f64;
        for (x, slot) in out.iter_mut().enumerate().take(x1 + 1).skip(x0) {
            let t = (x - x0) as f64 / h;
            *slot = y0 + (y1 - y0) * t;
        }
    }
    out
}

/// Derivative estimates at each point.
pub fn pchip_slopes(xs: &[usize], ys: &[f64]) -> Vec<f64> {
    let n = xs.len();
    let h: Vec<f64> = xs.windows(2).map(|w| (w[1] - w[0]) as f64).collect();
    let delta: Vec<f64> = (0..n - 1).map(|i| (ys[i + 1] - ys[i]) / h[i]).collect();
    let mut d = vec![0.0; n];
    for i in 1..n - 1 {
        let (a, b) = (delta[i - 1], delta[i]);
        if a == 0.0 || b == 0.0 || a.signum() != b.signum() {
            continue;
        }
        let w1 = 2.0 * h[i] + h[i - 1];
        let w2 = h[i] + 2.0 * h[i - 1];
        d[i] = (w1 + w2) / (w1 / a + w2 / b);
    }
    d[0] = end_slope(h[0], h[1], delta[0], delta[1]);
    d[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    d
}

fn end_slope(h0: f64, h1: f64, del0: f64, del1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * del0 - h0 * del1) / (h0 + h1);
    if d.signum() != del0.signum() || del0 == 0.0 {
        0.0
    } else if del0.signum() != del1.signum() && d.abs() > 3.0 * del0.abs() {
        3.0 * del0
    } else {
        d
    }
}

fn hermite(xs: &[usize], ys: &[f64], slopes: &[f64], len: usize) -> Vec<f64> {
    let mut out = vec![0.0; len];
    for seg in 0..xs.len() - 1 {
        let (x0, x1) = (xs[seg], xs[seg + 1]);
        let (y0, y1) = (ys[seg], ys[seg + 1]);
        let (d0, d1) = (slopes[seg], slopes[seg + 1]);
        let h = (x1 - x0) as f64;
        out[x0] = y0;
        out[x1] = y1;
        for (x, slot) in out.iter_mut().enumerate().take(x1).skip(x0 + 1) {
            let t = (x - x0) as f64 / h;
            let t2 = t * t;
            let t3 = t2 * t;
            let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
            let h10 = t3 - 2.0 * t2 + t;
            let h01 = -2.0 * t3 + 3.0 * t2;
            let h11 = t3 - t2;
            *slot = h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1;
        }
    }
    out
}
