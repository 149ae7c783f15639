//! Small numeric helpers shared by the analysis modules.

use num_complex::Complex64;
use rustfft::FftPlanner;
use std::f64::consts::PI;

/// Full linear cross-correlation `c[L] = Σ_m a[m] b[m − L]` for
/// `L ∈ [−(b.len() − 1), a.len() − 1]`; entry `i` holds lag
/// `i − (b.len() − 1)`.
pub(crate) fn cross_correlate(a: &[f64], b: &[f64]) -> Vec<f64> {
    let (n, m) = (a.len(), b.len());
    if n == 0 || m == 0 {
        return Vec::new();
    }
    let size = (n + m - 1).next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(size);
    let inv = planner.plan_fft_inverse(size);
    let pad = |x: &[f64]| {
        let mut v: Vec<Complex64> = x.iter().map(|r| Complex64::new(*r, 0.0)).collect();
        v.resize(size, Complex64::new(0.0, 0.0));
        v
    };
    let (mut fa, mut fb) = (pad(a), pad(b));
    fwd.process(&mut fa);
    fwd.process(&mut fb);
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x *= y.conj();
    }
    inv.process(&mut fa);
    let scale = 1.0 / size as f64;
    (0..n + m - 1)
        .map(|i| {
            let lag = i as isize - (m as isize - 1);
            let idx = if lag >= 0 { lag as usize } else { (size as isize + lag) as usize };
            fa[idx].re * scale
        })
        .collect()
}

/// Removes 2π jumps between consecutive samples.
pub fn unwrap_phase(phases: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(phases.len());
    let mut offset = 0.0;
    let mut prev: Option<f64> = None;
    for &p in phases {
        if let Some(q) = prev {
            let d = p - q;
            offset -= 2.0 * PI * ((d / (2.0 * PI)).round());
        }
        out.push(p + offset);
        prev = Some(p);
    }
    out
}

/// Linear interpolation on a uniform grid; `None` outside the samples.
pub(crate) fn interp_uniform<T>(t0: f64, dt: f64, values: &[T], t: f64) -> Option<T>
where
    T: Copy + std::ops::Mul<f64, Output = T> + std::ops::Add<Output = T>,
{
    if values.is_empty() || dt <= 0.0 {
        return None;
    }
    let x = (t - t0) / dt;
    let last = (values.len() - 1) as f64;
    if !(-1e-9..=last + 1e-9).contains(&x) {
        return None;
    }
    let x = x.clamp(0.0, last);
    let k = (x.floor() as usize).min(values.len().saturating_sub(2));
    if values.len() == 1 {
        return Some(values[0]);
    }
    let f = x - k as f64;
    Some(values[k] * (1.0 - f) + values[k + 1] * f)
}

/// Pearson correlation; `None` when either input has zero variance.
pub(crate) fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len().min(b.len());
    if n < 2 {
        return None;
    }
    let ma = a[..n].iter().sum::<f64>() / n as f64;
    let mb = b[..n].iter().sum::<f64>() / n as f64;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a[..n].iter().zip(&b[..n]) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    let den = (saa * sbb).sqrt();
    (den > 1e-300 * n as f64).then(|| (sab / den).clamp(-1.0, 1.0))
}

/// Vertex of the parabola through three equally spaced samples centred at
/// zero; zero when the samples are collinear.
pub(crate) fn parabolic_offset(ym: f64, y0: f64, yp: f64) -> f64 {
    let den = ym - 2.0 * y0 + yp;
    if den.abs() < 1e-300 {
        0.0
    } else {
        (0.5 * (ym - yp) / den).clamp(-0.5, 0.5)
    }
}
