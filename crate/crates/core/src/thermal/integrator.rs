//! Classic fixed-step fourth-order Runge-Kutta for small dense systems.

/// Advances `y` by one step of size `h` for the autonomous system `dy/dt = f(y)`.
pub fn rk4_step<const N: usize>(y: &[f64; N], h: f64, f: impl Fn(&[f64; N]) -> [f64; N]) -> [f64; N] {
    let k1 = f(y);
    let k2 = f(&axpy(y, 0.5 * h, &k1));
    let k3 = f(&axpy(y, 0.5 * h, &k2));
    let k4 = f(&axpy(y, h, &k3));
    let mut out = *y;
    for i in 0..N {
        out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

/// Integrates over `span` seconds using the smallest number of equal substeps
/// no longer than `max_substep`.
pub fn rk4_integrate<const N: usize>(
    y0: &[f64; N],
    span: f64,
    max_substep: f64,
    f: impl Fn(&[f64; N]) -> [f64; N],
) -> [f64; N] {
    let n = (span / max_substep).ceil().max(1.0) as usize;
    let h = span / n as f64;
    let mut y = *y0;
    for _ in 0..n {
        y = rk4_step(&y, h, &f);
    }
    y
}

fn axpy<const N: usize>(y: &[f64; N], a: f64, x: &[f64; N]) -> [f64; N] {
    let mut out = *y;
    for i in 0..N {
        out[i] += a * x[i];
    }
    out
}
