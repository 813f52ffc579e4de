//! Dormand–Prince 5(4) with step-size control, stepping exactly onto a
//! prescribed list of output radii. Integration may run in either direction.

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug)]
pub struct Tolerance<const N: usize> {
    pub rtol: f64,
    pub atol: [f64; N],
}

#[derive(Clone, Copy, Debug)]
pub struct IntegratorOptions<const N: usize> {
    pub tol: Tolerance<N>,
    pub max_steps: usize,
    /// Any component exceeding this magnitude counts as blow-up.
    pub blowup: f64,
}

impl<const N: usize> IntegratorOptions<N> {
    pub fn new(rtol: f64, atol: [f64; N]) -> Self {
        Self { tol: Tolerance { rtol, atol }, max_steps: 2_000_000, blowup: 1e150 }
    }
}

#[derive(Clone, Debug, Default)]
pub struct IntegrationStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// fifth minus fourth order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for (c, k) in terms {
        for i in 0..N {
            out[i] += h * c * k[i];
        }
    }
    out
}

fn error_norm<const N: usize>(
    err: &[f64; N],
    y: &[f64; N],
    ynew: &[f64; N],
    tol: &Tolerance<N>,
) -> f64 {
    let mut acc = 0.0;
    for i in 0..N {
        let sc = tol.atol[i] + tol.rtol * y[i].abs().max(ynew[i].abs());
        acc += (err[i] / sc).powi(2);
    }
    (acc / N as f64).sqrt()
}

/// Integrate `y' = f(x, y)` from `(x0, y0)` and return `y` at each of
/// `outputs`, which must be monotone in the direction of integration and
/// lie beyond `x0` (an output equal to `x0` returns `y0`).
pub fn integrate<const N: usize, F>(
    mut f: F,
    x0: f64,
    y0: [f64; N],
    outputs: &[f64],
    opts: &IntegratorOptions<N>,
) -> Result<(Vec<[f64; N]>, IntegrationStats)>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    let mut stats = IntegrationStats::default();
    let mut out = Vec::with_capacity(outputs.len());
    let Some(&last) = outputs.last() else {
        return Ok((out, stats));
    };
    let dir = if last >= x0 { 1.0 } else { -1.0 };
    if outputs.iter().any(|&o| (o - x0) * dir < 0.0)
        || outputs.windows(2).any(|w| (w[1] - w[0]) * dir < 0.0)
    {
        return Err(Error::InvalidArgument("output radii not monotone from the start".into()));
    }

    let fail = |radius: f64, reason: String| Error::Integration { radius, reason };
    let mut x = x0;
    let mut y = y0;
    let mut k1 = f(x, &y);
    stats.evaluations += 1;
    let mut h = initial_step(&mut f, x, &y, &k1, dir, (last - x0).abs(), &opts.tol, &mut stats);
    let mut next = 0;

    while next < outputs.len() {
        while next < outputs.len() && outputs[next] == x {
            out.push(y);
            next += 1;
        }
        if next == outputs.len() {
            break;
        }
        let target = outputs[next];
        let mut reject_run = 0;
        loop {
            if stats.accepted + stats.rejected >= opts.max_steps {
                return Err(fail(x, format!("step budget of {} exhausted", opts.max_steps)));
            }
            let remaining = (target - x).abs();
            let mut step = h.min(remaining);
            let lands = step >= remaining * (1.0 - 1e-12);
            if lands {
                step = remaining;
            }
            let hs = dir * step;
            if x + hs == x {
                return Err(fail(x, "step size underflow".into()));
            }
            let k2 = f(x + C2 * hs, &axpy(&y, hs, &[(A21, &k1)]));
            let k3 = f(x + C3 * hs, &axpy(&y, hs, &[(A31, &k1), (A32, &k2)]));
            let k4 = f(x + C4 * hs, &axpy(&y, hs, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
            let k5 = f(
                x + C5 * hs,
                &axpy(&y, hs, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
            );
            let xn = if lands { target } else { x + hs };
            let k6 = f(
                xn,
                &axpy(&y, hs, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
            );
            let ynew = axpy(&y, hs, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
            let k7 = f(xn, &ynew);
            stats.evaluations += 6;
            let mut err = [0.0; N];
            for i in 0..N {
                err[i] = hs
                    * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            }
            let norm = error_norm(&err, &y, &ynew, &opts.tol);
            if !norm.is_finite() {
                stats.rejected += 1;
                reject_run += 1;
                if reject_run > 60 {
                    return Err(fail(x, "non-finite right-hand side".into()));
                }
                h = step * 0.1;
                continue;
            }
            let factor = if norm == 0.0 { 5.0 } else { (0.9 * norm.powf(-0.2)).clamp(0.2, 5.0) };
            if norm <= 1.0 {
                stats.accepted += 1;
                x = xn;
                y = ynew;
                k1 = k7;
                if let Some(v) = y.iter().find(|v| !(v.abs() <= opts.blowup)) {
                    return Err(fail(x, format!("solution blew up ({v:e})")));
                }
                // do not let a short landing step shrink the controller's step
                h = if lands { h.max(step * factor) } else { step * factor };
                if lands {
                    break;
                }
            } else {
                stats.rejected += 1;
                reject_run += 1;
                h = step * factor.min(1.0);
            }
        }
    }
    Ok((out, stats))
}

#[allow(clippy::too_many_arguments)]
fn initial_step<const N: usize, F>(
    f: &mut F,
    x: f64,
    y: &[f64; N],
    f0: &[f64; N],
    dir: f64,
    span: f64,
    tol: &Tolerance<N>,
    stats: &mut IntegrationStats,
) -> f64
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    let scale = |i: usize| tol.atol[i] + tol.rtol * y[i].abs();
    let norm = |v: &[f64; N]| {
        ((0..N).map(|i| (v[i] / scale(i)).powi(2)).sum::<f64>() / N as f64).sqrt()
    };
    let d0 = norm(y);
    let d1 = norm(f0);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let h0 = h0.min(span);
    let y1 = axpy(y, dir * h0, &[(1.0, f0)]);
    let f1 = f(x + dir * h0, &y1);
    stats.evaluations += 1;
    let mut diff = [0.0; N];
    for i in 0..N {
        diff[i] = f1[i] - f0[i];
    }
    let d2 = norm(&diff) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1).min(span).max(f64::MIN_POSITIVE)
}
