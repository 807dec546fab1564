//! Integer-order Bessel functions of the first kind.
//!
//! Values come from Miller's downward recurrence
//! `J_{k-1}(x) = (2k/x) J_k(x) - J_{k+1}(x)`, started far above the wanted
//! orders and normalized with `J_0² + 2 sum_k J_k² = 1`. The overall sign is
//! fixed by `J_0 + 2 sum_k J_{2k} = 1`.

use crate::error::{Error, Result};

/// Largest order accepted by [`bessel_j`].
pub const MAX_ORDER: usize = 200;

const RESCALE_ABOVE: f64 = 1e250;

/// `J_k(x)` for `k = 0..=max_order`.
pub fn bessel_j_upto(max_order: usize, x: f64) -> Vec<f64> {
    if x == 0.0 {
        let mut out = vec![0.0; max_order + 1];
        out[0] = 1.0;
        return out;
    }
    let ax = x.abs();
    let top = max_order.max(ax.ceil() as usize);
    let start = 2 * ((top + 40 + (60.0 * top as f64).sqrt() as usize) / 2);
    let mut vals = vec![0.0f64; start + 2];
    vals[start] = 1e-300;
    for k in (1..=start).rev() {
        vals[k - 1] = (2.0 * k as f64 / ax) * vals[k] - vals[k + 1];
        if vals[k - 1].abs() > RESCALE_ABOVE {
            for v in vals[k - 1..].iter_mut() {
                *v /= RESCALE_ABOVE;
            }
        }
    }
    let peak = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let unit: Vec<f64> = vals.iter().map(|v| v / peak).collect();
    let squares: f64 = unit[0] * unit[0] + 2.0 * unit[1..].iter().map(|v| v * v).sum::<f64>();
    let even: f64 = unit[0] + 2.0 * unit[2..].iter().step_by(2).sum::<f64>();
    let scale = even.signum() / (squares.sqrt() * peak);
    vals.truncate(max_order + 1);
    for (k, v) in vals.iter_mut().enumerate() {
        *v *= scale;
        if x < 0.0 && k % 2 == 1 {
            *v = -*v;
        }
    }
    vals
}

/// `J_order(x)` for any integer order with `|order| <= MAX_ORDER`.
pub fn bessel_j(order: i64, x: f64) -> Result<f64> {
    let k = order.unsigned_abs() as usize;
    if k > MAX_ORDER {
        return Err(Error::InvalidArgument(format!(
            "Bessel order {order} exceeds the supported maximum {MAX_ORDER}"
        )));
    }
    let v = bessel_j_upto(k, x)[k];
    Ok(if order < 0 && k % 2 == 1 { -v } else { v })
}
