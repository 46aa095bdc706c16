//! Bessel functions of the first kind for integer order and non-negative argument.

use super::OracleError;

/// Largest supported order.
pub const MAX_ORDER: u32 = 10_000;
/// Largest supported argument.
pub const MAX_ARGUMENT: f64 = 1.0e4;

const SERIES_LIMIT: f64 = 2.0;

fn check(m: u32, x: f64) -> Result<(), OracleError> {
    if m > MAX_ORDER {
        return Err(OracleError::BesselOrder(m));
    }
    if !(0.0..=MAX_ARGUMENT).contains(&x) {
        return Err(OracleError::BesselArgument(x));
    }
    Ok(())
}

/// Ascending series; all terms alternate with decreasing magnitude for `x <= 2`.
fn series(m: u32, x: f64) -> f64 {
    let half = 0.5 * x;
    let mut term = 1.0;
    for k in 1..=m {
        term *= half / k as f64;
        if term == 0.0 {
            return 0.0;
        }
    }
    let q = -half * half;
    let mut sum = term;
    for k in 1..200 {
        term *= q / (k as f64 * (k + m) as f64);
        sum += term;
        if term.abs() <= 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

/// `J_0(x), ..., J_max(x)` by Miller's backward recurrence, normalized with
/// `J_0 + 2 sum_k J_2k = 1`.
fn miller(max_order: u32, x: f64) -> Vec<f64> {
    let top = max_order.max(x.ceil() as u32);
    let mut start = top + 20 + (40.0 * f64::from(top)).sqrt() as u32;
    start += start % 2;
    let mut values = vec![0.0f64; max_order as usize + 1];
    let (mut next, mut current) = (0.0f64, 1.0e-300f64);
    let mut norm = 0.0f64;
    for k in (0..=start).rev() {
        if k <= max_order {
            values[k as usize] = current;
        }
        if k % 2 == 0 {
            norm += if k == 0 { current } else { 2.0 * current };
        }
        if k == 0 {
            break;
        }
        let previous = 2.0 * f64::from(k) / x * current - next;
        next = current;
        current = previous;
        if current.abs() > 1e250 {
            next *= 1e-250;
            current *= 1e-250;
            norm *= 1e-250;
            for v in values.iter_mut() {
                *v *= 1e-250;
            }
        }
    }
    values.iter().map(|v| v / norm).collect()
}

/// `J_0(x), ..., J_max(x)`.
pub fn bessel_j_orders(max_order: u32, x: f64) -> Result<Vec<f64>, OracleError> {
    check(max_order, x)?;
    if x == 0.0 {
        let mut v = vec![0.0; max_order as usize + 1];
        v[0] = 1.0;
        return Ok(v);
    }
    if x <= SERIES_LIMIT {
        return Ok((0..=max_order).map(|m| series(m, x)).collect());
    }
    Ok(miller(max_order, x))
}

pub fn bessel_j(m: u32, x: f64) -> Result<f64, OracleError> {
    check(m, x)?;
    if x <= SERIES_LIMIT {
        return Ok(series(m, x));
    }
    Ok(miller(m, x)[m as usize])
}

/// `J_m'(x) = (J_{m-1}(x) - J_{m+1}(x)) / 2`, with `J_0' = -J_1`.
pub fn bessel_j_prime(m: u32, x: f64) -> Result<f64, OracleError> {
    let v = bessel_j_orders(m + 1, x)?;
    Ok(value_and_derivative(&v, m).1)
}

/// `(J_m, J_m')` from a precomputed order table reaching `m + 1`.
pub(crate) fn value_and_derivative(table: &[f64], m: u32) -> (f64, f64) {
    let m = m as usize;
    let derivative = if m == 0 { -table[1] } else { 0.5 * (table[m - 1] - table[m + 1]) };
    (table[m], derivative)
}
