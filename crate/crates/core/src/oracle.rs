//! Generic numerical routes used to cross-check closed forms: fixed-step RK4 and
//! bracketed bisection. Nothing here knows about any particular closed form.

/// Relative tolerance on the root for [`bisect_decreasing`].
pub const BISECT_TOL: f64 = 1e-12;
const MAX_DOUBLINGS: usize = 2000;
const MAX_HALVINGS: usize = 400;

/// Integrates `ẏ = f(t, y)` from `t = 0` to `t_end` with fixed-step classical RK4.
///
/// The final step is shortened so the integration lands exactly on `t_end`.
pub fn rk4<F>(f: F, y0: &[f64], t_end: f64, step: f64) -> Vec<f64>
where
    F: Fn(f64, &[f64]) -> Vec<f64>,
{
    assert!(step > 0.0 && t_end >= 0.0);
    let n = y0.len();
    let mut y = y0.to_vec();
    let mut t = 0.0;
    let mut tmp = vec![0.0; n];
    while t < t_end {
        let h = step.min(t_end - t);
        let k1 = f(t, &y);
        for i in 0..n {
            tmp[i] = y[i] + 0.5 * h * k1[i];
        }
        let k2 = f(t + 0.5 * h, &tmp);
        for i in 0..n {
            tmp[i] = y[i] + 0.5 * h * k2[i];
        }
        let k3 = f(t + 0.5 * h, &tmp);
        for i in 0..n {
            tmp[i] = y[i] + h * k3[i];
        }
        let k4 = f(t + h, &tmp);
        for i in 0..n {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        t += h;
        if h < step {
            break;
        }
    }
    y
}

/// Finds `t > 0` with `f(t) = target` for a nonincreasing `f` with `f(0) > target`.
///
/// The bracket starts at `[0, initial_hi]` and its upper end is doubled until
/// `f(hi) ≤ target`. Returns `None` if the target is never crossed.
pub fn bisect_decreasing<F>(f: F, target: f64, initial_hi: f64) -> Option<f64>
where
    F: Fn(f64) -> f64,
{
    let mut lo = 0.0;
    let mut hi = initial_hi.max(f64::MIN_POSITIVE);
    let mut doublings = 0;
    while f(hi) > target {
        lo = hi;
        hi *= 2.0;
        doublings += 1;
        if doublings > MAX_DOUBLINGS || !hi.is_finite() {
            return None;
        }
    }
    for _ in 0..MAX_HALVINGS {
        if hi - lo <= BISECT_TOL * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if f(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Smallest `t ≥ 0` where the monotone predicate switches from false to true.
pub fn bisect_first_true<P>(pred: P, initial_hi: f64) -> Option<f64>
where
    P: Fn(f64) -> bool,
{
    if pred(0.0) {
        return Some(0.0);
    }
    bisect_decreasing(|t| if pred(t) { 0.0 } else { 1.0 }, 0.5, initial_hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rk4_exponential_decay() {
        let y = rk4(|_, y| vec![-y[0]], &[1.0], 2.0, 1e-3);
        assert!((y[0] - (-2.0f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn rk4_lands_on_end_time() {
        let y = rk4(|_, _| vec![1.0], &[0.0], 0.12345, 0.1);
        assert!((y[0] - 0.12345).abs() < 1e-15);
    }

    #[test]
    fn bisection_root() {
        let t = bisect_decreasing(|t| (-t).exp(), 0.5, 1e-3).unwrap();
        assert!((t - 2f64.ln()).abs() < 1e-11);
        assert!(bisect_decreasing(|_| 1.0, 0.5, 1.0).is_none());
    }

    #[test]
    fn first_true() {
        let t = bisect_first_true(|t| t * t >= 2.0, 1.0).unwrap();
        assert!((t - 2f64.sqrt()).abs() < 1e-11);
    }
}
