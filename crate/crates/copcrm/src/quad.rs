//! Adaptive Simpson quadrature with an absolute error target.

use crate::error::{CrmError, Result};

const MAX_DEPTH: u32 = 48;

/// Integrate `f` over `[a, b]` to absolute tolerance `tol`.
///
/// Classic adaptive Simpson with Richardson correction. Fails with
/// `QuadratureNonConvergence` if the recursion bottoms out before the local
/// error estimate is met, or if the integrand returns a non-finite value.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    if !(fa.is_finite() && fb.is_finite() && fm.is_finite()) {
        return Err(CrmError::QuadratureNonConvergence { tol });
    }
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson(&f, a, b, fa, fm, fb, whole, tol, MAX_DEPTH).ok_or(
        CrmError::QuadratureNonConvergence { tol },
    )
}

#[allow(clippy::too_many_arguments)]
fn simpson<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Option<f64> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    if !(flm.is_finite() && frm.is_finite()) {
        return None;
    }
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol || m <= a || b <= m {
        return Some(left + right + delta / 15.0);
    }
    if depth == 0 {
        return None;
    }
    let lv = simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?;
    let rv = simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?;
    Some(lv + rv)
}
