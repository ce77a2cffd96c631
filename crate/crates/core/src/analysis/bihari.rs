use crate::error::{Result, SvieError};
use crate::modulus::Modulus;
use crate::quadrature::{integrate, QuadOptions};

/// Relative tolerance promised by [`bihari_g`] and [`bihari_bound`].
pub const BIHARI_RTOL: f64 = 1e-8;

// quadrature runs tighter than the promise so bisection on G keeps it
const INNER_RTOL: f64 = 1e-11;

/// `G(v) = ∫_{v_ref}^{v} du/κ(u)`.
///
/// `G` is only defined up to the reference point; every bound uses
/// differences of `G`, so the reference cancels.
pub fn bihari_g(modulus: &Modulus, v: f64, v_ref: f64) -> Result<f64> {
    if !(v > 0.0 && v_ref > 0.0) {
        return Err(SvieError::Domain(format!(
            "G needs v > 0 and v_ref > 0, got v = {v}, v_ref = {v_ref}"
        )));
    }
    modulus.reciprocal_integral(v_ref, v, INNER_RTOL)
}

// ∫_0^v du/κ(u) for moduli whose reciprocal is integrable at zero.
fn g_from_zero(modulus: &Modulus, v: f64) -> Result<f64> {
    let mut bad = None;
    let value = integrate(
        |u| {
            let k = modulus.kappa(u);
            if k > 0.0 {
                1.0 / k
            } else {
                bad.get_or_insert(u);
                0.0
            }
        },
        0.0,
        v,
        QuadOptions {
            max_intervals: 20_000,
            ..QuadOptions::relative(INNER_RTOL)
        },
    )?
    .value;
    match bad {
        Some(u) => Err(SvieError::Domain(format!("κ({u}) ≤ 0 inside (0, {v})"))),
        None => Ok(value),
    }
}

/// `G⁻¹(G(y0) + z_integral)`: the bound on `y(t)` when
/// `y(t) ≤ y0 + ∫ z(s) κ(y(s)) ds`.
///
/// Found by bisection on `log v`. With `y0 = 0` and a divergent Osgood
/// integral the bound is exactly zero.
pub fn bihari_bound(y0: f64, z_integral: f64, modulus: &Modulus) -> Result<f64> {
    if !(y0 >= 0.0 && y0.is_finite() && z_integral >= 0.0 && z_integral.is_finite()) {
        return Err(SvieError::Domain(format!(
            "bound needs finite y0 ≥ 0 and z ≥ 0, got y0 = {y0}, z = {z_integral}"
        )));
    }
    if z_integral == 0.0 {
        return Ok(y0);
    }
    if y0 == 0.0 && modulus.osgood_divergent() {
        return Ok(0.0);
    }
    // H(v) = G(v) − G(y0), increasing in v with H(y0) = 0
    let h = |v: f64| -> Result<f64> {
        if y0 == 0.0 {
            g_from_zero(modulus, v)
        } else {
            bihari_g(modulus, v, y0)
        }
    };
    let mut lo = if y0 > 0.0 { y0 } else { 0.0 };
    let mut hi = if y0 > 0.0 { y0 * 2.0 } else { 1.0 };
    loop {
        let reached = h(hi)?;
        if reached >= z_integral {
            break;
        }
        lo = hi;
        hi *= 2.0;
        if hi > 1e300 {
            return Err(SvieError::Domain(format!(
                "target G(y0) + {z_integral} lies beyond the range of G: G(1e300) − G(y0) = {reached}"
            )));
        }
    }
    for _ in 0..400 {
        let mid = if lo > 0.0 { (lo * hi).sqrt() } else { 0.5 * hi };
        if mid <= lo || mid >= hi || (hi - lo) <= 1e-13 * hi {
            break;
        }
        if h(mid)? < z_integral {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
