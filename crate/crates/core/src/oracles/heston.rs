//! Semi-analytic Heston call prices under the minimal martingale measure,
//! via a single Lewis-style integral of the characteristic function.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::num::Real;
use crate::quad;

/// Characteristic function `E exp(i z (X_T - x))` of the centered log price
/// under `dX = -Y/2 dt + sqrt(Y) dW1`, `dY = kappa (theta - Y) dt
/// + delta sqrt(Y) dW2`, `corr = rho`. Stable "minus root" branch.
fn heston_cf<T: Real>(
    z: Complex<T>,
    tau: T,
    y: T,
    delta: T,
    theta: T,
    kappa: T,
    rho: T,
) -> Complex<T> {
    let i = Complex::new(T::zero(), T::one());
    let half = T::of(0.5);
    let kap = Complex::new(kappa, T::zero());
    let beta = kap - i * z * rho * delta;
    // zeta = -(z^2 + i z)/2 from the X-part of the generator
    let zeta = -(z * z + i * z) * half;
    let d = (beta * beta - zeta * (T::of(2.0) * delta * delta)).sqrt();
    let r_minus = (beta - d) / (delta * delta);
    let g = (beta - d) / (beta + d);
    let one = Complex::new(T::one(), T::zero());
    let e = (-d * tau).exp();
    let big_d = r_minus * (one - e) / (one - g * e);
    let log_term = ((one - g * e) / (one - g)).ln();
    let big_c = (r_minus * tau - log_term * (T::of(2.0) / (delta * delta))) * (kappa * theta);
    (big_c + big_d * y).exp()
}

/// Lewis single-integral call price for zero rates:
/// `C = e^x - (e^{(x+k)/2}/pi) int_0^inf Re[e^{iu(x-k)} phi(u - i/2)] du / (u^2 + 1/4)`.
fn lewis_call<T: Real, F: Fn(Complex<T>) -> Complex<T>>(
    x: T,
    k: T,
    phi_centered: F,
    tol: T,
) -> Result<T> {
    let half = T::of(0.5);
    let moneyness = x - k;
    let integrand = |u: T| {
        let z = Complex::new(u, -half);
        let rot = Complex::new(T::zero(), u * moneyness).exp();
        (rot * phi_centered(z)).re / (u * u + T::of(0.25))
    };
    // the integrand decays exponentially; extend the truncation until the
    // marginal segment is negligible
    let mut upper = T::of(200.0);
    let (mut total, mut err) = quad::integrate(integrand, T::zero(), upper, tol)?;
    for _ in 0..6 {
        let (tail, tail_err) = quad::integrate(integrand, upper, upper * T::of(2.0), tol)?;
        total = total + tail;
        err = err + tail_err;
        upper = upper * T::of(2.0);
        if tail.abs() < tol * T::of(0.1) {
            break;
        }
    }
    let price = x.exp() - (half * (x + k)).exp() / T::PI() * total;
    if !price.is_finite() {
        return Err(Error::QuadratureNonConvergence {
            estimate: price.as_f64(),
            bound: err.as_f64(),
            tol: tol.as_f64(),
        });
    }
    Ok(price)
}

/// Semi-analytic call price in the Heston model started at `(x, y)` with
/// time to maturity `tau`, to absolute tolerance about 1e-10.
pub fn heston_call_exact<T: Real>(
    delta: T,
    theta: T,
    kappa: T,
    rho: T,
    x: T,
    y: T,
    k: T,
    tau: T,
) -> Result<T> {
    for (name, v) in [("delta", delta), ("theta", theta), ("kappa", kappa), ("tau", tau)] {
        if !(v > T::zero()) || !v.is_finite() {
            return Err(Error::Parameter { name, reason: format!("{v} must be positive") });
        }
    }
    if !(y >= T::zero()) {
        return Err(Error::Parameter { name: "y", reason: "variance must be nonnegative".into() });
    }
    // absolute price tolerance 1e-10, mapped through the premium prefactor
    let tol = T::of(1e-10) * T::PI() / (T::of(0.5) * (x + k)).exp();
    lewis_call(x, k, |z| heston_cf(z, tau, y, delta, theta, kappa, rho), tol)
}
