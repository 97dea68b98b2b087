//! Black–Scholes call prices and the volatility derivatives the implied-vol
//! recursion divides through.

use crate::num::{norm_cdf, norm_pdf, Real};

/// Call price `e^x Phi(d+) - e^k Phi(d-)` with
/// `d± = (x - k ± sigma^2 tau / 2) / (sigma sqrt(tau))`.
///
/// `sigma <= 0` or `tau <= 0` degenerate to the intrinsic value
/// `(e^x - e^k)^+`.
pub fn bs_call<T: Real>(t: T, x: T, sigma: T, k: T, maturity: T) -> T {
    let tau = maturity - t;
    if sigma <= T::zero() || tau <= T::zero() {
        return (x.exp() - k.exp()).max(T::zero());
    }
    let srt = sigma * tau.sqrt();
    let half = T::of(0.5);
    let d_plus = ((x - k) + half * sigma * sigma * tau) / srt;
    let d_minus = d_plus - srt;
    x.exp() * norm_cdf(d_plus) - k.exp() * norm_cdf(d_minus)
}

/// Vega `d/dsigma uBS = e^x phi(d+) sqrt(tau)`.
pub fn bs_vega<T: Real>(t: T, x: T, sigma: T, k: T, maturity: T) -> T {
    let tau = maturity - t;
    if sigma <= T::zero() || tau <= T::zero() {
        return T::zero();
    }
    let srt = sigma * tau.sqrt();
    let half = T::of(0.5);
    let d_plus = ((x - k) + half * sigma * sigma * tau) / srt;
    x.exp() * norm_pdf(d_plus) * tau.sqrt()
}

/// Second volatility derivative via the vomma/vega ratio
/// `(k - x)^2 / (sigma^3 tau) - sigma tau / 4`.
pub fn bs_vomma<T: Real>(t: T, x: T, sigma: T, k: T, maturity: T) -> T {
    let tau = maturity - t;
    let ratio = (k - x) * (k - x) / (sigma * sigma * sigma * tau)
        - sigma * tau / T::of(4.0);
    bs_vega(t, x, sigma, k, maturity) * ratio
}

/// Delta in log coordinates: `Dx uBS = e^x Phi(d+)`.
pub fn bs_dx<T: Real>(t: T, x: T, sigma: T, k: T, maturity: T) -> T {
    let tau = maturity - t;
    if sigma <= T::zero() || tau <= T::zero() {
        return if x > k { x.exp() } else { T::zero() };
    }
    let srt = sigma * tau.sqrt();
    let half = T::of(0.5);
    let d_plus = ((x - k) + half * sigma * sigma * tau) / srt;
    x.exp() * norm_cdf(d_plus)
}

/// The standardized argument `z = (x - k - sigma^2 tau / 2) / (sigma sqrt(2 tau))`
/// of the Hermite reduction.
pub fn bs_z<T: Real>(t: T, x: T, sigma: T, k: T, maturity: T) -> T {
    let tau = maturity - t;
    (x - k - T::of(0.5) * sigma * sigma * tau) / (sigma * (T::of(2.0) * tau).sqrt())
}

/// The gamma-like factor `(Dx^2 - Dx) uBS = e^(k - z^2) / (sigma sqrt(2 pi tau))`
/// that every expansion term is a Hermite multiple of.
pub fn bs_gamma_factor<T: Real>(t: T, x: T, sigma: T, k: T, maturity: T) -> T {
    let tau = maturity - t;
    let z = bs_z(t, x, sigma, k, maturity);
    (k - z * z).exp() / (sigma * (T::TAU() * tau).sqrt())
}
