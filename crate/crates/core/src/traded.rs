//! Second-order indifference-price expansion for call payoffs on the traded
//! asset: the certainty-equivalent terms `eta_0, eta_1, eta_2`, the price
//! terms `u_0, u_1, u_2 = u_2^lin + u_2^ind`, and their cumulative sums.

use crate::black_scholes::{bs_call, bs_dx, bs_gamma_factor, bs_vega, bs_z};
use crate::error::{Error, Result};
use crate::model::TaylorTable;
use crate::num::Real;
use crate::quad;
use crate::weyl::{self, hermite_ratio, TimeSlot, WeylElement};

/// A European call: log-strike and the valuation/maturity times.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CallSpec<T> {
    pub k: T,
    pub t: T,
    pub maturity: T,
}

impl<T: Real> CallSpec<T> {
    pub fn new(k: T, t: T, maturity: T) -> Result<Self> {
        if !(maturity > t) || !k.is_finite() {
            return Err(Error::Parameter {
                name: "call",
                reason: format!("need finite k and maturity > t; got k={k}, t={t}, T={maturity}"),
            });
        }
        Ok(CallSpec { k, t, maturity })
    }

    pub fn tau(&self) -> T {
        self.maturity - self.t
    }
}

/// Position and state: `gamma_nu` is risk aversion times the number of
/// claims; positive for a buyer, negative for a seller. `gamma_nu = 0` is
/// the linear-pricing limit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IndifferenceSetting<T> {
    pub gamma_nu: T,
    pub x: T,
    pub y: T,
}

impl<T: Real> IndifferenceSetting<T> {
    pub fn buyer(gamma_nu: T, x: T, y: T) -> Self {
        IndifferenceSetting { gamma_nu: gamma_nu.abs(), x, y }
    }

    pub fn seller(gamma_nu: T, x: T, y: T) -> Self {
        IndifferenceSetting { gamma_nu: -gamma_nu.abs(), x, y }
    }
}

/// The certainty-equivalent expansion terms at `(t, x, y)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EtaExpansion<T> {
    pub eta0: T,
    pub eta1: T,
    pub eta2: T,
}

impl<T: Real> EtaExpansion<T> {
    pub fn etabar(&self, m: usize) -> T {
        match m {
            0 => self.eta0,
            1 => self.eta0 + self.eta1,
            _ => self.eta0 + self.eta1 + self.eta2,
        }
    }
}

/// Price expansion terms for one call. `u2_ind_cross` is the
/// position-independent part of the nonlinear correction (the `eta`-`u`
/// cross term); `u2_ind_gamma` carries the `gamma nu` sign and generates the
/// bid-ask spread.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PriceExpansion<T> {
    pub u0: T,
    pub u1: T,
    pub u2_lin: T,
    pub u2_ind_cross: T,
    pub u2_ind_gamma: T,
    /// Error bound of the quadrature piece, on the price scale.
    pub quad_error: T,
    // context the implied-vol recursion needs
    pub x: T,
    pub k: T,
    pub t: T,
    pub maturity: T,
    pub sigma0: T,
    pub gamma_nu: T,
}

impl<T: Real> PriceExpansion<T> {
    pub fn u2_ind(&self) -> T {
        self.u2_ind_cross + self.u2_ind_gamma
    }

    pub fn u2(&self) -> T {
        self.u2_lin + self.u2_ind()
    }

    pub fn ubar(&self, m: usize) -> T {
        match m {
            0 => self.u0,
            1 => self.u0 + self.u1,
            _ => self.u0 + self.u1 + self.u2(),
        }
    }

    /// Cumulative linear price `qbar_2 = u0 + u1 + u2_lin` (the minimal
    /// martingale measure price approximation; no position dependence).
    pub fn qbar2(&self) -> T {
        self.u0 + self.u1 + self.u2_lin
    }

    pub fn tau(&self) -> T {
        self.maturity - self.t
    }
}

/// Rewrites a pure-`Dx` derivative profile `sum_i d[i] Dx^i` in the basis
/// `sum_n c[n] Dx^n (Dx^2 - Dx) + e1 Dx + e0`. The conversion is triangular
/// and exact; for the expansion operators `e0` and `e1` vanish identically.
fn gamma_basis<T: Real>(d: &[T]) -> (Vec<T>, T, T) {
    let n = d.len();
    if n <= 2 {
        let e0 = d.first().copied().unwrap_or_else(T::zero);
        let e1 = d.get(1).copied().unwrap_or_else(T::zero);
        return (Vec::new(), e1, e0);
    }
    let mut c = vec![T::zero(); n - 2];
    c[n - 3] = d[n - 1];
    // d has indices 0..n-1; highest order n-1 maps to c[n-3].
    let mut i = n - 2;
    while i >= 2 {
        c[i - 2] = d[i] + c[i - 1];
        i -= 1;
    }
    let e1 = d[1] + c[0];
    let e0 = d[0];
    (c, e1, e0)
}

/// Applies a time-integrated operator to the Black-Scholes call price at
/// offsets `(dx, dy)` from the expansion point, reducing every
/// `Dx^n (Dx^2 - Dx)` load through the Hermite ratio.
fn apply_to_call<T: Real>(
    op: &WeylElement<T>,
    sigma0: T,
    spec: &CallSpec<T>,
    x: T,
    dx: T,
    dy: T,
) -> Result<T> {
    let tau = spec.tau();
    let profile = op.x_derivative_profile(tau, dx, dy)?;
    if profile.is_empty() {
        return Ok(T::zero());
    }
    let (c, e1, e0) = gamma_basis(&profile);
    let z = bs_z(spec.t, x, sigma0, spec.k, spec.maturity);
    let gamma = bs_gamma_factor(spec.t, x, sigma0, spec.k, spec.maturity);
    let mut acc = T::zero();
    for (n, cn) in c.iter().enumerate() {
        if *cn != T::zero() {
            acc = acc + *cn * hermite_ratio(n, z, sigma0, tau) * gamma;
        }
    }
    if e1 != T::zero() {
        acc = acc + e1 * bs_dx(spec.t, x, sigma0, spec.k, spec.maturity);
    }
    if e0 != T::zero() {
        acc = acc + e0 * bs_call(spec.t, x, sigma0, spec.k, spec.maturity);
    }
    Ok(acc)
}

/// The shared quadrature kernel of the position-dependent indifference term:
///
/// ```text
/// I = int_0^tau (tau - v)^(3/2) / sqrt(tau + v)
///       * exp(M^2 / (2 sigma0^2 tau) - M^2 / (sigma0^2 (tau + v))) dv
/// ```
///
/// with `M = (k - x) + sigma0^2 tau / 2`. The leading exponential of the
/// printed formula is folded into the integrand, which keeps the exponent
/// nonpositive for all `v` in `[0, tau]`. Both the price term and the
/// implied-vol term divide out of this one integral, so
/// `Sigma_2^ind = u_2^ind / vega` holds exactly by construction.
pub(crate) fn ind_kernel_integral<T: Real>(sigma0: T, tau: T, m_shift: T, tol: T) -> Result<(T, T)> {
    let s2 = sigma0 * sigma0;
    let half = T::of(0.5);
    let m2 = m_shift * m_shift;
    quad::integrate(
        |v: T| {
            (tau - v).max(T::zero()).powf(T::of(1.5)) / (tau + v).sqrt()
                * (m2 * (half / (s2 * tau) - (s2 * (tau + v)).recip())).exp()
        },
        T::zero(),
        tau,
        tol,
    )
}

/// Both pieces of the position-dependent implied-vol correction
/// `Sigma_2^ind` (cross term, gamma-nu term) plus the quadrature error on
/// the vol scale. Shared by the price and implied-vol paths.
pub(crate) fn sigma2_ind_pieces<T: Real>(
    table: &TaylorTable<T>,
    spec: &CallSpec<T>,
    x: T,
    gamma_nu: T,
) -> Result<(T, T, T)> {
    let tau = spec.tau();
    let sigma0 = table.sigma0();
    let one_m_rho2 = table.one_minus_rho_sq();
    let b0 = table.b.c00;
    let a01 = table.a.c01;
    let h01 = table.h.c01;
    // first piece: (1 - rho^2) b0 * (-2 h01 a01 tau^2) / (3 sigma0)
    let cross = one_m_rho2 * b0 * (-T::of(2.0) * h01 * a01 * tau * tau) / (T::of(3.0) * sigma0);
    // second piece: sign of -gamma_nu; exactly zero when the prefactor is.
    let pref = gamma_nu * one_m_rho2 * b0 * a01 * a01;
    if pref == T::zero() {
        return Ok((cross, T::zero(), T::zero()));
    }
    let m_shift = (spec.k - x) + T::of(0.5) * sigma0 * sigma0 * tau;
    let scale = pref / (sigma0 * sigma0 * T::TAU().sqrt()) * spec.k.exp() / tau.sqrt();
    // absolute tolerance 1e-12 of the option price scale, translated to the
    // integral through the prefactor
    let price_scale = x.exp().max(spec.k.exp());
    let vega = bs_vega(spec.t, x, sigma0, spec.k, spec.maturity);
    let tol_i = (T::of(1e-12) * price_scale / (scale.abs() * vega).max(T::of(1e-300)))
        .min(T::of(1e-13) * tau);
    let (integral, err) = ind_kernel_integral(sigma0, tau, m_shift, tol_i)?;
    Ok((cross, -scale * integral, scale.abs() * err))
}

/// The expansion terms `u_0 = uBS(sigma0)`, `u_1`, `u_2 = u_2^lin + u_2^ind`
/// for a call, evaluated at `(t, setting.x, setting.y)` with the expansion
/// point taken from the table.
pub fn u_terms<T: Real>(
    table: &TaylorTable<T>,
    spec: &CallSpec<T>,
    setting: &IndifferenceSetting<T>,
) -> Result<PriceExpansion<T>> {
    let sigma0 = table.sigma0();
    let (x, dx, dy) = (setting.x, setting.x - table.xbar, setting.y - table.ybar);
    let u0 = bs_call(spec.t, x, sigma0, spec.k, spec.maturity);

    let g1_first = weyl::g_operator(1, table, TimeSlot::First)?;
    let o1 = g1_first.time_integral_depth1()?;
    let u1 = apply_to_call(&o1, sigma0, spec, x, dx, dy)?;

    let g2 = weyl::g_operator(2, table, TimeSlot::First)?;
    let g1_second = weyl::g_operator(1, table, TimeSlot::Second)?;
    let o2 = g2
        .time_integral_depth1()?
        .add(&g1_first.compose(&g1_second)?.time_integral_depth2()?);
    let u2_lin = apply_to_call(&o2, sigma0, spec, x, dx, dy)?;

    // Cross piece of u_2^ind:
    //   2 (1-rho^2) b0 * int int (dy eta_1)(t1) * (Dy . G_1)(t, t2) uBS,
    // with dy eta_1(t1) = -h01 (tau - dt1), a scalar polynomial in t1.
    let h01 = table.h.c01;
    let dy_eta1 = WeylElement::monomial_tau(-h01, 1, 0, 0, 0, 0)
        .add(&WeylElement::monomial_in_slot(h01, TimeSlot::First, 1, 0, 0, 0, 0));
    let cross_op = dy_eta1
        .compose(&WeylElement::dy().compose(&g1_second)?)?
        .time_integral_depth2()?
        .scale(T::of(2.0) * table.one_minus_rho_sq() * table.b.c00);
    let u2_ind_cross = apply_to_call(&cross_op, sigma0, spec, x, dx, dy)?;

    let (_, sigma_ind_gamma, sigma_err) = sigma2_ind_pieces(table, spec, x, setting.gamma_nu)?;
    let vega = bs_vega(spec.t, x, sigma0, spec.k, spec.maturity);

    Ok(PriceExpansion {
        u0,
        u1,
        u2_lin,
        u2_ind_cross,
        u2_ind_gamma: sigma_ind_gamma * vega,
        quad_error: sigma_err * vega,
        x,
        k: spec.k,
        t: spec.t,
        maturity: spec.maturity,
        sigma0,
        gamma_nu: setting.gamma_nu,
    })
}

/// The certainty-equivalent terms at `(t, x, y)`:
/// `eta_0 = -tau h_00`, the closed-form `eta_1`, and `eta_2` assembled from
/// the operator-engine time integrals plus the closed cubic term.
pub fn eta_terms<T: Real>(
    table: &TaylorTable<T>,
    t: T,
    x: T,
    y: T,
    maturity: T,
) -> Result<EtaExpansion<T>> {
    let tau = maturity - t;
    let (dx, dy) = (x - table.xbar, y - table.ybar);
    let half = T::of(0.5);
    let eta0 = -tau * table.h.c00;
    let eta1 = -table.h.c10 * (tau * dx - half * tau * tau * table.a.c00)
        - table.h.c01 * (tau * dy + half * tau * tau * table.f.c00);

    // eta_2 = -int int G_1(t,t1) h_1(X(t,t2), Y(t,t2)) 1
    //         -int h_2(X(t,t1), Y(t,t1)) 1
    //         + tau^3/3 (1-rho^2) b0 h01^2
    let g1 = weyl::g_operator(1, table, TimeSlot::First)?;
    let h1 = weyl::coeff_poly_in_shifts(table, crate::model::Grouped::H, 1, TimeSlot::Second)?;
    let term1 = g1.compose(&h1)?.time_integral_depth2()?;
    let h2 = weyl::coeff_poly_in_shifts(table, crate::model::Grouped::H, 2, TimeSlot::First)?;
    let term2 = h2.time_integral_depth1()?;
    let cubic = tau * tau * tau / T::of(3.0)
        * table.one_minus_rho_sq()
        * table.b.c00
        * table.h.c01
        * table.h.c01;
    let eta2 = -term1.apply_to_one(tau, dx, dy)? - term2.apply_to_one(tau, dx, dy)? + cubic;

    Ok(EtaExpansion { eta0, eta1, eta2 })
}

/// Closed form `dy u_1(t1) = (T - t1) a_01 (Dx^2 - Dx) uBS(t1, x; sigma0)`,
/// used by the `u_2^ind` assembly and exposed for tests.
pub fn y_derivative_of_u1<T: Real>(table: &TaylorTable<T>, spec: &CallSpec<T>, t1: T, x: T) -> T {
    if t1 >= spec.maturity {
        return T::zero();
    }
    let sigma0 = table.sigma0();
    (spec.maturity - t1) * table.a.c01 * bs_gamma_factor(t1, x, sigma0, spec.k, spec.maturity)
}
