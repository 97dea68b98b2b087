//! Indifference pricing for bounded claims on the non-traded factor: the
//! distortion transform, the nested linear Cauchy-problem expansion
//! `xi_0 .. xi_m`, the log re-expansion to `psi_m`, the price
//! `ubar_m = (etabar_m - psibar_m) / (gamma nu)`, and an empirical
//! convergence-order probe against the 1-D finite-difference oracle.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::model::{taylor_table, Grouped, LsvModel, TaylorTable};
use crate::num::{hermite_prob, norm_cdf, norm_pdf, Real};
use crate::oracles;
use crate::weyl::{self, TimeSlot, WeylElement};

/// Maximum derivative order of `xi_0` the second-order operators can load.
const MAX_Y_DERIV: usize = 6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PayoffKind<T> {
    CallSpread { k1: T, k2: T },
    Custom,
}

/// A bounded payoff of the factor value.
#[derive(Clone)]
pub struct PayoffY<T> {
    pub evaluator: Arc<dyn Fn(T) -> T + Send + Sync>,
    pub kind: PayoffKind<T>,
    /// Known sup-norm (`k2 - k1` for call spreads, caller-declared
    /// otherwise). Unbounded payoffs give expected utility of minus
    /// infinity and are rejected.
    pub bound: T,
}

impl<T: Real> PayoffY<T> {
    /// `(y - k1)^+ - (y - k2)^+`, bounded by `k2 - k1`.
    pub fn call_spread(k1: T, k2: T) -> Result<Self> {
        if !(k1 < k2) {
            return Err(Error::Parameter {
                name: "call_spread",
                reason: format!("need k1 < k2, got {k1} >= {k2}"),
            });
        }
        Ok(PayoffY {
            evaluator: Arc::new(move |y: T| {
                (y - k1).max(T::zero()) - (y - k2).max(T::zero())
            }),
            kind: PayoffKind::CallSpread { k1, k2 },
            bound: k2 - k1,
        })
    }

    pub fn custom(evaluator: Arc<dyn Fn(T) -> T + Send + Sync>, bound: T) -> Result<Self> {
        if !bound.is_finite() {
            return Err(Error::UnboundedPayoff);
        }
        Ok(PayoffY { evaluator, kind: PayoffKind::Custom, bound })
    }

    pub fn eval(&self, y: T) -> T {
        (self.evaluator)(y)
    }
}

/// The distorted terminal function `theta(y) = exp(-gamma nu (1-rho^2) phi(y))`.
#[derive(Clone)]
pub enum DistortedTerminal<T> {
    /// `gamma nu = 0`
    One,
    /// Piecewise `exp(alpha + beta y)` with breakpoints at the spread
    /// strikes; closed-form Gaussian convolutions apply.
    CallSpread { k1: T, k2: T, c: T },
    Custom { f: Arc<dyn Fn(T) -> T + Send + Sync> },
}

impl<T: Real> DistortedTerminal<T> {
    pub fn eval(&self, y: T) -> T {
        match self {
            DistortedTerminal::One => T::one(),
            DistortedTerminal::CallSpread { k1, k2, c } => {
                let phi = (y - *k1).max(T::zero()) - (y - *k2).max(T::zero());
                (-*c * phi).exp()
            }
            DistortedTerminal::Custom { f } => f(y),
        }
    }
}

/// Builds `theta(y, nu) = exp(-gamma nu (1-rho^2) phi(y))`; bounded and
/// positive, identically 1 at `gamma nu = 0`. The transform degenerates at
/// `rho^2 = 1`.
pub fn distorted_terminal<T: Real>(
    payoff: &PayoffY<T>,
    gamma_nu: T,
    rho: T,
) -> Result<DistortedTerminal<T>> {
    if rho * rho >= T::one() {
        return Err(Error::DegenerateTransform);
    }
    if gamma_nu == T::zero() {
        return Ok(DistortedTerminal::One);
    }
    let c = gamma_nu * (T::one() - rho * rho);
    match payoff.kind {
        PayoffKind::CallSpread { k1, k2 } => Ok(DistortedTerminal::CallSpread { k1, k2, c }),
        PayoffKind::Custom => {
            let ev = payoff.evaluator.clone();
            Ok(DistortedTerminal::Custom { f: Arc::new(move |y: T| (-c * ev(y)).exp()) })
        }
    }
}

/// Evaluates the Gaussian convolution `G(y) = (P0 theta)(y)` of the
/// zeroth-order y-marginal kernel (drift `f0`, variance rate `2 b0`) and its
/// y-derivatives up to order six.
pub(crate) struct ThetaConvolution<T> {
    theta: DistortedTerminal<T>,
    /// kernel mean offset `f0 tau`
    mean_shift: T,
    /// kernel variance `2 b0 tau`
    variance: T,
}

impl<T: Real> ThetaConvolution<T> {
    /// `d^j/dy^j (P0 theta)(y)`.
    pub(crate) fn deriv(&self, j: usize, y: T) -> T {
        debug_assert!(j <= MAX_Y_DERIV + 2);
        match &self.theta {
            DistortedTerminal::One => {
                if j == 0 {
                    T::one()
                } else {
                    T::zero()
                }
            }
            DistortedTerminal::CallSpread { k1, k2, c } => {
                // theta is exp(alpha + beta z) on three intervals:
                let pieces: [(T, T, T, T); 3] = [
                    (T::neg_infinity(), *k1, T::zero(), T::zero()),
                    (*k1, *k2, *c * *k1, -*c),
                    (*k2, T::infinity(), -*c * (*k2 - *k1), T::zero()),
                ];
                let m = y + self.mean_shift;
                let sv = self.variance.sqrt();
                let mut acc = T::zero();
                for (lo, hi, alpha, beta) in pieces {
                    acc = acc + piece_integral(j, m, sv, lo, hi, alpha, beta);
                }
                acc / sv.powi(j as i32)
            }
            DistortedTerminal::Custom { f } => {
                // Differentiate under the integral: the j-th y-derivative of
                // the Gaussian kernel is He_j(w) / v^(j/2) times the kernel.
                let m = y + self.mean_shift;
                let sv = self.variance.sqrt();
                let n = 4096usize;
                let lo = m - T::of(8.0) * sv;
                let hi = m + T::of(8.0) * sv;
                let h = (hi - lo) / T::from_int(n);
                let integrand = |z: T| {
                    let w = (z - m) / sv;
                    f(z) * hermite_prob(j, w) * norm_pdf(w) / sv
                };
                let mut acc = T::of(0.5) * (integrand(lo) + integrand(hi));
                for i in 1..n {
                    acc = acc + integrand(lo + h * T::from_int(i));
                }
                acc * h / sv.powi(j as i32)
            }
        }
    }
}

/// Exact integral of `exp(alpha + beta z) He_j((z - m)/sv)` against the
/// `N(m, sv^2)` density over `[lo, hi]` (the `sv^-j` prefactor is applied by
/// the caller).
fn piece_integral<T: Real>(j: usize, m: T, sv: T, lo: T, hi: T, alpha: T, beta: T) -> T {
    let delta = beta * sv;
    let shift = alpha + beta * m + T::of(0.5) * delta * delta;
    let wl = standardized(lo, m, sv) - delta;
    let wr = standardized(hi, m, sv) - delta;
    let mut acc = T::zero();
    let mut binom = T::one();
    for i in 0..=j {
        // C(j, i) delta^(j-i) * integral of He_i(s) phi(s) over [wl, wr]
        let integral = if i == 0 {
            norm_cdf(wr) - norm_cdf(wl)
        } else {
            hermite_weighted_tail(i - 1, wl) - hermite_weighted_tail(i - 1, wr)
        };
        acc = acc + binom * delta.powi((j - i) as i32) * integral;
        binom = binom * T::from_int(j - i) / T::from_int(i + 1);
    }
    shift.exp() * acc
}

fn standardized<T: Real>(z: T, m: T, sv: T) -> T {
    if z == T::infinity() {
        T::infinity()
    } else if z == T::neg_infinity() {
        T::neg_infinity()
    } else {
        (z - m) / sv
    }
}

/// `He_n(s) phi(s)`, zero at infinite argument.
fn hermite_weighted_tail<T: Real>(n: usize, s: T) -> T {
    if !s.is_finite() {
        return T::zero();
    }
    hermite_prob(n, s) * norm_pdf(s)
}

/// The expansion terms `xi_0(t, y) .. xi_m(t, y)` of the distorted value,
/// evaluable at any factor level, plus the parallel `gamma nu = 0` pipeline
/// that produces the `eta` terms.
pub struct XiExpansion<T> {
    table: TaylorTable<T>,
    pub order: usize,
    pub tau: T,
    pub theta: DistortedTerminal<T>,
    pub(crate) conv: ThetaConvolution<T>,
    conv_eta: ThetaConvolution<T>,
    /// time-integrated operators L'_1, L'_2
    ops: Vec<WeylElement<T>>,
}

/// Builds the nested Cauchy-problem expansion for y-only coefficient tables:
/// `xi_0 = exp(-tau (1-rho^2) h0) P0 theta` and `xi_m = L'_m xi_0` with the
/// distorted operators `G'_i = G_i - (1-rho^2) h_i`.
pub fn xi_expansion<T: Real>(
    taylor1d: &TaylorTable<T>,
    theta: DistortedTerminal<T>,
    t: T,
    maturity: T,
    order: usize,
) -> Result<XiExpansion<T>> {
    if order > 2 {
        return Err(Error::Order(order));
    }
    for which in Grouped::ALL {
        let c = taylor1d.coeff(which);
        if c.c10 != T::zero() || c.c20 != T::zero() || c.c11 != T::zero() {
            return Err(Error::Parameter {
                name: which.name(),
                reason: "the non-traded branch needs y-only coefficients".into(),
            });
        }
    }
    if !(taylor1d.b.c00 > T::zero()) {
        return Err(Error::Parameter {
            name: "b_00",
            reason: "factor diffusion must be elliptic (b0 > 0) for the Cauchy expansion".into(),
        });
    }
    let tau = maturity - t;
    if !(tau > T::zero()) {
        return Err(Error::Parameter { name: "tau", reason: "need maturity > t".into() });
    }
    let g1 = weyl::g_prime_operator(1, taylor1d, TimeSlot::First)?;
    let mut ops = Vec::new();
    if order >= 1 {
        ops.push(g1.time_integral_depth1()?);
    }
    if order >= 2 {
        let g2 = weyl::g_prime_operator(2, taylor1d, TimeSlot::First)?;
        let g1_second = weyl::g_prime_operator(1, taylor1d, TimeSlot::Second)?;
        ops.push(
            g2.time_integral_depth1()?
                .add(&g1.compose(&g1_second)?.time_integral_depth2()?),
        );
    }
    let mean_shift = taylor1d.f.c00 * tau;
    let variance = T::of(2.0) * taylor1d.b.c00 * tau;
    Ok(XiExpansion {
        table: *taylor1d,
        order,
        tau,
        conv: ThetaConvolution { theta: theta.clone(), mean_shift, variance },
        conv_eta: ThetaConvolution { theta: DistortedTerminal::One, mean_shift, variance },
        theta,
        ops,
    })
}

impl<T: Real> XiExpansion<T> {
    pub(crate) fn xi0_prefactor(&self) -> T {
        (-self.tau * self.table.one_minus_rho_sq() * self.table.h.c00).exp()
    }

    fn term_with(&self, conv: &ThetaConvolution<T>, i: usize, y: T) -> Result<T> {
        let pref = self.xi0_prefactor();
        if i == 0 {
            return Ok(pref * conv.deriv(0, y));
        }
        let dy = y - self.table.ybar;
        self.ops[i - 1].apply(self.tau, T::zero(), dy, |ix, jy| {
            if ix > 0 {
                T::zero()
            } else {
                pref * conv.deriv(jy, y)
            }
        })
    }

    /// `xi_i(t, y)` of the distorted (theta) pipeline.
    pub fn xi(&self, i: usize, y: T) -> Result<T> {
        self.term_with(&self.conv, i, y)
    }

    /// `xi_i(t, y)` of the `gamma nu = 0` pipeline (theta = 1).
    pub fn xi_eta(&self, i: usize, y: T) -> Result<T> {
        self.term_with(&self.conv_eta, i, y)
    }

    /// Cumulative `xibar_m(y)`.
    pub fn xibar(&self, m: usize, y: T) -> Result<T> {
        let mut acc = T::zero();
        for i in 0..=m.min(self.order) {
            acc = acc + self.xi(i, y)?;
        }
        Ok(acc)
    }
}

/// The log re-expansion at one factor level: `psi_i`, the matching
/// `eta_i = psi_i` at `gamma nu = 0`, and the cumulative sums.
#[derive(Clone, Debug, PartialEq)]
pub struct PsiExpansion<T> {
    pub psi: Vec<T>,
    pub eta: Vec<T>,
    pub order: usize,
}

impl<T: Real> PsiExpansion<T> {
    pub fn psibar(&self, m: usize) -> T {
        self.psi[..=m.min(self.order)].iter().fold(T::zero(), |a, v| a + *v)
    }

    pub fn etabar(&self, m: usize) -> T {
        self.eta[..=m.min(self.order)].iter().fold(T::zero(), |a, v| a + *v)
    }

    /// `ubar_m = (etabar_m - psibar_m) / (gamma nu)`.
    pub fn ubar(&self, m: usize, gamma_nu: T) -> Result<T> {
        if gamma_nu == T::zero() {
            return Err(Error::ZeroGammaNu);
        }
        Ok((self.etabar(m) - self.psibar(m)) / gamma_nu)
    }
}

/// Translates the `xi` expansion into `psi` terms by expanding the
/// logarithm: `psi_0 = log(xi_0)/(1-rho^2)`, `psi_1 = xi_1/xi_0 / (1-rho^2)`,
/// `psi_2 = (xi_2/xi_0 - (xi_1/xi_0)^2 / 2) / (1-rho^2)`.
pub fn psi_expansion<T: Real>(xi: &XiExpansion<T>, y: T) -> Result<PsiExpansion<T>> {
    let inv = xi.table.one_minus_rho_sq().recip();
    let build = |theta_pipeline: bool| -> Result<Vec<T>> {
        let term = |i: usize| if theta_pipeline { xi.xi(i, y) } else { xi.xi_eta(i, y) };
        let xi0 = term(0)?;
        if !(xi0 > T::zero()) {
            return Err(Error::NonPositiveXi { y: y.as_f64(), xi0: xi0.as_f64() });
        }
        let mut out = vec![inv * xi0.ln()];
        if xi.order >= 1 {
            let r1 = term(1)? / xi0;
            out.push(inv * r1);
            if xi.order >= 2 {
                let r2 = term(2)? / xi0;
                out.push(inv * (r2 - T::of(0.5) * r1 * r1));
            }
        }
        Ok(out)
    };
    Ok(PsiExpansion { psi: build(true)?, eta: build(false)?, order: xi.order })
}

/// The m-th order indifference price of a bounded claim on the factor, at
/// `(t, y)` with the expansion point `ybar = y`.
pub fn nontraded_price<T: Real>(
    model: &LsvModel<T>,
    payoff: &PayoffY<T>,
    gamma_nu: T,
    t: T,
    y: T,
    maturity: T,
    order: usize,
) -> Result<T> {
    if gamma_nu == T::zero() {
        return Err(Error::ZeroGammaNu);
    }
    let table = taylor_table(model, T::zero(), y, 2)?;
    let theta = distorted_terminal(payoff, gamma_nu, model.rho())?;
    let xi = xi_expansion(&table, theta, t, maturity, order)?;
    let psi = psi_expansion(&xi, y)?;
    psi.ubar(order, gamma_nu)
}

/// Result of the empirical convergence-order probe.
#[derive(Clone, Debug)]
pub struct ProbeReport<T> {
    /// Least-squares slope of `log sup_y |u - ubar_m|` against `log tau`.
    pub slope: T,
    pub errors: Vec<(T, T)>,
    /// Set when the oracle's own error estimate is not comfortably below the
    /// measured expansion error, so the slope may be polluted.
    pub oracle_limited: bool,
}

/// Measures the convergence rate of `ubar_m` toward the exact (1-D
/// finite-difference) indifference price as `tau` shrinks. The oracle grid
/// is refined until its Richardson estimate falls below 10% of the measured
/// error, so the fit is not polluted by oracle truncation.
pub fn convergence_order_probe<T: Real>(
    model: &LsvModel<T>,
    payoff: &PayoffY<T>,
    gamma_nu: T,
    y_grid: &[T],
    taus: &[T],
    order: usize,
) -> Result<ProbeReport<T>> {
    if taus.len() < 4 {
        return Err(Error::Parameter { name: "taus", reason: "need at least 4 points".into() });
    }
    if gamma_nu == T::zero() {
        return Err(Error::ZeroGammaNu);
    }
    let mut errors: Vec<(T, T)> = Vec::new();
    let mut oracle_limited = false;
    for &tau in taus {
        let mut ny = 800usize;
        let (sup_err, limited) = loop {
            let (sup_err, oracle_est) =
                probe_sup_error(model, payoff, gamma_nu, y_grid, tau, order, ny)?;
            let refine = oracle_est > T::of(0.1) * sup_err;
            if refine && ny < 25600 {
                ny *= 2;
                continue;
            }
            break (sup_err, refine);
        };
        oracle_limited |= limited;
        errors.push((tau, sup_err));
    }
    let slope = fit_slope(&errors);
    Ok(ProbeReport { slope, errors, oracle_limited })
}

fn probe_sup_error<T: Real>(
    model: &LsvModel<T>,
    payoff: &PayoffY<T>,
    gamma_nu: T,
    y_grid: &[T],
    tau: T,
    order: usize,
    ny: usize,
) -> Result<(T, T)> {
    let exact = oracles::nontraded_exact_fd(model, payoff, gamma_nu, tau, y_grid, ny)?;
    let mut sup = T::zero();
    for (&y, &u_exact) in y_grid.iter().zip(&exact.values) {
        let table = taylor_table(model, T::zero(), y, 2)?;
        let theta = distorted_terminal(payoff, gamma_nu, model.rho())?;
        let xi = xi_expansion(&table, theta, T::zero(), tau, order)?;
        let psi = psi_expansion(&xi, y)?;
        let err = (psi.ubar(order, gamma_nu)? - u_exact).abs();
        if err > sup {
            sup = err;
        }
    }
    Ok((sup, exact.richardson))
}

fn fit_slope<T: Real>(errors: &[(T, T)]) -> T {
    let n = T::from_int(errors.len());
    let (mut sx, mut sy, mut sxx, mut sxy) = (T::zero(), T::zero(), T::zero(), T::zero());
    for &(tau, err) in errors {
        let x = tau.ln();
        let y = err.max(T::of(1e-300)).ln();
        sx = sx + x;
        sy = sy + y;
        sxx = sxx + x * x;
        sxy = sxy + x * y;
    }
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}
