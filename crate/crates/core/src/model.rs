//! Local-stochastic volatility model definitions, grouped-coefficient
//! evaluation and Taylor tables at an expansion point.
//!
//! A model is the coefficient quadruple `(mu, sigma, c, beta)` plus the
//! correlation `rho`:
//!
//! ```text
//! dX = (mu - sigma^2/2) dt + sigma dW1
//! dY = c dt + beta (rho dW1 + sqrt(1-rho^2) dW2)
//! ```
//!
//! All pricing machinery consumes the grouped coefficients
//!
//! ```text
//! a = sigma^2/2,  b = beta^2/2,  f = c - rho beta lambda,
//! g = rho sigma beta,  h = lambda^2/2,   lambda = mu / sigma,
//! ```
//! and their Taylor coefficients at an expansion point `(xbar, ybar)`.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::num::Real;

pub type CoeffFn<T> = Arc<dyn Fn(T, T) -> T + Send + Sync>;

/// Which grouped coefficient a derivative query refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Grouped {
    A,
    B,
    F,
    G,
    H,
}

impl Grouped {
    pub const ALL: [Grouped; 5] = [Grouped::A, Grouped::B, Grouped::F, Grouped::G, Grouped::H];

    pub fn name(self) -> &'static str {
        match self {
            Grouped::A => "a",
            Grouped::B => "b",
            Grouped::F => "f",
            Grouped::G => "g",
            Grouped::H => "h",
        }
    }
}

/// Analytic derivative bundle: raw partial derivative
/// `d^ix/dx^ix d^iy/dy^iy chi(x, y)` of a grouped coefficient, or `None` to
/// fall back to central differences for that coefficient.
pub type GroupedDerivFn<T> = Arc<dyn Fn(Grouped, usize, usize, T, T) -> Option<T> + Send + Sync>;

/// Rectangular validity box; evaluations outside raise rather than
/// extrapolate (square-root coefficients are undefined for y < 0).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DomainBox<T> {
    pub x_min: T,
    pub x_max: T,
    pub y_min: T,
    pub y_max: T,
}

impl<T: Real> DomainBox<T> {
    pub fn new(x_min: T, x_max: T, y_min: T, y_max: T) -> Self {
        DomainBox { x_min, x_max, y_min, y_max }
    }

    /// Unbounded in x, positive y; the default for square-root-in-y models.
    pub fn positive_y() -> Self {
        DomainBox {
            x_min: T::of(-1e10),
            x_max: T::of(1e10),
            y_min: T::of(1e-12),
            y_max: T::of(1e10),
        }
    }

    pub fn contains(&self, x: T, y: T) -> bool {
        x >= self.x_min && x <= self.x_max && y >= self.y_min && y <= self.y_max
    }

    fn check(&self, x: T, y: T) -> Result<()> {
        if self.contains(x, y) {
            Ok(())
        } else {
            Err(Error::OutsideDomain {
                x: x.as_f64(),
                y: y.as_f64(),
                x_min: self.x_min.as_f64(),
                x_max: self.x_max.as_f64(),
                y_min: self.y_min.as_f64(),
                y_max: self.y_max.as_f64(),
            })
        }
    }
}

/// Sharpe ratio specification for the builtin models.
#[derive(Clone)]
pub enum SharpeRatio<T> {
    Constant(T),
    /// `lambda(y) = intercept + slope * y`
    AffineInY { intercept: T, slope: T },
    Custom(CoeffFn<T>),
}

impl<T: Real> SharpeRatio<T> {
    pub fn eval(&self, x: T, y: T) -> T {
        match self {
            SharpeRatio::Constant(l) => *l,
            SharpeRatio::AffineInY { intercept, slope } => *intercept + *slope * y,
            SharpeRatio::Custom(f) => f(x, y),
        }
    }
}

/// A local-stochastic volatility model. Immutable after construction; all
/// evaluation is pure, so values are safe to share across threads.
#[derive(Clone)]
pub struct LsvModel<T> {
    mu: CoeffFn<T>,
    sigma: CoeffFn<T>,
    c: CoeffFn<T>,
    beta: CoeffFn<T>,
    rho: T,
    domain: DomainBox<T>,
    analytic: Option<GroupedDerivFn<T>>,
}

/// Grouped coefficients evaluated at a point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GroupedCoeffs<T> {
    pub a: T,
    pub b: T,
    pub f: T,
    pub g: T,
    pub h: T,
}

impl<T: Real> LsvModel<T> {
    pub fn from_parts(
        mu: CoeffFn<T>,
        sigma: CoeffFn<T>,
        c: CoeffFn<T>,
        beta: CoeffFn<T>,
        rho: T,
        domain: DomainBox<T>,
    ) -> Result<Self> {
        if !(rho >= -T::one() && rho <= T::one()) {
            return Err(Error::Parameter { name: "rho", reason: format!("{} not in [-1, 1]", rho) });
        }
        Ok(LsvModel { mu, sigma, c, beta, rho, domain, analytic: None })
    }

    pub fn with_analytic(mut self, derivs: GroupedDerivFn<T>) -> Self {
        self.analytic = Some(derivs);
        self
    }

    pub fn with_domain(mut self, domain: DomainBox<T>) -> Self {
        self.domain = domain;
        self
    }

    pub fn rho(&self) -> T {
        self.rho
    }

    pub fn domain(&self) -> &DomainBox<T> {
        &self.domain
    }

    pub fn sigma(&self, x: T, y: T) -> T {
        (self.sigma)(x, y)
    }

    pub fn beta(&self, x: T, y: T) -> T {
        (self.beta)(x, y)
    }

    pub fn mu(&self, x: T, y: T) -> T {
        (self.mu)(x, y)
    }

    pub fn c(&self, x: T, y: T) -> T {
        (self.c)(x, y)
    }

    /// Grouped coefficients at `(x, y)`; see [`grouped_coefficients`].
    pub fn grouped(&self, x: T, y: T) -> Result<GroupedCoeffs<T>> {
        self.domain.check(x, y)?;
        let sigma = (self.sigma)(x, y);
        if !(sigma > T::zero()) || !sigma.is_finite() {
            return Err(Error::Coefficient {
                name: "sigma",
                x: x.as_f64(),
                y: y.as_f64(),
                reason: format!("sigma = {} must be positive and finite", sigma),
            });
        }
        let beta = (self.beta)(x, y);
        if !beta.is_finite() {
            return Err(Error::Coefficient {
                name: "beta",
                x: x.as_f64(),
                y: y.as_f64(),
                reason: "beta not finite".into(),
            });
        }
        let mu = (self.mu)(x, y);
        let lambda = mu / sigma;
        if !lambda.is_finite() {
            return Err(Error::Coefficient {
                name: "lambda",
                x: x.as_f64(),
                y: y.as_f64(),
                reason: format!("lambda = mu/sigma = {} not finite", lambda),
            });
        }
        let half = T::of(0.5);
        let c = (self.c)(x, y);
        Ok(GroupedCoeffs {
            a: half * sigma * sigma,
            b: half * beta * beta,
            f: c - self.rho * beta * lambda,
            g: self.rho * sigma * beta,
            h: half * lambda * lambda,
        })
    }

    fn grouped_one(&self, which: Grouped, x: T, y: T) -> Result<T> {
        let g = self.grouped(x, y)?;
        Ok(match which {
            Grouped::A => g.a,
            Grouped::B => g.b,
            Grouped::F => g.f,
            Grouped::G => g.g,
            Grouped::H => g.h,
        })
    }
}

/// Evaluates `a = sigma^2/2`, `b = beta^2/2`, `f = c - rho beta lambda`,
/// `g = rho sigma beta` and `h = lambda^2/2` at `(x, y)`.
pub fn grouped_coefficients<T: Real>(model: &LsvModel<T>, x: T, y: T) -> Result<GroupedCoeffs<T>> {
    model.grouped(x, y)
}

/// Taylor coefficients of one grouped coefficient up to total order 2:
/// `c_{ix iy} = d_x^ix d_y^iy chi(xbar, ybar) / (ix! iy!)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoeffTable<T> {
    pub c00: T,
    pub c10: T,
    pub c01: T,
    pub c20: T,
    pub c11: T,
    pub c02: T,
}

impl<T: Real> CoeffTable<T> {
    pub fn constant(v: T) -> Self {
        let z = T::zero();
        CoeffTable { c00: v, c10: z, c01: z, c20: z, c11: z, c02: z }
    }

    pub fn zero() -> Self {
        Self::constant(T::zero())
    }

    /// Entry `chi_{ix, iy}` (zero outside the stored range).
    pub fn entry(&self, ix: usize, iy: usize) -> T {
        match (ix, iy) {
            (0, 0) => self.c00,
            (1, 0) => self.c10,
            (0, 1) => self.c01,
            (2, 0) => self.c20,
            (1, 1) => self.c11,
            (0, 2) => self.c02,
            _ => T::zero(),
        }
    }

    /// Value of the order-2 Taylor polynomial at offsets `(dx, dy)` from the
    /// expansion point.
    pub fn eval(&self, dx: T, dy: T) -> T {
        self.c00
            + self.c10 * dx
            + self.c01 * dy
            + self.c20 * dx * dx
            + self.c11 * dx * dy
            + self.c02 * dy * dy
    }

    fn all_finite(&self) -> bool {
        [self.c00, self.c10, self.c01, self.c20, self.c11, self.c02]
            .iter()
            .all(|v| v.is_finite())
    }

    fn truncate(mut self, order: usize) -> Self {
        if order < 2 {
            self.c20 = T::zero();
            self.c11 = T::zero();
            self.c02 = T::zero();
        }
        if order < 1 {
            self.c10 = T::zero();
            self.c01 = T::zero();
        }
        self
    }
}

/// Grouped coefficients and their Taylor coefficients at `(xbar, ybar)`,
/// together with the correlation needed by the `(1 - rho^2)` factors.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TaylorTable<T> {
    pub xbar: T,
    pub ybar: T,
    pub rho: T,
    pub a: CoeffTable<T>,
    pub b: CoeffTable<T>,
    pub f: CoeffTable<T>,
    pub g: CoeffTable<T>,
    pub h: CoeffTable<T>,
}

impl<T: Real> TaylorTable<T> {
    pub fn new(
        xbar: T,
        ybar: T,
        rho: T,
        a: CoeffTable<T>,
        b: CoeffTable<T>,
        f: CoeffTable<T>,
        g: CoeffTable<T>,
        h: CoeffTable<T>,
    ) -> Result<Self> {
        let t = TaylorTable { xbar, ybar, rho, a, b, f, g, h };
        t.validate()?;
        Ok(t)
    }

    /// Constant-coefficient table (all order >= 1 entries zero).
    pub fn constant(a0: T, b0: T, f0: T, g0: T, h0: T, rho: T) -> Result<Self> {
        Self::new(
            T::zero(),
            T::zero(),
            rho,
            CoeffTable::constant(a0),
            CoeffTable::constant(b0),
            CoeffTable::constant(f0),
            CoeffTable::constant(g0),
            CoeffTable::constant(h0),
        )
    }

    fn validate(&self) -> Result<()> {
        if !(self.a.c00 > T::zero()) {
            return Err(Error::Parameter {
                name: "a_00",
                reason: format!("{} must be > 0 (ellipticity)", self.a.c00),
            });
        }
        if self.b.c00 < T::zero() {
            return Err(Error::Parameter {
                name: "b_00",
                reason: format!("{} must be >= 0", self.b.c00),
            });
        }
        if !(self.rho >= -T::one() && self.rho <= T::one()) {
            return Err(Error::Parameter { name: "rho", reason: "not in [-1, 1]".into() });
        }
        for (which, tab) in self.coeffs() {
            if !tab.all_finite() {
                return Err(Error::Parameter { name: which.name(), reason: "non-finite entry".into() });
            }
        }
        Ok(())
    }

    pub fn coeff(&self, which: Grouped) -> &CoeffTable<T> {
        match which {
            Grouped::A => &self.a,
            Grouped::B => &self.b,
            Grouped::F => &self.f,
            Grouped::G => &self.g,
            Grouped::H => &self.h,
        }
    }

    fn coeffs(&self) -> [(Grouped, &CoeffTable<T>); 5] {
        [
            (Grouped::A, &self.a),
            (Grouped::B, &self.b),
            (Grouped::F, &self.f),
            (Grouped::G, &self.g),
            (Grouped::H, &self.h),
        ]
    }

    /// Zeroth-order volatility `sigma_0 = sqrt(2 a_00)`; the single source of
    /// truth for `sigma_0` downstream.
    pub fn sigma0(&self) -> T {
        (T::of(2.0) * self.a.c00).sqrt()
    }

    pub fn one_minus_rho_sq(&self) -> T {
        T::one() - self.rho * self.rho
    }
}

/// Central-difference step per axis for first derivatives.
fn fd_step<T: Real>(v: T) -> T {
    T::of(1e-5).max(T::of(1e-5) * v.abs())
}

/// Wider step for the second-derivative stencils; the 1e-5 step loses too
/// much to roundoff in the second differences.
fn fd_step2<T: Real>(v: T) -> T {
    T::of(2e-4).max(T::of(2e-4) * v.abs())
}

/// Builds the order-`order` Taylor table of the grouped coefficients at
/// `(xbar, ybar)`. Analytic derivatives are used when the model supplies
/// them; otherwise central differences with step `max(1e-5, 1e-5 |coord|)`
/// per axis (mixed term from the four diagonal points of the 3x3 stencil).
pub fn taylor_table<T: Real>(
    model: &LsvModel<T>,
    xbar: T,
    ybar: T,
    order: usize,
) -> Result<TaylorTable<T>> {
    if order > 2 {
        return Err(Error::Order(order));
    }
    let mut tabs: Vec<CoeffTable<T>> = Vec::with_capacity(5);
    for which in Grouped::ALL {
        let analytic = |ix: usize, iy: usize| -> Option<T> {
            model.analytic.as_ref().and_then(|d| d(which, ix, iy, xbar, ybar))
        };
        let tab = if let (Some(v00), Some(v10), Some(v01), Some(v20), Some(v11), Some(v02)) = (
            analytic(0, 0),
            analytic(1, 0),
            analytic(0, 1),
            analytic(2, 0),
            analytic(1, 1),
            analytic(0, 2),
        ) {
            let half = T::of(0.5);
            CoeffTable { c00: v00, c10: v10, c01: v01, c20: half * v20, c11: v11, c02: half * v02 }
        } else {
            let hx = fd_step(xbar);
            let hy = fd_step(ybar);
            let hx2 = fd_step2(xbar);
            let hy2 = fd_step2(ybar);
            let v = |dx: T, dy: T| model.grouped_one(which, xbar + dx, ybar + dy);
            let z = T::zero();
            let two = T::of(2.0);
            let half = T::of(0.5);
            let c00 = v(z, z)?;
            let c10 = (v(hx, z)? - v(-hx, z)?) / (two * hx);
            let c01 = (v(z, hy)? - v(z, -hy)?) / (two * hy);
            let c20 = half * (v(hx2, z)? - two * c00 + v(-hx2, z)?) / (hx2 * hx2);
            let c02 = half * (v(z, hy2)? - two * c00 + v(z, -hy2)?) / (hy2 * hy2);
            let c11 = (v(hx2, hy2)? - v(hx2, -hy2)? - v(-hx2, hy2)? + v(-hx2, -hy2)?)
                / (T::of(4.0) * hx2 * hy2);
            CoeffTable { c00, c10, c01, c20, c11, c02 }
        };
        for (slot, val) in
            [(0usize, tab.c00), (1, tab.c10), (2, tab.c01), (3, tab.c20), (4, tab.c11), (5, tab.c02)]
        {
            if !val.is_finite() {
                let (ix, iy) = [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)][slot];
                return Err(Error::NonFiniteDerivative { name: which.name(), ix, iy });
            }
        }
        tabs.push(tab.truncate(order));
    }
    TaylorTable::new(xbar, ybar, model.rho, tabs[0], tabs[1], tabs[2], tabs[3], tabs[4])
}

/// Heston-type model: `sigma = sqrt(y)`, `beta = delta sqrt(y)`,
/// `c = kappa (theta - y) + rho delta lambda sqrt(y)`, `mu = lambda sqrt(y)`.
///
/// The drift of Y under the minimal martingale measure is `kappa (theta - y)`
/// regardless of the Sharpe ratio, which is why `c` carries the
/// `rho delta lambda sqrt(y)` term.
pub fn heston_model<T: Real>(
    delta: T,
    theta: T,
    kappa: T,
    rho: T,
    lambda_fn: SharpeRatio<T>,
) -> Result<LsvModel<T>> {
    for (name, v) in [("delta", delta), ("theta", theta), ("kappa", kappa)] {
        if !(v > T::zero()) {
            return Err(Error::Parameter { name, reason: format!("{} must be > 0", v) });
        }
    }
    let half = T::of(0.5);
    let lam = lambda_fn.clone();
    let lam2 = lambda_fn.clone();
    let model = LsvModel::from_parts(
        Arc::new(move |x, y: T| lam.eval(x, y) * y.sqrt()),
        Arc::new(|_x, y: T| y.sqrt()),
        Arc::new(move |x, y: T| kappa * (theta - y) + rho * delta * lam2.eval(x, y) * y.sqrt()),
        Arc::new(move |_x, y: T| delta * y.sqrt()),
        rho,
        DomainBox::positive_y(),
    )?;
    let bundle: GroupedDerivFn<T> = Arc::new(move |which, ix, iy, _x, y| {
        let z = T::zero();
        let half = half;
        Some(match which {
            Grouped::A => match (ix, iy) {
                (0, 0) => half * y,
                (0, 1) => half,
                _ => z,
            },
            Grouped::B => match (ix, iy) {
                (0, 0) => half * delta * delta * y,
                (0, 1) => half * delta * delta,
                _ => z,
            },
            Grouped::F => match (ix, iy) {
                (0, 0) => kappa * (theta - y),
                (0, 1) => -kappa,
                _ => z,
            },
            Grouped::G => match (ix, iy) {
                (0, 0) => rho * delta * y,
                (0, 1) => rho * delta,
                _ => z,
            },
            Grouped::H => match &lambda_fn {
                SharpeRatio::Constant(l) => match (ix, iy) {
                    (0, 0) => half * *l * *l,
                    _ => z,
                },
                SharpeRatio::AffineInY { intercept, slope } => {
                    let l = *intercept + *slope * y;
                    match (ix, iy) {
                        (0, 0) => half * l * l,
                        (0, 1) => *slope * l,
                        (0, 2) => *slope * *slope,
                        _ => z,
                    }
                }
                SharpeRatio::Custom(_) => return None,
            },
        })
    });
    Ok(model.with_analytic(bundle))
}

/// Model whose factor is the reciprocal of a CIR process: `mu` constant,
/// `sigma = sqrt(y)`, `c` quadratic in y, `beta` proportional to `y^(3/2)`.
/// Requires the usual Feller condition `2 a kappa >= b^2`.
pub fn reciprocal_heston_model<T: Real>(
    a: T,
    b: T,
    kappa: T,
    mu: T,
    rho: T,
) -> Result<LsvModel<T>> {
    if T::of(2.0) * a * kappa < b * b {
        return Err(Error::Feller {
            lhs: (T::of(2.0) * a * kappa).as_f64(),
            rhs: (b * b).as_f64(),
        });
    }
    if !(mu.abs() > T::zero()) {
        return Err(Error::Parameter { name: "mu", reason: "must be nonzero".into() });
    }
    if rho * rho >= T::one() {
        return Err(Error::Parameter { name: "rho", reason: "|rho| must be < 1".into() });
    }
    let one = T::one();
    let half = T::of(0.5);
    let two = T::of(2.0);
    // beta(y) = -sqrt(2/(1-rho^2)) (b/mu) y^(3/2)
    let beta_scale = -(two / (one - rho * rho)).sqrt() * b / mu;
    // c(y) = a y + 2 (b^2 - a kappa) / (mu^2 (1-rho)^2) y^2
    let c_quad = two * (b * b - a * kappa) / (mu * mu * (one - rho) * (one - rho));
    let model = LsvModel::from_parts(
        Arc::new(move |_x, _y| mu),
        Arc::new(|_x, y: T| y.sqrt()),
        Arc::new(move |_x, y: T| a * y + c_quad * y * y),
        Arc::new(move |_x, y: T| beta_scale * y * y.sqrt()),
        rho,
        DomainBox::positive_y(),
    )?;
    // f = c - rho beta lambda with lambda = mu / sqrt(y):
    //   rho beta lambda = -rho sqrt(2/(1-rho^2)) b y
    let f_lin = a - rho * beta_scale * mu;
    let b2_scale = half * beta_scale * beta_scale; // b(y) = b2_scale y^3
    let g_scale = rho * beta_scale; // g(y) = rho sqrt(y) beta(y) = g_scale y^2
    let h_scale = half * mu * mu; // h(y) = h_scale / y
    let bundle: GroupedDerivFn<T> = Arc::new(move |which, ix, iy, _x, y| {
        let z = T::zero();
        Some(match which {
            Grouped::A => match (ix, iy) {
                (0, 0) => half * y,
                (0, 1) => half,
                _ => z,
            },
            Grouped::B => match (ix, iy) {
                (0, 0) => b2_scale * y * y * y,
                (0, 1) => T::of(3.0) * b2_scale * y * y,
                (0, 2) => T::of(6.0) * b2_scale * y,
                _ => z,
            },
            Grouped::F => match (ix, iy) {
                (0, 0) => f_lin * y + c_quad * y * y,
                (0, 1) => f_lin + two * c_quad * y,
                (0, 2) => two * c_quad,
                _ => z,
            },
            Grouped::G => match (ix, iy) {
                (0, 0) => g_scale * y * y,
                (0, 1) => two * g_scale * y,
                (0, 2) => two * g_scale,
                _ => z,
            },
            Grouped::H => match (ix, iy) {
                (0, 0) => h_scale / y,
                (0, 1) => -h_scale / (y * y),
                (0, 2) => two * h_scale / (y * y * y),
                _ => z,
            },
        })
    });
    Ok(model.with_analytic(bundle))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn heston_figure_model() -> LsvModel<f64> {
        heston_model(0.2, 0.04, 1.15, -0.4, SharpeRatio::Constant(0.5)).unwrap()
    }

    #[test]
    fn heston_grouped_values() {
        let m = heston_figure_model();
        let g = m.grouped(0.0, 0.04).unwrap();
        assert!((g.a - 0.02).abs() < 1e-15);
        assert!((g.b - 0.0008).abs() < 1e-15);
        // f = kappa (theta - y): the Sharpe ratio cancels by construction.
        assert!((g.f - 0.0).abs() < 1e-15);
        assert!((g.g - (-0.4 * 0.2 * 0.04)).abs() < 1e-15);
        assert!((g.h - 0.125).abs() < 1e-15);
    }

    #[test]
    fn zero_drift_means_zero_h() {
        let m = heston_model(0.2, 0.04, 1.15, -0.4, SharpeRatio::Constant(0.0)).unwrap();
        for y in [0.01, 0.04, 0.3] {
            assert_eq!(m.grouped(0.2, y).unwrap().h, 0.0);
        }
    }

    #[test]
    fn builtins_match_hand_forms_at_random_points() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(7);
        let heston = heston_model(0.2, 0.04, 1.15, -0.4, SharpeRatio::AffineInY {
            intercept: 0.5,
            slope: 2.0,
        })
        .unwrap();
        let recip = reciprocal_heston_model(5.0, 0.04, 0.001, 0.02, 0.2).unwrap();
        for _ in 0..20 {
            let x: f64 = rng.random_range(-1.0..1.0);
            let y: f64 = rng.random_range(0.01..0.5);
            let g = heston.grouped(x, y).unwrap();
            let lam = 0.5 + 2.0 * y;
            let rel = |u: f64, v: f64| (u - v).abs() / v.abs().max(1e-30);
            assert!(rel(g.a, 0.5 * y) < 1e-12);
            assert!(rel(g.b, 0.5 * 0.04 * y) < 1e-12);
            assert!(rel(g.f, 1.15 * (0.04 - y)) < 1e-9 * (1.0 + g.f.abs()));
            assert!(rel(g.g, -0.4 * 0.2 * y) < 1e-12);
            assert!(rel(g.h, 0.5 * lam * lam) < 1e-12);

            let g = recip.grouped(x, y).unwrap();
            let beta = -(2.0f64 / 0.96).sqrt() * (0.04 / 0.02) * y.powf(1.5);
            let c = 5.0 * y + 2.0 * (0.04f64.powi(2) - 5.0 * 0.001) / (0.02f64.powi(2) * 0.8f64.powi(2)) * y * y;
            let lam = 0.02 / y.sqrt();
            assert!(rel(g.a, 0.5 * y) < 1e-12);
            assert!(rel(g.b, 0.5 * beta * beta) < 1e-12);
            assert!(rel(g.f, c - 0.2 * beta * lam) < 1e-11);
            assert!(rel(g.g, 0.2 * y.sqrt() * beta) < 1e-12);
            assert!(rel(g.h, 0.5 * lam * lam) < 1e-12);
        }
    }

    #[test]
    fn reciprocal_heston_g_example() {
        let m = reciprocal_heston_model(5.0, 0.04, 0.001, 0.02, 0.2).unwrap();
        let g = m.grouped(0.0, 0.04).unwrap();
        let beta = -(2.0f64 / (1.0 - 0.04)).sqrt() * (0.04 / 0.02) * 0.04f64.powf(1.5);
        assert!((g.g - 0.2 * 0.04f64.sqrt() * beta).abs() < 1e-15);
    }

    #[test]
    fn feller_violation_rejected() {
        let res = reciprocal_heston_model::<f64>(0.01, 1.0, 0.01, 0.02, 0.2);
        assert!(matches!(res, Err(Error::Feller { .. })));
    }

    #[test]
    fn degenerate_beta_allowed() {
        // b = 0: deterministic factor.
        let m = reciprocal_heston_model::<f64>(5.0, 0.0, 0.001, 0.02, 0.2).unwrap();
        assert_eq!(m.grouped(0.0, 0.1).unwrap().b, 0.0);
    }

    #[test]
    fn outside_domain_rejected() {
        let m = heston_figure_model();
        assert!(matches!(m.grouped(0.0, -0.1), Err(Error::OutsideDomain { .. })));
    }

    #[test]
    fn heston_taylor_entries() {
        // a(y) = y/2 at ybar: a00 = ybar/2, a01 = 1/2, a02 = 0, a10 = 0.
        let m = heston_figure_model();
        let t = taylor_table(&m, 0.0, 0.04, 2).unwrap();
        assert!((t.a.c00 - 0.02).abs() < 1e-15);
        assert!((t.a.c01 - 0.5).abs() < 1e-15);
        assert_eq!(t.a.c02, 0.0);
        assert_eq!(t.a.c10, 0.0);
        assert!((t.sigma0() - 0.2).abs() < 1e-15);
    }

    #[test]
    fn taylor_invariant_under_x_shift() {
        let m = heston_figure_model();
        let t0 = taylor_table(&m, 0.0, 0.04, 2).unwrap();
        let t1 = taylor_table(&m, 3.7, 0.04, 2).unwrap();
        for which in Grouped::ALL {
            let (c0, c1) = (t0.coeff(which), t1.coeff(which));
            assert_eq!(c0.c00, c1.c00);
            assert_eq!(c0.c01, c1.c01);
            assert_eq!(c0.c02, c1.c02);
        }
    }

    #[test]
    fn constant_model_has_no_higher_entries() {
        let m = LsvModel::<f64>::from_parts(
            Arc::new(|_, _| 0.06),
            Arc::new(|_, _| 0.2),
            Arc::new(|_, _| 0.1),
            Arc::new(|_, _| 0.3),
            -0.5,
            DomainBox::new(-10.0, 10.0, -10.0, 10.0),
        )
        .unwrap();
        let t = taylor_table(&m, 0.3, 0.7, 2).unwrap();
        for which in Grouped::ALL {
            let c = t.coeff(which);
            for (ix, iy) in [(1, 0), (0, 1), (2, 0), (1, 1), (0, 2)] {
                assert!(c.entry(ix, iy).abs() < 1e-9, "{}: {:?}", which.name(), (ix, iy));
            }
        }
    }

    #[test]
    fn finite_difference_matches_analytic_on_heston() {
        let with = heston_model(0.2, 0.04, 1.15, -0.4, SharpeRatio::AffineInY {
            intercept: 0.5,
            slope: 2.0,
        })
        .unwrap();
        // Same model without the analytic bundle: forces the FD path.
        let without = LsvModel {
            analytic: None,
            ..with.clone()
        };
        let ta = taylor_table(&with, 0.1, 0.09, 2).unwrap();
        let tf = taylor_table(&without, 0.1, 0.09, 2).unwrap();
        for which in Grouped::ALL {
            let (ca, cf) = (ta.coeff(which), tf.coeff(which));
            for (ix, iy) in [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)] {
                let (va, vf): (f64, f64) = (ca.entry(ix, iy), cf.entry(ix, iy));
                let scale = va.abs().max(1.0);
                assert!(
                    (va - vf).abs() / scale < 1e-6,
                    "{} ({ix},{iy}): analytic {va} vs fd {vf}",
                    which.name()
                );
            }
        }
    }

    #[test]
    fn quadratic_coefficient_reproduced_exactly_by_fd() {
        // beta(y) chosen so b = beta^2/2 is an exact quadratic in y.
        let m = LsvModel::<f64>::from_parts(
            Arc::new(|_, _| 0.0),
            Arc::new(|_, _| 0.25),
            Arc::new(|_, y: f64| 0.3 - 0.2 * y),
            Arc::new(|_, y: f64| 0.1 + 0.4 * y),
            0.0,
            DomainBox::new(-10.0, 10.0, -10.0, 10.0),
        )
        .unwrap();
        let t = taylor_table(&m, 0.0, 0.5, 2).unwrap();
        let beta = |y: f64| 0.1 + 0.4 * y;
        let b = |y: f64| 0.5 * beta(y) * beta(y);
        assert!((t.b.c00 - b(0.5)).abs() < 1e-12);
        assert!((t.b.c01 - beta(0.5) * 0.4).abs() < 1e-8);
        assert!((t.b.c02 - 0.5 * 0.4 * 0.4).abs() < 1e-8);
        let q = t.b.eval(0.0, 0.2);
        assert!((q - b(0.7)).abs() < 1e-8);
    }
}
