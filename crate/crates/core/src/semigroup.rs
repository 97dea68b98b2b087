//! The zeroth-order Gaussian semigroup: exact polynomial action through the
//! shift-operator moment property, spectrally accurate Gauss–Hermite
//! quadrature for general integrands, and the commutation check
//! `P0 A_n f = G_n P0 f` used as a test utility.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::model::TaylorTable;
use crate::num::Real;
use crate::quad::gauss_hermite;
use crate::weyl::{self, TimeSlot, WeylElement};

/// Parameters of the Gaussian transition kernel generated by the
/// constant-coefficient operator: covariance `elapsed * [[2a0, g0], [g0, 2b0]]`
/// and mean `(x - elapsed * a0, y + elapsed * f0)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussianKernelParams<T> {
    pub cov: [[T; 2]; 2],
    pub mean_x: T,
    pub mean_y: T,
    pub elapsed: T,
}

impl<T: Real> GaussianKernelParams<T> {
    pub fn new(cov: [[T; 2]; 2], mean_x: T, mean_y: T, elapsed: T) -> Result<Self> {
        if cov[0][1] != cov[1][0] {
            return Err(Error::Parameter { name: "cov", reason: "not symmetric".into() });
        }
        let det = cov[0][0] * cov[1][1] - cov[0][1] * cov[1][0];
        if !(det > T::zero()) || !(elapsed > T::zero()) {
            return Err(Error::Parameter {
                name: "cov",
                reason: format!("must be positive definite with elapsed > 0; det = {}", det),
            });
        }
        Ok(GaussianKernelParams { cov, mean_x, mean_y, elapsed })
    }

    /// Kernel of the zeroth-order operator of `table` over an elapsed time,
    /// started from state `(x, y)`.
    pub fn from_table(table: &TaylorTable<T>, x: T, y: T, elapsed: T) -> Result<Self> {
        let two = T::of(2.0);
        let cov = [
            [elapsed * two * table.a.c00, elapsed * table.g.c00],
            [elapsed * table.g.c00, elapsed * two * table.b.c00],
        ];
        Self::new(cov, x - elapsed * table.a.c00, y + elapsed * table.f.c00, elapsed)
    }

    fn cholesky(&self) -> (T, T, T) {
        let l11 = self.cov[0][0].sqrt();
        let l21 = self.cov[0][1] / l11;
        let l22 = (self.cov[1][1] - l21 * l21).sqrt();
        (l11, l21, l22)
    }
}

/// Applies the semigroup to a bivariate polynomial in absolute coordinates
/// (`sum c x^p y^q`) exactly, through the moment property of the shift
/// operators.
pub fn semigroup_apply_poly<T: Real>(
    table: &TaylorTable<T>,
    elapsed: T,
    monomials: &[(T, usize, usize)],
    x: T,
    y: T,
) -> Result<T> {
    let xs = weyl::shift_operator_x(table, TimeSlot::First);
    let ys = weyl::shift_operator_y(table, TimeSlot::First);
    let mut op = WeylElement::zero();
    for &(c, p, q) in monomials {
        op = op.add(&xs.pow(p)?.compose(&ys.pow(q)?)?.scale(c));
    }
    op.eval_times(elapsed, T::zero()).apply_to_one(T::zero(), x - table.xbar, y - table.ybar)
}

/// Applies the semigroup to a general (at most exponentially growing)
/// function by tensor-product Gauss–Hermite quadrature with adaptive order
/// doubling. Returns `(value, error_estimate)`.
pub fn semigroup_apply<T: Real, F: Fn(T, T) -> T>(
    kernel: &GaussianKernelParams<T>,
    f: F,
    tol: T,
) -> Result<(T, T)> {
    let (l11, l21, l22) = kernel.cholesky();
    let sqrt2 = T::SQRT_2();
    let eval = |order: usize| -> T {
        let (nodes, weights) = gauss_hermite::<T>(order);
        let mut acc = T::zero();
        for (u, wu) in nodes.iter().zip(&weights) {
            let mut row = T::zero();
            for (v, wv) in nodes.iter().zip(&weights) {
                let x1 = kernel.mean_x + sqrt2 * l11 * *u;
                let y1 = kernel.mean_y + sqrt2 * (l21 * *u + l22 * *v);
                row = row + *wv * f(x1, y1);
            }
            acc = acc + *wu * row;
        }
        acc / T::PI()
    };
    let mut order = 16;
    let mut prev = eval(order);
    for _ in 0..6 {
        order *= 2;
        let cur = eval(order);
        let diff = (cur - prev).abs();
        if diff <= tol {
            return Ok((cur, diff));
        }
        prev = cur;
    }
    Err(Error::QuadratureNonConvergence {
        estimate: prev.as_f64(),
        bound: T::infinity().as_f64(),
        tol: tol.as_f64(),
    })
}

/// A smooth test function with derivatives available, for the operator
/// identity checks.
#[derive(Clone)]
pub struct TestFunction2<T> {
    pub eval: Arc<dyn Fn(T, T) -> T + Send + Sync>,
    /// `(i, j, x, y) -> d_x^i d_y^j f(x, y)`
    pub deriv: Arc<dyn Fn(usize, usize, T, T) -> T + Send + Sync>,
}

impl<T: Real> TestFunction2<T> {
    pub fn exponential(a: T, b: T) -> Self {
        TestFunction2 {
            eval: Arc::new(move |x, y| (a * x + b * y).exp()),
            deriv: Arc::new(move |i, j, x, y| {
                a.powi(i as i32) * b.powi(j as i32) * (a * x + b * y).exp()
            }),
        }
    }

    pub fn sine_wave(a: T, b: T) -> Self {
        TestFunction2 {
            eval: Arc::new(move |x, y| (a * x + b * y).sin()),
            deriv: Arc::new(move |i, j, x, y| {
                let phase = T::FRAC_PI_2() * T::from_int(i + j);
                a.powi(i as i32) * b.powi(j as i32) * (a * x + b * y + phase).sin()
            }),
        }
    }

    /// Polynomial `sum c x^p y^q` in absolute coordinates.
    pub fn polynomial(monomials: Vec<(T, usize, usize)>) -> Self {
        let ms = monomials.clone();
        let eval = Arc::new(move |x: T, y: T| {
            ms.iter().fold(T::zero(), |acc, &(c, p, q)| {
                acc + c * x.powi(p as i32) * y.powi(q as i32)
            })
        });
        let deriv = Arc::new(move |i: usize, j: usize, x: T, y: T| {
            monomials.iter().fold(T::zero(), |acc, &(c, p, q)| {
                if i > p || j > q {
                    return acc;
                }
                let mut fac = T::one();
                for r in 0..i {
                    fac = fac * T::from_int(p - r);
                }
                for s in 0..j {
                    fac = fac * T::from_int(q - s);
                }
                acc + c * fac * x.powi((p - i) as i32) * y.powi((q - j) as i32)
            })
        });
        TestFunction2 { eval, deriv }
    }

    pub fn constant_one() -> Self {
        Self::polynomial(vec![(T::one(), 0, 0)])
    }
}

/// The order-n operator `A_n` applied to a test function at a point, using
/// the function's supplied derivatives.
fn apply_a_n<T: Real>(table: &TaylorTable<T>, n: usize, f: &TestFunction2<T>, x: T, y: T) -> T {
    let dx = x - table.xbar;
    let dy = y - table.ybar;
    let mut acc = T::zero();
    for k in 0..=n {
        let poly = dx.powi((n - k) as i32) * dy.powi(k as i32);
        let a = table.a.entry(n - k, k);
        let b = table.b.entry(n - k, k);
        let fe = table.f.entry(n - k, k);
        let g = table.g.entry(n - k, k);
        let d = &f.deriv;
        acc = acc
            + poly
                * (a * (d(2, 0, x, y) - d(1, 0, x, y))
                    + fe * d(0, 1, x, y)
                    + b * d(0, 2, x, y)
                    + g * d(1, 1, x, y));
    }
    acc
}

/// Supremum over a test grid of `|P0 A_n f - G_n P0 f|`; a test utility for
/// the commutation relation, not a pricing path. Both sides are evaluated by
/// Gauss–Hermite quadrature to tolerance `tol`.
pub fn commutation_check<T: Real>(
    table: &TaylorTable<T>,
    n: usize,
    f: &TestFunction2<T>,
    elapsed: T,
    points: &[(T, T)],
    tol: T,
) -> Result<T> {
    let gn = weyl::g_operator(n, table, TimeSlot::First)?.eval_times(elapsed, T::zero());
    let mut worst = T::zero();
    for &(x, y) in points {
        let kernel = GaussianKernelParams::from_table(table, x, y, elapsed)?;
        let (lhs, _) = semigroup_apply(&kernel, |x1, y1| apply_a_n(table, n, f, x1, y1), tol)?;
        // G_n P0 f needs P0 applied to the derivatives of f, which commutes
        // with the constant-coefficient kernel.
        let mut rhs = T::zero();
        let dxp = x - table.xbar;
        let dyp = y - table.ybar;
        for (_, _, tau_pow, p, q, i, j, c) in gn.term_tuples() {
            debug_assert_eq!(tau_pow, 0);
            let (val, _) =
                semigroup_apply(&kernel, |x1, y1| (f.deriv)(i, j, x1, y1), tol)?;
            rhs = rhs + c * dxp.powi(p as i32) * dyp.powi(q as i32) * val;
        }
        let diff = (lhs - rhs).abs();
        if diff > worst {
            worst = diff;
        }
    }
    Ok(worst)
}
