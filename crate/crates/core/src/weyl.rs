//! Exact symbolic machinery for the constant-coefficient semigroup algebra:
//! normal-ordered differential operators with coefficients polynomial in the
//! elapsed times, the shift operators they are built from, the dressed
//! operators of each expansion order, time-ordered simplex integrals, and the
//! Hermite reduction of Black-Scholes derivative ratios.
//!
//! A [`WeylElement`] is a finite sum of monomials
//!
//! ```text
//! coeff * dt1^r * dt2^s * tau^m * (x - xbar)^p (y - ybar)^q Dx^i Dy^j
//! ```
//!
//! in canonical normal order (polynomial factors left of derivatives, terms
//! keyed by their full signature, coefficients merged exactly). `dt1`, `dt2`
//! are the elapsed times of up to two operator slots; `tau` is the total time
//! to maturity that the simplex integrals produce.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::model::{Grouped, TaylorTable};
use crate::num::{hermite_phys, Real};

/// Operators of total derivative order above this are an error, not a silent
/// truncation; order 6 is what second-order expansions need.
pub const MAX_DERIV_ORDER: usize = 6;

/// Which elapsed-time variable a (family of) operator(s) depends on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TimeSlot {
    First,
    Second,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct TermKey {
    dt1: u8,
    dt2: u8,
    tau: u8,
    p: u8,
    q: u8,
    i: u8,
    j: u8,
}

impl TermKey {
    const ONE: TermKey = TermKey { dt1: 0, dt2: 0, tau: 0, p: 0, q: 0, i: 0, j: 0 };

    fn deriv_order(&self) -> usize {
        self.i as usize + self.j as usize
    }
}

/// Normal-ordered element of the Weyl-type operator algebra.
#[derive(Clone, Debug, PartialEq)]
pub struct WeylElement<T> {
    terms: BTreeMap<TermKey, T>,
}

impl<T: Real> Default for WeylElement<T> {
    fn default() -> Self {
        Self::zero()
    }
}

impl<T: Real> WeylElement<T> {
    pub fn zero() -> Self {
        WeylElement { terms: BTreeMap::new() }
    }

    pub fn one() -> Self {
        Self::constant(T::one())
    }

    pub fn constant(c: T) -> Self {
        let mut e = Self::zero();
        e.insert(TermKey::ONE, c);
        e
    }

    /// `coeff * (x-xbar)^p (y-ybar)^q Dx^i Dy^j`, time-independent.
    pub fn monomial(coeff: T, p: usize, q: usize, i: usize, j: usize) -> Self {
        let mut e = Self::zero();
        e.insert(
            TermKey { dt1: 0, dt2: 0, tau: 0, p: p as u8, q: q as u8, i: i as u8, j: j as u8 },
            coeff,
        );
        e
    }

    /// Same monomial times `tau^m` (time to maturity, inert under the
    /// simplex integrals).
    pub fn monomial_tau(coeff: T, m: usize, p: usize, q: usize, i: usize, j: usize) -> Self {
        let mut e = Self::zero();
        e.insert(
            TermKey {
                dt1: 0,
                dt2: 0,
                tau: m as u8,
                p: p as u8,
                q: q as u8,
                i: i as u8,
                j: j as u8,
            },
            coeff,
        );
        e
    }

    /// Same monomial times `dt^r` in the given slot.
    pub fn monomial_in_slot(
        coeff: T,
        slot: TimeSlot,
        r: usize,
        p: usize,
        q: usize,
        i: usize,
        j: usize,
    ) -> Self {
        let (dt1, dt2) = match slot {
            TimeSlot::First => (r as u8, 0),
            TimeSlot::Second => (0, r as u8),
        };
        let mut e = Self::zero();
        e.insert(TermKey { dt1, dt2, tau: 0, p: p as u8, q: q as u8, i: i as u8, j: j as u8 }, coeff);
        e
    }

    pub fn dx() -> Self {
        Self::monomial(T::one(), 0, 0, 1, 0)
    }

    pub fn dy() -> Self {
        Self::monomial(T::one(), 0, 0, 0, 1)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    fn insert(&mut self, key: TermKey, coeff: T) {
        if coeff == T::zero() {
            return;
        }
        let slot = self.terms.entry(key).or_insert_with(T::zero);
        *slot = *slot + coeff;
        if *slot == T::zero() {
            self.terms.remove(&key);
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (k, c) in &other.terms {
            out.insert(*k, *c);
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-T::one()))
    }

    pub fn scale(&self, s: T) -> Self {
        let mut out = Self::zero();
        for (k, c) in &self.terms {
            out.insert(*k, *c * s);
        }
        out
    }

    /// Normal-ordered product `self . other` (self acts after other).
    /// Derivatives in `self` act on the polynomial factors of `other` by the
    /// Leibniz rule; the expansion terminates because coefficients are
    /// polynomials.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        let mut out = Self::zero();
        for (k1, c1) in &self.terms {
            for (k2, c2) in &other.terms {
                let base = *c1 * *c2;
                let rmax = (k1.i).min(k2.p);
                let smax = (k1.j).min(k2.q);
                for r in 0..=rmax {
                    for s in 0..=smax {
                        let factor = T::of(
                            binomial(k1.i as usize, r as usize)
                                * falling(k2.p as usize, r as usize)
                                * binomial(k1.j as usize, s as usize)
                                * falling(k2.q as usize, s as usize),
                        );
                        let key = TermKey {
                            dt1: k1.dt1 + k2.dt1,
                            dt2: k1.dt2 + k2.dt2,
                            tau: k1.tau + k2.tau,
                            p: k1.p + k2.p - r,
                            q: k1.q + k2.q - s,
                            i: k1.i - r + k2.i,
                            j: k1.j - s + k2.j,
                        };
                        if key.deriv_order() > MAX_DERIV_ORDER {
                            return Err(Error::OperatorOrder {
                                got: key.deriv_order(),
                                max: MAX_DERIV_ORDER,
                            });
                        }
                        out.insert(key, base * factor);
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn pow(&self, n: usize) -> Result<Self> {
        let mut out = Self::one();
        for _ in 0..n {
            out = out.compose(self)?;
        }
        Ok(out)
    }

    /// Exact integral over `t1 in [t, T]` of a one-slot family; `dt^r`
    /// becomes `tau^(r+1) / (r+1)`.
    pub fn time_integral_depth1(&self) -> Result<Self> {
        let mut out = Self::zero();
        for (k, c) in &self.terms {
            if k.dt2 != 0 {
                return Err(Error::UnintegratedTime);
            }
            let r = k.dt1 as usize;
            let mut key = *k;
            key.dt1 = 0;
            key.tau += r as u8 + 1;
            out.insert(key, *c / T::from_int(r + 1));
        }
        Ok(out)
    }

    /// Exact integral over the simplex `t <= t1 <= t2 <= T` of a two-slot
    /// family; `dt1^r dt2^s` becomes `tau^(r+s+2) / ((r+1)(r+s+2))`.
    pub fn time_integral_depth2(&self) -> Result<Self> {
        let mut out = Self::zero();
        for (k, c) in &self.terms {
            let (r, s) = (k.dt1 as usize, k.dt2 as usize);
            let mut key = *k;
            key.dt1 = 0;
            key.dt2 = 0;
            key.tau += (r + s + 2) as u8;
            out.insert(key, *c / (T::from_int(r + 1) * T::from_int(r + s + 2)));
        }
        Ok(out)
    }

    /// Collapses the `dt1`/`dt2` dependence at numeric elapsed times; used by
    /// the quadrature oracles that cross-check the exact simplex integrals.
    pub fn eval_times(&self, dt1: T, dt2: T) -> Self {
        let mut out = Self::zero();
        for (k, c) in &self.terms {
            let mut key = *k;
            key.dt1 = 0;
            key.dt2 = 0;
            out.insert(key, *c * dt1.powi(k.dt1 as i32) * dt2.powi(k.dt2 as i32));
        }
        out
    }

    /// Applies the element to a function with known partial derivatives at a
    /// point: `derivs(i, j)` must return the `(i, j)` partial of the target
    /// function there. `dx`, `dy` are the offsets of the evaluation point
    /// from the expansion point. Requires the time dependence to be reduced
    /// to `tau` powers (i.e. after time integration or `eval_times`).
    pub fn apply<F: FnMut(usize, usize) -> T>(
        &self,
        tau: T,
        dx: T,
        dy: T,
        mut derivs: F,
    ) -> Result<T> {
        let mut acc = T::zero();
        for (k, c) in &self.terms {
            if k.dt1 != 0 || k.dt2 != 0 {
                return Err(Error::UnintegratedTime);
            }
            let val = derivs(k.i as usize, k.j as usize);
            if val == T::zero() {
                continue;
            }
            acc = acc
                + *c * tau.powi(k.tau as i32) * dx.powi(k.p as i32) * dy.powi(k.q as i32) * val;
        }
        Ok(acc)
    }

    /// Applies the element to the constant function 1.
    pub fn apply_to_one(&self, tau: T, dx: T, dy: T) -> Result<T> {
        self.apply(tau, dx, dy, |i, j| if i == 0 && j == 0 { T::one() } else { T::zero() })
    }

    /// Profile of pure-x derivative loads when acting on a function of x
    /// only: returns `d` with `sum_i d[i] Dx^i`. Terms with `Dy` drop out;
    /// polynomial factors are evaluated at the given offsets.
    pub fn x_derivative_profile(&self, tau: T, dx: T, dy: T) -> Result<Vec<T>> {
        let mut out: Vec<T> = Vec::new();
        for (k, c) in &self.terms {
            if k.dt1 != 0 || k.dt2 != 0 {
                return Err(Error::UnintegratedTime);
            }
            if k.j != 0 {
                continue;
            }
            let i = k.i as usize;
            if out.len() <= i {
                out.resize(i + 1, T::zero());
            }
            out[i] = out[i]
                + *c * tau.powi(k.tau as i32) * dx.powi(k.p as i32) * dy.powi(k.q as i32);
        }
        Ok(out)
    }

    /// Maximum total derivative order over all terms.
    pub fn deriv_order(&self) -> usize {
        self.terms.keys().map(|k| k.deriv_order()).max().unwrap_or(0)
    }

    /// Terms as `(dt1, dt2, tau, p, q, i, j, coeff)` tuples in canonical
    /// order.
    pub fn term_tuples(&self) -> Vec<(usize, usize, usize, usize, usize, usize, usize, T)> {
        self.terms
            .iter()
            .map(|(k, c)| {
                (
                    k.dt1 as usize,
                    k.dt2 as usize,
                    k.tau as usize,
                    k.p as usize,
                    k.q as usize,
                    k.i as usize,
                    k.j as usize,
                    *c,
                )
            })
            .collect()
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    let mut v = 1.0;
    for r in 0..k {
        v = v * (n - r) as f64 / (r + 1) as f64;
    }
    v
}

fn falling(n: usize, k: usize) -> f64 {
    let mut v = 1.0;
    for r in 0..k {
        v *= (n - r) as f64;
    }
    v
}

impl<T: Real> fmt::Display for WeylElement<T> {
    /// Sorted text dump `coeff * dt^r * X^p Y^q Dx^i Dy^j` for golden-file
    /// tests (`dt2^s` and `tau^m` appear only when nonzero).
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return writeln!(f, "0");
        }
        for (k, c) in &self.terms {
            write!(f, "{:+.12e} * dt^{}", c.as_f64(), k.dt1)?;
            if k.dt2 != 0 {
                write!(f, " * dt2^{}", k.dt2)?;
            }
            if k.tau != 0 {
                write!(f, " * tau^{}", k.tau)?;
            }
            writeln!(f, " * X^{} Y^{} Dx^{} Dy^{}", k.p, k.q, k.i, k.j)?;
        }
        Ok(())
    }
}

/// The shift operator for x: `x + dt (-a0 + 2 a0 Dx + g0 Dy)`, parametric in
/// the elapsed time of the given slot.
pub fn shift_operator_x<T: Real>(table: &TaylorTable<T>, slot: TimeSlot) -> WeylElement<T> {
    shift_x_centered(table, slot).add(&WeylElement::constant(table.xbar))
}

/// The shift operator for y: `y + dt (f0 + 2 b0 Dy + g0 Dx)`.
pub fn shift_operator_y<T: Real>(table: &TaylorTable<T>, slot: TimeSlot) -> WeylElement<T> {
    shift_y_centered(table, slot).add(&WeylElement::constant(table.ybar))
}

/// `X - xbar` as an element: `(x - xbar) + dt (-a0 + 2 a0 Dx + g0 Dy)`.
pub fn shift_x_centered<T: Real>(table: &TaylorTable<T>, slot: TimeSlot) -> WeylElement<T> {
    let a0 = table.a.c00;
    let g0 = table.g.c00;
    WeylElement::monomial(T::one(), 1, 0, 0, 0)
        .add(&WeylElement::monomial_in_slot(-a0, slot, 1, 0, 0, 0, 0))
        .add(&WeylElement::monomial_in_slot(T::of(2.0) * a0, slot, 1, 0, 0, 1, 0))
        .add(&WeylElement::monomial_in_slot(g0, slot, 1, 0, 0, 0, 1))
}

/// `Y - ybar` as an element: `(y - ybar) + dt (f0 + 2 b0 Dy + g0 Dx)`.
pub fn shift_y_centered<T: Real>(table: &TaylorTable<T>, slot: TimeSlot) -> WeylElement<T> {
    let b0 = table.b.c00;
    let f0 = table.f.c00;
    let g0 = table.g.c00;
    WeylElement::monomial(T::one(), 0, 1, 0, 0)
        .add(&WeylElement::monomial_in_slot(f0, slot, 1, 0, 0, 0, 0))
        .add(&WeylElement::monomial_in_slot(T::of(2.0) * b0, slot, 1, 0, 0, 0, 1))
        .add(&WeylElement::monomial_in_slot(g0, slot, 1, 0, 0, 1, 0))
}

/// The order-n homogeneous Taylor part of one grouped coefficient with the
/// shifts substituted for the monomials:
/// `chi_n(X, Y) = sum_k chi_{n-k,k} (X - xbar)^(n-k) (Y - ybar)^k`.
pub fn coeff_poly_in_shifts<T: Real>(
    table: &TaylorTable<T>,
    which: Grouped,
    n: usize,
    slot: TimeSlot,
) -> Result<WeylElement<T>> {
    let xs = shift_x_centered(table, slot);
    let ys = shift_y_centered(table, slot);
    let tab = table.coeff(which);
    let mut out = WeylElement::zero();
    for k in 0..=n {
        let coeff = tab.entry(n - k, k);
        if coeff == T::zero() {
            continue;
        }
        let term = xs.pow(n - k)?.compose(&ys.pow(k)?)?;
        out = out.add(&term.scale(coeff));
    }
    Ok(out)
}

/// The dressed operator of order n: the order-n operator with its coefficient
/// monomials replaced by shift operators,
/// `G_n = a_n(X,Y)(Dx^2 - Dx) + f_n(X,Y) Dy + b_n(X,Y) Dy^2 + g_n(X,Y) Dx Dy`,
/// normal-ordered.
pub fn g_operator<T: Real>(
    n: usize,
    table: &TaylorTable<T>,
    slot: TimeSlot,
) -> Result<WeylElement<T>> {
    let gamma = WeylElement::monomial(T::one(), 0, 0, 2, 0).sub(&WeylElement::dx());
    let dyy = WeylElement::monomial(T::one(), 0, 0, 0, 2);
    let dxy = WeylElement::monomial(T::one(), 0, 0, 1, 1);
    let mut out = coeff_poly_in_shifts(table, Grouped::A, n, slot)?.compose(&gamma)?;
    out = out.add(&coeff_poly_in_shifts(table, Grouped::F, n, slot)?.compose(&WeylElement::dy())?);
    out = out.add(&coeff_poly_in_shifts(table, Grouped::B, n, slot)?.compose(&dyy)?);
    out = out.add(&coeff_poly_in_shifts(table, Grouped::G, n, slot)?.compose(&dxy)?);
    Ok(out)
}

/// Distorted dressed operator used by the non-traded branch:
/// `G'_n = G_n - (1 - rho^2) h_n(X, Y)`.
pub fn g_prime_operator<T: Real>(
    n: usize,
    table: &TaylorTable<T>,
    slot: TimeSlot,
) -> Result<WeylElement<T>> {
    let h = coeff_poly_in_shifts(table, Grouped::H, n, slot)?;
    Ok(g_operator(n, table, slot)?.sub(&h.scale(table.one_minus_rho_sq())))
}

/// Exact time integration of an operator family: depth 1 integrates a single
/// slot over `[t, T]`; depth 2 integrates two slots over the ordered simplex
/// `t <= t1 <= t2 <= T`. Coefficients come back polynomial in `tau = T - t`.
pub fn time_integral<T: Real>(op: &WeylElement<T>, depth: usize) -> Result<WeylElement<T>> {
    match depth {
        1 => op.time_integral_depth1(),
        2 => op.time_integral_depth2(),
        _ => Err(Error::Order(depth)),
    }
}

/// The ratio `Dx^n (Dx^2 - Dx) uBS / (Dx^2 - Dx) uBS` reduced to a Hermite
/// polynomial: `(-1 / (sigma0 sqrt(2 tau)))^n h_n(z)` with
/// `z = (x - k - sigma0^2 tau / 2) / (sigma0 sqrt(2 tau))`.
pub fn hermite_ratio<T: Real>(n: usize, z: T, sigma0: T, tau: T) -> T {
    let scale = -(sigma0 * (T::of(2.0) * tau).sqrt()).recip();
    scale.powi(n as i32) * hermite_phys(n, z)
}
