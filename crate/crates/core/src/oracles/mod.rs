//! Independent reference computations: nonlinear finite-difference solves of
//! the coupled certainty-equivalent/price system, a 1-D linear solve for the
//! distorted value, a semi-analytic Heston call pricer, and a Monte Carlo
//! pricer under the minimal martingale measure.

mod fd;
mod heston;
mod mc;

pub use fd::{
    nontraded_exact_fd, solve_eta_fd, solve_u_fd, solve_xi_fd_1d, ExactNontraded, FdDomain,
};
pub use heston::heston_call_exact;
pub use mc::{mc_linear_price, McResult};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::num::Real;

/// Machine-readable summary of one oracle run.
#[derive(Clone, Debug, Serialize)]
pub struct OracleReport {
    pub scheme: String,
    /// node counts per axis (x first when present) and time steps
    pub mesh: Vec<usize>,
    pub tolerance: f64,
    pub richardson: f64,
    pub value: f64,
}

impl OracleReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }
}

/// A time slice of a finite-difference solve with its mesh metadata. 1-D
/// solves leave `xs` empty and hold `values` over `ys`; 2-D solves store
/// row-major with x as the outer index.
#[derive(Clone, Debug)]
pub struct GridSolution<T> {
    pub xs: Vec<T>,
    pub ys: Vec<T>,
    pub values: Vec<T>,
    pub dt: T,
    pub steps: usize,
    /// Richardson error estimate from a half-resolution companion solve.
    pub richardson: T,
}

impl<T: Real> GridSolution<T> {
    fn validate(&self) -> Result<()> {
        for axis in [&self.xs, &self.ys] {
            if axis.windows(2).any(|w| !(w[1] > w[0])) {
                return Err(Error::Grid("mesh not strictly increasing".into()));
            }
        }
        let expected = self.ys.len() * self.xs.len().max(1);
        if self.values.len() != expected {
            return Err(Error::Grid(format!(
                "value count {} does not match mesh {}",
                self.values.len(),
                expected
            )));
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Grid("non-finite values".into()));
        }
        if self.richardson < T::zero() {
            return Err(Error::Grid("negative error estimate".into()));
        }
        Ok(())
    }

    fn bracket(axis: &[T], v: T) -> (usize, T) {
        let n = axis.len();
        if v <= axis[0] {
            return (0, T::zero());
        }
        if v >= axis[n - 1] {
            return (n - 2, T::one());
        }
        let mut lo = 0;
        let mut hi = n - 1;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if axis[mid] <= v {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        ((lo), (v - axis[lo]) / (axis[lo + 1] - axis[lo]))
    }

    /// Linear interpolation for 1-D solutions.
    pub fn interp1(&self, y: T) -> T {
        debug_assert!(self.xs.is_empty());
        let (i, w) = Self::bracket(&self.ys, y);
        self.values[i] * (T::one() - w) + self.values[i + 1] * w
    }

    /// JSON report of the solve, with `value` read at the given point.
    pub fn report(&self, scheme: &str, x: Option<T>, y: T) -> OracleReport {
        let (mesh, value) = match x {
            Some(x) => (
                vec![self.xs.len(), self.ys.len(), self.steps],
                self.interp2(x, y).as_f64(),
            ),
            None => (vec![self.ys.len(), self.steps], self.interp1(y).as_f64()),
        };
        OracleReport {
            scheme: scheme.to_string(),
            mesh,
            tolerance: self.richardson.as_f64() * 3.0,
            richardson: self.richardson.as_f64(),
            value,
        }
    }

    /// Bilinear interpolation for 2-D solutions.
    pub fn interp2(&self, x: T, y: T) -> T {
        let ny = self.ys.len();
        let (i, wx) = Self::bracket(&self.xs, x);
        let (j, wy) = Self::bracket(&self.ys, y);
        let v = |ix: usize, iy: usize| self.values[ix * ny + iy];
        let one = T::one();
        v(i, j) * (one - wx) * (one - wy)
            + v(i + 1, j) * wx * (one - wy)
            + v(i, j + 1) * (one - wx) * wy
            + v(i + 1, j + 1) * wx * wy
    }
}
