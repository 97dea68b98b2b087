//! Finite-difference solves: Crank–Nicolson (with Rannacher start) for the
//! 1-D distorted-value equation, and Douglas ADI with implicit linear parts
//! and explicit nonlinearity for the coupled 2-D system.

use super::GridSolution;
use crate::error::{Error, Result};
use crate::model::LsvModel;
use crate::nontraded::{distorted_terminal, PayoffY};
use crate::num::Real;

/// Solves a tridiagonal system in place (Thomas algorithm); `diag` and `rhs`
/// are overwritten, the solution lands in `rhs`.
fn thomas<T: Real>(lower: &[T], diag: &mut [T], upper: &[T], rhs: &mut [T]) {
    let n = diag.len();
    for i in 1..n {
        let w = lower[i] / diag[i - 1];
        diag[i] = diag[i] - w * upper[i - 1];
        rhs[i] = rhs[i] - w * rhs[i - 1];
    }
    rhs[n - 1] = rhs[n - 1] / diag[n - 1];
    for i in (0..n - 1).rev() {
        rhs[i] = (rhs[i] - upper[i] * rhs[i + 1]) / diag[i];
    }
}

fn uniform_axis<T: Real>(lo: T, hi: T, n: usize) -> Vec<T> {
    let h = (hi - lo) / T::from_int(n - 1);
    (0..n).map(|i| lo + h * T::from_int(i)).collect()
}

/// 1-D backward Crank–Nicolson march of
/// `dt xi + b xi'' + f xi' - (1-rho^2) h xi = 0` with Neumann boundaries and
/// four half-step implicit-Euler startup steps to damp the terminal kinks.
fn xi_march<T: Real>(
    model: &LsvModel<T>,
    terminal: &dyn Fn(T) -> T,
    ys: &[T],
    tau: T,
    nt: usize,
) -> Result<Vec<T>> {
    let ny = ys.len();
    let dy = ys[1] - ys[0];
    let one_m_rho2 = T::one() - model.rho() * model.rho();
    // coefficient arrays
    let x0 = T::zero();
    let mut b = vec![T::zero(); ny];
    let mut f = vec![T::zero(); ny];
    let mut r = vec![T::zero(); ny];
    for (i, &y) in ys.iter().enumerate() {
        let g = model.grouped(x0, y)?;
        b[i] = g.b;
        f[i] = g.f;
        r[i] = one_m_rho2 * g.h;
    }
    // operator stencil: L xi_i = lo_i xi_{i-1} + di_i xi_i + up_i xi_{i+1}
    let two = T::of(2.0);
    let build = |i: usize| -> (T, T, T) {
        let byy = b[i] / (dy * dy);
        let fy = f[i] / (two * dy);
        if i == 0 {
            (T::zero(), -two * byy - r[i], two * byy)
        } else if i == ny - 1 {
            (two * byy, -two * byy - r[i], T::zero())
        } else {
            (byy - fy, -two * byy - r[i], byy + fy)
        }
    };
    let stencil: Vec<(T, T, T)> = (0..ny).map(build).collect();

    let mut v: Vec<T> = ys.iter().map(|&y| terminal(y)).collect();
    let dt = tau / T::from_int(nt);
    let half = T::of(0.5);

    let mut lower = vec![T::zero(); ny];
    let mut upper = vec![T::zero(); ny];
    let mut diag = vec![T::zero(); ny];
    let mut rhs = vec![T::zero(); ny];

    let mut implicit_step = |v: &mut Vec<T>, dt_eff: T, theta: T| {
        // (I - theta dt L) v_new = v + (1-theta) dt L v
        for i in 0..ny {
            let (lo, di, up) = stencil[i];
            lower[i] = -theta * dt_eff * lo;
            diag[i] = T::one() - theta * dt_eff * di;
            upper[i] = -theta * dt_eff * up;
            let lv = if i == 0 {
                di * v[0] + up * v[1]
            } else if i == ny - 1 {
                lo * v[ny - 2] + di * v[ny - 1]
            } else {
                lo * v[i - 1] + di * v[i] + up * v[i + 1]
            };
            rhs[i] = v[i] + (T::one() - theta) * dt_eff * lv;
        }
        thomas(&lower, &mut diag, &upper, &mut rhs);
        v.copy_from_slice(&rhs);
    };

    // Rannacher: the first two steps as four implicit-Euler half steps.
    let startup = 2.min(nt);
    for _ in 0..2 * startup {
        implicit_step(&mut v, half * dt, T::one());
    }
    for _ in startup..nt {
        implicit_step(&mut v, dt, half);
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::FdDivergence { step: nt, max_abs: f64::NAN });
    }
    Ok(v)
}

/// Crank–Nicolson solve of the linear distorted-value equation on a y-grid,
/// with a half-resolution companion for the Richardson estimate.
pub fn solve_xi_fd_1d<T: Real>(
    model: &LsvModel<T>,
    terminal: &dyn Fn(T) -> T,
    y_min: T,
    y_max: T,
    tau: T,
    ny: usize,
    nt: usize,
) -> Result<GridSolution<T>> {
    if ny < 9 || nt < 4 {
        return Err(Error::Grid("need ny >= 9 and nt >= 4".into()));
    }
    let ys = uniform_axis(y_min, y_max, ny);
    let fine = xi_march(model, terminal, &ys, tau, nt)?;
    let ys_c = uniform_axis(y_min, y_max, ny / 2 + 1);
    let coarse = xi_march(model, terminal, &ys_c, tau, (nt / 2).max(4))?;
    let coarse_grid = GridSolution {
        xs: vec![],
        ys: ys_c,
        values: coarse,
        dt: tau / T::from_int(nt / 2),
        steps: nt / 2,
        richardson: T::zero(),
    };
    let mut rich = T::zero();
    for (i, &y) in ys.iter().enumerate() {
        let d = (fine[i] - coarse_grid.interp1(y)).abs() / T::of(3.0);
        if d > rich {
            rich = d;
        }
    }
    let out = GridSolution {
        xs: vec![],
        ys,
        values: fine,
        dt: tau / T::from_int(nt),
        steps: nt,
        richardson: rich,
    };
    out.validate()?;
    Ok(out)
}

/// Exact non-traded indifference prices at the probe points, recovered from
/// two 1-D solves through the distortion transform:
/// `u = (log xi|_{theta=1} - log xi|_theta) / ((1-rho^2) gamma nu)`.
/// Values are Richardson-extrapolated from the two resolutions; `richardson`
/// carries the error estimate of the price itself.
#[derive(Clone, Debug)]
pub struct ExactNontraded<T> {
    pub values: Vec<T>,
    pub richardson: T,
}

pub fn nontraded_exact_fd<T: Real>(
    model: &LsvModel<T>,
    payoff: &PayoffY<T>,
    gamma_nu: T,
    tau: T,
    y_grid: &[T],
    ny: usize,
) -> Result<ExactNontraded<T>> {
    let theta = distorted_terminal(payoff, gamma_nu, model.rho())?;
    let one_m_rho2 = T::one() - model.rho() * model.rho();
    // padding: a generous multiple of the diffusion width around the probe
    let y_lo_grid = y_grid.iter().cloned().fold(T::infinity(), T::min);
    let y_hi_grid = y_grid.iter().cloned().fold(T::neg_infinity(), T::max);
    let beta_scale = model.beta(T::zero(), y_hi_grid).abs();
    let width = (beta_scale * tau.sqrt()) * T::of(12.0);
    let y_min = (y_lo_grid - width).max(model.domain().y_min.max(y_lo_grid * T::of(0.02)));
    let y_max = y_hi_grid + width;
    let nt = (ny / 2).max(64);

    let price_on = |n_nodes: usize, n_steps: usize| -> Result<Vec<T>> {
        let ys = uniform_axis(y_min, y_max, n_nodes);
        let with_theta = xi_march(model, &|y| theta.eval(y), &ys, tau, n_steps)?;
        let with_one = xi_march(model, &|_| T::one(), &ys, tau, n_steps)?;
        let grid_t = GridSolution {
            xs: vec![],
            ys: ys.clone(),
            values: with_theta,
            dt: tau,
            steps: n_steps,
            richardson: T::zero(),
        };
        let grid_1 = GridSolution {
            xs: vec![],
            ys,
            values: with_one,
            dt: tau,
            steps: n_steps,
            richardson: T::zero(),
        };
        y_grid
            .iter()
            .map(|&y| {
                let xi_t = grid_t.interp1(y);
                let xi_1 = grid_1.interp1(y);
                if !(xi_t > T::zero()) || !(xi_1 > T::zero()) {
                    return Err(Error::NonPositiveXi { y: y.as_f64(), xi0: xi_t.as_f64() });
                }
                Ok((xi_1.ln() - xi_t.ln()) / (one_m_rho2 * gamma_nu))
            })
            .collect()
    };

    let fine = price_on(ny, nt)?;
    let coarse = price_on(ny / 2 + 1, (nt / 2).max(32))?;
    let third = T::of(3.0);
    let mut rich = T::zero();
    let values: Vec<T> = fine
        .iter()
        .zip(&coarse)
        .map(|(&f, &c)| {
            let d = (f - c).abs() / third;
            if d > rich {
                rich = d;
            }
            f + (f - c) / third
        })
        .collect();
    Ok(ExactNontraded { values, richardson: rich })
}

/// Rectangular space-time box for the 2-D solves.
#[derive(Clone, Copy, Debug)]
pub struct FdDomain<T> {
    pub x_min: T,
    pub x_max: T,
    pub y_min: T,
    pub y_max: T,
    pub t: T,
    pub maturity: T,
}

struct Coeffs2d<T> {
    a: Vec<T>,
    b: Vec<T>,
    f: Vec<T>,
    g: Vec<T>,
    h: Vec<T>,
}

fn coeffs_on_grid<T: Real>(
    model: &LsvModel<T>,
    xs: &[T],
    ys: &[T],
) -> Result<Coeffs2d<T>> {
    let (nx, ny) = (xs.len(), ys.len());
    let mut c = Coeffs2d {
        a: vec![T::zero(); nx * ny],
        b: vec![T::zero(); nx * ny],
        f: vec![T::zero(); nx * ny],
        g: vec![T::zero(); nx * ny],
        h: vec![T::zero(); nx * ny],
    };
    for (i, &x) in xs.iter().enumerate() {
        for (j, &y) in ys.iter().enumerate() {
            let g = model.grouped(x, y)?;
            let idx = i * ny + j;
            c.a[idx] = g.a;
            c.b[idx] = g.b;
            c.f[idx] = g.f;
            c.g[idx] = g.g;
            c.h[idx] = g.h;
        }
    }
    Ok(c)
}

/// One backward Douglas ADI march of the coupled system. `solve_u = None`
/// marches the certainty-equivalent alone; otherwise the price equation is
/// advanced in lockstep, using the companion field explicitly in the
/// nonlinearity.
struct AdiWorkspace<T> {
    nx: usize,
    ny: usize,
    dx: T,
    dy: T,
    coeffs: Coeffs2d<T>,
    one_m_rho2: T,
}

impl<T: Real> AdiWorkspace<T> {
    /// Central-difference application of the full linear operator
    /// `a (Dxx - Dx) + f Dy + b Dyy + g Dxy` with mirror ghosts (Neumann) or
    /// pinned rows (Dirichlet in x for the price equation).
    fn apply_linear(&self, w: &[T], dirichlet_x: bool, out: &mut [T]) {
        let (nx, ny) = (self.nx, self.ny);
        let two = T::of(2.0);
        let four = T::of(4.0);
        // mirror ghosts implement the homogeneous Neumann boundaries
        let at = |i: isize, j: isize| -> T {
            let im = if i < 0 {
                1
            } else if i as usize >= nx {
                nx - 2
            } else {
                i as usize
            };
            let jm = if j < 0 {
                1
            } else if j as usize >= ny {
                ny - 2
            } else {
                j as usize
            };
            w[im * ny + jm]
        };
        for i in 0..nx {
            for j in 0..ny {
                let idx = i * ny + j;
                if dirichlet_x && (i == 0 || i == nx - 1) {
                    out[idx] = T::zero();
                    continue;
                }
                let (ii, jj) = (i as isize, j as isize);
                let wxx = (at(ii + 1, jj) - two * w[idx] + at(ii - 1, jj)) / (self.dx * self.dx);
                let wx = (at(ii + 1, jj) - at(ii - 1, jj)) / (two * self.dx);
                let wyy = (at(ii, jj + 1) - two * w[idx] + at(ii, jj - 1)) / (self.dy * self.dy);
                let wy = (at(ii, jj + 1) - at(ii, jj - 1)) / (two * self.dy);
                let wxy = (at(ii + 1, jj + 1) - at(ii + 1, jj - 1) - at(ii - 1, jj + 1)
                    + at(ii - 1, jj - 1))
                    / (four * self.dx * self.dy);
                out[idx] = self.coeffs.a[idx] * (wxx - wx)
                    + self.coeffs.f[idx] * wy
                    + self.coeffs.b[idx] * wyy
                    + self.coeffs.g[idx] * wxy;
            }
        }
    }

    fn dy_of(&self, w: &[T], i: usize, j: usize) -> T {
        let ny = self.ny;
        let two = T::of(2.0);
        if j == 0 || j == ny - 1 {
            // Neumann boundary: zero slope
            T::zero()
        } else {
            (w[i * ny + j + 1] - w[i * ny + j - 1]) / (two * self.dy)
        }
    }

    /// Implicit x-sweep: solves `(I - c A_x) out = rhs` column by column,
    /// with `A_x = a (Dxx - Dx)`.
    fn x_sweep(&self, c: T, rhs: &[T], dirichlet_x: Option<(&[T], &[T])>, out: &mut [T]) {
        let (nx, ny) = (self.nx, self.ny);
        let two = T::of(2.0);
        let mut lower = vec![T::zero(); nx];
        let mut diag = vec![T::zero(); nx];
        let mut upper = vec![T::zero(); nx];
        let mut col = vec![T::zero(); nx];
        for j in 0..ny {
            for i in 0..nx {
                let idx = i * ny + j;
                let axx = self.coeffs.a[idx] / (self.dx * self.dx);
                let ax = self.coeffs.a[idx] / (two * self.dx);
                // (Dxx - Dx) stencil; the mirror ghost makes Dx vanish at
                // Neumann edges
                let (mut lo, mut di, mut up) = if i == 0 {
                    (T::zero(), -two * axx, two * axx)
                } else if i == nx - 1 {
                    (two * axx, -two * axx, T::zero())
                } else {
                    (axx + ax, -two * axx, axx - ax)
                };
                lo = -c * lo;
                di = T::one() - c * di;
                up = -c * up;
                if let Some((bc_lo, bc_hi)) = dirichlet_x {
                    if i == 0 {
                        lo = T::zero();
                        di = T::one();
                        up = T::zero();
                        col[i] = bc_lo[j];
                    } else if i == nx - 1 {
                        lo = T::zero();
                        di = T::one();
                        up = T::zero();
                        col[i] = bc_hi[j];
                    } else {
                        col[i] = rhs[idx];
                    }
                } else {
                    col[i] = rhs[idx];
                }
                lower[i] = lo;
                diag[i] = di;
                upper[i] = up;
            }
            thomas(&lower, &mut diag, &upper, &mut col);
            for i in 0..nx {
                out[i * ny + j] = col[i];
            }
        }
    }

    /// Implicit y-sweep: solves `(I - c A_y) out = rhs` row by row, with
    /// `A_y = b Dyy + f Dy` and Neumann ends.
    fn y_sweep(&self, c: T, rhs: &[T], out: &mut [T]) {
        let (nx, ny) = (self.nx, self.ny);
        let two = T::of(2.0);
        let mut lower = vec![T::zero(); ny];
        let mut diag = vec![T::zero(); ny];
        let mut upper = vec![T::zero(); ny];
        let mut row = vec![T::zero(); ny];
        for i in 0..nx {
            for j in 0..ny {
                let idx = i * ny + j;
                let byy = self.coeffs.b[idx] / (self.dy * self.dy);
                let fy = self.coeffs.f[idx] / (two * self.dy);
                let (lo, di, up) = if j == 0 {
                    (T::zero(), -two * byy, two * byy)
                } else if j == ny - 1 {
                    (two * byy, -two * byy, T::zero())
                } else {
                    (byy - fy, -two * byy, byy + fy)
                };
                lower[j] = -c * lo;
                diag[j] = T::one() - c * di;
                upper[j] = -c * up;
                row[j] = rhs[idx];
            }
            thomas(&lower, &mut diag, &upper, &mut row);
            for j in 0..ny {
                out[i * ny + j] = row[j];
            }
        }
    }

    /// A_x alone (explicit), for the Douglas correction terms.
    fn apply_ax(&self, w: &[T], out: &mut [T]) {
        let (nx, ny) = (self.nx, self.ny);
        let two = T::of(2.0);
        for i in 0..nx {
            for j in 0..ny {
                let idx = i * ny + j;
                let axx = self.coeffs.a[idx] / (self.dx * self.dx);
                let ax = self.coeffs.a[idx] / (two * self.dx);
                out[idx] = if i == 0 {
                    two * axx * (w[ny + j] - w[j])
                } else if i == nx - 1 {
                    two * axx * (w[(nx - 2) * ny + j] - w[idx])
                } else {
                    (axx + ax) * w[(i - 1) * ny + j] - two * axx * w[idx]
                        + (axx - ax) * w[(i + 1) * ny + j]
                };
            }
        }
    }

    fn apply_ay(&self, w: &[T], out: &mut [T]) {
        let (nx, ny) = (self.nx, self.ny);
        let two = T::of(2.0);
        for i in 0..nx {
            for j in 0..ny {
                let idx = i * ny + j;
                let byy = self.coeffs.b[idx] / (self.dy * self.dy);
                let fy = self.coeffs.f[idx] / (two * self.dy);
                out[idx] = if j == 0 {
                    two * byy * (w[idx + 1] - w[idx])
                } else if j == ny - 1 {
                    two * byy * (w[idx - 1] - w[idx])
                } else {
                    (byy - fy) * w[idx - 1] - two * byy * w[idx] + (byy + fy) * w[idx + 1]
                };
            }
        }
    }
}

enum Equation<'a, T> {
    /// certainty equivalent: source -h, nonlinearity (1-rho^2) b (dy eta)^2
    Eta,
    /// price: nonlinearity (1-rho^2) b (2 dy u dy eta - gamma nu (dy u)^2),
    /// Dirichlet far field in x from the payoff
    Price { gamma_nu: T, bc_lo: &'a [T], bc_hi: &'a [T] },
}

fn adi_march<T: Real>(
    ws: &AdiWorkspace<T>,
    eq: &Equation<T>,
    state: &mut [T],
    eta: Option<&mut [T]>,
    dt: T,
    nt: usize,
) -> Result<()> {
    let n = state.len();
    let half = T::of(0.5);
    let mut full = vec![T::zero(); n];
    let mut ax_old = vec![T::zero(); n];
    let mut ay_old = vec![T::zero(); n];
    let mut y0 = vec![T::zero(); n];
    let mut y1 = vec![T::zero(); n];
    let mut eta_full = vec![T::zero(); n];
    let mut eta_ax = vec![T::zero(); n];
    let mut eta_ay = vec![T::zero(); n];
    let mut eta_y0 = vec![T::zero(); n];
    let mut eta_y1 = vec![T::zero(); n];
    let mut eta_local = eta;

    for step in 0..nt {
        // companion eta march (one Douglas step), needed by the price
        // nonlinearity at the current time level
        let eta_snapshot: Option<Vec<T>> = eta_local.as_deref().map(|e| e.to_vec());
        if let Some(eta_vec) = eta_local.as_deref_mut() {
            ws.apply_linear(eta_vec, false, &mut eta_full);
            for i in 0..ws.nx {
                for j in 0..ws.ny {
                    let idx = i * ws.ny + j;
                    let dye = ws.dy_of(eta_vec, i, j);
                    let src = ws.one_m_rho2 * ws.coeffs.b[idx] * dye * dye - ws.coeffs.h[idx];
                    eta_y0[idx] = eta_vec[idx] + dt * (eta_full[idx] + src);
                }
            }
            ws.apply_ax(eta_vec, &mut eta_ax);
            for idx in 0..n {
                eta_y1[idx] = eta_y0[idx] - half * dt * eta_ax[idx];
            }
            ws.x_sweep(half * dt, &eta_y1, None, &mut eta_y0);
            ws.apply_ay(eta_vec, &mut eta_ay);
            for idx in 0..n {
                eta_y1[idx] = eta_y0[idx] - half * dt * eta_ay[idx];
            }
            ws.y_sweep(half * dt, &eta_y1, eta_vec);
        }

        let dirichlet = matches!(eq, Equation::Price { .. });
        ws.apply_linear(state, dirichlet, &mut full);
        for i in 0..ws.nx {
            for j in 0..ws.ny {
                let idx = i * ws.ny + j;
                let src = match eq {
                    Equation::Eta => {
                        let dye = ws.dy_of(state, i, j);
                        ws.one_m_rho2 * ws.coeffs.b[idx] * dye * dye - ws.coeffs.h[idx]
                    }
                    Equation::Price { gamma_nu, .. } => {
                        let dyu = ws.dy_of(state, i, j);
                        let dye = eta_snapshot
                            .as_ref()
                            .map(|e| ws.dy_of(e, i, j))
                            .unwrap_or_else(T::zero);
                        ws.one_m_rho2
                            * ws.coeffs.b[idx]
                            * (T::of(2.0) * dyu * dye - *gamma_nu * dyu * dyu)
                    }
                };
                y0[idx] = state[idx] + dt * (full[idx] + src);
            }
        }
        ws.apply_ax(state, &mut ax_old);
        for idx in 0..n {
            y1[idx] = y0[idx] - half * dt * ax_old[idx];
        }
        match eq {
            Equation::Price { bc_lo, bc_hi, .. } => {
                ws.x_sweep(half * dt, &y1, Some((bc_lo, bc_hi)), &mut y0)
            }
            Equation::Eta => ws.x_sweep(half * dt, &y1, None, &mut y0),
        }
        ws.apply_ay(state, &mut ay_old);
        for idx in 0..n {
            y1[idx] = y0[idx] - half * dt * ay_old[idx];
        }
        ws.y_sweep(half * dt, &y1, state);

        let max_abs = state.iter().fold(T::zero(), |m, v| m.max(v.abs()));
        if !max_abs.is_finite() || max_abs > T::of(1e12) {
            return Err(Error::FdDivergence { step, max_abs: max_abs.as_f64() });
        }
    }
    Ok(())
}

fn eta_march_on<T: Real>(
    model: &LsvModel<T>,
    domain: &FdDomain<T>,
    nx: usize,
    ny: usize,
    nt: usize,
) -> Result<(Vec<T>, Vec<T>, Vec<T>)> {
    let xs = uniform_axis(domain.x_min, domain.x_max, nx);
    let ys = uniform_axis(domain.y_min, domain.y_max, ny);
    let coeffs = coeffs_on_grid(model, &xs, &ys)?;
    let ws = AdiWorkspace {
        nx,
        ny,
        dx: xs[1] - xs[0],
        dy: ys[1] - ys[0],
        coeffs,
        one_m_rho2: T::one() - model.rho() * model.rho(),
    };
    let mut eta = vec![T::zero(); nx * ny];
    let dt = (domain.maturity - domain.t) / T::from_int(nt);
    adi_march(&ws, &Equation::Eta, &mut eta, None, dt, nt)?;
    Ok((xs, ys, eta))
}

/// Backward IMEX (Douglas ADI) solve of the certainty-equivalent equation
/// with zero terminal data and homogeneous-Neumann boundaries.
pub fn solve_eta_fd<T: Real>(
    model: &LsvModel<T>,
    domain: &FdDomain<T>,
    nx: usize,
    ny: usize,
    nt: usize,
) -> Result<GridSolution<T>> {
    let (xs, ys, eta) = eta_march_on(model, domain, nx, ny, nt)?;
    let (xs_c, ys_c, eta_c) =
        eta_march_on(model, domain, nx / 2 + 1, ny / 2 + 1, (nt / 2).max(8))?;
    let coarse = GridSolution {
        xs: xs_c,
        ys: ys_c,
        values: eta_c,
        dt: (domain.maturity - domain.t) / T::from_int(nt / 2),
        steps: nt / 2,
        richardson: T::zero(),
    };
    let mut rich = T::zero();
    // compare away from the boundary frame
    for (i, &x) in xs.iter().enumerate().filter(|(i, _)| *i > nx / 8 && *i < nx - nx / 8) {
        for (j, &y) in ys.iter().enumerate().filter(|(j, _)| *j > ny / 8 && *j < ny - ny / 8) {
            let d = (eta[i * ys.len() + j] - coarse.interp2(x, y)).abs() / T::of(3.0);
            if d > rich {
                rich = d;
            }
        }
    }
    let out = GridSolution {
        xs,
        ys,
        values: eta,
        dt: (domain.maturity - domain.t) / T::from_int(nt),
        steps: nt,
        richardson: rich,
    };
    out.validate()?;
    Ok(out)
}

fn u_march_on<T: Real>(
    model: &LsvModel<T>,
    payoff_x: &dyn Fn(T) -> T,
    gamma_nu: T,
    domain: &FdDomain<T>,
    nx: usize,
    ny: usize,
    nt: usize,
) -> Result<(Vec<T>, Vec<T>, Vec<T>)> {
    let xs = uniform_axis(domain.x_min, domain.x_max, nx);
    let ys = uniform_axis(domain.y_min, domain.y_max, ny);
    let coeffs = coeffs_on_grid(model, &xs, &ys)?;
    let ws = AdiWorkspace {
        nx,
        ny,
        dx: xs[1] - xs[0],
        dy: ys[1] - ys[0],
        coeffs,
        one_m_rho2: T::one() - model.rho() * model.rho(),
    };
    let mut u: Vec<T> = Vec::with_capacity(nx * ny);
    for &x in &xs {
        let v = payoff_x(x);
        for _ in 0..ny {
            u.push(v);
        }
    }
    // the companion certainty-equivalent marches in lockstep on the same mesh
    let mut eta = vec![T::zero(); nx * ny];
    let bc_lo = vec![payoff_x(domain.x_min); ny];
    let bc_hi = vec![payoff_x(domain.x_max); ny];
    let dt = (domain.maturity - domain.t) / T::from_int(nt);
    adi_march(
        &ws,
        &Equation::Price { gamma_nu, bc_lo: &bc_lo, bc_hi: &bc_hi },
        &mut u,
        Some(&mut eta),
        dt,
        nt,
    )?;
    Ok((xs, ys, u))
}

/// Backward IMEX solve of the indifference-price equation, coupled to the
/// certainty equivalent re-marched internally on the same mesh (the passed
/// grid supplies the mesh and is cross-checked). Call terminal data,
/// asymptotic Dirichlet values in x, Neumann in y.
pub fn solve_u_fd<T: Real>(
    model: &LsvModel<T>,
    eta_grid: &GridSolution<T>,
    payoff_x: &dyn Fn(T) -> T,
    gamma_nu: T,
    domain: &FdDomain<T>,
    nt: usize,
) -> Result<GridSolution<T>> {
    let (nx, ny) = (eta_grid.xs.len(), eta_grid.ys.len());
    if nx < 9 || ny < 9 {
        return Err(Error::Grid("need at least 9 nodes per axis".into()));
    }
    let (xs, ys, u) = u_march_on(model, payoff_x, gamma_nu, domain, nx, ny, nt)?;
    let (xs_c, ys_c, u_c) =
        u_march_on(model, payoff_x, gamma_nu, domain, nx / 2 + 1, ny / 2 + 1, (nt / 2).max(8))?;
    let coarse = GridSolution {
        xs: xs_c,
        ys: ys_c,
        values: u_c,
        dt: (domain.maturity - domain.t) / T::from_int(nt / 2),
        steps: nt / 2,
        richardson: T::zero(),
    };
    let mut rich = T::zero();
    for (i, &x) in xs.iter().enumerate().filter(|(i, _)| *i > nx / 4 && *i < nx - nx / 4) {
        for (j, &y) in ys.iter().enumerate().filter(|(j, _)| *j > ny / 8 && *j < ny - ny / 8) {
            let d = (u[i * ny + j] - coarse.interp2(x, y)).abs() / T::of(3.0);
            if d > rich {
                rich = d;
            }
        }
    }
    let out = GridSolution {
        xs,
        ys,
        values: u,
        dt: (domain.maturity - domain.t) / T::from_int(nt),
        steps: nt,
        richardson: rich,
    };
    out.validate()?;
    Ok(out)
}
