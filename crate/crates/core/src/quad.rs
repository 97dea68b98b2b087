//! Numerical integration: adaptive Gauss–Kronrod on an interval and
//! Gauss–Hermite rules for Gaussian-weighted integrals.

use crate::error::{Error, Result};
use crate::num::Real;

// 15-point Kronrod extension of the 7-point Gauss rule on [-1, 1].
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_17,
    0.207_784_955_007_898_47,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_225,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_93,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_94,
    0.417_959_183_673_469_4,
];

/// One G7/K15 evaluation on `[a, b]`; returns `(kronrod, |kronrod - gauss|)`.
fn gk15<T: Real, F: Fn(T) -> T>(f: &F, a: T, b: T) -> (T, T) {
    let half = T::of(0.5);
    let c = half * (a + b);
    let h = half * (b - a);
    let fc = f(c);
    let mut kron = T::of(WGK[7]) * fc;
    let mut gauss = T::of(WG[3]) * fc;
    for i in 0..7 {
        let x = T::of(XGK[i]) * h;
        let fsum = f(c - x) + f(c + x);
        kron = kron + T::of(WGK[i]) * fsum;
        if i % 2 == 1 {
            gauss = gauss + T::of(WG[i / 2]) * fsum;
        }
    }
    (kron * h, (kron - gauss).abs() * h.abs())
}

/// Adaptive Gauss–Kronrod integration of `f` over `[a, b]` to absolute
/// tolerance `tol`. Returns `(value, error_estimate)`.
pub fn integrate<T: Real, F: Fn(T) -> T>(f: F, a: T, b: T, tol: T) -> Result<(T, T)> {
    if a == b {
        return Ok((T::zero(), T::zero()));
    }
    // (a, b, value, err) segments, worst error refined first.
    let (v, e) = gk15(&f, a, b);
    let mut segs = vec![(a, b, v, e)];
    for _ in 0..2000 {
        let total_err = segs.iter().fold(T::zero(), |acc, s| acc + s.3);
        if total_err <= tol {
            let total = segs.iter().fold(T::zero(), |acc, s| acc + s.2);
            return Ok((total, total_err));
        }
        let (idx, _) = segs
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.partial_cmp(&y.1 .3).unwrap_or(std::cmp::Ordering::Equal))
            .expect("non-empty segment list");
        let (sa, sb, _, _) = segs.swap_remove(idx);
        let mid = T::of(0.5) * (sa + sb);
        let (v1, e1) = gk15(&f, sa, mid);
        let (v2, e2) = gk15(&f, mid, sb);
        segs.push((sa, mid, v1, e1));
        segs.push((mid, sb, v2, e2));
    }
    let total = segs.iter().fold(T::zero(), |acc, s| acc + s.2);
    let total_err = segs.iter().fold(T::zero(), |acc, s| acc + s.3);
    Err(Error::QuadratureNonConvergence {
        estimate: total.as_f64(),
        bound: total_err.as_f64(),
        tol: tol.as_f64(),
    })
}

/// Nodes and weights of the `n`-point Gauss–Hermite rule for weight
/// `exp(-x^2)` on the real line, by Newton iteration on the orthonormal
/// Hermite recurrence.
pub fn gauss_hermite<T: Real>(n: usize) -> (Vec<T>, Vec<T>) {
    assert!(n >= 1);
    let mut nodes = vec![T::zero(); n];
    let mut weights = vec![T::zero(); n];
    let m = (n + 1) / 2;
    let nf = T::from_int(n);
    // positive roots in descending order, as found
    let mut roots = vec![T::zero(); m];
    let mut z = T::zero();
    for i in 0..m {
        z = match i {
            0 => {
                let t = T::of(2.0) * nf + T::one();
                t.sqrt() - T::of(1.85575) * t.powf(-T::of(1.0 / 6.0))
            }
            1 => z - T::of(1.14) * nf.powf(T::of(0.426)) / z,
            2 => T::of(1.86) * z - T::of(0.86) * roots[0],
            3 => T::of(1.91) * z - T::of(0.91) * roots[1],
            _ => T::of(2.0) * z - roots[i - 2],
        };
        let mut pp = T::zero();
        for _ in 0..200 {
            let mut p1 = T::of(std::f64::consts::PI).powf(-T::of(0.25));
            let mut p2 = T::zero();
            for j in 0..n {
                let jf = T::from_int(j);
                let p3 = p2;
                p2 = p1;
                p1 = z * (T::of(2.0) / (jf + T::one())).sqrt() * p2
                    - (jf / (jf + T::one())).sqrt() * p3;
            }
            pp = (T::of(2.0) * nf).sqrt() * p2;
            let dz = p1 / pp;
            z = z - dz;
            if dz.abs() <= T::of(1e-15) * (T::one() + z.abs()) {
                break;
            }
        }
        roots[i] = z;
        nodes[i] = z;
        nodes[n - 1 - i] = -z;
        let w = T::of(2.0) / (pp * pp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = T::zero();
    }
    (nodes, weights)
}

/// Trapezoid rule over `n` uniform panels on `[a, b]`.
pub fn trapezoid<T: Real, F: Fn(T) -> T>(f: F, a: T, b: T, n: usize) -> T {
    let h = (b - a) / T::from_int(n);
    let half = T::of(0.5);
    let mut acc = half * (f(a) + f(b));
    for i in 1..n {
        acc = acc + f(a + h * T::from_int(i));
    }
    acc * h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gk_polynomial_exact() {
        // K15 integrates degree-14 polynomials exactly; x^6 over [0, 2].
        let (v, _) = integrate(|x: f64| x.powi(6), 0.0, 2.0, 1e-13).unwrap();
        assert!((v - 128.0 / 7.0).abs() < 1e-12);
    }

    #[test]
    fn gk_oscillatory() {
        let (v, e) = integrate(|x: f64| (10.0 * x).sin(), 0.0, 3.0, 1e-12).unwrap();
        let exact = (1.0 - (30.0_f64).cos()) / 10.0;
        assert!((v - exact).abs() < 1e-11, "err {}", (v - exact).abs());
        assert!(e <= 1e-12);
    }

    #[test]
    fn hermite_moments() {
        // int x^2 e^{-x^2} = sqrt(pi)/2, int x^4 e^{-x^2} = 3 sqrt(pi)/4
        for n in [8usize, 16, 32, 64] {
            let (x, w) = gauss_hermite::<f64>(n);
            let m2: f64 = x.iter().zip(&w).map(|(x, w)| w * x * x).sum();
            let m4: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(4)).sum();
            let sp = std::f64::consts::PI.sqrt();
            assert!((m2 - sp / 2.0).abs() < 1e-12, "n={n} m2 {m2}");
            assert!((m4 - 3.0 * sp / 4.0).abs() < 1e-11, "n={n} m4 {m4}");
        }
    }

    #[test]
    fn hermite_gaussian_integral() {
        let (x, w) = gauss_hermite::<f64>(48);
        let total: f64 = w.iter().sum();
        assert!((total - std::f64::consts::PI.sqrt()).abs() < 1e-12);
        // E[cos] under e^{-x^2}: int cos(x) e^{-x^2} = sqrt(pi) e^{-1/4}
        let c: f64 = x.iter().zip(&w).map(|(x, w)| w * x.cos()).sum();
        let exact = std::f64::consts::PI.sqrt() * (-0.25_f64).exp();
        assert!((c - exact).abs() < 1e-13);
    }
}
