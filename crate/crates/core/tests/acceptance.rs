//! Acceptance suite: one test per criterion, each printing a PASS line with
//! the measured numbers (run with `--nocapture` to see them). Tolerances are
//! pinned in the asserts.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use std::sync::Arc;

use indivol::black_scholes::{bs_call, bs_gamma_factor};
use indivol::implied_vol::{
    implied_vol_invert, iv_terms_closed_form, iv_terms_generic, surface_from_table, Side,
};
use indivol::model::{
    heston_model, reciprocal_heston_model, taylor_table, CoeffTable, Grouped, SharpeRatio,
    TaylorTable,
};
use indivol::nontraded::{
    convergence_order_probe, distorted_terminal, nontraded_price, PayoffY,
};
use indivol::oracles::{
    heston_call_exact, mc_linear_price, nontraded_exact_fd, solve_eta_fd, solve_u_fd, FdDomain,
};
use indivol::quad;
use indivol::semigroup::{commutation_check, GaussianKernelParams, semigroup_apply, TestFunction2};
use indivol::traded::{eta_terms, u_terms, CallSpec, IndifferenceSetting};
use indivol::weyl::{self, hermite_ratio, TimeSlot};

fn figure_heston_table() -> TaylorTable<f64> {
    let m = heston_model(0.2, 0.04, 1.15, -0.4, SharpeRatio::Constant(0.0)).unwrap();
    taylor_table(&m, 0.0, 0.04, 2).unwrap()
}

fn affine_heston() -> indivol::LsvModel64 {
    heston_model(0.2, 0.04, 1.15, -0.4, SharpeRatio::AffineInY { intercept: 0.5, slope: 2.0 })
        .unwrap()
}

#[test]
fn criterion_1_degeneracy() {
    let start = std::time::Instant::now();
    let t = TaylorTable::constant(0.02, 0.0008, 0.046, -0.0032, 0.125, -0.4).unwrap();
    let mut worst_price = 0.0f64;
    let mut worst_iv = 0.0f64;
    for (tau, l) in [(0.1_f64, -0.2_f64), (0.25, 0.0), (1.0, 0.15), (2.0, 0.3)] {
        let spec = CallSpec::new(l, 0.0, tau).unwrap();
        let setting = IndifferenceSetting { gamma_nu: 25.0, x: 0.0, y: 0.0 };
        let p = u_terms(&t, &spec, &setting).unwrap();
        let iv = iv_terms_closed_form(&t, &spec, &setting).unwrap();
        worst_price = worst_price.max((p.ubar(2) - bs_call(0.0, 0.0, t.sigma0(), l, tau)).abs());
        worst_iv = worst_iv.max((iv.ivbar(2) - t.sigma0()).abs());
    }
    assert!(worst_price < 1e-12, "ubar2 vs uBS: {worst_price}");
    assert!(worst_iv < 1e-12, "ivbar2 vs sigma0: {worst_iv}");

    // rho = +/-1 or a01 = 0 kill the indifference terms exactly
    let base = affine_heston();
    let spec = CallSpec::new(0.0, 0.0, 0.25).unwrap();
    let setting = IndifferenceSetting { gamma_nu: 25.0, x: 0.0, y: 0.04 };
    for rho in [1.0, -1.0] {
        let mut t = taylor_table(&base, 0.0, 0.04, 2).unwrap();
        t.rho = rho;
        let p = u_terms(&t, &spec, &setting).unwrap();
        assert_eq!(p.u2_ind(), 0.0, "rho = {rho}");
        let iv = iv_terms_closed_form(&t, &spec, &setting).unwrap();
        assert_eq!(iv.sigma2_ind(), 0.0, "rho = {rho}");
    }
    let mut t = taylor_table(&base, 0.0, 0.04, 2).unwrap();
    t.a.c01 = 0.0;
    t.a.c02 = 0.0;
    t.a.c11 = 0.0;
    let p = u_terms(&t, &spec, &setting).unwrap();
    assert_eq!(p.u2_ind(), 0.0, "a01 = 0");
    let iv = iv_terms_closed_form(&t, &spec, &setting).unwrap();
    assert_eq!(iv.sigma2_ind(), 0.0, "a01 = 0");
    println!(
        "PASS criterion 1 (degeneracy): |ubar2 - uBS| <= {worst_price:.1e}, |ivbar2 - sigma0| <= {worst_iv:.1e}, indifference terms exactly zero [{:.2?}]",
        start.elapsed()
    );
}

fn rand_coeff(rng: &mut ChaCha12Rng, c00: f64, scale: f64) -> CoeffTable<f64> {
    CoeffTable {
        c00,
        c10: rng.random_range(-scale..scale),
        c01: rng.random_range(-scale..scale),
        c20: rng.random_range(-scale..scale),
        c11: rng.random_range(-scale..scale),
        c02: rng.random_range(-scale..scale),
    }
}

fn random_order2_table(rng: &mut ChaCha12Rng) -> TaylorTable<f64> {
    let a0: f64 = rng.random_range(0.005..0.125);
    let a = rand_coeff(rng, a0, 0.3 * a0);
    let b0: f64 = rng.random_range(0.0..0.01);
    let b = rand_coeff(rng, b0, 0.3 * b0.max(1e-3));
    let f0 = rng.random_range(-0.5..0.5);
    let f = rand_coeff(rng, f0, 0.2);
    let g0 = rng.random_range(-0.01..0.01);
    let g = rand_coeff(rng, g0, 0.01);
    let h0 = rng.random_range(0.0..0.3);
    let h = rand_coeff(rng, h0, 0.2);
    let rho = rng.random_range(-0.9..0.9);
    TaylorTable::new(0.0, 0.04, rho, a, b, f, g, h).unwrap()
}

#[test]
fn criterion_2_closed_form_vs_generic() {
    let start = std::time::Instant::now();
    let mut rng = ChaCha12Rng::seed_from_u64(20260808);
    let mut worst = 0.0f64;
    for trial in 0..200 {
        let t = random_order2_table(&mut rng);
        let tau = rng.random_range(0.05..2.0);
        let l = rng.random_range(-0.3..0.3);
        let gamma_nu = rng.random_range(-40.0..40.0);
        let spec = CallSpec::new(l, 0.0, tau).unwrap();
        let setting = IndifferenceSetting { gamma_nu, x: 0.0, y: 0.04 };
        let closed = iv_terms_closed_form(&t, &spec, &setting).unwrap();
        let generic = iv_terms_generic(&u_terms(&t, &spec, &setting).unwrap()).unwrap();
        let d = (closed.ivbar(2) - generic.ivbar(2)).abs();
        assert!(d <= 1e-10, "trial {trial}: |closed - generic| = {d:.3e} (tau={tau}, L={l})");
        worst = worst.max(d);
    }
    println!(
        "PASS criterion 2 (closed form vs generic recursion): max |diff| = {worst:.2e} over 200 draws [{:.2?}]",
        start.elapsed()
    );
}

#[test]
fn criterion_3_heston_figure() {
    let start = std::time::Instant::now();
    let m = heston_model(0.2, 0.04, 1.15, -0.4, SharpeRatio::Constant(0.0)).unwrap();
    let table = taylor_table(&m, 0.0, 0.04, 2).unwrap();
    let setting = IndifferenceSetting { gamma_nu: 25.0, x: 0.0, y: 0.04 };
    let mut worst_vs_exact = 0.0f64;
    for i in -6..=6 {
        let l = 0.025 * i as f64;
        let spec = CallSpec::new(l, 0.0, 0.25).unwrap();
        let buyer = iv_terms_closed_form(
            &table,
            &spec,
            &IndifferenceSetting { gamma_nu: 25.0, ..setting },
        )
        .unwrap();
        let seller = iv_terms_closed_form(
            &table,
            &spec,
            &IndifferenceSetting { gamma_nu: -25.0, ..setting },
        )
        .unwrap();
        assert!(
            seller.ivbar(2) >= buyer.ivbar(2),
            "seller curve below buyer at L = {l}"
        );
        // constant Sharpe ratio: the position-independent piece vanishes and
        // the half spread is exactly the gamma-signed piece
        assert_eq!(buyer.sigma2_ind_cross, 0.0);
        assert_eq!(buyer.half_spread(), buyer.sigma2_ind().abs());
        let mid2 = buyer.ivbar(2) - buyer.sigma2_ind();
        let price = heston_call_exact(0.2, 0.04, 1.15, -0.4, 0.0, 0.04, l, 0.25).unwrap();
        let exact = implied_vol_invert(price, 0.0, 0.0, l, 0.25).unwrap();
        let d = (mid2 - exact).abs();
        assert!(d <= 0.005, "L = {l}: |ivbar2 - ind - exact| = {d:.4} vol");
        worst_vs_exact = worst_vs_exact.max(d);
    }

    // the half spread peaks at a strike above the spot
    let strikes: Vec<f64> = (-40..=60).map(|i| 0.005 * i as f64).collect();
    let rows = surface_from_table(&table, &setting, &strikes, &[0.25], 0.0, Side::Buyer);
    let (mut best_k, mut best) = (f64::NAN, -1.0);
    for row in &rows {
        let hs = row.result.as_ref().unwrap().half_spread();
        if hs > best {
            best = hs;
            best_k = row.k;
        }
    }
    assert!(best_k > 0.0, "half spread peaks at k = {best_k} <= x");

    // and grows with maturity at the money
    let mut prev = 0.0;
    for maturity in [0.3, 0.7, 1.0] {
        let spec = CallSpec::new(0.0, 0.0, maturity).unwrap();
        let iv = iv_terms_closed_form(&table, &spec, &setting).unwrap();
        assert!(
            iv.half_spread() > prev,
            "ATM spread not increasing at T = {maturity}"
        );
        prev = iv.half_spread();
    }
    println!(
        "PASS criterion 3 (Heston figure): max |second-order - exact| = {worst_vs_exact:.4} vol, seller >= buyer, spread peak at k = {best_k:.3} > 0, ATM spread increasing in T [{:.2?}]",
        start.elapsed()
    );
}

#[test]
fn criterion_4_traded_fd_agreement() {
    let start = std::time::Instant::now();
    let m = affine_heston();
    let table = taylor_table(&m, 0.0, 0.04, 2).unwrap();
    let spec = CallSpec::new(0.0, 0.0, 0.25).unwrap();
    let dom = FdDomain {
        x_min: -1.5,
        x_max: 1.5,
        y_min: 0.002,
        y_max: 0.2,
        t: 0.0,
        maturity: 0.25,
    };
    let eta = solve_eta_fd(&m, &dom, 201, 101, 2000).unwrap();
    // the expansion's certainty equivalent agrees with the FD certainty
    // equivalent at the valuation point
    let eta_exp = eta_terms(&table, 0.0, 0.0, 0.04, 0.25).unwrap();
    let eta_fd = eta.interp2(0.0, 0.04);
    assert!(
        (eta_exp.etabar(2) - eta_fd).abs() < 3.0 * eta.richardson + 5e-4,
        "etabar2 = {} vs fd {eta_fd}",
        eta_exp.etabar(2)
    );
    let mut report = String::new();
    for gamma_nu in [25.0, -25.0] {
        let u = solve_u_fd(&m, &eta, &|x: f64| (x.exp() - 1.0).max(0.0), gamma_nu, &dom, 2000)
            .unwrap();
        let fd = u.interp2(0.0, 0.04);
        let p = u_terms(&table, &spec, &IndifferenceSetting { gamma_nu, x: 0.0, y: 0.04 })
            .unwrap();
        let bound = (3.0 * u.richardson).max(5e-4);
        let diff = (p.ubar(2) - fd).abs();
        assert!(
            diff <= bound,
            "gamma nu = {gamma_nu}: |ubar2 - u_fd| = {diff:.2e} > {bound:.2e}"
        );
        report.push_str(&format!("gn={gamma_nu}: |diff| = {diff:.2e} <= {bound:.2e}; "));
    }
    println!(
        "PASS criterion 4 (traded FD oracle, 201x101x2000): {report}[{:.2?}]",
        start.elapsed()
    );
}

#[test]
fn criterion_5_monte_carlo_split() {
    let start = std::time::Instant::now();
    let m = affine_heston();
    let table = taylor_table(&m, 0.0, 0.04, 2).unwrap();
    let mut worst_z = 0.0f64;
    for l in [-0.1, 0.0, 0.1] {
        let spec = CallSpec::new(l, 0.0, 0.25).unwrap();
        let p = u_terms(&table, &spec, &IndifferenceSetting { gamma_nu: 25.0, x: 0.0, y: 0.04 })
            .unwrap();
        let mc = mc_linear_price(
            &m,
            &move |x: f64| (x.exp() - l.exp()).max(0.0),
            0.0,
            0.0,
            0.04,
            0.25,
            1_000_000,
            250,
            20260101,
        )
        .unwrap();
        let z = (p.qbar2() - mc.price).abs() / mc.standard_error;
        assert!(z <= 3.0, "L = {l}: |qbar2 - mc| = {z:.2} standard errors");
        worst_z = worst_z.max(z);
    }
    println!(
        "PASS criterion 5 (Monte Carlo split, 1e6 paths x 250 steps): worst |z| = {worst_z:.2} <= 3 [{:.2?}]",
        start.elapsed()
    );
}

#[test]
fn criterion_6_nontraded_figure() {
    let start = std::time::Instant::now();
    let m = reciprocal_heston_model(5.0, 0.04, 0.001, 0.02, 0.2).unwrap();
    let k1s: Vec<f64> = (0..=12).map(|i| 0.01 * i as f64).collect();
    let k2 = 2.0;
    let mut worst_rel = 0.0f64;
    let mut ordered = 0usize;
    let mut total = 0usize;
    let mut buyer_prices = Vec::new();
    let mut seller_prices = Vec::new();
    for &gamma_nu in &[40.0, -25.0] {
        for &k1 in &k1s {
            let payoff = PayoffY::call_spread(k1, k2).unwrap();
            let oracle = nontraded_exact_fd(&m, &payoff, gamma_nu, 0.15, &[0.04], 1601).unwrap();
            let u_exact = oracle.values[0];
            let mut errs = [0.0f64; 3];
            for order in 0..=2usize {
                let u = nontraded_price(&m, &payoff, gamma_nu, 0.0, 0.04, 0.15, order).unwrap();
                errs[order] = (u - u_exact).abs();
                if order == 2 {
                    if gamma_nu > 0.0 {
                        buyer_prices.push(u);
                    } else {
                        seller_prices.push(u);
                    }
                    worst_rel = worst_rel.max(errs[2] / (k2 - k1));
                    assert!(
                        errs[2] <= 0.02 * (k2 - k1),
                        "gn={gamma_nu} k1={k1}: |ubar2 - u| = {:.2e} > 2% of {}",
                        errs[2],
                        k2 - k1
                    );
                }
            }
            total += 1;
            if errs[0] >= errs[1] && errs[1] >= errs[2] {
                ordered += 1;
            }
        }
    }
    let frac = ordered as f64 / total as f64;
    assert!(frac >= 0.9, "error ordering holds at only {}% of sweep points", (100.0 * frac) as i32);
    for (b, s) in buyer_prices.iter().zip(&seller_prices) {
        assert!(s >= b, "seller price below buyer price");
    }
    println!(
        "PASS criterion 6 (non-traded figure): max |ubar2 - u|/(k2-k1) = {:.2e} <= 2e-2, ordering at {:.0}% of points, seller >= buyer [{:.2?}]",
        worst_rel,
        100.0 * frac,
        start.elapsed()
    );
}

#[test]
fn criterion_7_convergence_order() {
    let start = std::time::Instant::now();
    let m = heston_model(
        0.25,
        0.04,
        1.15,
        -0.4,
        SharpeRatio::AffineInY { intercept: 0.5, slope: 2.0 },
    )
    .unwrap();
    let payoff = PayoffY::call_spread(0.035, 0.06).unwrap();
    let y_grid: Vec<f64> = (-3..=3).map(|i| 0.04 * (1.0 + 0.05 * i as f64)).collect();
    let taus = [0.2, 0.1, 0.05, 0.025];
    let mut slopes = [0.0f64; 3];
    for order in 0..=2usize {
        let report =
            convergence_order_probe(&m, &payoff, 25.0, &y_grid, &taus, order).unwrap();
        assert!(!report.oracle_limited, "oracle floor reached at order {order}");
        slopes[order] = report.slope;
        let bound = (order as f64 + 2.0) / 2.0 - 0.3;
        assert!(
            report.slope >= bound,
            "slope({order}) = {:.3} below {bound:.2}",
            report.slope
        );
    }
    let gap = slopes[2] - slopes[0];
    assert!((0.6..=1.4).contains(&gap), "slope(2) - slope(0) = {gap:.3} outside [0.6, 1.4]");
    println!(
        "PASS criterion 7 (convergence order): slopes = {:.3} / {:.3} / {:.3}, gap = {gap:.3} [{:.2?}]",
        slopes[0],
        slopes[1],
        slopes[2],
        start.elapsed()
    );
}

#[test]
fn criterion_8_operator_identities() {
    let start = std::time::Instant::now();
    let table = {
        let m = affine_heston();
        let mut t = taylor_table(&m, 0.0, 0.04, 2).unwrap();
        // enrich with x-dependence so every operator path is exercised
        t.a.c10 = 0.006;
        t.a.c20 = 0.004;
        t.a.c11 = 0.003;
        t.f.c10 = 0.02;
        t.g.c10 = 0.002;
        t.h.c10 = 0.01;
        t
    };

    // commutation relation on 5 smooth test functions
    let funcs: Vec<(&str, TestFunction2<f64>)> = vec![
        ("exp(.3x+.2y)", TestFunction2::exponential(0.3, 0.2)),
        ("exp(-.1x+.4y)", TestFunction2::exponential(-0.1, 0.4)),
        ("sin(.5x+.3y)", TestFunction2::sine_wave(0.5, 0.3)),
        ("poly2", TestFunction2::polynomial(vec![(1.0, 2, 0), (0.5, 1, 1), (-2.0, 0, 2)])),
        ("poly3", TestFunction2::polynomial(vec![(0.3, 3, 0), (1.0, 1, 2), (0.7, 0, 1)])),
    ];
    let points = [(0.0, 0.04), (0.15, 0.06), (-0.2, 0.03)];
    let mut worst_comm = 0.0f64;
    for (name, f) in &funcs {
        for n in [1usize, 2] {
            let res = commutation_check(&table, n, f, 0.3, &points, 1e-10).unwrap();
            assert!(res <= 1e-8, "{name} n={n}: residual {res:.2e}");
            worst_comm = worst_comm.max(res);
        }
    }

    // the shift operators commute exactly
    let x = weyl::shift_operator_x(&table, TimeSlot::First);
    let y = weyl::shift_operator_y(&table, TimeSlot::First);
    assert!(x.compose(&y).unwrap().sub(&y.compose(&x).unwrap()).is_zero());

    // semigroup composition on an exponential
    let f = |x1: f64, y1: f64| (0.3 * x1 + 0.2 * y1).exp();
    let k_full = GaussianKernelParams::from_table(&table, 0.0, 0.04, 0.6).unwrap();
    let (direct, _) = semigroup_apply(&k_full, f, 1e-12).unwrap();
    let k1 = GaussianKernelParams::from_table(&table, 0.0, 0.04, 0.25).unwrap();
    let (nested, _) = semigroup_apply(
        &k1,
        |x1, y1| {
            let k2 = GaussianKernelParams::from_table(&table, x1, y1, 0.35).unwrap();
            // closed-form Gaussian mgf of the inner step
            (0.3 * k2.mean_x
                + 0.2 * k2.mean_y
                + 0.5 * (0.09 * k2.cov[0][0] + 0.12 * k2.cov[0][1] + 0.04 * k2.cov[1][1]))
                .exp()
        },
        1e-12,
    )
    .unwrap();
    let semi = (nested - direct).abs();
    assert!(semi <= 1e-10, "semigroup composition residual {semi:.2e}");

    // Hermite recursion
    let mut worst_herm = 0.0f64;
    for n in 1..8usize {
        for &z in &[-5.0, -2.0, -0.3, 0.0, 0.8, 3.0, 5.0] {
            let lhs = hermite_ratio(n + 1, z, 0.2, 0.7);
            let scale = -1.0 / (0.2 * (2.0 * 0.7f64).sqrt());
            let rhs = scale * 2.0 * z * hermite_ratio(n, z, 0.2, 0.7)
                - scale * scale * 2.0 * n as f64 * hermite_ratio(n - 1, z, 0.2, 0.7);
            let d = (lhs - rhs).abs() / lhs.abs().max(1.0);
            assert!(d <= 1e-12, "hermite recursion n={n} z={z}: {d:.2e}");
            worst_herm = worst_herm.max(d);
        }
    }

    // eta closed forms vs time quadrature
    let (tau, xp, yp) = (0.3, 0.1, 0.05);
    let (dxp, dyp) = (xp - table.xbar, yp - table.ybar);
    let eta = eta_terms(&table, 0.0, xp, yp, tau).unwrap();
    let h1s = weyl::coeff_poly_in_shifts(&table, Grouped::H, 1, TimeSlot::First).unwrap();
    let (eta1_quad, _) = quad::integrate(
        |s: f64| -h1s.eval_times(s, 0.0).apply_to_one(0.0, dxp, dyp).unwrap(),
        0.0,
        tau,
        1e-13,
    )
    .unwrap();
    let d_eta1 = (eta.eta1 - eta1_quad).abs();
    assert!(d_eta1 <= 1e-10, "eta1 closed vs quadrature: {d_eta1:.2e}");

    let g1 = weyl::g_operator(1, &table, TimeSlot::First).unwrap();
    let h1 = weyl::coeff_poly_in_shifts(&table, Grouped::H, 2, TimeSlot::First).unwrap();
    let h1_second = weyl::coeff_poly_in_shifts(&table, Grouped::H, 1, TimeSlot::Second).unwrap();
    let double = g1.compose(&h1_second).unwrap();
    let (term1, _) = quad::integrate(
        |v1: f64| {
            quad::integrate(
                |v2: f64| double.eval_times(v1, v2).apply_to_one(0.0, dxp, dyp).unwrap(),
                v1,
                tau,
                1e-13,
            )
            .unwrap()
            .0
        },
        0.0,
        tau,
        1e-12,
    )
    .unwrap();
    let (term2, _) = quad::integrate(
        |v: f64| h1.eval_times(v, 0.0).apply_to_one(0.0, dxp, dyp).unwrap(),
        0.0,
        tau,
        1e-13,
    )
    .unwrap();
    let cubic = tau.powi(3) / 3.0 * table.one_minus_rho_sq() * table.b.c00 * table.h.c01.powi(2);
    let eta2_quad = -term1 - term2 + cubic;
    let d_eta2 = (eta.eta2 - eta2_quad).abs();
    assert!(d_eta2 <= 1e-10, "eta2 closed vs quadrature: {d_eta2:.2e}");

    println!(
        "PASS criterion 8 (operator identities): commutation <= {worst_comm:.1e}, XY = YX exact, semigroup {semi:.1e}, Hermite {worst_herm:.1e}, eta residuals {d_eta1:.1e}/{d_eta2:.1e} [{:.2?}]",
        start.elapsed()
    );
}

#[test]
fn criterion_9_inverter() {
    let start = std::time::Instant::now();
    let mut worst = 0.0f64;
    let mut tested = 0usize;
    let mut skipped = 0usize;
    for &sigma in &[0.05, 0.1, 0.2, 0.5, 1.0, 1.5] {
        for &l in &[-1.0, -0.5, -0.2, 0.0, 0.2, 0.5, 1.0] {
            for &tau in &[0.05, 0.25, 1.0, 5.0] {
                let price: f64 = bs_call(0.0, 0.0, sigma, l, tau);
                let intrinsic = (1.0 - (l as f64).exp()).max(0.0);
                // Far wings are not invertible to 1e-10 in f64 by any
                // implementation: either the price is pinned to a
                // no-arbitrage bound, or its double representation carries
                // less than 1e-10 of volatility information (resolution
                // eps * price / vega).
                let vega: f64 = indivol::black_scholes::bs_vega(0.0, 0.0, sigma, l, tau);
                let resolution = f64::EPSILON * price.max(intrinsic) / vega.max(1e-300);
                if price <= intrinsic || price >= 1.0 || resolution > 1e-11 {
                    skipped += 1;
                    continue;
                }
                let iv = implied_vol_invert(price, 0.0, 0.0, l, tau).unwrap();
                worst = worst.max((iv - sigma).abs());
                tested += 1;
            }
        }
    }
    assert!(worst <= 1e-10, "round trip error {worst:.2e}");
    assert!(tested >= 110, "only {tested} grid points testable");
    // out-of-bounds prices rejected with the violated bound named
    assert!(matches!(
        implied_vol_invert(0.0, 0.0, 0.1, 0.0, 1.0),
        Err(indivol::Error::PriceBelowIntrinsic { .. })
    ));
    assert!(matches!(
        implied_vol_invert(1.0, 0.0, 0.0, 0.0, 1.0),
        Err(indivol::Error::PriceAboveSpot { .. })
    ));
    println!(
        "PASS criterion 9 (inverter): round trip <= {worst:.2e} on {tested} grid points ({skipped} pinned to bounds in f64), out-of-bounds rejected [{:.2?}]",
        start.elapsed()
    );
}

// A few cross-cutting checks the criteria above rely on.

#[test]
fn oracle_triangle_is_consistent() {
    // semi-analytic vs Monte Carlo vs FD linear price, pairwise
    let m = heston_model(0.2, 0.04, 1.15, -0.4, SharpeRatio::Constant(0.0)).unwrap();
    let dom = FdDomain {
        x_min: -1.5,
        x_max: 1.5,
        y_min: 0.002,
        y_max: 0.2,
        t: 0.0,
        maturity: 0.25,
    };
    let eta = solve_eta_fd(&m, &dom, 101, 51, 300).unwrap();
    for l in [-0.1_f64, 0.0, 0.1] {
        let exact = heston_call_exact(0.2, 0.04, 1.15, -0.4, 0.0, 0.04, l, 0.25).unwrap();
        let mc = mc_linear_price(
            &m,
            &move |x: f64| (x.exp() - l.exp()).max(0.0),
            0.0,
            0.0,
            0.04,
            0.25,
            400_000,
            200,
            9,
        )
        .unwrap();
        assert!(
            (mc.price - exact).abs() <= 3.0 * mc.standard_error + 2e-4,
            "L={l}: mc {} vs exact {exact}",
            mc.price
        );
        let u = solve_u_fd(&m, &eta, &move |x: f64| (x.exp() - l.exp()).max(0.0), 0.0, &dom, 300)
            .unwrap();
        let fd = u.interp2(0.0, 0.04);
        assert!(
            (fd - exact).abs() <= 3.0 * u.richardson + 5e-4,
            "L={l}: fd {fd} vs exact {exact} (rich {})",
            u.richardson
        );
    }
    println!("PASS oracle triangle: analytic / MC / FD pairwise consistent at 3 strikes");
}

#[test]
fn linear_price_limit_of_fd_psi_route() {
    // as gamma nu -> 0 the transform-based exact price tends to the linear
    // price approximation qbar2 (within expansion accuracy)
    let m = reciprocal_heston_model(5.0, 0.04, 0.001, 0.02, 0.2).unwrap();
    let payoff = PayoffY::call_spread(0.03, 0.08).unwrap();
    let small = nontraded_exact_fd(&m, &payoff, 1e-3, 0.15, &[0.04], 1601).unwrap();
    let theta = distorted_terminal(&payoff, 1e-3, 0.2).unwrap();
    drop(theta);
    let u2: f64 = nontraded_price(&m, &payoff, 1e-3, 0.0, 0.04, 0.15, 2).unwrap();
    assert!(
        (small.values[0] - u2).abs() < 5e-4,
        "fd {} vs expansion {u2}",
        small.values[0]
    );
    println!("PASS linear-price limit: FD psi route matches expansion as gamma nu -> 0");
}

#[test]
fn custom_payoff_smooth_probe_converges_faster() {
    // a smooth bounded payoff gains convergence order over the call spread
    let m = heston_model(
        0.25,
        0.04,
        1.15,
        -0.4,
        SharpeRatio::AffineInY { intercept: 0.5, slope: 2.0 },
    )
    .unwrap();
    let smooth = PayoffY::custom(
        Arc::new(|y: f64| 0.03 / (1.0 + (-60.0 * (y - 0.0475)).exp())),
        0.03,
    )
    .unwrap();
    let spread = PayoffY::call_spread(0.035, 0.06).unwrap();
    let y_grid = [0.036, 0.04, 0.044];
    let taus = [0.2, 0.1, 0.05, 0.025];
    let r_smooth = convergence_order_probe(&m, &smooth, 25.0, &y_grid, &taus, 0).unwrap();
    let r_spread = convergence_order_probe(&m, &spread, 25.0, &y_grid, &taus, 0).unwrap();
    assert!(
        r_smooth.slope > r_spread.slope,
        "smooth slope {:.2} not above call-spread slope {:.2}",
        r_smooth.slope,
        r_spread.slope
    );
    println!(
        "PASS smooth-payoff probe: slope {:.2} > call-spread slope {:.2}",
        r_smooth.slope, r_spread.slope
    );
}

#[test]
fn gaussian_kernel_moment_property() {
    // X^n Y^m applied under the kernel reproduces Gaussian moments (n+m <= 3)
    let table = figure_heston_table();
    let (x, y, elapsed) = (0.0, 0.04, 0.35);
    let k = GaussianKernelParams::from_table(&table, x, y, elapsed).unwrap();
    for (p, q) in [(1usize, 0usize), (0, 1), (2, 0), (1, 1), (0, 2), (3, 0), (2, 1), (1, 2), (0, 3)]
    {
        let via_ops =
            indivol::semigroup::semigroup_apply_poly(&table, elapsed, &[(1.0, p, q)], x, y)
                .unwrap();
        let (via_quad, _) =
            semigroup_apply(&k, |x1, y1| x1.powi(p as i32) * y1.powi(q as i32), 1e-12).unwrap();
        assert!(
            (via_ops - via_quad).abs() < 1e-11,
            "moment ({p},{q}): {via_ops} vs {via_quad}"
        );
    }
    println!("PASS kernel moments: shift-operator moments match quadrature for n+m <= 3");
}

#[test]
fn traded_y_derivative_closed_form() {
    // dy u1(t1) = (T - t1) a01 (Dxx - Dx) uBS(t1)
    let m = affine_heston();
    let table = taylor_table(&m, 0.0, 0.04, 2).unwrap();
    let spec = CallSpec::new(0.05, 0.0, 0.5).unwrap();
    let v = indivol::traded::y_derivative_of_u1(&table, &spec, 0.2, 0.0);
    let expect = (0.5 - 0.2) * table.a.c01 * bs_gamma_factor(0.2, 0.0, table.sigma0(), 0.05, 0.5);
    assert!((v - expect).abs() < 1e-15);
    println!("PASS y-derivative closed form");
}
