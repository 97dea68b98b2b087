//! Batch front end: loads model configs, runs pricing / surface / spread /
//! verification commands, writes CSV or JSON.
//!
//! Exit codes: 0 success, 2 config error, 3 numeric error, 4 verification
//! failure.

mod run_config;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use indivol::config::{BuiltinKind, ModelSource};
use indivol::implied_vol::{self, Side};
use indivol::model::{taylor_table, LsvModel, TaylorTable};
use indivol::nontraded::{self, PayoffY};
use indivol::oracles;
use indivol::traded::{self, CallSpec, IndifferenceSetting};
use indivol::Error;

use run_config::{fmt17, RunConfig};

#[derive(Parser)]
#[command(name = "indivol", version, about = "Indifference prices and implied volatilities")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Price expansion terms over the strike/maturity sweep
    Price(CommonArgs),
    /// Buyer/seller implied-volatility surface (plus semi-analytic rows for
    /// Heston builtins)
    IvSurface(CommonArgs),
    /// Half bid-ask spread over the sweep
    Spread(CommonArgs),
    /// Non-traded claim prices over the k1 sweep, with the FD oracle column
    NontradedPrice(CommonArgs),
    /// Run the oracle-agreement and degeneracy suite
    Verify(CommonArgs),
    /// Fit empirical convergence orders against the FD oracle
    OrderCheck(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Run configuration file (TOML or JSON)
    #[arg(long)]
    config: PathBuf,
    /// Output path (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for sweeps (0 = rayon default)
    #[arg(long)]
    jobs: Option<usize>,
    /// Seed override for all randomness
    #[arg(long)]
    seed: Option<u64>,
    /// Expansion order override (0, 1 or 2)
    #[arg(long)]
    order: Option<usize>,
    /// Side override: buyer | seller | both
    #[arg(long)]
    side: Option<String>,
}

fn main() {
    let cli = Cli::parse();
    let code = match &cli.cmd {
        Cmd::Price(a) => run(a, cmd_price),
        Cmd::IvSurface(a) => run(a, cmd_iv_surface),
        Cmd::Spread(a) => run(a, cmd_spread),
        Cmd::NontradedPrice(a) => run(a, cmd_nontraded),
        Cmd::Verify(a) => run(a, cmd_verify),
        Cmd::OrderCheck(a) => run(a, cmd_order_check),
    };
    std::process::exit(code);
}

struct Ctx {
    cfg: RunConfig,
    source: ModelSource,
}

fn run(args: &CommonArgs, f: fn(&Ctx) -> Result<String, CmdError>) -> i32 {
    let mut cfg = match RunConfig::load(&args.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            return 2;
        }
    };
    if let Some(seed) = args.seed {
        cfg.options.seed = seed;
    }
    if let Some(order) = args.order {
        if order > 2 {
            eprintln!("config error: order must be 0, 1 or 2");
            return 2;
        }
        cfg.options.order = order;
    }
    if let Some(side) = &args.side {
        cfg.options.side = side.clone();
    }
    if let Some(jobs) = args.jobs {
        cfg.options.jobs = jobs;
    }
    if cfg.options.jobs > 0 {
        // best effort; the pool may already exist in tests
        let _ = rayon::ThreadPoolBuilder::new().num_threads(cfg.options.jobs).build_global();
    }
    let source = match cfg.model.build() {
        Ok(s) => s,
        Err(e) => {
            eprintln!("config error: {e}");
            return 2;
        }
    };
    let ctx = Ctx { cfg, source };
    match f(&ctx) {
        Ok(output) => {
            let res = match &args.out {
                Some(path) => std::fs::write(path, output).map_err(|e| e.to_string()),
                None => {
                    print!("{output}");
                    Ok(())
                }
            };
            match res {
                Ok(()) => 0,
                Err(e) => {
                    eprintln!("output error: {e}");
                    2
                }
            }
        }
        Err(CmdError::Config(e)) => {
            eprintln!("config error: {e}");
            2
        }
        Err(CmdError::Numeric(e)) => {
            eprintln!("numeric error: {e}");
            3
        }
        Err(CmdError::Verification(out, failures)) => {
            let _ = match &args.out {
                Some(path) => std::fs::write(path, out),
                None => {
                    print!("{out}");
                    Ok(())
                }
            };
            for f in failures {
                eprintln!("FAILED: {f}");
            }
            4
        }
    }
}

enum CmdError {
    Config(String),
    Numeric(String),
    Verification(String, Vec<String>),
}

impl From<Error> for CmdError {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::Parameter { .. } => CmdError::Config(e.to_string()),
            other => CmdError::Numeric(other.to_string()),
        }
    }
}

impl Ctx {
    fn table(&self) -> Result<TaylorTable<f64>, Error> {
        match &self.source {
            ModelSource::Model { model, .. } => {
                taylor_table(model, self.cfg.setting.x, self.cfg.setting.y, 2)
            }
            ModelSource::Table(t) => Ok(*t),
        }
    }

    fn model(&self) -> Result<&LsvModel<f64>, CmdError> {
        match &self.source {
            ModelSource::Model { model, .. } => Ok(model),
            ModelSource::Table(_) => Err(CmdError::Config(
                "this command needs a builtin model, not a bare coefficient table".into(),
            )),
        }
    }

    fn sides(&self) -> Result<Vec<Side>, CmdError> {
        match self.cfg.options.side.as_str() {
            "buyer" => Ok(vec![Side::Buyer]),
            "seller" => Ok(vec![Side::Seller]),
            "both" => Ok(vec![Side::Buyer, Side::Seller]),
            other => Err(CmdError::Config(format!("unknown side `{other}`"))),
        }
    }

    fn sweep_grids(&self) -> Result<(Vec<f64>, Vec<f64>), CmdError> {
        let s = &self.cfg.sweep;
        if s.strikes.is_empty() || s.maturities.is_empty() {
            return Err(CmdError::Config("sweep needs non-empty strikes and maturities".into()));
        }
        Ok((s.strikes.clone(), s.maturities.clone()))
    }
}

fn cmd_price(ctx: &Ctx) -> Result<String, CmdError> {
    let table = ctx.table()?;
    let (strikes, maturities) = ctx.sweep_grids()?;
    let sides = ctx.sides()?;
    let s = &ctx.cfg.setting;
    let mut out =
        String::from("k,T,side,gamma_nu,u0,u1,u2_lin,u2_ind,ubar0,ubar1,ubar2,qbar2\n");
    let mut numeric_failures = 0usize;
    for &maturity in &maturities {
        for &k in &strikes {
            for &side in &sides {
                let setting = IndifferenceSetting {
                    gamma_nu: side.signed(s.gamma_nu),
                    x: s.x,
                    y: s.y,
                };
                let row = CallSpec::new(k, s.t, maturity)
                    .and_then(|spec| traded::u_terms(&table, &spec, &setting));
                match row {
                    Ok(p) => {
                        out.push_str(&format!(
                            "{},{},{},{},{},{},{},{},{},{},{},{}\n",
                            fmt17(k),
                            fmt17(maturity),
                            side.label(),
                            fmt17(setting.gamma_nu),
                            fmt17(p.u0),
                            fmt17(p.u1),
                            fmt17(p.u2_lin),
                            fmt17(p.u2_ind()),
                            fmt17(p.ubar(0)),
                            fmt17(p.ubar(1)),
                            fmt17(p.ubar(2)),
                            fmt17(p.qbar2()),
                        ));
                    }
                    Err(e) => {
                        numeric_failures += 1;
                        eprintln!("row k={k} T={maturity} {}: {e}", side.label());
                        out.push_str(&format!(
                            "{},{},{},{},nan,nan,nan,nan,nan,nan,nan,nan\n",
                            fmt17(k),
                            fmt17(maturity),
                            side.label(),
                            fmt17(setting.gamma_nu),
                        ));
                    }
                }
            }
        }
    }
    if numeric_failures > 0 {
        return Err(CmdError::Numeric(format!("{numeric_failures} rows failed")));
    }
    Ok(out)
}

const SURFACE_HEADER: &str =
    "k,T,L,side,sigma0,sigma1,sigma2_lin,sigma2_ind,ivbar2,half_spread\n";

fn surface_rows(
    ctx: &Ctx,
    table: &TaylorTable<f64>,
    sides: &[Side],
    out: &mut String,
) -> Result<usize, CmdError> {
    let (strikes, maturities) = ctx.sweep_grids()?;
    let s = &ctx.cfg.setting;
    let setting = IndifferenceSetting { gamma_nu: s.gamma_nu, x: s.x, y: s.y };
    let mut failures = 0usize;
    for &side in sides {
        let rows =
            implied_vol::surface_from_table(table, &setting, &strikes, &maturities, s.t, side);
        for row in rows {
            match &row.result {
                Ok(iv) => out.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{},{}\n",
                    fmt17(row.k),
                    fmt17(row.maturity),
                    fmt17(iv.moneyness),
                    side.label(),
                    fmt17(iv.sigma0),
                    fmt17(iv.sigma1),
                    fmt17(iv.sigma2_lin),
                    fmt17(iv.sigma2_ind()),
                    fmt17(iv.ivbar(2)),
                    fmt17(iv.half_spread()),
                )),
                Err(e) => {
                    failures += 1;
                    eprintln!("row k={} T={} {}: {e}", row.k, row.maturity, side.label());
                    out.push_str(&format!(
                        "{},{},{},{},nan,nan,nan,nan,nan,nan\n",
                        fmt17(row.k),
                        fmt17(row.maturity),
                        fmt17(row.k - s.x),
                        side.label(),
                    ));
                }
            }
        }
    }
    Ok(failures)
}

fn cmd_iv_surface(ctx: &Ctx) -> Result<String, CmdError> {
    let table = ctx.table()?;
    let sides = ctx.sides()?;
    let s = &ctx.cfg.setting;
    let mut out = String::from(SURFACE_HEADER);
    let mut failures = surface_rows(ctx, &table, &sides, &mut out)?;

    // The four-curve dataset: for a Heston builtin also emit the
    // second-order curve without the indifference term ("mid2") and the
    // semi-analytic implied volatility ("exact").
    if ctx.cfg.options.exact {
        if let ModelSource::Model { builtin: BuiltinKind::Heston { delta, theta, kappa, rho }, .. } =
            &ctx.source
        {
            let (strikes, maturities) = ctx.sweep_grids()?;
            let setting = IndifferenceSetting { gamma_nu: s.gamma_nu, x: s.x, y: s.y };
            for &maturity in &maturities {
                for &k in &strikes {
                    let spec = CallSpec::new(k, s.t, maturity)?;
                    let iv = implied_vol::iv_terms_closed_form(&table, &spec, &setting)?;
                    let mid2 = iv.ivbar(2) - iv.sigma2_ind();
                    out.push_str(&format!(
                        "{},{},{},mid2,{},{},{},{},{},{}\n",
                        fmt17(k),
                        fmt17(maturity),
                        fmt17(iv.moneyness),
                        fmt17(iv.sigma0),
                        fmt17(iv.sigma1),
                        fmt17(iv.sigma2_lin),
                        fmt17(0.0),
                        fmt17(mid2),
                        fmt17(0.0),
                    ));
                    let exact_row = oracles::heston_call_exact(
                        *delta,
                        *theta,
                        *kappa,
                        *rho,
                        s.x,
                        s.y,
                        k,
                        maturity - s.t,
                    )
                    .and_then(|price| {
                        implied_vol::implied_vol_invert(price, s.t, s.x, k, maturity)
                    });
                    match exact_row {
                        Ok(exact) => out.push_str(&format!(
                            "{},{},{},exact,nan,nan,nan,nan,{},nan\n",
                            fmt17(k),
                            fmt17(maturity),
                            fmt17(k - s.x),
                            fmt17(exact),
                        )),
                        Err(e) => {
                            failures += 1;
                            eprintln!("exact row k={k} T={maturity}: {e}");
                        }
                    }
                }
            }
        }
    }
    if failures > 0 {
        return Err(CmdError::Numeric(format!("{failures} rows failed")));
    }
    Ok(out)
}

fn cmd_spread(ctx: &Ctx) -> Result<String, CmdError> {
    let table = ctx.table()?;
    let (strikes, maturities) = ctx.sweep_grids()?;
    let s = &ctx.cfg.setting;
    let setting = IndifferenceSetting { gamma_nu: s.gamma_nu.abs(), x: s.x, y: s.y };
    let mut out = String::from("k,T,L,half_spread\n");
    for &maturity in &maturities {
        for &k in &strikes {
            let spec = CallSpec::new(k, s.t, maturity)?;
            let iv = implied_vol::iv_terms_closed_form(&table, &spec, &setting)?;
            out.push_str(&format!(
                "{},{},{},{}\n",
                fmt17(k),
                fmt17(maturity),
                fmt17(iv.moneyness),
                fmt17(iv.half_spread()),
            ));
        }
    }
    Ok(out)
}

fn cmd_nontraded(ctx: &Ctx) -> Result<String, CmdError> {
    let model = ctx.model()?;
    let s = &ctx.cfg.setting;
    let sweep = &ctx.cfg.sweep;
    let k2 = sweep.k2.ok_or(CmdError::Config("sweep.k2 missing".into()))?;
    if sweep.k1.is_empty() {
        return Err(CmdError::Config("sweep.k1 must be non-empty".into()));
    }
    let maturity = *sweep
        .maturities
        .first()
        .ok_or(CmdError::Config("sweep.maturities must hold the claim maturity".into()))?;
    let tau = maturity - s.t;
    let order = ctx.cfg.options.order;
    let mut out = String::from("k1,k2,gamma_nu,ubar_0,ubar_1,ubar_2,oracle_u,abs_err\n");
    for &k1 in &sweep.k1 {
        let payoff = PayoffY::call_spread(k1, k2)?;
        let mut ubars = [f64::NAN; 3];
        for m in 0..=2usize {
            ubars[m] =
                nontraded::nontraded_price(model, &payoff, s.gamma_nu, s.t, s.y, maturity, m)?;
        }
        let oracle = oracles::nontraded_exact_fd(
            model,
            &payoff,
            s.gamma_nu,
            tau,
            &[s.y],
            ctx.cfg.options.fd.ny1d,
        )
        ?;
        let u_exact = oracle.values[0];
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            fmt17(k1),
            fmt17(k2),
            fmt17(s.gamma_nu),
            fmt17(ubars[0]),
            fmt17(ubars[1]),
            fmt17(ubars[2]),
            fmt17(u_exact),
            fmt17((ubars[order.min(2)] - u_exact).abs()),
        ));
    }
    Ok(out)
}

fn cmd_verify(ctx: &Ctx) -> Result<String, CmdError> {
    let mut out = String::new();
    let mut failures: Vec<String> = Vec::new();
    let mut check = |name: &str, result: Result<(bool, String), Error>| match result {
        Ok((true, detail)) => out.push_str(&format!("PASS  {name}: {detail}\n")),
        Ok((false, detail)) => {
            out.push_str(&format!("FAIL  {name}: {detail}\n"));
            failures.push(format!("{name}: {detail}"));
        }
        Err(e) => {
            out.push_str(&format!("FAIL  {name}: error {e}\n"));
            failures.push(format!("{name}: {e}"));
        }
    };

    check("constant-table degeneracy", verify_degeneracy());
    check("indifference term vanishes (rho = 1, local vol)", verify_ind_kills(ctx));
    check("closed-form vs generic implied vol", verify_closed_vs_generic(ctx));
    check("implied vol inverter round trip", verify_inverter());
    check("operator identities", verify_operator_identities(ctx));
    if let ModelSource::Model { builtin: BuiltinKind::Heston { .. }, .. } = &ctx.source {
        check("oracle triangle (analytic / MC / FD)", verify_oracle_triangle(ctx));
    }

    if failures.is_empty() {
        Ok(out)
    } else {
        Err(CmdError::Verification(out, failures))
    }
}

fn verify_degeneracy() -> Result<(bool, String), Error> {
    let t = TaylorTable::<f64>::constant(0.02, 0.0008, 0.046, -0.0032, 0.125, -0.4)?;
    let spec = CallSpec::new(0.05, 0.0, 0.5)?;
    let setting = IndifferenceSetting { gamma_nu: 25.0, x: 0.0, y: 0.0 };
    let p = traded::u_terms(&t, &spec, &setting)?;
    let iv = implied_vol::iv_terms_closed_form(&t, &spec, &setting)?;
    let bs = indivol::black_scholes::bs_call(0.0, 0.0, t.sigma0(), 0.05, 0.5);
    let ok = (p.ubar(2) - bs).abs() < 1e-12 && (iv.ivbar(2) - t.sigma0()).abs() < 1e-12;
    Ok((ok, format!("ubar2 - uBS = {:.2e}", p.ubar(2) - bs)))
}

fn verify_ind_kills(ctx: &Ctx) -> Result<(bool, String), Error> {
    let mut t = ctx.table()?;
    let spec = CallSpec::new(ctx.cfg.setting.x, ctx.cfg.setting.t, ctx.cfg.setting.t + 0.25)?;
    let setting =
        IndifferenceSetting { gamma_nu: 25.0, x: ctx.cfg.setting.x, y: ctx.cfg.setting.y };
    t.rho = 1.0;
    let p1 = traded::u_terms(&t, &spec, &setting)?;
    let mut t2 = ctx.table()?;
    t2.a.c01 = 0.0;
    t2.a.c02 = 0.0;
    t2.a.c11 = 0.0;
    let p2 = traded::u_terms(&t2, &spec, &setting)?;
    let ok = p1.u2_ind() == 0.0 && p2.u2_ind() == 0.0;
    Ok((ok, format!("rho=1: {}, a01=0: {}", p1.u2_ind(), p2.u2_ind())))
}

fn verify_closed_vs_generic(ctx: &Ctx) -> Result<(bool, String), Error> {
    let table = ctx.table()?;
    let s = &ctx.cfg.setting;
    let mut worst = 0.0f64;
    for tau in [0.1, 0.25, 1.0] {
        for l in [-0.15, 0.0, 0.15] {
            let spec = CallSpec::new(s.x + l, s.t, s.t + tau)?;
            let setting = IndifferenceSetting { gamma_nu: s.gamma_nu, x: s.x, y: s.y };
            let closed = implied_vol::iv_terms_closed_form(&table, &spec, &setting)?;
            let generic =
                implied_vol::iv_terms_generic(&traded::u_terms(&table, &spec, &setting)?)?;
            worst = worst.max((closed.ivbar(2) - generic.ivbar(2)).abs());
        }
    }
    Ok((worst < 1e-10, format!("max |closed - generic| = {worst:.2e}")))
}

fn verify_inverter() -> Result<(bool, String), Error> {
    let mut worst = 0.0f64;
    for sigma in [0.1_f64, 0.2, 0.5] {
        for l in [-0.3, 0.0, 0.3] {
            for tau in [0.1, 1.0] {
                let p = indivol::black_scholes::bs_call(0.0, 0.0, sigma, l, tau);
                let intrinsic = (1.0 - l.exp()).max(0.0);
                let vega = indivol::black_scholes::bs_vega(0.0, 0.0, sigma, l, tau);
                // skip wings whose f64 price cannot carry the round trip
                if p <= intrinsic || p >= 1.0 || f64::EPSILON * p / vega.max(1e-300) > 1e-11 {
                    continue;
                }
                let iv = implied_vol::implied_vol_invert(p, 0.0, 0.0, l, tau)?;
                worst = worst.max((iv - sigma).abs());
            }
        }
    }
    let bounds_ok = implied_vol::implied_vol_invert(0.0, 0.0, 0.1, 0.0, 1.0).is_err();
    Ok((worst < 1e-10 && bounds_ok, format!("max round-trip error = {worst:.2e}")))
}

fn verify_operator_identities(ctx: &Ctx) -> Result<(bool, String), Error> {
    use indivol::semigroup::{commutation_check, TestFunction2};
    use indivol::weyl::{self, TimeSlot};
    let table = ctx.table()?;
    let x = weyl::shift_operator_x(&table, TimeSlot::First);
    let y = weyl::shift_operator_y(&table, TimeSlot::First);
    let commute = x.compose(&y)?.sub(&y.compose(&x)?).is_zero();
    let pts = [(ctx.cfg.setting.x, ctx.cfg.setting.y)];
    let f = TestFunction2::exponential(0.3, 0.2);
    let res = commutation_check(&table, 1, &f, 0.2, &pts, 1e-10)?;
    let ok = commute && res < 1e-8;
    Ok((ok, format!("XY=YX: {commute}, commutation residual = {res:.2e}")))
}

fn verify_oracle_triangle(ctx: &Ctx) -> Result<(bool, String), Error> {
    let model = match &ctx.source {
        ModelSource::Model { model, .. } => model,
        _ => unreachable!("guarded by caller"),
    };
    let (delta, theta, kappa, rho) = match &ctx.source {
        ModelSource::Model { builtin: BuiltinKind::Heston { delta, theta, kappa, rho }, .. } => {
            (*delta, *theta, *kappa, *rho)
        }
        _ => unreachable!("guarded by caller"),
    };
    let s = &ctx.cfg.setting;
    let tau = 0.25;
    let fd = &ctx.cfg.options.fd;
    let dom = oracles::FdDomain {
        x_min: fd.x_min,
        x_max: fd.x_max,
        y_min: fd.y_min,
        y_max: fd.y_max,
        t: 0.0,
        maturity: tau,
    };
    let eta = oracles::solve_eta_fd(model, &dom, 101, 51, 200)?;
    let mut worst = 0.0f64;
    let mut reports: Vec<String> = Vec::new();
    for l in [-0.1, 0.0, 0.1] {
        let k = s.x + l;
        let exact = oracles::heston_call_exact(delta, theta, kappa, rho, s.x, s.y, k, tau)?;
        let mc = oracles::mc_linear_price(
            model,
            &move |x: f64| (x.exp() - k.exp()).max(0.0),
            0.0,
            s.x,
            s.y,
            tau,
            ctx.cfg.options.mc_paths,
            ctx.cfg.options.mc_steps,
            ctx.cfg.options.seed,
        )?;
        let u = oracles::solve_u_fd(
            model,
            &eta,
            &move |x: f64| (x.exp() - k.exp()).max(0.0),
            0.0,
            &dom,
            200,
        )?;
        let fd_price = u.interp2(s.x, s.y);
        let d1 = (mc.price - exact).abs() / (3.0 * mc.standard_error).max(1e-12);
        let d2 = (fd_price - exact).abs() / (3.0 * u.richardson + 5e-4);
        worst = worst.max(d1).max(d2);
        reports.push(mc.report().to_json());
        reports.push(u.report("douglas_adi_imex", Some(s.x), s.y).to_json());
    }
    Ok((worst < 1.0, format!("worst normalized disagreement = {worst:.2}\n{}", reports.join("\n"))))
}

fn cmd_order_check(ctx: &Ctx) -> Result<String, CmdError> {
    let model = ctx.model()?;
    let s = &ctx.cfg.setting;
    let sweep = &ctx.cfg.sweep;
    let k2 = sweep.k2.ok_or(CmdError::Config("sweep.k2 missing".into()))?;
    let k1 = *sweep.k1.first().ok_or(CmdError::Config("sweep.k1 must be non-empty".into()))?;
    let payoff = PayoffY::call_spread(k1, k2)?;
    let y_grid: Vec<f64> = (-3..=3).map(|i| s.y * (1.0 + 0.05 * i as f64)).collect();
    let taus = ctx.cfg.options.taus.clone();

    let mut slopes = [0.0f64; 3];
    let mut flagged = [false; 3];
    let mut errors_json = String::new();
    for m in 0..=2usize {
        let report = nontraded::convergence_order_probe(
            model,
            &payoff,
            s.gamma_nu,
            &y_grid,
            &taus,
            m,
        )?;
        slopes[m] = report.slope;
        flagged[m] = report.oracle_limited;
        let pts: Vec<String> = report
            .errors
            .iter()
            .map(|(tau, err)| format!("[{},{}]", fmt17(*tau), fmt17(*err)))
            .collect();
        errors_json.push_str(&format!("    \"m{m}\": [{}],\n", pts.join(",")));
    }
    let mut fail: Vec<String> = Vec::new();
    for (m, slope) in slopes.iter().enumerate() {
        let bound = (m as f64 + 2.0) / 2.0 - 0.3;
        if *slope < bound {
            fail.push(format!("slope({m}) = {slope:.3} below {bound:.2}"));
        }
    }
    let gap = slopes[2] - slopes[0];
    if !(0.6..=1.4).contains(&gap) {
        fail.push(format!("slope(2) - slope(0) = {gap:.3} outside [0.6, 1.4]"));
    }
    let out = format!
        (
        "{{\n  \"slopes\": {{\"m0\": {}, \"m1\": {}, \"m2\": {}}},\n  \"oracle_limited\": [{}, {}, {}],\n  \"errors\": {{\n{}  }},\n  \"pass\": {}\n}}\n",
        fmt17(slopes[0]),
        fmt17(slopes[1]),
        fmt17(slopes[2]),
        flagged[0],
        flagged[1],
        flagged[2],
        errors_json,
        fail.is_empty(),
    );
    if fail.is_empty() {
        Ok(out)
    } else {
        Err(CmdError::Verification(out, fail))
    }
}
