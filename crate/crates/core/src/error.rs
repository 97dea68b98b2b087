//! Crate-wide error type.

use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    #[error("evaluation outside model domain: ({x}, {y}) not in [{x_min}, {x_max}] x [{y_min}, {y_max}]")]
    OutsideDomain {
        x: f64,
        y: f64,
        x_min: f64,
        x_max: f64,
        y_min: f64,
        y_max: f64,
    },

    #[error("coefficient `{name}` invalid at ({x}, {y}): {reason}")]
    Coefficient { name: &'static str, x: f64, y: f64, reason: String },

    #[error("non-finite derivative of `{name}` at index ({ix}, {iy})")]
    NonFiniteDerivative { name: &'static str, ix: usize, iy: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },

    #[error("Feller condition violated: 2*a*kappa = {lhs} < b^2 = {rhs}")]
    Feller { lhs: f64, rhs: f64 },

    #[error("Taylor expansion order {0} not supported (max 2)")]
    Order(usize),

    #[error("operator exceeds maximum total derivative order {max}: got {got}")]
    OperatorOrder { got: usize, max: usize },

    #[error("operator family still depends on un-integrated time variables")]
    UnintegratedTime,

    #[error("quadrature did not converge: best estimate {estimate}, error bound {bound}, tolerance {tol}")]
    QuadratureNonConvergence { estimate: f64, bound: f64, tol: f64 },

    #[error("price {price} at or below lower no-arbitrage bound {bound}")]
    PriceBelowIntrinsic { price: f64, bound: f64 },

    #[error("price {price} at or above upper no-arbitrage bound {bound}")]
    PriceAboveSpot { price: f64, bound: f64 },

    #[error("implied volatility outside bracket [{lo}, {hi}]")]
    VolOutsideBracket { lo: f64, hi: f64 },

    #[error("vanishing vega at tau = {tau}, moneyness {moneyness}; use the closed-form path")]
    VanishingVega { tau: f64, moneyness: f64 },

    #[error("closed-form implied volatility requires the expansion point to equal the evaluation point; got ({xbar}, {ybar}) vs ({x}, {y})")]
    ExpansionPointMismatch { xbar: f64, ybar: f64, x: f64, y: f64 },

    #[error("transform degenerates at rho^2 = 1; use the complete-market (rho = +/-1) limit instead")]
    DegenerateTransform,

    #[error("leading distortion term is not positive at y = {y}: xi0 = {xi0} (quadrature breakdown)")]
    NonPositiveXi { y: f64, xi0: f64 },

    #[error("finite-difference solve diverged at step {step}: max |value| = {max_abs}")]
    FdDivergence { step: usize, max_abs: f64 },

    #[error("invalid grid: {0}")]
    Grid(String),

    #[error("gamma*nu must be nonzero for indifference quantities")]
    ZeroGammaNu,

    #[error("unbounded payoff rejected: indifference price undefined (expected utility is -infinity)")]
    UnboundedPayoff,

    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
