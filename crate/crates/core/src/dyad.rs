//! Two-agent analysis.
//!
//! With `u_1 < u_2` and `mu = sigma_1 / sigma_2`, the best mean over the
//! single weight `a >= 0` is decided by where the unconstrained optimum
//! `(x_1, x_2)` on the ellipse falls relative to `u_1 <= x_1 <= x_2 <= u_2`:
//! at `a = 0` (polarization), as `a -> infinity` (consensus), or at a
//! finite `a*` (compromise).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{Population, Tolerances};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Polarization,
    Consensus,
    Compromise,
    /// Equal convictions: every weight yields consensus at the shared value.
    DegenerateConsensus,
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Regime::Polarization => "polarization",
            Regime::Consensus => "consensus",
            Regime::Compromise => "compromise",
            Regime::DegenerateConsensus => "degenerate_consensus",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrichotomyOutcome {
    pub regime: Regime,
    /// `sigma_low / sigma_high` where low/high refer to conviction.
    pub mu: f64,
    /// Supremum of the mean over `a >= 0`.
    pub best_mean: f64,
    pub a_star: Option<f64>,
    /// False for consensus, where the supremum is only a limit.
    pub attained: bool,
    /// Opinions at the best state, in the caller's agent order.
    pub x_at_best: [f64; 2],
    /// Whether the agents were swapped to put the lower conviction first.
    pub swapped: bool,
    /// `u_2 / u_1`: polarization holds exactly when `mu` reaches this.
    pub polarization_threshold: f64,
    /// `u_2^2 / u_1^2`, the squared form of the same threshold. Reported
    /// for comparison only; classification never uses it.
    pub squared_threshold: f64,
}

/// Unconstrained optimum on the ellipse, lower-conviction agent first.
pub fn optimum_on_ellipse(u1: f64, u2: f64, mu: f64) -> (f64, f64) {
    let q = mu * u1 * u1 + u2 * u2;
    let x1 = 0.5 * u1 + 0.5 * (q / (mu * (1.0 + mu))).sqrt();
    let x2 = 0.5 * u2 + 0.5 * (mu * q / (1.0 + mu)).sqrt();
    (x1, x2)
}

fn unpack(pop: &Population) -> Result<(bool, [f64; 2], [f64; 2])> {
    if pop.len() != 2 {
        return Err(Error::NotADyad(pop.len()));
    }
    let (u, s) = (pop.u(), pop.sigma());
    let swapped = u[0] > u[1];
    Ok(if swapped { (true, [u[1], u[0]], [s[1], s[0]]) } else { (false, [u[0], u[1]], [s[0], s[1]]) })
}

pub fn classify(pop: &Population) -> Result<TrichotomyOutcome> {
    let (swapped, [u1, u2], [s1, s2]) = unpack(pop)?;
    let mu = s1 / s2;
    let order = |a: f64, b: f64| if swapped { [b, a] } else { [a, b] };
    let mut out = TrichotomyOutcome {
        regime: Regime::DegenerateConsensus,
        mu,
        best_mean: u1,
        a_star: None,
        attained: true,
        x_at_best: [u1, u1],
        swapped,
        polarization_threshold: u2 / u1,
        squared_threshold: (u2 * u2) / (u1 * u1),
    };
    if u1 == u2 {
        return Ok(out);
    }

    let (x1, x2) = optimum_on_ellipse(u1, u2, mu);
    if x1 <= u1 {
        out.regime = Regime::Polarization;
        out.best_mean = 0.5 * (u1 + u2);
        out.x_at_best = order(u1, u2);
    } else if x1 >= x2 {
        let m = (s1 * u1 + s2 * u2) / (s1 + s2);
        out.regime = Regime::Consensus;
        out.best_mean = m;
        out.attained = false;
        out.x_at_best = [m, m];
    } else {
        out.regime = Regime::Compromise;
        out.a_star = Some(s1 * (x1 - u1) * x1 / (x2 - x1));
        out.best_mean = 0.5 * (x1 + x2);
        out.x_at_best = order(x1, x2);
    }
    Ok(out)
}

/// The stubbornness ratio below which the dyad optimum is consensus:
/// the root of `x_1(mu) = x_2(mu)` in `(0, 1]`, by bisection.
pub fn mu_star(u1: f64, u2: f64, tol: &Tolerances) -> Result<f64> {
    if !(u1 > 0.0 && u2 > 0.0 && u1.is_finite() && u2.is_finite()) {
        return Err(Error::NonPositiveConviction { index: 0, value: u1.min(u2) });
    }
    if u1 == u2 {
        return Err(Error::EqualConvictions);
    }
    let (u1, u2) = (u1.min(u2), u1.max(u2));
    let gap = |mu: f64| {
        let (x1, x2) = optimum_on_ellipse(u1, u2, mu);
        x1 - x2
    };
    // gap(1) = (u1 - u2)/2 < 0 and gap -> +inf as mu -> 0
    let mut hi = 1.0;
    let mut lo = 0.5;
    while gap(lo) <= 0.0 {
        hi = lo;
        lo *= 0.5;
    }
    while hi - lo > tol.root_tol * hi.max(1e-300) {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if gap(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
