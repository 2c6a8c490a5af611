//! The opinion vector field, its equilibrium and the mean/variance
//! functionals.
//!
//! Agent `i` evolves as
//! `x_i' = sum_j a_ij (x_j - x_i) + sigma_i (u_i - x_i) x_i`.
//! For a symmetric nonnegative `A` there is a unique positive equilibrium,
//! which attracts every positive initial state. [`equilibrium`] finds it
//! by damped Newton from `x = u`, and falls back to adaptive integration
//! when Newton fails or leaves the positive orthant.

pub mod ode;

use log::warn;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::parallel::{self, Execution};
use crate::types::{Network, Population, Tolerances};
use ode::{DormandPrince, StepControl};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolveMethod {
    Newton,
    Integration,
    Decoupled,
}

impl std::fmt::Display for SolveMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            SolveMethod::Newton => "newton",
            SolveMethod::Integration => "integration",
            SolveMethod::Decoupled => "decoupled",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumState {
    pub x: Vec<f64>,
    /// `max_i |rhs_i(x)| / max(1, max weighted degree)`.
    pub residual_norm: f64,
    pub method: SolveMethod,
}

impl EquilibriumState {
    pub fn mean(&self) -> f64 {
        mean(&self.x)
    }

    pub fn variance(&self) -> f64 {
        variance(&self.x)
    }
}

fn check_len(pop: &Population, net: &Network, x: &[f64]) -> Result<()> {
    if net.len() != pop.len() {
        return Err(Error::LengthMismatch { expected: pop.len(), found: net.len() });
    }
    if x.len() != pop.len() {
        return Err(Error::LengthMismatch { expected: pop.len(), found: x.len() });
    }
    Ok(())
}

fn rhs_into(pop: &Population, net: &Network, x: &[f64], out: &mut [f64]) {
    let (u, sigma) = (pop.u(), pop.sigma());
    for i in 0..x.len() {
        out[i] = sigma[i] * (u[i] - x[i]) * x[i];
    }
    for e in net.edges() {
        let flow = e.w * (x[e.j] - x[e.i]);
        out[e.i] += flow;
        out[e.j] -= flow;
    }
}

/// The vector field evaluated at `x`.
pub fn rhs(pop: &Population, net: &Network, x: &[f64]) -> Result<Vec<f64>> {
    check_len(pop, net, x)?;
    let mut out = vec![0.0; x.len()];
    rhs_into(pop, net, x, &mut out);
    Ok(out)
}

/// Analytic Jacobian of [`rhs`].
pub fn jacobian(pop: &Population, net: &Network, x: &[f64]) -> Result<DMatrix<f64>> {
    check_len(pop, net, x)?;
    let n = x.len();
    let (u, sigma) = (pop.u(), pop.sigma());
    let mut jac = DMatrix::zeros(n, n);
    for i in 0..n {
        jac[(i, i)] = sigma[i] * (u[i] - 2.0 * x[i]);
    }
    for e in net.edges() {
        jac[(e.i, e.j)] += e.w;
        jac[(e.j, e.i)] += e.w;
        jac[(e.i, e.i)] -= e.w;
        jac[(e.j, e.j)] -= e.w;
    }
    Ok(jac)
}

/// Normalizer for residuals: the coupling magnitude, at least one.
pub fn residual_scale(net: &Network) -> f64 {
    net.max_degree().max(1.0)
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Scaled max-norm residual of `x`.
pub fn residual(pop: &Population, net: &Network, x: &[f64]) -> Result<f64> {
    Ok(max_abs(&rhs(pop, net, x)?) / residual_scale(net))
}

/// `min(u) <= x_i <= max(u)` up to `slack`.
pub fn is_confined(pop: &Population, x: &[f64], slack: f64) -> bool {
    let (lo, hi) = (pop.u_min(), pop.u_max());
    x.iter().all(|&v| v >= lo - slack && v <= hi + slack)
}

fn confinement_slack(pop: &Population, tol: &Tolerances) -> f64 {
    (1e3 * tol.eq_tol).max(1e-9) * pop.u_max()
}

const POLISH_STEPS: usize = 4;

/// Damped Newton iteration on `rhs(x) = 0` from `x0`. Returns the
/// converged point and its scaled residual, or `None` on failure.
pub fn newton(
    pop: &Population,
    net: &Network,
    x0: &[f64],
    tol: &Tolerances,
    max_iter: usize,
) -> Result<Option<(Vec<f64>, f64)>> {
    check_len(pop, net, x0)?;
    let n = x0.len();
    let scale = residual_scale(net);
    let mut x = x0.to_vec();
    let mut f = vec![0.0; n];
    let mut trial = vec![0.0; n];
    let mut f_trial = vec![0.0; n];
    rhs_into(pop, net, &x, &mut f);
    let mut norm = max_abs(&f);

    // Strong links make the scaled residual small long before the opinions
    // settle, so a few full steps are taken after the tolerance is met.
    let mut polish = 0;
    for _ in 0..max_iter {
        let converged = norm / scale <= tol.eq_tol;
        if converged && polish == POLISH_STEPS {
            return Ok(Some((x, norm / scale)));
        }
        let jac = jacobian(pop, net, &x)?;
        let rhs_vec = DVector::from_iterator(n, f.iter().map(|v| -v));
        let Some(dx) = jac.lu().solve(&rhs_vec) else {
            return Ok(converged.then_some((x, norm / scale)));
        };
        if converged {
            polish += 1;
            if dx.amax() <= 1e-14 * max_abs(&x).max(1.0) {
                return Ok(Some((x, norm / scale)));
            }
        }
        let mut t = 1.0;
        let mut accepted = false;
        while t > 1e-10 {
            for i in 0..n {
                trial[i] = x[i] + t * dx[i];
            }
            if trial.iter().all(|v| *v > 0.0) {
                rhs_into(pop, net, &trial, &mut f_trial);
                let trial_norm = max_abs(&f_trial);
                if trial_norm < (1.0 - 1e-4 * t) * norm {
                    std::mem::swap(&mut x, &mut trial);
                    std::mem::swap(&mut f, &mut f_trial);
                    norm = trial_norm;
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !accepted {
            // stagnated at the rounding floor
            return Ok((norm / scale <= tol.eq_tol).then_some((x, norm / scale)));
        }
    }
    Ok((norm / scale <= tol.eq_tol).then_some((x, norm / scale)))
}

/// Integrates from `x = u` until the scaled residual drops below `eq_tol`
/// or time reaches `t_max`. With `polish`, Newton is attempted from the
/// current state each time the residual has dropped by another decade.
pub fn integrate(pop: &Population, net: &Network, tol: &Tolerances, polish: bool) -> Result<EquilibriumState> {
    check_len(pop, net, pop.u())?;
    let scale = residual_scale(net);
    let control = StepControl { rtol: 1e-12, atol: 1e-13 * pop.u_max(), h0: 1e-3 / scale, h_max: 10.0 };
    let mut dp = DormandPrince::new(|y: &[f64], dy: &mut [f64]| rhs_into(pop, net, y, dy), pop.u().to_vec(), control);
    let slack = confinement_slack(pop, tol);
    let mut best = f64::INFINITY;
    let mut next_polish = 1e-3;
    const MAX_STEPS: usize = 20_000_000;

    while dp.t < tol.t_max && dp.accepted < MAX_STEPS {
        let res = max_abs(&dp.derivative) / scale;
        best = best.min(res);
        if res <= tol.eq_tol {
            return Ok(EquilibriumState { x: dp.y.clone(), residual_norm: res, method: SolveMethod::Integration });
        }
        if polish && res < next_polish {
            next_polish = res * 0.1;
            if let Some((x, r)) = newton(pop, net, &dp.y, tol, 50)? {
                if is_confined(pop, &x, slack) {
                    return Ok(EquilibriumState { x, residual_norm: r, method: SolveMethod::Integration });
                }
            }
        }
        if dp.step().is_none() {
            break;
        }
    }
    Err(Error::NoConvergence { residual: best })
}

/// The unique positive equilibrium of the model on `net`.
pub fn equilibrium(pop: &Population, net: &Network, tol: &Tolerances) -> Result<EquilibriumState> {
    check_len(pop, net, pop.u())?;
    if net.is_empty() {
        return Ok(EquilibriumState { x: pop.u().to_vec(), residual_norm: 0.0, method: SolveMethod::Decoupled });
    }
    if let Some((x, r)) = newton(pop, net, pop.u(), tol, 200)? {
        if is_confined(pop, &x, confinement_slack(pop, tol)) {
            return Ok(EquilibriumState { x, residual_norm: r, method: SolveMethod::Newton });
        }
    }
    integrate(pop, net, tol, true)
}

/// Equilibria of many independent instances, in input order.
pub fn equilibria(
    instances: &[(Population, Network)],
    tol: &Tolerances,
    exec: Execution,
) -> Vec<Result<EquilibriumState>> {
    parallel::map(instances, exec, |(p, n)| equilibrium(p, n, tol))
}

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Population variance (divides by N).
pub fn variance(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / x.len() as f64
}

/// Consensus value approached as the coupling grows without bound:
/// the stubbornness-weighted mean of the convictions.
pub fn consensus_limit(pop: &Population) -> f64 {
    let num: f64 = pop.u().iter().zip(pop.sigma()).map(|(u, s)| u * s).sum();
    let den: f64 = pop.sigma().iter().sum();
    num / den
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub scale: f64,
    pub mean: f64,
    pub variance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub points: Vec<SweepPoint>,
    /// The consensus-limit statements only hold on connected networks.
    pub connected: bool,
}

/// Solves the equilibrium on `scale * A` for every scale.
pub fn scale_sweep(
    pop: &Population,
    net: &Network,
    scales: &[f64],
    tol: &Tolerances,
    exec: Execution,
) -> Result<Sweep> {
    if let Some(&bad) = scales.iter().find(|s| !(**s > 0.0 && s.is_finite())) {
        return Err(Error::InvalidScale(bad));
    }
    let connected = net.is_connected();
    if !connected {
        warn!("scale sweep on a disconnected network; the consensus limit does not apply");
    }
    let points = parallel::map(scales, exec, |&scale| {
        let eq = equilibrium(pop, &net.scaled(scale), tol)?;
        Ok(SweepPoint { scale, mean: eq.mean(), variance: eq.variance() })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    Ok(Sweep { points, connected })
}

/// `steps` geometrically spaced scales from `min` to `max` inclusive.
pub fn geometric_scales(min: f64, max: f64, steps: usize) -> Vec<f64> {
    match steps {
        0 => Vec::new(),
        1 => vec![min],
        _ => {
            let ratio = (max / min).ln() / (steps - 1) as f64;
            (0..steps).map(|k| min * (ratio * k as f64).exp()).collect()
        }
    }
}
