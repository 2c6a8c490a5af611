//! Reference examples with their published values.
//!
//! Most rows compare a computed quantity against a published value within
//! the precision it was printed with. Rows marked as documented
//! discrepancies carry a published value that does not follow from the
//! model; those rows pass when the computed value satisfies an independent
//! check (zero residual at the ideal point, or the regime actually observed).

use serde::Serialize;

use crate::builder::{build_chain, build_two_group, flows};
use crate::dyad::{classify, Regime};
use crate::dynamics::residual;
use crate::error::Result;
use crate::ideal::{ideal_point, upper_bound};
use crate::pruning::{prune_once, prune_search, Policy};
use crate::types::{Population, Tolerances};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Pass,
    Fail,
    DocumentedDiscrepancy,
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::DocumentedDiscrepancy => "documented-discrepancy",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub id: &'static str,
    /// Value as published.
    pub published: f64,
    pub computed: f64,
    pub tol: f64,
    pub status: Status,
    /// What the computed value was checked against when it disagrees
    /// with the published one.
    pub check: Option<String>,
}

fn row(id: &'static str, published: f64, computed: f64, tol: f64) -> Row {
    let status = if (computed - published).abs() <= tol { Status::Pass } else { Status::Fail };
    Row { id, published, computed, tol, status, check: None }
}

fn discrepancy(id: &'static str, published: f64, computed: f64, ok: bool, check: String) -> Row {
    Row {
        id,
        published,
        computed,
        tol: 0.0,
        status: if ok { Status::DocumentedDiscrepancy } else { Status::Fail },
        check: Some(check),
    }
}

fn pop(u: &[f64], s: &[f64]) -> Result<Population> {
    Population::new(u.to_vec(), s.to_vec())
}

/// Signed weight `g_1 / (x_2 - x_1)` of a dyad, negative when unrealizable.
fn dyad_weight(p: &Population) -> f64 {
    let ideal = ideal_point(p);
    flows(p, &ideal)[0] / (ideal.x_star[1] - ideal.x_star[0])
}

/// Smallest stubbornness ratio giving polarization for `u = (u1, u2)`,
/// located by bisection on the observed regime.
fn observed_polarization_threshold(u1: f64, u2: f64) -> Result<f64> {
    let polarized =
        |mu: f64| -> Result<bool> { Ok(classify(&pop(&[u1, u2], &[mu, 1.0])?)?.regime == Regime::Polarization) };
    let (mut lo, mut hi) = (1.0, 2.0);
    while !polarized(hi)? {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if polarized(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

pub fn rows(tol: &Tolerances) -> Result<Vec<Row>> {
    let mut out = Vec::new();

    // two agents
    let p = pop(&[1.0, 2.0], &[3.0, 1.0])?;
    let ideal = ideal_point(&p);
    out.push(row("dyad.polarization.x1_star", 0.88, ideal.x_star[0], 5e-3));
    out.push(row("dyad.polarization.x2_star", 2.145, ideal.x_star[1], 1e-3));
    out.push(row("dyad.polarization.signed_a12", -0.247277, dyad_weight(&p), 5e-7));
    out.push(row("dyad.polarization.best_mean", 1.5, classify(&p)?.best_mean, 0.0));

    let p = pop(&[1.0, 5.0], &[1.0, 10.0])?;
    let ideal = ideal_point(&p);
    out.push(row("dyad.consensus.x1_star", 8.05, ideal.x_star[0], 5e-3));
    out.push(row("dyad.consensus.x2_star", 3.25, ideal.x_star[1], 1e-2));
    out.push(row("dyad.consensus.signed_a12", -11.8, dyad_weight(&p), 5e-2));
    out.push(row("dyad.consensus.best_mean", 51.0 / 11.0, classify(&p)?.best_mean, 1e-12));

    let p = pop(&[1.0, 2.0], &[1.0, 1.0])?;
    let o = classify(&p)?;
    out.push(row("dyad.compromise.a12", 0.75, o.a_star.unwrap_or(f64::NAN), 1e-12));
    out.push(row("dyad.compromise.best_mean", 1.54057, o.best_mean, 5e-6));

    let observed = observed_polarization_threshold(1.0, 2.0)?;
    out.push(discrepancy(
        "dyad.polarization_threshold",
        4.0,
        observed,
        (observed - 2.0).abs() < 1e-9,
        "regime boundary at u2/u1 = 2".into(),
    ));

    // three agents
    let p = pop(&[1.0, 4.0, 5.0], &[1.0, 2.0, 1.0])?;
    out.push(row("three.upper_bound", 3.6736, upper_bound(&p), 5e-5));
    let ideal = ideal_point(&p);
    let net = build_chain(&p, &ideal, tol)?;
    let res = residual(&p, &net, &ideal.x_star)?;
    out.push(discrepancy(
        "three.chain.a12",
        13.5214 + 5.30249 * (0.1893 / 0.841333),
        net.weight(0, 1),
        res <= tol.eq_tol,
        format!("residual {res:.1e} at the ideal point"),
    ));

    // two communities of 50 and 100 agents
    for (id_m, id_w, kappa, delta, m, w) in [
        ("groups.k100_d2.upper_bound", "groups.k100_d2.cross_weight", 100.0, 2.0, 54.2697, 0.810502),
        ("groups.k100_d05.upper_bound", "groups.k100_d05.cross_weight", 100.0, 0.5, 40.5749, 0.125912),
        ("groups.k10_d2.upper_bound", "groups.k10_d2.cross_weight", 10.0, 2.0, 5.74537, 0.0889628),
        ("groups.k10_d05.upper_bound", "groups.k10_d05.cross_weight", 10.0, 0.5, 4.4037, 0.0132978),
    ] {
        let design = build_two_group(50, 100, kappa, delta, tol)?;
        out.push(row(id_m, m, design.upper_bound, 5e-5 * m.abs().max(1.0)));
        let ideal = ideal_point(&design.population);
        let res = residual(&design.population, &design.network, &ideal.x_star)?;
        out.push(discrepancy(
            id_w,
            w,
            design.cross_weight,
            res <= tol.eq_tol && design.cross_weight > 0.0,
            format!("residual {res:.1e} at the ideal point"),
        ));
    }

    // pruning
    let p = pop(&[1.0, 2.0, 3.0], &[1.0, 1.0, 0.1])?;
    let ideal = ideal_point(&p);
    for (id, k, v) in [("prune.x1_star", 0, 0.85), ("prune.x2_star", 1, 1.35), ("prune.x3_star", 2, 5.0)] {
        out.push(row(id, v, ideal.x_star[k], 1e-2));
    }
    let bottom = prune_once(&p, &[0, 1, 2], 0)?;
    out.push(row("prune.bottom.x2", 1.33, bottom.value(1).unwrap_or(f64::NAN), 5e-3));
    out.push(row("prune.bottom.x3", 4.84, bottom.value(2).unwrap_or(f64::NAN), 5e-3));
    let top = prune_once(&p, &[0, 1, 2], 2)?;
    out.push(row("prune.top.x1", 1.29, top.value(0).unwrap_or(f64::NAN), 5e-3));
    out.push(row("prune.top.x2", 1.79, top.value(1).unwrap_or(f64::NAN), 5e-3));

    let trace = prune_search(&p, Policy::Top, tol)?;
    out.push(row("prune.top.a12", 0.75, trace.final_network.weight(0, 1), 1e-9));
    let exact = 1.0 + (3.0 + 10f64.sqrt()) / 6.0;
    out.push(discrepancy(
        "prune.top.final_mean",
        2.026,
        trace.final_mean,
        (trace.final_mean - exact).abs() < 1e-12,
        "1 + (3 + sqrt 10)/6; published value averages the rounded 1.29, 1.79, 3".into(),
    ));
    let bottom = prune_search(&p, Policy::Bottom, tol)?;
    out.push(row("prune.bottom.final_mean", 2.0, bottom.final_mean, 0.0));
    out.push(row("prune.bottom.edges", 0.0, bottom.final_network.edge_count() as f64, 0.0));

    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn no_row_fails() {
        let rows = rows(&Tolerances::default()).unwrap();
        for r in &rows {
            assert_ne!(r.status, Status::Fail, "{r:?}");
        }
        let flagged: Vec<_> = rows.iter().filter(|r| r.status == Status::DocumentedDiscrepancy).map(|r| r.id).collect();
        assert!(flagged.contains(&"dyad.polarization_threshold"));
        assert!(flagged.contains(&"groups.k100_d2.cross_weight"));
    }

    #[test]
    fn derived_cross_weight() {
        let d = build_two_group(50, 100, 100.0, 2.0, &Tolerances::default()).unwrap();
        assert!((d.cross_weight - 1.4739).abs() < 1e-4, "{}", d.cross_weight);
    }
}
