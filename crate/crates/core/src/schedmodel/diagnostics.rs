//! Named inequality checks over one pipeline run.
//!
//! Checks come in two kinds. Asserted checks are inequalities with explicit
//! constants that must hold on every run. Reported checks compare a measured
//! quantity against an asymptotic expression and only record the ratio.

use serde::Serialize;

use super::analysis::{chain_of, classify};
use super::{Chain, PhaseSummary, Schedule, Timeline};
use crate::error::Result;
use crate::grouping::{
    band_bound_check, capacity_order_check, load_bound_check, max_band_check,
    weighted_group_load, GroupAssignment,
};
use crate::instance::{Instance, PredMap};
use crate::lp::FEAS_TOL;
use crate::scheduler::{eta_load_check, long_copy_check};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub bound: f64,
    pub slack: f64,
    pub asserted: bool,
    pub holds: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Check {
    pub fn asserted(name: &str, value: f64, bound: f64) -> Check {
        Check {
            name: name.into(),
            value,
            bound,
            slack: bound - value,
            asserted: true,
            holds: value <= bound + FEAS_TOL,
            note: None,
        }
    }

    pub fn reported(name: &str, value: f64, bound: f64) -> Check {
        Check {
            asserted: false,
            ..Check::asserted(name, value, bound)
        }
    }

    pub fn skipped(name: &str, why: &str) -> Check {
        Check {
            name: name.into(),
            value: 0.0,
            bound: 0.0,
            slack: 0.0,
            asserted: false,
            holds: true,
            note: Some(why.into()),
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Check {
        self.note = Some(note.into());
        self
    }

    /// Fails only when an asserted inequality is violated.
    pub fn ok(&self) -> bool {
        !self.asserted || self.holds
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Diagnostics {
    pub checks: Vec<Check>,
}

impl Diagnostics {
    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.ok()).collect()
    }

    pub fn all_ok(&self) -> bool {
        self.checks.iter().all(Check::ok)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AnalysisReport {
    pub makespan: f64,
    pub lp_objective: f64,
    /// Makespan over the LP value; the LP is at most twice the optimum.
    pub ratio_to_lp: f64,
    pub chain: Chain,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phases: Option<PhaseSummary>,
    pub diagnostics: Diagnostics,
}

/// Runs chain construction, phase classification and every check on the
/// output of one scheduler run.
pub fn lemma_diagnostics(
    inst: &Instance,
    assignment: &GroupAssignment,
    sched: &Schedule,
    eta: f64,
) -> Result<AnalysisReport> {
    let tl = Timeline::of_valid(inst, sched)?;
    let preds = PredMap::from_dag(&inst.dag()?);
    let chain = chain_of(inst, &tl, &preds);
    let c_lp = assignment.lp_objective;
    let rho = inst.rho;
    let mut checks = vec![
        band_bound_check(inst, &preds, assignment),
        load_bound_check(inst, assignment),
        max_band_check(inst, assignment),
        capacity_order_check(assignment),
        eta_load_check(inst, assignment, &tl, eta),
        long_copy_check(inst, assignment, &tl),
    ];
    let chain_time: f64 = chain
        .links
        .iter()
        .map(|l| inst.jobs[l.slot.job].size / assignment.groups[assignment.kappa[l.slot.job]].gamma)
        .fold(0.0, |a, b| a + b);
    checks.push(Check::asserted("chain_time", chain_time, 8.0 * c_lp));

    let phases = if rho > 0.0 {
        let ph = classify(inst, &tl, &chain, &assignment.groups)?;
        let load_bound = 2.0 * eta / rho * weighted_group_load(inst, assignment) + 1.0;
        checks.push(Check::asserted("load_phases", ph.load as f64, load_bound));
        checks.push(Check::reported(
            "chain_phases",
            ph.chain as f64,
            4.0 * c_lp / rho + 2.0,
        ));
        let k = assignment.groups.len() as f64;
        let log_eta_rho = if rho > 1.0 { rho.ln() / eta.ln() } else { 1.0 };
        let height_bound = (k * assignment.r_max as f64 * log_eta_rho).max(1.0);
        checks.push(
            Check::reported("height_phases", ph.height as f64, height_bound).with_note(format!(
                "measured constant {:.4}",
                ph.height as f64 / height_bound
            )),
        );
        Some(ph)
    } else {
        for name in ["load_phases", "chain_phases", "height_phases"] {
            checks.push(Check::skipped(name, "phases are undefined without delay"));
        }
        None
    };
    let makespan = tl.makespan();
    Ok(AnalysisReport {
        makespan,
        lp_objective: c_lp,
        ratio_to_lp: if c_lp > 0.0 { makespan / c_lp } else { f64::NAN },
        chain,
        phases,
        diagnostics: Diagnostics { checks },
    })
}
