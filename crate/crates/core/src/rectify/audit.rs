//! Replay of a plan's ledger checking that travelers never disturb each
//! other.

use serde::{Deserialize, Serialize};

use super::plan::HomeoPlan;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditViolation {
    /// Index into prefix followed by maps.
    pub map: usize,
    /// Traveler the map belongs to, if any.
    pub active: Option<usize>,
    /// Resting traveler found inside the support.
    pub traveler: usize,
    /// Distance to the center minus the support radius.
    pub margin: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub maps: usize,
    pub checks: usize,
    pub violations: Vec<AuditViolation>,
    /// Smallest clearance of a resting traveler from an applied support.
    pub min_margin: f64,
    /// Largest gap between the active traveler's image and its recorded
    /// waypoint, including the final target.
    pub max_waypoint_error: f64,
    /// Maps that no ledger entry claims.
    pub unowned_maps: usize,
}

impl AuditReport {
    pub fn ok(&self, tol: f64) -> bool {
        self.violations.is_empty() && self.unowned_maps == 0 && self.max_waypoint_error <= tol
    }
}

/// Replays the maps in order. Before each map is applied, every traveler
/// other than its owner must rest strictly outside its support; the owner
/// must then land on its recorded waypoint.
pub fn audit_schedule(plan: &HomeoPlan) -> AuditReport {
    let ledger = plan.ledger();
    let np = plan.perturb_prefix().len();
    let total = np + plan.maps().len();
    let mut owner: Vec<Option<usize>> = vec![None; total];
    for (i, rec) in ledger.iter().enumerate() {
        if let Some(k) = rec.prefix_map {
            owner[k] = Some(i);
        }
        for k in rec.map_range.0..rec.map_range.1 {
            owner[np + k] = Some(i);
        }
    }
    let mut pos: Vec<Vec<f64>> = ledger.iter().map(|r| r.source.coords().to_vec()).collect();
    let mut report = AuditReport {
        maps: total,
        checks: 0,
        violations: Vec::new(),
        min_margin: f64::INFINITY,
        max_waypoint_error: 0.0,
        unowned_maps: owner.iter().filter(|o| o.is_none()).count(),
    };
    for (g, map) in plan.all_maps().enumerate() {
        let active = owner[g];
        let c = map.center().coords();
        let radius = map.support_radius();
        for (j, p) in pos.iter().enumerate() {
            if Some(j) == active {
                continue;
            }
            let margin = crate::geom::dist(p, c) - radius;
            report.checks += 1;
            report.min_margin = report.min_margin.min(margin);
            if !(margin > 0.0) {
                report.violations.push(AuditViolation {
                    map: g,
                    active,
                    traveler: j,
                    margin,
                });
            }
        }
        let Some(a) = active else { continue };
        let rec = &ledger[a];
        let expected = if g < np {
            &rec.perturbed_source
        } else {
            &rec.waypoints[g - np - rec.map_range.0]
        };
        let mut moved = pos[a].clone();
        map.apply(&mut moved);
        let err = crate::geom::dist(&moved, expected.coords());
        report.max_waypoint_error = report.max_waypoint_error.max(err);
        pos[a] = expected.coords().to_vec();
    }
    if plan.piecewise().is_none() {
        for (p, rec) in pos.iter().zip(ledger) {
            let err = crate::geom::dist(p, rec.target.coords());
            report.max_waypoint_error = report.max_waypoint_error.max(err);
        }
    }
    report
}
