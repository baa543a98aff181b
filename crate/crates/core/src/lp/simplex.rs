//! Two-phase primal simplex on a dense tableau.

use super::{LpModel, LpSolution, LpStatus, Sense, SolveOptions};

const PIVOT_TOL: f64 = 1e-9;
const PHASE_ONE_TOL: f64 = 1e-7;
/// Entries this small after a pivot are treated as exact zeros.
const DROP_TOL: f64 = 1e-12;
const RATIO_TIE: f64 = 1e-12;
/// Scale of the right-hand-side perturbation.
const PERTURB: f64 = 1e-9;
/// Fewest pivots between refactorizations.
const REFACTOR_MIN: usize = 100;
/// Consecutive degenerate pivots before switching to Bland's rule.
const BLAND_AFTER: usize = 50;

/// How an original variable is expressed through nonnegative columns.
#[derive(Clone, Copy, Debug)]
enum Map {
    /// `x = lo + col`
    Shift { col: usize, lo: f64 },
    /// `x = hi - col`
    Flip { col: usize, hi: f64 },
    /// `x = pos - neg`
    Split { pos: usize, neg: usize },
}

struct StdRow {
    terms: Vec<(usize, f64)>,
    sense: Sense,
    rhs: f64,
    origin: Option<usize>,
}

fn standard_form(model: &LpModel) -> (Vec<Map>, usize, Vec<StdRow>) {
    let mut maps = Vec::with_capacity(model.vars.len());
    let mut cols = 0;
    let mut rows = Vec::new();
    for v in &model.vars {
        let m = if v.lower.is_finite() {
            let col = cols;
            cols += 1;
            if v.upper.is_finite() {
                rows.push(StdRow {
                    terms: vec![(col, 1.0)],
                    sense: Sense::Le,
                    rhs: v.upper - v.lower,
                    origin: None,
                });
            }
            Map::Shift { col, lo: v.lower }
        } else if v.upper.is_finite() {
            cols += 1;
            Map::Flip {
                col: cols - 1,
                hi: v.upper,
            }
        } else {
            cols += 2;
            Map::Split {
                pos: cols - 2,
                neg: cols - 1,
            }
        };
        maps.push(m);
    }
    for (r, row) in model.rows.iter().enumerate() {
        let mut terms = Vec::with_capacity(row.terms.len());
        let mut rhs = row.rhs;
        for &(j, a) in &row.terms {
            match maps[j] {
                Map::Shift { col, lo } => {
                    rhs -= a * lo;
                    terms.push((col, a));
                }
                Map::Flip { col, hi } => {
                    rhs -= a * hi;
                    terms.push((col, -a));
                }
                Map::Split { pos, neg } => {
                    terms.push((pos, a));
                    terms.push((neg, -a));
                }
            }
        }
        rows.push(StdRow {
            terms,
            sense: row.sense,
            rhs,
            origin: Some(r),
        });
    }
    (maps, cols, rows)
}

/// Number of tableau entries the dense backend would allocate.
pub(crate) fn tableau_size(model: &LpModel) -> usize {
    let bounded = model
        .vars
        .iter()
        .filter(|v| v.lower.is_finite() && v.upper.is_finite())
        .count();
    let rows = model.rows.len() + bounded;
    let cols = 2 * model.vars.len() + 2 * rows + 1;
    rows.saturating_mul(cols)
}

struct Tableau {
    width: usize,
    a: Vec<f64>,
    /// The initial tableau, kept for refactorization.
    orig: Vec<f64>,
    obj: Vec<f64>,
    cost: Vec<f64>,
    basis: Vec<usize>,
    iterations: usize,
}

enum Outcome {
    Optimal,
    Unbounded,
    IterationLimit,
}

impl Tableau {
    fn rows(&self) -> usize {
        self.basis.len()
    }

    fn rhs(&self, r: usize) -> f64 {
        self.a[r * self.width + self.width - 1]
    }

    fn at(&self, r: usize, j: usize) -> f64 {
        self.a[r * self.width + j]
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let w = self.width;
        let p = self.a[r * w + j];
        for k in 0..w {
            self.a[r * w + k] /= p;
        }
        self.a[r * w + j] = 1.0;
        let (before, rest) = self.a.split_at_mut(r * w);
        let (prow, after) = rest.split_at_mut(w);
        for other in before.chunks_mut(w).chain(after.chunks_mut(w)) {
            let f = other[j];
            if f != 0.0 {
                for k in 0..w {
                    other[k] -= f * prow[k];
                    if other[k].abs() < DROP_TOL {
                        other[k] = 0.0;
                    }
                }
                other[j] = 0.0;
            }
        }
        let f = self.obj[j];
        if f != 0.0 {
            for k in 0..w {
                self.obj[k] -= f * prow[k];
            }
            self.obj[j] = 0.0;
        }
        self.basis[r] = j;
    }

    /// Rebuilds the tableau for the current basis from the initial one,
    /// discarding drift accumulated over many pivots. Keeps the old tableau
    /// if the basis looks singular.
    fn refactor(&mut self) {
        let (w, m) = (self.width, self.rows());
        let mut fresh = Tableau {
            width: w,
            a: self.orig.clone(),
            orig: Vec::new(),
            obj: vec![0.0; w],
            cost: Vec::new(),
            basis: vec![usize::MAX; m],
            iterations: 0,
        };
        let mut used = vec![false; m];
        for &j in &self.basis {
            let pick = (0..m)
                .filter(|&r| !used[r])
                .max_by(|&x, &y| fresh.at(x, j).abs().total_cmp(&fresh.at(y, j).abs()));
            let Some(r) = pick.filter(|&r| fresh.at(r, j).abs() > PIVOT_TOL) else {
                return;
            };
            used[r] = true;
            fresh.pivot(r, j);
        }
        self.a = fresh.a;
        self.basis = fresh.basis;
        let cost = std::mem::take(&mut self.cost);
        self.price(&cost);
    }

    /// Sets the reduced-cost row for column costs `cost`.
    fn price(&mut self, cost: &[f64]) {
        let w = self.width;
        self.cost = cost.to_vec();
        self.obj = cost.to_vec();
        self.obj.push(0.0);
        for r in 0..self.rows() {
            let cb = cost[self.basis[r]];
            if cb != 0.0 {
                for k in 0..w {
                    self.obj[k] -= cb * self.a[r * w + k];
                }
            }
        }
    }

    /// Dantzig pricing with a largest-pivot ratio test, falling back to
    /// Bland's rule after a run of degenerate pivots until progress resumes.
    fn run(&mut self, allowed: usize, tol: f64, cap: usize) -> Outcome {
        let mut degenerate = 0usize;
        loop {
            let bland = degenerate >= BLAND_AFTER;
            let entering = if bland {
                (0..allowed).find(|&j| self.obj[j] < -tol)
            } else {
                (0..allowed)
                    .filter(|&j| self.obj[j] < -tol)
                    .min_by(|&a, &b| self.obj[a].total_cmp(&self.obj[b]))
            };
            let Some(j) = entering else {
                return Outcome::Optimal;
            };
            let mut best: Option<(f64, usize)> = None;
            for r in 0..self.rows() {
                let a = self.at(r, j);
                if a > PIVOT_TOL {
                    let ratio = self.rhs(r).max(0.0) / a;
                    let take = match best {
                        None => true,
                        Some((b, br)) => {
                            let tie = ratio <= b + RATIO_TIE;
                            ratio < b - RATIO_TIE
                                || (tie && bland && self.basis[r] < self.basis[br])
                                || (tie && !bland && a > self.at(br, j))
                        }
                    };
                    if take {
                        best = Some((ratio, r));
                    }
                }
            }
            let Some((ratio, r)) = best else {
                return Outcome::Unbounded;
            };
            if self.iterations >= cap {
                return Outcome::IterationLimit;
            }
            self.iterations += 1;
            if ratio <= RATIO_TIE {
                degenerate += 1;
            } else {
                degenerate = 0;
            }
            self.pivot(r, j);
            if self.iterations % self.rows().max(REFACTOR_MIN) == 0 {
                self.refactor();
            }
        }
    }
}

pub(crate) fn solve(model: &LpModel, opts: &SolveOptions) -> LpSolution {
    let (maps, ncols, mut rows) = standard_form(model);
    for row in &mut rows {
        // rhs 0 rows of `>=` form get a slack basis instead of an artificial
        if row.rhs < 0.0 || (row.rhs == 0.0 && row.sense == Sense::Ge) {
            row.rhs = -row.rhs;
            for t in &mut row.terms {
                t.1 = -t.1;
            }
            row.sense = match row.sense {
                Sense::Le => Sense::Ge,
                Sense::Ge => Sense::Le,
                Sense::Eq => Sense::Eq,
            };
        }
    }
    let slacks = rows.iter().filter(|r| r.sense != Sense::Eq).count();
    let arts = rows.iter().filter(|r| r.sense != Sense::Le).count();
    let art_start = ncols + slacks;
    let width = art_start + arts + 1;
    let m = rows.len();
    let mut t = Tableau {
        width,
        a: vec![0.0; m * width],
        orig: Vec::new(),
        obj: Vec::new(),
        cost: Vec::new(),
        basis: vec![0; m],
        iterations: 0,
    };
    let mut art_row = Vec::with_capacity(arts);
    let (mut s, mut a) = (ncols, art_start);
    for (r, row) in rows.iter().enumerate() {
        let base = r * width;
        for &(j, c) in &row.terms {
            t.a[base + j] += c;
        }
        t.a[base + width - 1] = row.rhs;
        match row.sense {
            Sense::Le => {
                t.a[base + s] = 1.0;
                t.basis[r] = s;
                s += 1;
            }
            Sense::Ge => {
                t.a[base + s] = -1.0;
                s += 1;
                t.a[base + a] = 1.0;
                t.basis[r] = a;
                art_row.push(r);
                a += 1;
            }
            Sense::Eq => {
                t.a[base + a] = 1.0;
                t.basis[r] = a;
                art_row.push(r);
                a += 1;
            }
        }
    }

    // Zero right-hand sides of slack rows get a tiny deterministic lift so
    // that ratio tests rarely tie; the exact values are recovered from the
    // final basis.
    let exact = t.a.clone();
    for (r, row) in rows.iter().enumerate() {
        if row.sense == Sense::Le && row.rhs == 0.0 {
            t.a[r * width + width - 1] = PERTURB * (1.0 + ((r * 7919) % 1009) as f64 / 1009.0);
        }
    }
    t.orig = t.a.clone();

    // phase one: drive the artificials to zero
    let mut cost = vec![0.0; width - 1];
    for c in cost.iter_mut().skip(art_start) {
        *c = 1.0;
    }
    t.price(&cost);
    match t.run(width - 1, opts.tol, opts.max_iterations) {
        Outcome::IterationLimit => {
            return LpSolution::failed(LpStatus::IterationLimit, model.vars.len(), t.iterations)
        }
        Outcome::Unbounded => unreachable!("phase one is bounded below by zero"),
        Outcome::Optimal => {}
    }
    let infeasibility = -t.obj[width - 1];
    if infeasibility > PHASE_ONE_TOL * (1.0 + rows.iter().map(|r| r.rhs).fold(0.0, f64::max)) {
        let mut sol = LpSolution::failed(LpStatus::Infeasible, model.vars.len(), t.iterations);
        let mut names = Vec::new();
        for r in 0..m {
            let b = t.basis[r];
            if b >= art_start && t.rhs(r) > PHASE_ONE_TOL {
                if let Some(o) = rows[art_row[b - art_start]].origin {
                    names.push(model.rows[o].name.clone());
                }
            }
        }
        sol.infeasible_rows = names;
        return sol;
    }
    for r in 0..m {
        if t.basis[r] >= art_start {
            if let Some(j) = (0..art_start).find(|&j| t.at(r, j).abs() > PIVOT_TOL) {
                t.pivot(r, j);
            }
        }
    }

    // phase two: original objective over the structural and slack columns
    let mut cost = vec![0.0; width - 1];
    for &(j, c) in &model.objective {
        match maps[j] {
            Map::Shift { col, .. } => cost[col] += c,
            Map::Flip { col, .. } => cost[col] -= c,
            Map::Split { pos, neg } => {
                cost[pos] += c;
                cost[neg] -= c;
            }
        }
    }
    t.price(&cost);
    let outcome = t.run(art_start, opts.tol, opts.max_iterations);
    let status = match outcome {
        Outcome::Optimal => LpStatus::Optimal,
        Outcome::Unbounded => LpStatus::Unbounded,
        Outcome::IterationLimit => LpStatus::IterationLimit,
    };
    if status != LpStatus::Optimal {
        return LpSolution::failed(status, model.vars.len(), t.iterations);
    }
    t.orig = exact;
    t.refactor();
    let mut col_value = vec![0.0; ncols];
    for r in 0..m {
        if t.basis[r] < ncols {
            col_value[t.basis[r]] = t.rhs(r).max(0.0);
        }
    }
    let values: Vec<f64> = maps
        .iter()
        .zip(&model.vars)
        .map(|(m, v)| {
            let x = match *m {
                Map::Shift { col, lo } => lo + col_value[col],
                Map::Flip { col, hi } => hi - col_value[col],
                Map::Split { pos, neg } => col_value[pos] - col_value[neg],
            };
            x.clamp(v.lower, v.upper)
        })
        .collect();
    LpSolution {
        status,
        objective: model.objective_value(&values),
        values,
        iterations: t.iterations,
        infeasible_rows: Vec::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::{check_lp_feasibility, LpModel};

    #[test]
    fn free_and_upper_bounded_variables() {
        // min -x + y with x free, y <= 3, x - y <= 1, x + y >= -5
        let mut m = LpModel::default();
        let x = m.add_var("x", f64::NEG_INFINITY, f64::INFINITY);
        let y = m.add_var("y", f64::NEG_INFINITY, 3.0);
        m.objective = vec![(x, -1.0), (y, 1.0)];
        m.add_row("a", vec![(x, 1.0), (y, -1.0)], Sense::Le, 1.0);
        m.add_row("b", vec![(x, 1.0), (y, 1.0)], Sense::Ge, -5.0);
        let sol = solve(&m, &SolveOptions::default());
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.objective + 1.0).abs() < 1e-9);
        assert!(check_lp_feasibility(&sol.values, &m, 1e-9).is_empty());
    }

    #[test]
    fn unbounded_detected() {
        let mut m = LpModel::default();
        let x = m.add_var("x", 0.0, f64::INFINITY);
        m.objective = vec![(x, -1.0)];
        m.add_row("a", vec![(x, 1.0)], Sense::Ge, 1.0);
        assert_eq!(solve(&m, &SolveOptions::default()).status, LpStatus::Unbounded);
    }

    #[test]
    fn redundant_equalities() {
        let mut m = LpModel::default();
        let x = m.add_var("x", 0.0, 1.0);
        let y = m.add_var("y", 0.0, 1.0);
        m.objective = vec![(x, 1.0), (y, 2.0)];
        m.add_row("e1", vec![(x, 1.0), (y, 1.0)], Sense::Eq, 1.0);
        m.add_row("e2", vec![(x, 2.0), (y, 2.0)], Sense::Eq, 2.0);
        let sol = solve(&m, &SolveOptions::default());
        assert_eq!(sol.status, LpStatus::Optimal);
        assert_eq!(sol.values, vec![1.0, 0.0]);
    }
}
