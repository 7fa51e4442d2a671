//! Dense two-phase primal simplex with Bland's anti-cycling rule, for the
//! small covering LPs of this crate (few variables, tens of constraints).

use crate::error::{Error, Result};

const EPS: f64 = 1e-10;
const PHASE1_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rel {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone)]
pub struct LpProblem {
    /// Objective coefficients (minimized) over the structural variables.
    pub objective: Vec<f64>,
    /// Rows `(coefficients, relation, rhs)`; variables are nonnegative.
    pub rows: Vec<(Vec<f64>, Rel, f64)>,
}

#[derive(Debug, Clone)]
pub struct LpOptimum {
    pub x: Vec<f64>,
    pub value: f64,
}

/// Minimizes `objective . x` subject to the rows and `x >= 0`.
pub fn minimize(problem: &LpProblem) -> Result<LpOptimum> {
    let n = problem.objective.len();
    let mut rows: Vec<(Vec<f64>, Rel, f64)> = Vec::with_capacity(problem.rows.len());
    for (a, rel, b) in &problem.rows {
        if a.len() != n {
            return Err(Error::Lp(format!(
                "constraint has {} coefficients, expected {n}",
                a.len()
            )));
        }
        if *b < 0.0 {
            let flipped = match rel {
                Rel::Le => Rel::Ge,
                Rel::Ge => Rel::Le,
                Rel::Eq => Rel::Eq,
            };
            rows.push((a.iter().map(|v| -v).collect(), flipped, -b));
        } else {
            rows.push((a.clone(), *rel, *b));
        }
    }
    let m = rows.len();
    let n_slack = rows
        .iter()
        .filter(|(_, rel, _)| matches!(rel, Rel::Le | Rel::Ge))
        .count();
    let n_art = rows
        .iter()
        .filter(|(_, rel, _)| matches!(rel, Rel::Ge | Rel::Eq))
        .count();
    let cols = n + n_slack + n_art;

    let mut tab = vec![vec![0.0f64; cols + 1]; m];
    let mut basis = vec![usize::MAX; m];
    let mut slack_at = n;
    let mut art_at = n + n_slack;
    let art_start = n + n_slack;
    for (i, (a, rel, b)) in rows.iter().enumerate() {
        tab[i][..n].copy_from_slice(a);
        tab[i][cols] = *b;
        match rel {
            Rel::Le => {
                tab[i][slack_at] = 1.0;
                basis[i] = slack_at;
                slack_at += 1;
            }
            Rel::Ge => {
                tab[i][slack_at] = -1.0;
                slack_at += 1;
                tab[i][art_at] = 1.0;
                basis[i] = art_at;
                art_at += 1;
            }
            Rel::Eq => {
                tab[i][art_at] = 1.0;
                basis[i] = art_at;
                art_at += 1;
            }
        }
    }

    // Phase I: minimize the sum of artificials.
    if n_art > 0 {
        let mut obj = vec![0.0f64; cols + 1];
        for j in art_start..cols {
            obj[j] = 1.0;
        }
        reduce_objective(&mut obj, &tab, &basis);
        pivot_to_optimum(&mut tab, &mut basis, &mut obj, cols, cols)?;
        let phase1 = -obj[cols];
        if phase1 > PHASE1_TOL {
            return Err(Error::Lp(format!("infeasible (phase-1 value {phase1})")));
        }
        // Drive remaining artificials out of the basis.
        for i in 0..m {
            if basis[i] >= art_start {
                let mut pivoted = false;
                for j in 0..art_start {
                    if tab[i][j].abs() > EPS {
                        pivot(&mut tab, &mut basis, &mut vec![0.0; cols + 1], i, j);
                        pivoted = true;
                        break;
                    }
                }
                if !pivoted {
                    // redundant row; neutralize it
                    for j in 0..cols {
                        tab[i][j] = 0.0;
                    }
                    tab[i][cols] = 0.0;
                }
            }
        }
    }

    // Phase II over structural and slack columns only.
    let mut obj = vec![0.0f64; cols + 1];
    obj[..n].copy_from_slice(&problem.objective);
    reduce_objective(&mut obj, &tab, &basis);
    pivot_to_optimum(&mut tab, &mut basis, &mut obj, cols, art_start)?;

    let mut x = vec![0.0f64; n];
    for (i, &b) in basis.iter().enumerate() {
        if b < n {
            x[b] = tab[i][cols];
        }
    }
    let value = problem
        .objective
        .iter()
        .zip(x.iter())
        .map(|(c, v)| c * v)
        .sum();
    Ok(LpOptimum { x, value })
}

/// Subtracts basis rows so the objective row has zeros on basis columns.
fn reduce_objective(obj: &mut [f64], tab: &[Vec<f64>], basis: &[usize]) {
    for (i, &b) in basis.iter().enumerate() {
        let c = obj[b];
        if c != 0.0 {
            for (o, t) in obj.iter_mut().zip(tab[i].iter()) {
                *o -= c * t;
            }
        }
    }
}

/// Runs Bland-rule pivots until no entering column remains. Columns at or
/// beyond `enter_limit` are never selected (used to bar artificials).
fn pivot_to_optimum(
    tab: &mut [Vec<f64>],
    basis: &mut [usize],
    obj: &mut Vec<f64>,
    cols: usize,
    enter_limit: usize,
) -> Result<()> {
    let max_iters = 20_000;
    for _ in 0..max_iters {
        // Bland: entering = smallest index with negative reduced cost.
        let mut entering = None;
        for (j, &c) in obj.iter().take(enter_limit).enumerate() {
            if c < -EPS && !basis.contains(&j) {
                entering = Some(j);
                break;
            }
        }
        let Some(e) = entering else {
            return Ok(());
        };
        // Leaving: minimum ratio, ties broken by smallest basis variable.
        let mut leave: Option<(usize, f64)> = None;
        for (i, row) in tab.iter().enumerate() {
            if row[e] > EPS {
                let ratio = row[cols] / row[e];
                match leave {
                    None => leave = Some((i, ratio)),
                    Some((li, lr)) => {
                        if ratio < lr - EPS || (ratio < lr + EPS && basis[i] < basis[li]) {
                            leave = Some((i, ratio));
                        }
                    }
                }
            }
        }
        let Some((l, _)) = leave else {
            return Err(Error::Lp("unbounded".into()));
        };
        pivot(tab, basis, obj, l, e);
    }
    Err(Error::Lp("pivot limit exceeded".into()))
}

fn pivot(tab: &mut [Vec<f64>], basis: &mut [usize], obj: &mut Vec<f64>, row: usize, col: usize) {
    let p = tab[row][col];
    for v in tab[row].iter_mut() {
        *v /= p;
    }
    for i in 0..tab.len() {
        if i != row {
            let f = tab[i][col];
            if f != 0.0 {
                for j in 0..tab[row].len() {
                    tab[i][j] -= f * tab[row][j];
                }
            }
        }
    }
    if !obj.is_empty() {
        let f = obj[col];
        if f != 0.0 {
            for j in 0..tab[row].len() {
                obj[j] -= f * tab[row][j];
            }
        }
    }
    basis[row] = col;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simple_covering() {
        // min x+y st x+y >= 1, x >= 0.25
        let p = LpProblem {
            objective: vec![1.0, 1.0],
            rows: vec![
                (vec![1.0, 1.0], Rel::Ge, 1.0),
                (vec![1.0, 0.0], Rel::Ge, 0.25),
            ],
        };
        let opt = minimize(&p).unwrap();
        assert!((opt.value - 1.0).abs() < 1e-10);
    }

    #[test]
    fn le_and_ge_mix() {
        // min x st x >= 2, x <= 5
        let p = LpProblem {
            objective: vec![1.0],
            rows: vec![(vec![1.0], Rel::Ge, 2.0), (vec![1.0], Rel::Le, 5.0)],
        };
        let opt = minimize(&p).unwrap();
        assert!((opt.value - 2.0).abs() < 1e-10);
    }

    #[test]
    fn infeasible_detected() {
        let p = LpProblem {
            objective: vec![1.0],
            rows: vec![(vec![1.0], Rel::Ge, 2.0), (vec![1.0], Rel::Le, 1.0)],
        };
        assert!(minimize(&p).is_err());
    }

    #[test]
    fn degenerate_bounds_ok() {
        // min x+y st x+y >= 0 (degenerate zero bound)
        let p = LpProblem {
            objective: vec![1.0, 1.0],
            rows: vec![(vec![1.0, 1.0], Rel::Ge, 0.0)],
        };
        let opt = minimize(&p).unwrap();
        assert!(opt.value.abs() < 1e-12);
    }

    #[test]
    fn w3_style_region() {
        // singles >= 0, pairs >= 2/3: optimum 1.0
        let b = 2.0 / 3.0;
        let p = LpProblem {
            objective: vec![1.0, 1.0, 1.0],
            rows: vec![
                (vec![1.0, 0.0, 0.0], Rel::Ge, 0.0),
                (vec![0.0, 1.0, 0.0], Rel::Ge, 0.0),
                (vec![0.0, 0.0, 1.0], Rel::Ge, 0.0),
                (vec![1.0, 1.0, 0.0], Rel::Ge, b),
                (vec![1.0, 0.0, 1.0], Rel::Ge, b),
                (vec![0.0, 1.0, 1.0], Rel::Ge, b),
            ],
        };
        let opt = minimize(&p).unwrap();
        assert!((opt.value - 1.0).abs() < 1e-10, "{}", opt.value);
    }
}
