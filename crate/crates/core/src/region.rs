//! Omniscience rate polytopes: constraint builders, total-rate minimization
//! by LP, membership tests, and an independent vertex-enumeration oracle.

use nalgebra::DMatrix;
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::measurement::{cq_conditional_entropy, CqState};
use crate::pmf::JointPmf;
use crate::simplex::{self, LpProblem, Rel};

/// Where a constraint bound came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintSource {
    /// Classical conditional entropy `H(X_L | X_{[m] \ L})`.
    Classical,
    /// Decoder `j` holding `X_j` and its retained register.
    Decoder(usize),
}

impl Serialize for ConstraintSource {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ConstraintSource::Classical => s.serialize_str("classical"),
            ConstraintSource::Decoder(j) => s.serialize_u64(*j as u64),
        }
    }
}

/// One inequality `sum_{i in subset} R_i >= bound` (bits per copy).
#[derive(Debug, Clone, Serialize)]
pub struct Constraint {
    /// Strictly increasing party indices (0-based).
    pub subset: Vec<usize>,
    pub bound: f64,
    pub decoder: ConstraintSource,
}

#[derive(Debug, Clone, Serialize)]
pub struct RateRegion {
    pub parties: usize,
    pub constraints: Vec<Constraint>,
}

/// A minimizing rate vector with its objective and active constraints.
#[derive(Debug, Clone)]
pub struct LpSolution {
    pub rates: Vec<f64>,
    pub objective: f64,
    /// Labels of constraints tight at the solution (within 1e-7).
    pub tight: Vec<(Vec<usize>, ConstraintSource)>,
}

impl Serialize for LpSolution {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Tight<'a> {
            subset: &'a [usize],
            decoder: &'a ConstraintSource,
        }
        let tight: Vec<Tight> = self
            .tight
            .iter()
            .map(|(subset, decoder)| Tight { subset, decoder })
            .collect();
        let mut st = s.serialize_struct("LpSolution", 3)?;
        st.serialize_field("rates", &self.rates)?;
        st.serialize_field("objective", &self.objective)?;
        st.serialize_field("tight", &tight)?;
        st.end()
    }
}

/// Every nonempty proper subset of `0..m`, ordered by size then
/// lexicographically.
pub fn proper_subsets(m: usize) -> Vec<Vec<usize>> {
    let mut subsets: Vec<Vec<usize>> = (1..(1usize << m) - 1)
        .map(|mask| (0..m).filter(|i| mask & (1 << i) != 0).collect())
        .collect();
    subsets.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    subsets
}

/// Classical omniscience region: one constraint per nonempty proper subset
/// `L` with bound `H(X_L | X_{[m] \ L})`.
pub fn build_region_classical(p: &JointPmf) -> Result<RateRegion> {
    let m = p.parties();
    if m < 2 {
        return Err(Error::BadPmf("need at least two parties".into()));
    }
    let mut constraints = Vec::new();
    for subset in proper_subsets(m) {
        let given: Vec<usize> = (0..m).filter(|i| !subset.contains(i)).collect();
        let bound = p.conditional_entropy(&subset, &given)?;
        constraints.push(Constraint {
            subset,
            bound,
            decoder: ConstraintSource::Classical,
        });
    }
    Ok(RateRegion {
        parties: m,
        constraints,
    })
}

/// Cq omniscience region: for each decoder `j` and nonempty
/// `L <= [m] \ {j}`, bound `S(X_L | X_{[m] \ L} A'_j)`. Constraints sharing
/// a subset are deduplicated keeping the largest bound (the binding one),
/// labelled with the decoder that attains it.
pub fn build_region_cq(omega: &CqState) -> Result<RateRegion> {
    let m = omega.parties();
    if m < 2 {
        return Err(Error::BadPmf("need at least two parties".into()));
    }
    let mut constraints = Vec::new();
    for subset in proper_subsets(m) {
        let mut best: Option<(f64, usize)> = None;
        for j in 0..m {
            if subset.contains(&j) {
                continue;
            }
            let bound = cq_conditional_entropy(omega, &subset, j)?;
            match best {
                None => best = Some((bound, j)),
                Some((b, _)) if bound > b + 1e-15 => best = Some((bound, j)),
                _ => {}
            }
        }
        let (bound, j) = best.expect("every proper subset has a decoder outside it");
        constraints.push(Constraint {
            subset,
            bound,
            decoder: ConstraintSource::Decoder(j),
        });
    }
    Ok(RateRegion {
        parties: m,
        constraints,
    })
}

/// True iff every constraint holds with margin at least `slack`.
pub fn contains(region: &RateRegion, rates: &[f64], slack: f64) -> bool {
    if rates.len() != region.parties {
        return false;
    }
    region.constraints.iter().all(|c| {
        let sum: f64 = c.subset.iter().map(|&i| rates[i]).sum();
        sum - c.bound >= slack
    })
}

const PIN_SLACK: f64 = 1e-11;
const TIGHT_TOL: f64 = 1e-7;

/// Minimizes the total rate over the region by two-phase simplex, then
/// refines to the lexicographically smallest optimal vertex by pinning one
/// coordinate at a time.
pub fn minimize_sum(region: &RateRegion) -> Result<LpSolution> {
    let m = region.parties;
    let base_rows: Vec<(Vec<f64>, Rel, f64)> = region
        .constraints
        .iter()
        .map(|c| {
            let mut coeff = vec![0.0; m];
            for &i in &c.subset {
                coeff[i] = 1.0;
            }
            (coeff, Rel::Ge, c.bound)
        })
        .collect();

    let total = simplex::minimize(&LpProblem {
        objective: vec![1.0; m],
        rows: base_rows.clone(),
    })?;

    // Lexicographic refinement over the optimal face.
    let mut rows = base_rows;
    rows.push((vec![1.0; m], Rel::Le, total.value + PIN_SLACK));
    let mut rates = total.x;
    for k in 0..m {
        let mut objective = vec![0.0; m];
        objective[k] = 1.0;
        let sol = simplex::minimize(&LpProblem {
            objective,
            rows: rows.clone(),
        })?;
        rates = sol.x;
        let mut pin = vec![0.0; m];
        pin[k] = 1.0;
        rows.push((pin, Rel::Le, rates[k] + PIN_SLACK));
    }

    let objective = rates.iter().sum();
    let tight = tight_constraints(region, &rates);
    Ok(LpSolution {
        rates,
        objective,
        tight,
    })
}

fn tight_constraints(region: &RateRegion, rates: &[f64]) -> Vec<(Vec<usize>, ConstraintSource)> {
    region
        .constraints
        .iter()
        .filter(|c| {
            let sum: f64 = c.subset.iter().map(|&i| rates[i]).sum();
            (sum - c.bound).abs() <= TIGHT_TOL
        })
        .map(|c| (c.subset.clone(), c.decoder))
        .collect()
}

const ORACLE_MAX_PARTIES: usize = 5;
const FEAS_TOL: f64 = 1e-9;

/// Independent check of [`minimize_sum`]: enumerates all candidate vertices
/// from m-subsets of constraint hyperplanes plus the coordinate planes
/// `R_i = 0`, keeps the feasible ones, and returns the minimum-objective
/// vertex (ties broken lexicographically).
pub fn oracle_minimize(region: &RateRegion) -> Result<LpSolution> {
    let m = region.parties;
    if m > ORACLE_MAX_PARTIES {
        return Err(Error::TooManyParties {
            parties: m,
            cap: ORACLE_MAX_PARTIES,
        });
    }
    // hyperplanes: (normal, offset)
    let mut planes: Vec<(Vec<f64>, f64)> = Vec::new();
    for c in &region.constraints {
        let mut n = vec![0.0; m];
        for &i in &c.subset {
            n[i] = 1.0;
        }
        planes.push((n, c.bound));
    }
    for i in 0..m {
        let mut n = vec![0.0; m];
        n[i] = 1.0;
        planes.push((n, 0.0));
    }

    let mut best: Option<Vec<f64>> = None;
    let mut combo: Vec<usize> = (0..m).collect();
    loop {
        // solve the m x m system for this combination
        let a = DMatrix::<f64>::from_fn(m, m, |r, c| planes[combo[r]].0[c]);
        let b = nalgebra::DVector::<f64>::from_fn(m, |r, _| planes[combo[r]].1);
        if let Some(x) = a.lu().solve(&b) {
            let x: Vec<f64> = x.iter().copied().collect();
            if x.iter().all(|v| v.is_finite() && *v >= -FEAS_TOL)
                && feasible(region, &x, FEAS_TOL)
            {
                let obj: f64 = x.iter().sum();
                let better = match &best {
                    None => true,
                    Some(b) => {
                        let bobj: f64 = b.iter().sum();
                        obj < bobj - 1e-12
                            || (obj < bobj + 1e-12 && lex_less(&x, b))
                    }
                };
                if better {
                    best = Some(x);
                }
            }
        }
        if !next_combination(&mut combo, planes.len(), m) {
            break;
        }
    }
    let rates = best.ok_or_else(|| Error::Lp("no feasible vertex found".into()))?;
    let objective = rates.iter().sum();
    let tight = tight_constraints(region, &rates);
    Ok(LpSolution {
        rates,
        objective,
        tight,
    })
}

fn feasible(region: &RateRegion, rates: &[f64], tol: f64) -> bool {
    region.constraints.iter().all(|c| {
        let sum: f64 = c.subset.iter().map(|&i| rates[i]).sum();
        sum >= c.bound - tol
    })
}

fn lex_less(a: &[f64], b: &[f64]) -> bool {
    for (x, y) in a.iter().zip(b.iter()) {
        if x < &(y - 1e-12) {
            return true;
        }
        if x > &(y + 1e-12) {
            return false;
        }
    }
    false
}

fn next_combination(combo: &mut [usize], n: usize, k: usize) -> bool {
    let mut i = k;
    while i > 0 {
        i -= 1;
        if combo[i] < n - (k - i) {
            combo[i] += 1;
            for j in i + 1..k {
                combo[j] = combo[j - 1] + 1;
            }
            return true;
        }
    }
    false
}
