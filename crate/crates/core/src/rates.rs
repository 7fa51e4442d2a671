//! Achievable-rate and upper-bound calculators for multiparty common
//! randomness and GHZ distillation, plus derivative-free measurement-basis
//! optimization.
//!
//! All rates are in bits (GHZ states or uniform random bits) per copy of
//! the input state. Parties are indexed from 0.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bases::{rotated_pmf, BasisParams, LocalBases};
use crate::error::{Error, Result};
use crate::measurement::{apply_instruments, measure_joint, measure_joint_pure, LocalInstrument, Povm};
use crate::pmf::JointPmf;
use crate::region::{build_region_classical, build_region_cq, minimize_sum, LpSolution};
use crate::state::{DensityMatrix, PureState};

/// Distillable common randomness of a measured pmf:
/// `H(X_{[m]}) - min sum R_i` over the classical omniscience region.
pub fn cr_rate_from_pmf(pmf: &JointPmf) -> Result<(f64, LpSolution)> {
    let region = build_region_classical(pmf)?;
    let sol = minimize_sum(&region)?;
    Ok((pmf.entropy_bits() - sol.objective, sol))
}

/// Distillable CR from local POVM measurements on a pure state.
pub fn cr_rate_classical_pure(psi: &PureState, povms: &[Povm]) -> Result<f64> {
    Ok(cr_rate_from_pmf(&measure_joint_pure(psi, povms)?)?.0)
}

/// Distillable CR from local POVM measurements on a density matrix.
pub fn cr_rate_classical(rho: &DensityMatrix, povms: &[Povm]) -> Result<f64> {
    Ok(cr_rate_from_pmf(&measure_joint(rho, povms)?)?.0)
}

/// Distillable CR from local instruments, with quantum side information at
/// every decoder: `H(X_{[m]}) - min sum R_i` over the cq region.
pub fn cr_rate_cq(psi: &PureState, instruments: &[LocalInstrument]) -> Result<f64> {
    let omega = apply_instruments(psi, instruments)?;
    let region = build_region_cq(&omega)?;
    let sol = minimize_sum(&region)?;
    Ok(omega.pmf().entropy_bits() - sol.objective)
}

/// GHZ rate from rank-one projective measurements in the given local bases;
/// the same arithmetic as [`cr_rate_classical_pure`], reported as a GHZ
/// lower bound.
pub fn ghz_rate_vc(psi: &PureState, bases: &LocalBases) -> Result<f64> {
    let us = bases.resolve(psi.layout())?;
    Ok(cr_rate_from_pmf(&rotated_pmf(psi, &us)?)?.0)
}

/// A leftover pure state of one measurement branch.
#[derive(Debug, Clone)]
pub struct ResidualState {
    pub tuple: Vec<usize>,
    pub prob: f64,
    pub state: PureState,
}

#[derive(Debug, Clone)]
pub struct GhzCqRate {
    pub rate: f64,
    /// Conditional retained states, available for further distillation.
    pub residuals: Vec<ResidualState>,
}

const RANK_ONE_TAIL: f64 = 1e-6;

/// GHZ rate from pure local instruments. Every conditional of the cq-state
/// must be rank one (pure CP maps on a pure input); the conditionals are
/// returned as pure states for recycling analysis.
pub fn ghz_rate_cq(psi: &PureState, instruments: &[LocalInstrument]) -> Result<GhzCqRate> {
    let omega = apply_instruments(psi, instruments)?;
    let mut residuals = Vec::new();
    for e in omega.entries() {
        let spec = e.conditional.spectrum();
        let tail = 1.0 - spec.eigenvalues()[0];
        if tail > RANK_ONE_TAIL {
            return Err(Error::MixedConditional(e.tuple.clone(), tail));
        }
        residuals.push(ResidualState {
            tuple: e.tuple.clone(),
            prob: e.prob,
            state: principal_pure_state(&e.conditional)?,
        });
    }
    let region = build_region_cq(&omega)?;
    let sol = minimize_sum(&region)?;
    Ok(GhzCqRate {
        rate: omega.pmf().entropy_bits() - sol.objective,
        residuals,
    })
}

/// Extracts the eigenvector of the largest eigenvalue, with the phase fixed
/// so the largest-magnitude component is real positive.
fn principal_pure_state(rho: &DensityMatrix) -> Result<PureState> {
    let eig = rho.matrix().clone().symmetric_eigen();
    let mut best = 0;
    for k in 1..eig.eigenvalues.len() {
        if eig.eigenvalues[k] > eig.eigenvalues[best] {
            best = k;
        }
    }
    let col = eig.eigenvectors.column(best);
    let mut anchor = 0;
    for i in 1..col.len() {
        if col[i].norm() > col[anchor].norm() {
            anchor = i;
        }
    }
    let phase = col[anchor] / Complex64::new(col[anchor].norm(), 0.0);
    let amps: Vec<Complex64> = col.iter().map(|a| a / phase).collect();
    PureState::normalized(rho.layout().clone(), amps)
}

/// Entanglement-combing GHZ rate:
/// `max_i min_{nonempty I <= [m] \ i} S(A_I) / |I|`.
pub fn combing_rate(psi: &PureState) -> Result<f64> {
    let m = psi.layout().parties();
    if m < 2 {
        return Err(Error::InvalidParameter("need at least two parties".into()));
    }
    let mut best = f64::NEG_INFINITY;
    for i in 0..m {
        let others: Vec<usize> = (0..m).filter(|&p| p != i).collect();
        let mut worst = f64::INFINITY;
        for mask in 1usize..(1 << others.len()) {
            let subset: Vec<usize> = others
                .iter()
                .enumerate()
                .filter(|(k, _)| mask & (1 << k) != 0)
                .map(|(_, &p)| p)
                .collect();
            let s = psi.marginal_entropy(&subset)?;
            worst = worst.min(s / subset.len() as f64);
        }
        best = best.max(worst);
    }
    Ok(best)
}

#[derive(Debug, Clone, Serialize)]
pub struct EntropyUpperBound {
    pub value: f64,
    /// Minimizing subset (earliest in size-then-lexicographic order).
    pub witness: Vec<usize>,
}

/// Converse bound on the GHZ rate: `min_{nonempty proper I} S(A_I)`.
pub fn entropy_upper_bound(psi: &PureState) -> Result<EntropyUpperBound> {
    let m = psi.layout().parties();
    if m < 2 {
        return Err(Error::InvalidParameter("need at least two parties".into()));
    }
    let mut best: Option<EntropyUpperBound> = None;
    for subset in crate::region::proper_subsets(m) {
        let s = psi.marginal_entropy(&subset)?;
        let better = match &best {
            None => true,
            Some(b) => s < b.value - 1e-12,
        };
        if better {
            best = Some(EntropyUpperBound {
                value: s,
                witness: subset,
            });
        }
    }
    Ok(best.expect("m >= 2 has proper subsets"))
}

/// Capacity for EPR pairs between parties `i` and `j`, assisted by the
/// others: `min S(A_I)` over cuts with `i` in `I` and `j` outside.
pub fn epr_capacity(psi: &PureState, i: usize, j: usize) -> Result<f64> {
    let m = psi.layout().parties();
    if i >= m || j >= m {
        return Err(Error::PartyOutOfRange {
            party: i.max(j),
            parties: m,
        });
    }
    if i == j {
        return Err(Error::InvalidParameter(
            "EPR capacity needs two distinct parties".into(),
        ));
    }
    let mut best = f64::INFINITY;
    let others: Vec<usize> = (0..m).filter(|&p| p != i && p != j).collect();
    for mask in 0usize..(1 << others.len()) {
        let mut subset: Vec<usize> = vec![i];
        subset.extend(
            others
                .iter()
                .enumerate()
                .filter(|(k, _)| mask & (1 << k) != 0)
                .map(|(_, &p)| p),
        );
        subset.sort_unstable();
        best = best.min(psi.marginal_entropy(&subset)?);
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SvwRate {
    /// `min{S(B), S(C)} - average residual entanglement`.
    pub chi: f64,
    /// Average bipartite entanglement of the post-measurement decomposition.
    pub ebar: f64,
    /// `chi + ebar/2`: the bound after fusing residual EPR pairs taken from
    /// different pairs of parties.
    pub fused_total: f64,
}

/// Tripartite GHZ rate from a rank-one measurement on one party, accounting
/// the average leftover bipartite entanglement of the other two.
pub fn svw_rate(psi: &PureState, measuring: usize, bases: &LocalBases) -> Result<SvwRate> {
    let m = psi.layout().parties();
    if m != 3 {
        return Err(Error::InvalidParameter(format!(
            "svw rate is defined for tripartite states, got {m} parties"
        )));
    }
    if measuring >= 3 {
        return Err(Error::PartyOutOfRange {
            party: measuring,
            parties: 3,
        });
    }
    let us = bases.resolve(psi.layout())?;
    let others: Vec<usize> = (0..3).filter(|&p| p != measuring).collect();

    let instruments: Vec<LocalInstrument> = (0..3)
        .map(|p| {
            if p == measuring {
                LocalInstrument::basis_measurement(p, &us[p])
            } else {
                LocalInstrument::trivial(p, psi.layout().dim(p))
            }
        })
        .collect();
    let omega = apply_instruments(psi, &instruments)?;

    let mut ebar = 0.0;
    for e in omega.entries() {
        // conditional is pure on the two retained parties; its entanglement
        // is the entropy of either marginal
        let red = e.conditional.partial_trace(&[others[0]])?;
        ebar += e.prob * red.entropy_bits();
    }
    let s0 = psi.marginal_entropy(&[others[0]])?;
    let s1 = psi.marginal_entropy(&[others[1]])?;
    let chi = s0.min(s1) - ebar;
    Ok(SvwRate {
        chi,
        ebar,
        fused_total: chi + ebar / 2.0,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum GhzTypeRate {
    /// Entropy of the aligned amplitude distribution: the concentration
    /// yield per copy.
    Rate(f64),
    NotGhzType(String),
}

const SUPPORT_TOL: f64 = 1e-8;
const GHZ_TYPE_ALPHABET_CAP: usize = 8;

/// Detects whether, in the given local bases, the state can be relabelled
/// party-by-party into `sum_x sqrt(p_x) e^{i t_x} |x>...|x>`, and if so
/// returns `H(p)`. Detection is exact: the support tuples must pairwise
/// differ in every coordinate.
pub fn ghz_type_rate(psi: &PureState, bases: &LocalBases) -> Result<GhzTypeRate> {
    let layout = psi.layout();
    if let Some(&d) = layout.dims().iter().find(|&&d| d > GHZ_TYPE_ALPHABET_CAP) {
        return Ok(GhzTypeRate::NotGhzType(format!(
            "alphabet of size {d} exceeds the exact-relabeling cap {GHZ_TYPE_ALPHABET_CAP}"
        )));
    }
    let us = bases.resolve(layout)?;
    let mut amps = psi.amplitudes().to_vec();
    for (p, u) in us.iter().enumerate() {
        amps = crate::state::apply_on_party(&amps, layout, p, &u.adjoint());
    }
    let mut support: Vec<(Vec<usize>, f64)> = Vec::new();
    for (i, a) in amps.iter().enumerate() {
        if a.norm() > SUPPORT_TOL {
            support.push((layout.tuple_of(i), a.norm_sqr()));
        }
    }
    if support.is_empty() {
        return Ok(GhzTypeRate::NotGhzType("empty support".into()));
    }
    for a in 0..support.len() {
        for b in a + 1..support.len() {
            if let Some(p) = (0..layout.parties()).find(|&p| support[a].0[p] == support[b].0[p]) {
                return Ok(GhzTypeRate::NotGhzType(format!(
                    "support tuples {:?} and {:?} share the outcome of party {p}",
                    support[a].0, support[b].0
                )));
            }
        }
    }
    let total: f64 = support.iter().map(|(_, p)| p).sum();
    Ok(GhzTypeRate::Rate(crate::pmf::entropy_of(
        &support.iter().map(|(_, p)| p / total).collect::<Vec<_>>(),
    )))
}

/// The state in which every party holds a full copy of the joint outcome
/// record: `sum_x psi'_x |x> ... |x>` with `psi'` the amplitudes in the
/// given bases and `x` ranging over joint tuples. This is the intermediate
/// state whose type-class concentration yields `H(X_{[m]})` GHZ states per
/// copy; feed it to [`ghz_type_rate`] for that number.
pub fn omniscience_lift(psi: &PureState, bases: &LocalBases) -> Result<PureState> {
    let layout = psi.layout();
    let us = bases.resolve(layout)?;
    let mut amps = psi.amplitudes().to_vec();
    for (p, u) in us.iter().enumerate() {
        amps = crate::state::apply_on_party(&amps, layout, p, &u.adjoint());
    }
    let m = layout.parties();
    let d = layout.total_dim();
    let lifted_layout = crate::state::PartyLayout::new(vec![d; m])?;
    let mut lifted = vec![Complex64::new(0.0, 0.0); lifted_layout.total_dim()];
    for (x, a) in amps.iter().enumerate() {
        if a.norm_sqr() == 0.0 {
            continue;
        }
        let mut idx = 0usize;
        for _ in 0..m {
            idx = idx * d + x;
        }
        lifted[idx] = *a;
    }
    PureState::new(lifted_layout, lifted)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptimizeMethod {
    /// Optimize the projective-measurement GHZ rate.
    Vc,
    /// Optimize chi for the given measuring party.
    Svw { measuring: usize },
}

/// Derivative-free search over local measurement bases: seeded random
/// restarts refined by coordinate-wise golden-section sweeps. The
/// computational basis is always the first candidate, so the result never
/// falls below its value. Deterministic for a fixed seed; ties keep the
/// earlier restart.
pub fn optimize_bases(
    psi: &PureState,
    method: OptimizeMethod,
    restarts: usize,
    iterations: usize,
    seed: u64,
) -> Result<(BasisParams, f64)> {
    if restarts == 0 || iterations == 0 {
        return Err(Error::InvalidParameter(
            "restarts and iterations must be positive".into(),
        ));
    }
    let layout = psi.layout();
    let evaluate = |params: &BasisParams| -> Result<f64> {
        let bases = LocalBases::Params(params.clone());
        match method {
            OptimizeMethod::Vc => ghz_rate_vc(psi, &bases),
            OptimizeMethod::Svw { measuring } => Ok(svw_rate(psi, measuring, &bases)?.chi),
        }
    };

    let mut best_params = BasisParams::identity(layout);
    let mut best_value = evaluate(&best_params)?;

    for restart in 0..restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(restart as u64));
        let mut params = if restart == 0 {
            BasisParams::identity(layout)
        } else {
            BasisParams::random(layout, &mut rng)
        };
        let mut value = evaluate(&params)?;
        for iter in 0..iterations {
            let window = std::f64::consts::FRAC_PI_2 / (1 << iter) as f64;
            for k in 0..params.len() {
                let center = params.get(k);
                let (x, v) = golden_max(
                    |x| {
                        let mut trial = params.clone();
                        trial.set(k, x);
                        evaluate(&trial).unwrap_or(f64::NEG_INFINITY)
                    },
                    center - window,
                    center + window,
                );
                if v > value {
                    params.set(k, x);
                    value = v;
                }
            }
        }
        if value > best_value + 1e-12 {
            best_value = value;
            best_params = params;
        }
    }
    Ok((best_params, best_value))
}

/// Golden-section maximization on [lo, hi]; assumes the slice is reasonably
/// smooth. Returns the best probed point.
fn golden_max(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut a = lo;
    let mut b = hi;
    let mut c = b - (b - a) * INV_PHI;
    let mut d = a + (b - a) * INV_PHI;
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..28 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - (b - a) * INV_PHI;
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + (b - a) * INV_PHI;
            fd = f(d);
        }
    }
    if fc > fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RateEntry {
    pub name: String,
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<serde_json::Value>,
    #[serde(skip_serializing_if = "String::is_empty")]
    pub notes: String,
}

/// Named collection of computed rates for one state.
#[derive(Debug, Clone, Serialize)]
pub struct RateReport {
    pub state: String,
    pub entries: Vec<RateEntry>,
}

impl RateReport {
    /// Achievable entries must not exceed the entropy upper bound.
    pub fn check_sanity(&self) -> Result<()> {
        let upper = self
            .entries
            .iter()
            .find(|e| e.name == "upper_bound")
            .map(|e| e.value);
        let Some(upper) = upper else {
            return Ok(());
        };
        for e in &self.entries {
            let achievable = matches!(e.name.as_str(), "combing" | "vc" | "cq" | "svw_chi");
            if achievable && e.value > upper + 1e-6 {
                return Err(Error::InvalidParameter(format!(
                    "rate {} = {} exceeds the upper bound {}",
                    e.name, e.value, upper
                )));
            }
        }
        Ok(())
    }

    /// Aligned plain-text table with 6 decimal places.
    pub fn text_table(&self) -> String {
        let mut width = "method".len();
        for e in &self.entries {
            width = width.max(e.name.len());
        }
        let mut out = format!("state: {}\n{:width$}  {:>12}  notes\n", self.state, "method", "bits/copy");
        for e in &self.entries {
            out.push_str(&format!(
                "{:width$}  {:>12.6}  {}\n",
                e.name,
                display_bits(e.value),
                e.notes
            ));
        }
        out
    }
}

/// Rounds away the negative-zero artifacts of float cancellation for
/// fixed-point display.
pub fn display_bits(value: f64) -> f64 {
    if value.abs() < 1e-9 {
        0.0
    } else {
        value
    }
}

/// Computes the standard report: combing, projective-basis rate, cq rate
/// when instruments are given, the tripartite chi decomposition, the
/// entropy upper bound, and all pairwise EPR capacities.
pub fn standard_report(
    state_id: &str,
    psi: &PureState,
    bases: &LocalBases,
    instruments: Option<&[LocalInstrument]>,
    svw_measuring: usize,
) -> Result<RateReport> {
    let m = psi.layout().parties();
    let mut entries = Vec::new();

    entries.push(RateEntry {
        name: "combing".into(),
        value: combing_rate(psi)?,
        witness: None,
        notes: "entanglement combing".into(),
    });

    let us = bases.resolve(psi.layout())?;
    let pmf = rotated_pmf(psi, &us)?;
    let (vc, sol) = cr_rate_from_pmf(&pmf)?;
    entries.push(RateEntry {
        name: "vc".into(),
        value: vc,
        witness: Some(serde_json::to_value(&sol)?),
        notes: "projective bases; equals the classical CR rate".into(),
    });

    if let Some(ins) = instruments {
        let cq = ghz_rate_cq(psi, ins);
        match cq {
            Ok(r) => {
                entries.push(RateEntry {
                    name: "cq".into(),
                    value: r.rate,
                    witness: None,
                    notes: format!("pure instruments; {} residual branches", r.residuals.len()),
                });
            }
            Err(Error::MixedConditional(tuple, tail)) => {
                return Err(Error::MixedConditional(tuple, tail));
            }
            Err(e) => return Err(e),
        }
    }

    if m == 3 {
        let svw = svw_rate(psi, svw_measuring, bases)?;
        entries.push(RateEntry {
            name: "svw_chi".into(),
            value: svw.chi,
            witness: Some(serde_json::json!({ "measuring_party": svw_measuring })),
            notes: "min marginal entropy minus average residual entanglement".into(),
        });
        entries.push(RateEntry {
            name: "svw_ebar".into(),
            value: svw.ebar,
            witness: None,
            notes: "average residual EPR rate between the unmeasured pair".into(),
        });
        entries.push(RateEntry {
            name: "svw_fused".into(),
            value: svw.fused_total,
            witness: None,
            notes: "chi plus half the residual rate (fusing across pairs)".into(),
        });
    }

    let upper = entropy_upper_bound(psi)?;
    entries.push(RateEntry {
        name: "upper_bound".into(),
        value: upper.value,
        witness: Some(serde_json::to_value(&upper.witness)?),
        notes: "minimum marginal entropy over proper subsets".into(),
    });

    for i in 0..m {
        for j in i + 1..m {
            entries.push(RateEntry {
                name: format!("epr_{i}_{j}"),
                value: epr_capacity(psi, i, j)?,
                witness: None,
                notes: String::new(),
            });
        }
    }

    let report = RateReport {
        state: state_id.to_string(),
        entries,
    };
    report.check_sanity()?;
    Ok(report)
}
