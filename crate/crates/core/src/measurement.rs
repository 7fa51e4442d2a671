//! Local POVMs and instruments, joint outcome distributions, cq-states and
//! their conditional entropies.

use nalgebra::DVector;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::pmf::JointPmf;
use crate::state::{
    apply_on_party, hermitian_deviation, psd_sqrt, CMatrix, DensityMatrix, PartyLayout, PureState,
    Spectrum,
};

const COMPLETENESS_TOL: f64 = 1e-8;
/// Outcome tuples below this probability are dropped from a [`CqState`].
const PROB_FLOOR: f64 = 1e-12;

/// A positive operator-valued measure on a single party.
#[derive(Debug, Clone)]
pub struct Povm {
    elements: Vec<CMatrix>,
}

impl Povm {
    pub fn new(elements: Vec<CMatrix>) -> Result<Self> {
        if elements.is_empty() {
            return Err(Error::InvalidParameter("POVM needs outcomes".into()));
        }
        let d = elements[0].nrows();
        let mut sum = CMatrix::zeros(d, d);
        for (i, m) in elements.iter().enumerate() {
            if m.nrows() != d || m.ncols() != d {
                return Err(Error::InvalidParameter(
                    "POVM elements must be square of equal dimension".into(),
                ));
            }
            let dev = hermitian_deviation(m);
            if dev > COMPLETENESS_TOL {
                return Err(Error::NotHermitian { deviation: dev });
            }
            let spec = Spectrum::of_hermitian(m)?;
            if let Some(&min) = spec.eigenvalues().last() {
                let raw = spec.eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min);
                let _ = min;
                if raw < -COMPLETENESS_TOL {
                    return Err(Error::PovmNotPositive {
                        party: usize::MAX,
                        index: i,
                        eigenvalue: raw,
                    });
                }
            }
            sum += m;
        }
        let dev = max_abs_deviation_from_identity(&sum);
        if dev > COMPLETENESS_TOL {
            return Err(Error::IncompleteInstrument {
                party: usize::MAX,
                deviation: dev,
            });
        }
        Ok(Self { elements })
    }

    /// Projective measurement in the computational basis.
    pub fn computational(dim: usize) -> Povm {
        let elements = (0..dim)
            .map(|x| {
                let mut m = CMatrix::zeros(dim, dim);
                m[(x, x)] = Complex64::new(1.0, 0.0);
                m
            })
            .collect();
        Povm { elements }
    }

    /// Projective measurement in the basis `{ U|x> }`.
    pub fn basis(unitary: &CMatrix) -> Povm {
        let d = unitary.nrows();
        let elements = (0..d)
            .map(|x| {
                let col = unitary.column(x);
                CMatrix::from_fn(d, d, |i, j| col[i] * col[j].conj())
            })
            .collect();
        Povm { elements }
    }

    /// Single-outcome identity POVM.
    pub fn trivial(dim: usize) -> Povm {
        Povm {
            elements: vec![CMatrix::identity(dim, dim)],
        }
    }

    pub fn dim(&self) -> usize {
        self.elements[0].nrows()
    }

    pub fn n_outcomes(&self) -> usize {
        self.elements.len()
    }

    pub fn elements(&self) -> &[CMatrix] {
        &self.elements
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InstrumentKind {
    /// Every Kraus operator is a single bra row: the party keeps no quantum
    /// register (dimension-1 output).
    FullMeasurement,
    Partial,
    Trivial,
}

/// An instrument on one party: completely positive maps labelled by a
/// classical outcome, summing to a trace-preserving map. Kraus operators may
/// be rectangular (out-dim != in-dim); several operators may share an
/// outcome label.
#[derive(Debug, Clone)]
pub struct LocalInstrument {
    party: usize,
    kraus: Vec<(usize, CMatrix)>,
    kind: InstrumentKind,
    in_dim: usize,
    out_dim: usize,
    n_outcomes: usize,
}

impl LocalInstrument {
    pub fn from_kraus(party: usize, kraus: Vec<(usize, CMatrix)>) -> Result<Self> {
        if kraus.is_empty() {
            return Err(Error::InvalidParameter(
                "instrument needs at least one Kraus operator".into(),
            ));
        }
        let in_dim = kraus[0].1.ncols();
        let out_dim = kraus[0].1.nrows();
        let mut sum = CMatrix::zeros(in_dim, in_dim);
        for (_, e) in &kraus {
            if e.ncols() != in_dim || e.nrows() != out_dim {
                return Err(Error::InvalidParameter(
                    "all Kraus operators of a party must share their shape".into(),
                ));
            }
            sum += e.adjoint() * e;
        }
        let dev = max_abs_deviation_from_identity(&sum);
        if dev > COMPLETENESS_TOL {
            return Err(Error::IncompleteInstrument {
                party,
                deviation: dev,
            });
        }
        let n_outcomes = kraus.iter().map(|(x, _)| x + 1).max().unwrap_or(1);
        let kind = if kraus.iter().all(|(_, e)| e.nrows() == 1) {
            InstrumentKind::FullMeasurement
        } else if kraus.len() == 1
            && in_dim == out_dim
            && (&kraus[0].1 - CMatrix::identity(in_dim, in_dim)).norm() < 1e-10
        {
            InstrumentKind::Trivial
        } else {
            InstrumentKind::Partial
        };
        Ok(Self {
            party,
            kraus,
            kind,
            in_dim,
            out_dim,
            n_outcomes,
        })
    }

    /// Full measurement in the computational basis: Kraus rows `<x|`.
    pub fn computational(party: usize, dim: usize) -> LocalInstrument {
        let kraus = (0..dim)
            .map(|x| {
                let mut e = CMatrix::zeros(1, dim);
                e[(0, x)] = Complex64::new(1.0, 0.0);
                (x, e)
            })
            .collect();
        LocalInstrument {
            party,
            kraus,
            kind: InstrumentKind::FullMeasurement,
            in_dim: dim,
            out_dim: 1,
            n_outcomes: dim,
        }
    }

    /// Full measurement in the basis `{ U|x> }`: Kraus rows `<x| U^dag`.
    pub fn basis_measurement(party: usize, unitary: &CMatrix) -> LocalInstrument {
        let d = unitary.nrows();
        let adj = unitary.adjoint();
        let kraus = (0..d)
            .map(|x| (x, CMatrix::from_fn(1, d, |_, j| adj[(x, j)])))
            .collect();
        LocalInstrument {
            party,
            kraus,
            kind: InstrumentKind::FullMeasurement,
            in_dim: d,
            out_dim: 1,
            n_outcomes: d,
        }
    }

    /// Projects onto the residue classes of the basis index modulo `r`,
    /// keeping the full register: Kraus operators
    /// `E_j = sum_{i = j mod r} |i><i|` with outcome `j`. Measures the
    /// least-significant digit of a register of dimension `k * r`.
    pub fn residue_measurement(party: usize, dim: usize, r: usize) -> Result<LocalInstrument> {
        if r < 2 || dim % r != 0 {
            return Err(Error::InvalidParameter(format!(
                "residue measurement needs r >= 2 dividing the dimension, got r={r}, dim={dim}"
            )));
        }
        let kraus = (0..r)
            .map(|j| {
                let mut e = CMatrix::zeros(dim, dim);
                for i in (j..dim).step_by(r) {
                    e[(i, i)] = Complex64::new(1.0, 0.0);
                }
                (j, e)
            })
            .collect();
        Ok(LocalInstrument {
            party,
            kraus,
            kind: InstrumentKind::Partial,
            in_dim: dim,
            out_dim: dim,
            n_outcomes: r,
        })
    }

    /// Identity map with a single outcome.
    pub fn trivial(party: usize, dim: usize) -> LocalInstrument {
        LocalInstrument {
            party,
            kraus: vec![(0, CMatrix::identity(dim, dim))],
            kind: InstrumentKind::Trivial,
            in_dim: dim,
            out_dim: dim,
            n_outcomes: 1,
        }
    }

    /// Instrument induced by a POVM through the principal square roots of
    /// its elements.
    pub fn from_povm(party: usize, povm: &Povm) -> Result<LocalInstrument> {
        let kraus: Result<Vec<_>> = povm
            .elements()
            .iter()
            .enumerate()
            .map(|(x, m)| Ok((x, psd_sqrt(m)?)))
            .collect();
        Self::from_kraus(party, kraus?)
    }

    pub fn party(&self) -> usize {
        self.party
    }

    pub fn kind(&self) -> InstrumentKind {
        self.kind
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn n_outcomes(&self) -> usize {
        self.n_outcomes
    }

    pub fn kraus(&self) -> &[(usize, CMatrix)] {
        &self.kraus
    }

    /// True when every outcome label carries exactly one Kraus operator.
    pub fn is_pure(&self) -> bool {
        let mut seen = vec![false; self.n_outcomes];
        for (x, _) in &self.kraus {
            if seen[*x] {
                return false;
            }
            seen[*x] = true;
        }
        true
    }
}

/// One outcome tuple of a [`CqState`].
#[derive(Debug, Clone)]
pub struct CqEntry {
    pub tuple: Vec<usize>,
    pub prob: f64,
    pub conditional: DensityMatrix,
}

/// Classical-quantum state: a pmf over outcome tuples together with the
/// normalized conditional state of the retained registers for each tuple.
/// Zero-probability tuples are omitted.
#[derive(Debug, Clone)]
pub struct CqState {
    sizes: Vec<usize>,
    retained: PartyLayout,
    entries: Vec<CqEntry>,
}

impl CqState {
    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn parties(&self) -> usize {
        self.sizes.len()
    }

    pub fn retained_layout(&self) -> &PartyLayout {
        &self.retained
    }

    pub fn entries(&self) -> &[CqEntry] {
        &self.entries
    }

    /// Dense pmf over the outcome alphabet.
    pub fn pmf(&self) -> JointPmf {
        let total: usize = self.sizes.iter().product();
        let mut probs = vec![0.0; total];
        let mut sum = 0.0;
        for e in &self.entries {
            let mut idx = 0;
            for (i, &x) in e.tuple.iter().enumerate() {
                idx = idx * self.sizes[i] + x;
            }
            probs[idx] = e.prob;
            sum += e.prob;
        }
        for p in &mut probs {
            *p /= sum;
        }
        JointPmf::new(self.sizes.clone(), probs).expect("normalized by construction")
    }

    /// Average retained state sum_x p(x) rho_x, embedded on the retained
    /// layout (the channel output after discarding the outcome record).
    pub fn average_state(&self) -> Result<DensityMatrix> {
        let d = self.retained.total_dim();
        let mut acc = CMatrix::zeros(d, d);
        for e in &self.entries {
            acc += e.conditional.matrix() * Complex64::new(e.prob, 0.0);
        }
        DensityMatrix::new(self.retained.clone(), acc)
    }
}

fn max_abs_deviation_from_identity(m: &CMatrix) -> f64 {
    let mut dev: f64 = 0.0;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let target = if i == j {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            };
            dev = dev.max((m[(i, j)] - target).norm());
        }
    }
    dev
}

fn check_povms(layout: &PartyLayout, povms: &[Povm]) -> Result<()> {
    if povms.len() != layout.parties() {
        return Err(Error::InvalidParameter(format!(
            "{} POVMs supplied for {} parties",
            povms.len(),
            layout.parties()
        )));
    }
    for (p, povm) in povms.iter().enumerate() {
        if povm.dim() != layout.dim(p) {
            return Err(Error::DimMismatch {
                party: p,
                expected: layout.dim(p),
                got: povm.dim(),
            });
        }
    }
    Ok(())
}

/// Joint outcome distribution of local POVM measurements on a pure state:
/// `p(x) = <psi| M^0_{x_0} x ... x M^{m-1}_{x_{m-1}} |psi>`.
pub fn measure_joint_pure(psi: &PureState, povms: &[Povm]) -> Result<JointPmf> {
    let layout = psi.layout();
    check_povms(layout, povms)?;
    let sizes: Vec<usize> = povms.iter().map(|p| p.n_outcomes()).collect();
    let total: usize = sizes.iter().product();
    let mut probs = vec![0.0; total];
    let mut stack_tuple = Vec::new();
    descend_pure(
        psi.amplitudes(),
        layout,
        povms,
        0,
        &mut stack_tuple,
        &sizes,
        &mut |idx, vec| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (a, b) in psi.amplitudes().iter().zip(vec.iter()) {
                acc += a.conj() * b;
            }
            probs[idx] = acc.re.max(0.0);
        },
    );
    normalize_pmf(sizes, probs)
}

fn descend_pure(
    amps: &[Complex64],
    layout: &PartyLayout,
    povms: &[Povm],
    party: usize,
    tuple: &mut Vec<usize>,
    sizes: &[usize],
    emit: &mut impl FnMut(usize, &[Complex64]),
) {
    if party == povms.len() {
        let mut idx = 0;
        for (i, &x) in tuple.iter().enumerate() {
            idx = idx * sizes[i] + x;
        }
        emit(idx, amps);
        return;
    }
    for (x, m) in povms[party].elements().iter().enumerate() {
        let next = apply_on_party(amps, layout, party, m);
        tuple.push(x);
        descend_pure(&next, layout, povms, party + 1, tuple, sizes, emit);
        tuple.pop();
    }
}

/// Joint outcome distribution of local POVM measurements on a density
/// matrix: `p(x) = Tr rho (M^0_{x_0} x ... x M^{m-1}_{x_{m-1}})`.
pub fn measure_joint(rho: &DensityMatrix, povms: &[Povm]) -> Result<JointPmf> {
    let layout = rho.layout();
    check_povms(layout, povms)?;
    let sizes: Vec<usize> = povms.iter().map(|p| p.n_outcomes()).collect();
    let total: usize = sizes.iter().product();
    let mut probs = vec![0.0; total];
    // Apply each POVM element along the row index of rho, then trace.
    let d = layout.total_dim();
    let col_layout = layout.clone();
    let mut columns: Vec<Vec<Complex64>> = Vec::with_capacity(d);
    for j in 0..d {
        columns.push((0..d).map(|i| rho.matrix()[(i, j)]).collect());
    }
    let mut tuple = Vec::new();
    descend_density(
        &columns,
        &col_layout,
        povms,
        0,
        &mut tuple,
        &sizes,
        &mut |idx, cols| {
            let mut tr = 0.0;
            for (j, col) in cols.iter().enumerate() {
                tr += col[j].re;
            }
            probs[idx] = tr.max(0.0);
        },
    );
    normalize_pmf(sizes, probs)
}

fn descend_density(
    columns: &[Vec<Complex64>],
    layout: &PartyLayout,
    povms: &[Povm],
    party: usize,
    tuple: &mut Vec<usize>,
    sizes: &[usize],
    emit: &mut impl FnMut(usize, &[Vec<Complex64>]),
) {
    if party == povms.len() {
        let mut idx = 0;
        for (i, &x) in tuple.iter().enumerate() {
            idx = idx * sizes[i] + x;
        }
        emit(idx, columns);
        return;
    }
    for (x, m) in povms[party].elements().iter().enumerate() {
        let next: Vec<Vec<Complex64>> = columns
            .iter()
            .map(|col| apply_on_party(col, layout, party, m))
            .collect();
        tuple.push(x);
        descend_density(&next, layout, povms, party + 1, tuple, sizes, emit);
        tuple.pop();
    }
}

fn normalize_pmf(sizes: Vec<usize>, mut probs: Vec<f64>) -> Result<JointPmf> {
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > COMPLETENESS_TOL {
        return Err(Error::BadPmf(format!(
            "outcome probabilities sum to {sum}; measurement not complete"
        )));
    }
    for p in &mut probs {
        *p /= sum;
    }
    JointPmf::new(sizes, probs)
}

/// Applies one local instrument per party to a pure state, producing the
/// cq-state of outcome records and retained registers.
pub fn apply_instruments(psi: &PureState, instruments: &[LocalInstrument]) -> Result<CqState> {
    let layout = psi.layout();
    if instruments.len() != layout.parties() {
        return Err(Error::InvalidParameter(format!(
            "{} instruments supplied for {} parties",
            instruments.len(),
            layout.parties()
        )));
    }
    for (p, ins) in instruments.iter().enumerate() {
        if ins.party() != p {
            return Err(Error::InvalidParameter(format!(
                "instrument {} declares party {}, expected {}",
                p,
                ins.party(),
                p
            )));
        }
        if ins.in_dim() != layout.dim(p) {
            return Err(Error::DimMismatch {
                party: p,
                expected: layout.dim(p),
                got: ins.in_dim(),
            });
        }
    }
    let sizes: Vec<usize> = instruments.iter().map(|i| i.n_outcomes()).collect();
    let retained = PartyLayout::new(instruments.iter().map(|i| i.out_dim()).collect())?;
    let rd = retained.total_dim();

    // Unnormalized branch vectors per outcome tuple; an outcome tuple may
    // collect several Kraus combinations when maps are not pure.
    let total: usize = sizes.iter().product();
    let mut branches: Vec<Vec<DVector<Complex64>>> = vec![Vec::new(); total];
    let mut work_dims: Vec<usize> = layout.dims().to_vec();
    descend_instruments(
        psi.amplitudes().to_vec(),
        &mut work_dims,
        instruments,
        0,
        0,
        &sizes,
        &mut branches,
    );

    let mut entries = Vec::new();
    let mut total_prob = 0.0;
    for (flat, vecs) in branches.iter().enumerate() {
        let mut prob = 0.0;
        for v in vecs {
            prob += v.norm_squared();
        }
        total_prob += prob;
        if prob <= PROB_FLOOR {
            continue;
        }
        let mut mat = CMatrix::zeros(rd, rd);
        for v in vecs {
            for i in 0..rd {
                for j in 0..rd {
                    mat[(i, j)] += v[i] * v[j].conj();
                }
            }
        }
        mat /= Complex64::new(prob, 0.0);
        let conditional = DensityMatrix::new(retained.clone(), mat)?;
        let mut tuple = vec![0usize; sizes.len()];
        let mut rem = flat;
        for i in (0..sizes.len()).rev() {
            tuple[i] = rem % sizes[i];
            rem /= sizes[i];
        }
        entries.push(CqEntry {
            tuple,
            prob,
            conditional,
        });
    }
    if (total_prob - 1.0).abs() > COMPLETENESS_TOL {
        return Err(Error::BadPmf(format!(
            "instrument outcome probabilities sum to {total_prob}"
        )));
    }
    for e in &mut entries {
        e.prob /= total_prob;
    }
    Ok(CqState {
        sizes,
        retained,
        entries,
    })
}

fn descend_instruments(
    amps: Vec<Complex64>,
    dims: &mut Vec<usize>,
    instruments: &[LocalInstrument],
    party: usize,
    flat: usize,
    sizes: &[usize],
    branches: &mut [Vec<DVector<Complex64>>],
) {
    if party == instruments.len() {
        branches[flat].push(DVector::from_vec(amps));
        return;
    }
    let saved = dims[party];
    for (x, e) in instruments[party].kraus() {
        let layout = PartyLayout::new(dims.clone()).expect("intermediate layout");
        let next = apply_on_party(&amps, &layout, party, e);
        dims[party] = e.nrows();
        descend_instruments(
            next,
            dims,
            instruments,
            party + 1,
            flat * sizes[party] + x,
            sizes,
            branches,
        );
        dims[party] = saved;
    }
}

/// `S(X_L | X_{[m] \ L} A'_j)` of a cq-state, in bits, computed through the
/// decomposition `S(X_G A'_j) = H(X_G) + sum_{x_G} p(x_G) S(rho_{x_G})`.
pub fn cq_conditional_entropy(omega: &CqState, l: &[usize], decoder: usize) -> Result<f64> {
    let m = omega.parties();
    if decoder >= m {
        return Err(Error::PartyOutOfRange {
            party: decoder,
            parties: m,
        });
    }
    if l.is_empty() {
        return Err(Error::BadSubset("conditioned subset must be nonempty".into()));
    }
    let mut sorted = l.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != l.len() {
        return Err(Error::BadSubset("duplicate parties in subset".into()));
    }
    if sorted.iter().any(|&p| p >= m) {
        return Err(Error::PartyOutOfRange {
            party: *sorted.iter().max().unwrap(),
            parties: m,
        });
    }
    if sorted.contains(&decoder) {
        return Err(Error::BadSubset(format!(
            "decoder {decoder} cannot appear in the conditioned subset"
        )));
    }
    let complement: Vec<usize> = (0..m).filter(|p| !sorted.contains(p)).collect();

    // Reduced conditionals on the decoder's retained register, computed once.
    let reduced: Vec<CMatrix> = omega
        .entries()
        .iter()
        .map(|e| {
            e.conditional
                .partial_trace(&[decoder])
                .map(|d| d.matrix().clone())
        })
        .collect::<Result<_>>()?;
    let dim_j = omega.retained_layout().dim(decoder);

    let s_full = cq_register_entropy(omega, &(0..m).collect::<Vec<_>>(), &reduced, dim_j)?;
    let s_given = cq_register_entropy(omega, &complement, &reduced, dim_j)?;
    Ok(s_full - s_given)
}

/// `S(X_G A'_j)` where the reduced conditionals on `A'_j` are supplied.
fn cq_register_entropy(
    omega: &CqState,
    g: &[usize],
    reduced: &[CMatrix],
    dim_j: usize,
) -> Result<f64> {
    use std::collections::BTreeMap;
    // group entries by the outcome restriction to G
    let mut groups: BTreeMap<Vec<usize>, (f64, CMatrix)> = BTreeMap::new();
    for (e, red) in omega.entries().iter().zip(reduced.iter()) {
        let key: Vec<usize> = g.iter().map(|&p| e.tuple[p]).collect();
        let entry = groups
            .entry(key)
            .or_insert_with(|| (0.0, CMatrix::zeros(dim_j, dim_j)));
        entry.0 += e.prob;
        entry.1 += red * Complex64::new(e.prob, 0.0);
    }
    let mut h_classical = 0.0;
    let mut s_quantum = 0.0;
    for (_, (p, mat)) in groups.iter() {
        if *p <= 0.0 {
            continue;
        }
        h_classical -= p * p.log2();
        let avg = mat / Complex64::new(*p, 0.0);
        let spec = Spectrum::of_hermitian(&avg)?;
        s_quantum += p * spec.entropy_bits(dim_j);
    }
    Ok(h_classical + s_quantum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{flower_state, w_state};

    fn computational_povms(layout: &PartyLayout) -> Vec<Povm> {
        layout.dims().iter().map(|&d| Povm::computational(d)).collect()
    }

    #[test]
    fn w3_computational_pmf_is_uniform_on_support() {
        let psi = w_state().unwrap();
        let pmf = measure_joint_pure(&psi, &computational_povms(psi.layout())).unwrap();
        let support = pmf.support();
        assert_eq!(support.len(), 3);
        for (t, p) in support {
            assert!((p - 1.0 / 3.0).abs() < 1e-12);
            assert_eq!(t.iter().sum::<usize>(), 1);
        }
        // density-matrix route agrees
        let rho = psi.density_matrix().unwrap();
        let pmf2 = measure_joint(&rho, &computational_povms(psi.layout())).unwrap();
        for (a, b) in pmf.probabilities().iter().zip(pmf2.probabilities()) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn antisym_pmf_is_uniform_on_permutations() {
        let psi = crate::states::antisymmetric_state().unwrap();
        let pmf = measure_joint_pure(&psi, &computational_povms(psi.layout())).unwrap();
        let support = pmf.support();
        assert_eq!(support.len(), 6);
        for (t, p) in support {
            assert!((p - 1.0 / 6.0).abs() < 1e-12);
            let mut s = t.clone();
            s.sort_unstable();
            assert_eq!(s, vec![0, 1, 2]);
        }
    }

    #[test]
    fn trivial_povms_give_unit_pmf() {
        let psi = w_state().unwrap();
        let povms: Vec<Povm> = psi.layout().dims().iter().map(|&d| Povm::trivial(d)).collect();
        let pmf = measure_joint_pure(&psi, &povms).unwrap();
        assert_eq!(pmf.sizes(), &[1, 1, 1]);
        assert!((pmf.probabilities()[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn povm_completeness_is_enforced() {
        let half = CMatrix::identity(2, 2) * Complex64::new(0.45, 0.0);
        assert!(Povm::new(vec![half.clone(), half]).is_err());
    }

    #[test]
    fn full_measurement_reduces_to_joint_pmf() {
        let psi = w_state().unwrap();
        let ins: Vec<LocalInstrument> = (0..3)
            .map(|p| LocalInstrument::computational(p, 2))
            .collect();
        let cq = apply_instruments(&psi, &ins).unwrap();
        assert_eq!(cq.retained_layout().dims(), &[1, 1, 1]);
        let pmf = cq.pmf();
        assert_eq!(pmf.support().len(), 3);
        for (_, p) in pmf.support() {
            assert!((p - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn w3_a_measured_conditionals() {
        // A measures computationally; B, C keep their qubits.
        let psi = w_state().unwrap();
        let ins = vec![
            LocalInstrument::computational(0, 2),
            LocalInstrument::trivial(1, 2),
            LocalInstrument::trivial(2, 2),
        ];
        let cq = apply_instruments(&psi, &ins).unwrap();
        assert_eq!(cq.entries().len(), 2);
        // x=1 -> |00>, x=0 -> (|01>+|10>)/sqrt(2) on BC
        for e in cq.entries() {
            let red = e.conditional.partial_trace(&[1, 2]).unwrap();
            if e.tuple[0] == 1 {
                assert!((e.prob - 1.0 / 3.0).abs() < 1e-12);
                assert!((red.matrix()[(0, 0)].re - 1.0).abs() < 1e-10);
            } else {
                assert!((e.prob - 2.0 / 3.0).abs() < 1e-12);
                let m = red.matrix();
                assert!((m[(1, 1)].re - 0.5).abs() < 1e-10);
                assert!((m[(2, 2)].re - 0.5).abs() < 1e-10);
                assert!((m[(1, 2)].re - 0.5).abs() < 1e-10);
                assert!(m[(0, 0)].norm() < 1e-10);
            }
            // pure CP maps on a pure input: rank one
            let spec = e.conditional.spectrum();
            assert!(spec.eigenvalues()[0] > 1.0 - 1e-8);
        }
    }

    #[test]
    fn average_state_matches_channel_output() {
        let psi = w_state().unwrap();
        let ins = vec![
            LocalInstrument::computational(0, 2),
            LocalInstrument::trivial(1, 2),
            LocalInstrument::trivial(2, 2),
        ];
        let cq = apply_instruments(&psi, &ins).unwrap();
        let avg = cq.average_state().unwrap();
        // Channel output: sum_x (E_x x I x I) psi psi^dag (.)^dag
        let rho = psi.density_matrix().unwrap();
        let mut expect = CMatrix::zeros(4, 4);
        for x in 0..2usize {
            let mut e = CMatrix::zeros(1, 2);
            e[(0, x)] = Complex64::new(1.0, 0.0);
            let full = e.kronecker(&CMatrix::identity(4, 4));
            expect += &full * rho.matrix() * full.adjoint();
        }
        assert!((avg.matrix() - expect).norm() < 1e-9);
    }

    #[test]
    fn flower_b_measures_j_digit() {
        let d = 4usize;
        let psi = flower_state(d).unwrap();
        // B projects onto even/odd columns (the j digit of its register),
        // keeping the full register.
        let mut kraus = Vec::new();
        for j in 0..2usize {
            let mut e = CMatrix::zeros(2 * d, 2 * d);
            for i in 0..d {
                e[(i * 2 + j, i * 2 + j)] = Complex64::new(1.0, 0.0);
            }
            kraus.push((j, e));
        }
        let ins = vec![
            LocalInstrument::trivial(0, 2 * d),
            LocalInstrument::from_kraus(1, kraus).unwrap(),
            LocalInstrument::trivial(2, d),
        ];
        let cq = apply_instruments(&psi, &ins).unwrap();
        assert_eq!(cq.entries().len(), 2);
        for e in cq.entries() {
            assert!((e.prob - 0.5).abs() < 1e-10);
            // conditional is pure
            assert!(e.conditional.spectrum().eigenvalues()[0] > 1.0 - 1e-8);
        }
        // S(X_B | X_A X_C A'_A) = 0: A's register determines j.
        let s_a = cq_conditional_entropy(&cq, &[1], 0).unwrap();
        assert!(s_a.abs() < 1e-8, "decoder A: {s_a}");
        // S(X_B | X_A X_C A'_C) = 1: C's conditional is maximally mixed
        // for both outcomes.
        let s_c = cq_conditional_entropy(&cq, &[1], 2).unwrap();
        assert!((s_c - 1.0).abs() < 1e-8, "decoder C: {s_c}");
    }

    #[test]
    fn cq_entropy_classical_reduction() {
        // Fully measured: conditional entropies match the Shannon ones.
        let psi = w_state().unwrap();
        let ins: Vec<LocalInstrument> = (0..3)
            .map(|p| LocalInstrument::computational(p, 2))
            .collect();
        let cq = apply_instruments(&psi, &ins).unwrap();
        let pmf = cq.pmf();
        for l in [vec![0], vec![1], vec![0, 1]] {
            for j in 0..3usize {
                if l.contains(&j) {
                    continue;
                }
                let given: Vec<usize> = (0..3).filter(|p| !l.contains(p)).collect();
                let cqh = cq_conditional_entropy(&cq, &l, j).unwrap();
                let sh = pmf.conditional_entropy(&l, &given).unwrap();
                assert!((cqh - sh).abs() < 1e-9, "L={l:?} j={j}: {cqh} vs {sh}");
            }
        }
    }

    #[test]
    fn decoder_in_subset_rejected() {
        let psi = w_state().unwrap();
        let ins: Vec<LocalInstrument> = (0..3)
            .map(|p| LocalInstrument::computational(p, 2))
            .collect();
        let cq = apply_instruments(&psi, &ins).unwrap();
        assert!(cq_conditional_entropy(&cq, &[0, 1], 1).is_err());
    }

    #[test]
    fn incomplete_instrument_reports_party_and_deviation() {
        let e = CMatrix::identity(2, 2) * Complex64::new(0.9f64.sqrt(), 0.0);
        let err = LocalInstrument::from_kraus(1, vec![(0, e)]).unwrap_err();
        match err {
            Error::IncompleteInstrument { party, deviation } => {
                assert_eq!(party, 1);
                assert!((deviation - 0.1).abs() < 1e-9);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn povm_square_root_instrument_matches_pmf() {
        let psi = w_state().unwrap();
        let povms = computational_povms(psi.layout());
        let pmf = measure_joint_pure(&psi, &povms).unwrap();
        let ins: Vec<LocalInstrument> = povms
            .iter()
            .enumerate()
            .map(|(p, m)| LocalInstrument::from_povm(p, m).unwrap())
            .collect();
        let cq = apply_instruments(&psi, &ins).unwrap();
        let pmf2 = cq.pmf();
        for (a, b) in pmf.probabilities().iter().zip(pmf2.probabilities()) {
            assert!((a - b).abs() < 1e-10);
        }
    }
}
