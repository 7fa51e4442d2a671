//! Dense complex linear algebra and entropy primitives for small multipartite
//! systems.
//!
//! Index convention: an outcome tuple `(x_0, ..., x_{m-1})` over local
//! dimensions `(d_0, ..., d_{m-1})` maps to the flat index
//! `x_0 * d_1 * ... * d_{m-1} + x_1 * d_2 * ... * d_{m-1} + ... + x_{m-1}`,
//! i.e. party 0 is the most significant digit. File I/O and `tensor` use the
//! same convention, so concatenating layouts matches the Kronecker product.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

/// Hard cap on the number of amplitudes of a state vector.
pub const MAX_STATE_ENTRIES: usize = 1 << 20;
/// Hard cap on the total dimension of an explicit density matrix.
pub const MAX_DENSITY_DIM: usize = 4096;

const HERMITIAN_TOL: f64 = 1e-10;
const TRACE_TOL: f64 = 1e-9;
const NORM_TOL: f64 = 1e-9;
const EIGENVALUE_FLOOR: f64 = -1e-9;
/// Eigenvalues below this are treated as exact zeros before taking logs.
pub const SPECTRUM_CLIP: f64 = 1e-12;

/// Local Hilbert-space dimension per party.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartyLayout {
    dims: Vec<usize>,
}

impl PartyLayout {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::Layout("need at least one party".into()));
        }
        if dims.iter().any(|&d| d == 0) {
            return Err(Error::Layout("every local dimension must be >= 1".into()));
        }
        let mut total: u128 = 1;
        for &d in &dims {
            total *= d as u128;
            if total > MAX_STATE_ENTRIES as u128 {
                return Err(Error::CapExceeded {
                    entries: total,
                    cap: MAX_STATE_ENTRIES,
                });
            }
        }
        Ok(Self { dims })
    }

    pub fn parties(&self) -> usize {
        self.dims.len()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self, party: usize) -> usize {
        self.dims[party]
    }

    pub fn total_dim(&self) -> usize {
        self.dims.iter().product()
    }

    /// Stride of each party in the flat index (party 0 most significant).
    pub fn strides(&self) -> Vec<usize> {
        let m = self.dims.len();
        let mut s = vec![1usize; m];
        for i in (0..m.saturating_sub(1)).rev() {
            s[i] = s[i + 1] * self.dims[i + 1];
        }
        s
    }

    pub fn index_of(&self, tuple: &[usize]) -> usize {
        debug_assert_eq!(tuple.len(), self.dims.len());
        let mut idx = 0;
        for (i, &x) in tuple.iter().enumerate() {
            debug_assert!(x < self.dims[i]);
            idx = idx * self.dims[i] + x;
        }
        idx
    }

    pub fn tuple_of(&self, mut index: usize) -> Vec<usize> {
        let m = self.dims.len();
        let mut out = vec![0usize; m];
        for i in (0..m).rev() {
            out[i] = index % self.dims[i];
            index /= self.dims[i];
        }
        out
    }

    /// Checks that `subset` consists of strictly increasing, in-range parties.
    pub fn check_subset(&self, subset: &[usize]) -> Result<()> {
        for (k, &p) in subset.iter().enumerate() {
            if p >= self.dims.len() {
                return Err(Error::PartyOutOfRange {
                    party: p,
                    parties: self.dims.len(),
                });
            }
            if k > 0 && subset[k - 1] >= p {
                return Err(Error::BadSubset(
                    "party indices must be strictly increasing".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn restricted(&self, keep: &[usize]) -> Result<PartyLayout> {
        if keep.is_empty() {
            return Err(Error::BadSubset("keep set must be nonempty".into()));
        }
        self.check_subset(keep)?;
        PartyLayout::new(keep.iter().map(|&p| self.dims[p]).collect())
    }

    pub fn concat(&self, other: &PartyLayout) -> Result<PartyLayout> {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        PartyLayout::new(dims)
    }

    pub fn complement(&self, subset: &[usize]) -> Vec<usize> {
        (0..self.dims.len()).filter(|p| !subset.contains(p)).collect()
    }
}

/// Pure state as a dense amplitude vector over the layout's flat index.
#[derive(Debug, Clone)]
pub struct PureState {
    layout: PartyLayout,
    amps: Vec<Complex64>,
}

impl PureState {
    /// Builds a state and checks the norm is 1 within 1e-9.
    pub fn new(layout: PartyLayout, amps: Vec<Complex64>) -> Result<Self> {
        if amps.len() != layout.total_dim() {
            return Err(Error::Layout(format!(
                "amplitude vector has {} entries, layout needs {}",
                amps.len(),
                layout.total_dim()
            )));
        }
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized { norm });
        }
        Ok(Self { layout, amps })
    }

    /// Builds a state, rescaling to unit norm.
    pub fn normalized(layout: PartyLayout, mut amps: Vec<Complex64>) -> Result<Self> {
        if amps.len() != layout.total_dim() {
            return Err(Error::Layout(format!(
                "amplitude vector has {} entries, layout needs {}",
                amps.len(),
                layout.total_dim()
            )));
        }
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::NotNormalized { norm });
        }
        for a in &mut amps {
            *a /= norm;
        }
        Ok(Self { layout, amps })
    }

    pub fn layout(&self) -> &PartyLayout {
        &self.layout
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amplitude(&self, tuple: &[usize]) -> Complex64 {
        self.amps[self.layout.index_of(tuple)]
    }

    pub fn tensor(&self, other: &PureState) -> Result<PureState> {
        let layout = self.layout.concat(&other.layout)?;
        let mut amps = Vec::with_capacity(self.amps.len() * other.amps.len());
        for a in &self.amps {
            for b in &other.amps {
                amps.push(a * b);
            }
        }
        PureState::new(layout, amps)
    }

    pub fn density_matrix(&self) -> Result<DensityMatrix> {
        let d = self.layout.total_dim();
        if d > MAX_DENSITY_DIM {
            return Err(Error::CapExceeded {
                entries: (d as u128) * (d as u128),
                cap: MAX_DENSITY_DIM * MAX_DENSITY_DIM,
            });
        }
        let mat = CMatrix::from_fn(d, d, |i, j| self.amps[i] * self.amps[j].conj());
        DensityMatrix::new(self.layout.clone(), mat)
    }

    /// Rearranges the amplitudes into a `dim(keep) x dim(rest)` matrix.
    fn split_matrix(&self, keep: &[usize]) -> CMatrix {
        let rest = self.layout.complement(keep);
        let strides = self.layout.strides();
        let dk: usize = keep.iter().map(|&p| self.layout.dim(p)).product();
        let dr: usize = rest.iter().map(|&p| self.layout.dim(p)).product();
        let mut mat = CMatrix::zeros(dk, dr);
        let mut tuple = vec![0usize; self.layout.parties()];
        for (flat, &a) in self.amps.iter().enumerate() {
            let mut rem = flat;
            for (i, &s) in strides.iter().enumerate() {
                tuple[i] = rem / s;
                rem %= s;
            }
            let mut row = 0usize;
            for &p in keep {
                row = row * self.layout.dim(p) + tuple[p];
            }
            let mut col = 0usize;
            for &p in &rest {
                col = col * self.layout.dim(p) + tuple[p];
            }
            mat[(row, col)] = a;
        }
        mat
    }

    /// Reduced state on `keep` (strictly increasing party indices).
    pub fn marginal(&self, keep: &[usize]) -> Result<DensityMatrix> {
        self.layout.check_subset(keep)?;
        if keep.is_empty() {
            return Err(Error::BadSubset("keep set must be nonempty".into()));
        }
        if keep.len() == self.layout.parties() {
            return self.density_matrix();
        }
        let m = self.split_matrix(keep);
        let rho = &m * m.adjoint();
        DensityMatrix::new(self.layout.restricted(keep)?, rho)
    }

    /// Spectrum of the reduced state on `keep`, computed from the smaller
    /// Gram matrix of the amplitude split (both sides share the nonzero
    /// spectrum for a pure state).
    pub fn marginal_spectrum(&self, keep: &[usize]) -> Result<Spectrum> {
        self.layout.check_subset(keep)?;
        if keep.is_empty() {
            return Err(Error::BadSubset("keep set must be nonempty".into()));
        }
        let rest = self.layout.complement(keep);
        let dk: usize = keep.iter().map(|&p| self.layout.dim(p)).product();
        let dr: usize = rest.iter().map(|&p| self.layout.dim(p)).product();
        let m = self.split_matrix(keep);
        let gram = if dk <= dr || rest.is_empty() {
            &m * m.adjoint()
        } else {
            m.adjoint() * &m
        };
        Spectrum::of_hermitian(&gram)
    }

    /// Entropy (bits) of the reduced state on `keep`.
    pub fn marginal_entropy(&self, keep: &[usize]) -> Result<f64> {
        let dim: usize = keep.iter().map(|&p| self.layout.dim(p)).product();
        Ok(self.marginal_spectrum(keep)?.entropy_bits(dim))
    }
}

/// Validated density operator on a retained layout.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    layout: PartyLayout,
    mat: CMatrix,
}

impl DensityMatrix {
    /// Validates Hermiticity (1e-10 max entry deviation), unit trace (1e-9)
    /// and positivity (eigenvalues >= -1e-9).
    pub fn new(layout: PartyLayout, mat: CMatrix) -> Result<Self> {
        let d = layout.total_dim();
        if d > MAX_DENSITY_DIM {
            return Err(Error::CapExceeded {
                entries: (d as u128) * (d as u128),
                cap: MAX_DENSITY_DIM * MAX_DENSITY_DIM,
            });
        }
        if mat.nrows() != d || mat.ncols() != d {
            return Err(Error::Layout(format!(
                "matrix is {}x{}, layout needs {}x{}",
                mat.nrows(),
                mat.ncols(),
                d,
                d
            )));
        }
        let dev = hermitian_deviation(&mat);
        if dev > HERMITIAN_TOL {
            return Err(Error::NotHermitian { deviation: dev });
        }
        let trace = mat.trace().re;
        if (trace - 1.0).abs() > TRACE_TOL {
            return Err(Error::BadTrace { trace });
        }
        let spec = Spectrum::of_hermitian(&mat)?;
        if let Some(&min) = spec.raw_min() {
            if min < EIGENVALUE_FLOOR {
                return Err(Error::NotPositive { eigenvalue: min });
            }
        }
        Ok(Self { layout, mat })
    }

    pub fn maximally_mixed(layout: PartyLayout) -> Result<Self> {
        let d = layout.total_dim();
        let mat = CMatrix::identity(d, d) * Complex64::new(1.0 / d as f64, 0.0);
        Self::new(layout, mat)
    }

    pub fn layout(&self) -> &PartyLayout {
        &self.layout
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn tensor(&self, other: &DensityMatrix) -> Result<DensityMatrix> {
        let layout = self.layout.concat(&other.layout)?;
        DensityMatrix::new(layout, self.mat.kronecker(&other.mat))
    }

    /// Traces out every party not in `keep` (strictly increasing indices).
    pub fn partial_trace(&self, keep: &[usize]) -> Result<DensityMatrix> {
        if keep.is_empty() {
            return Err(Error::BadSubset("keep set must be nonempty".into()));
        }
        self.layout.check_subset(keep)?;
        if keep.len() == self.layout.parties() {
            return Ok(self.clone());
        }
        let rest = self.layout.complement(keep);
        let strides = self.layout.strides();
        let dk: usize = keep.iter().map(|&p| self.layout.dim(p)).product();
        let dr: usize = rest.iter().map(|&p| self.layout.dim(p)).product();

        // flat index of (kept tuple k, rest tuple r) interleaved into the layout
        let keep_strides: Vec<usize> = keep.iter().map(|&p| strides[p]).collect();
        let rest_strides: Vec<usize> = rest.iter().map(|&p| strides[p]).collect();
        let keep_dims: Vec<usize> = keep.iter().map(|&p| self.layout.dim(p)).collect();
        let rest_dims: Vec<usize> = rest.iter().map(|&p| self.layout.dim(p)).collect();
        let flat = |tuple_idx: usize, dims: &[usize], strs: &[usize]| -> usize {
            let mut rem = tuple_idx;
            let mut out = 0usize;
            for i in (0..dims.len()).rev() {
                out += (rem % dims[i]) * strs[i];
                rem /= dims[i];
            }
            out
        };
        let keep_flat: Vec<usize> = (0..dk).map(|k| flat(k, &keep_dims, &keep_strides)).collect();
        let rest_flat: Vec<usize> = (0..dr).map(|r| flat(r, &rest_dims, &rest_strides)).collect();

        let mut out = CMatrix::zeros(dk, dk);
        for a in 0..dk {
            for b in 0..dk {
                let mut acc = Complex64::new(0.0, 0.0);
                for r in 0..dr {
                    acc += self.mat[(keep_flat[a] + rest_flat[r], keep_flat[b] + rest_flat[r])];
                }
                out[(a, b)] = acc;
            }
        }
        DensityMatrix::new(self.layout.restricted(keep)?, out)
    }

    pub fn spectrum(&self) -> Spectrum {
        // Hermiticity was validated on construction.
        Spectrum::of_hermitian(&self.mat).expect("validated density matrix")
    }

    /// Von Neumann entropy in bits, clamped to [0, log2 dim].
    pub fn entropy_bits(&self) -> f64 {
        self.spectrum().entropy_bits(self.layout.total_dim())
    }
}

/// Eigenvalues of a Hermitian operator, nonincreasing, with entries below
/// 1e-12 clipped to zero.
#[derive(Debug, Clone)]
pub struct Spectrum {
    eigenvalues: Vec<f64>,
    raw_min: Option<f64>,
}

impl Spectrum {
    /// Diagonalizes `mat` after checking it is Hermitian within 1e-10.
    pub fn of_hermitian(mat: &CMatrix) -> Result<Spectrum> {
        let dev = hermitian_deviation(mat);
        if dev > HERMITIAN_TOL {
            return Err(Error::NotHermitian { deviation: dev });
        }
        let sym = mat.clone().symmetric_eigen();
        let mut eigs: Vec<f64> = sym.eigenvalues.iter().copied().collect();
        eigs.sort_by(|a, b| b.partial_cmp(a).expect("real eigenvalues"));
        let raw_min = eigs.last().copied();
        for e in &mut eigs {
            if *e < SPECTRUM_CLIP {
                *e = 0.0;
            }
        }
        Ok(Spectrum {
            eigenvalues: eigs,
            raw_min,
        })
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    fn raw_min(&self) -> Option<&f64> {
        self.raw_min.as_ref()
    }

    pub fn sum(&self) -> f64 {
        self.eigenvalues.iter().sum()
    }

    /// -sum lambda log2 lambda with 0 log 0 = 0, clamped to [0, log2 dim].
    pub fn entropy_bits(&self, dim: usize) -> f64 {
        let mut h = 0.0;
        for &l in &self.eigenvalues {
            if l > 0.0 {
                h -= l * l.log2();
            }
        }
        h.clamp(0.0, (dim as f64).log2())
    }
}

/// Von Neumann entropy in bits of a validated density matrix.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> f64 {
    rho.entropy_bits()
}

pub fn hermitian_deviation(mat: &CMatrix) -> f64 {
    let mut dev: f64 = 0.0;
    for i in 0..mat.nrows() {
        for j in i..mat.ncols() {
            dev = dev.max((mat[(i, j)] - mat[(j, i)].conj()).norm());
        }
    }
    dev
}

/// Applies `op` (out_dim x in_dim) on the given party of an amplitude
/// vector, leaving all other parties untouched. The caller is responsible
/// for tracking the new layout (the party's dimension becomes out_dim).
pub fn apply_on_party(
    amps: &[Complex64],
    layout: &PartyLayout,
    party: usize,
    op: &CMatrix,
) -> Vec<Complex64> {
    let dims = layout.dims();
    let in_dim = dims[party];
    debug_assert_eq!(op.ncols(), in_dim);
    let out_dim = op.nrows();
    let right: usize = dims[party + 1..].iter().product();
    let left: usize = dims[..party].iter().product();
    let mut out = vec![Complex64::new(0.0, 0.0); left * out_dim * right];
    for l in 0..left {
        for r in 0..out_dim {
            for c in 0..in_dim {
                let o = op[(r, c)];
                if o.norm_sqr() == 0.0 {
                    continue;
                }
                let src = (l * in_dim + c) * right;
                let dst = (l * out_dim + r) * right;
                for k in 0..right {
                    out[dst + k] += o * amps[src + k];
                }
            }
        }
    }
    out
}

/// Principal square root of a positive semidefinite Hermitian matrix.
pub fn psd_sqrt(mat: &CMatrix) -> Result<CMatrix> {
    let dev = hermitian_deviation(mat);
    if dev > HERMITIAN_TOL {
        return Err(Error::NotHermitian { deviation: dev });
    }
    let eig = mat.clone().symmetric_eigen();
    let n = mat.nrows();
    let mut out = CMatrix::zeros(n, n);
    for k in 0..n {
        let l = eig.eigenvalues[k];
        if l < EIGENVALUE_FLOOR {
            return Err(Error::NotPositive { eigenvalue: l });
        }
        let s = l.max(0.0).sqrt();
        let v = eig.eigenvectors.column(k);
        for i in 0..n {
            for j in 0..n {
                out[(i, j)] += v[i] * v[j].conj() * Complex64::new(s, 0.0);
            }
        }
    }
    Ok(out)
}
