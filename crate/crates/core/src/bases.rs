//! Parameterized local measurement bases: per-party unitaries built from
//! Givens rotations and phases, plus helpers for measuring in a rotated
//! basis.

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::pmf::JointPmf;
use crate::state::{apply_on_party, CMatrix, PartyLayout, PureState};

const UNITARY_TOL: f64 = 1e-9;

/// Angles for one party: one `(theta, phi)` pair per index pair `(p, q)`
/// with `p < q`, plus `d - 1` diagonal phases. The unitary is
/// `diag(1, e^{i a_1}, ...) * prod R_{pq}(theta, phi)`, which covers every
/// projective basis of the party.
#[derive(Debug, Clone, PartialEq)]
pub struct PartyAngles {
    pub rotations: Vec<(f64, f64)>,
    pub phases: Vec<f64>,
}

impl PartyAngles {
    pub fn identity(dim: usize) -> PartyAngles {
        PartyAngles {
            rotations: vec![(0.0, 0.0); dim * (dim - 1) / 2],
            phases: vec![0.0; dim.saturating_sub(1)],
        }
    }

    pub fn random<R: Rng>(dim: usize, rng: &mut R) -> PartyAngles {
        use std::f64::consts::PI;
        PartyAngles {
            rotations: (0..dim * (dim - 1) / 2)
                .map(|_| (rng.gen_range(0.0..PI / 2.0), rng.gen_range(0.0..2.0 * PI)))
                .collect(),
            phases: (0..dim.saturating_sub(1))
                .map(|_| rng.gen_range(0.0..2.0 * PI))
                .collect(),
        }
    }

    pub fn unitary(&self, dim: usize) -> CMatrix {
        let mut u = CMatrix::identity(dim, dim);
        let mut k = 0;
        for q in 1..dim {
            for p in 0..q {
                let (theta, phi) = self.rotations[k];
                k += 1;
                let c = Complex64::new(theta.cos(), 0.0);
                let s_pos = Complex64::from_polar(theta.sin(), phi);
                let s_neg = Complex64::from_polar(theta.sin(), -phi);
                // two-level rotation acting on coordinates p and q
                let mut r = CMatrix::identity(dim, dim);
                r[(p, p)] = c;
                r[(q, q)] = c;
                r[(p, q)] = -s_pos;
                r[(q, p)] = s_neg;
                u = r * u;
            }
        }
        let mut d = CMatrix::identity(dim, dim);
        for (i, &a) in self.phases.iter().enumerate() {
            d[(i + 1, i + 1)] = Complex64::from_polar(1.0, a);
        }
        d * u
    }
}

/// Per-party measurement-basis parameters over a layout.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisParams {
    dims: Vec<usize>,
    parties: Vec<PartyAngles>,
}

impl BasisParams {
    pub fn identity(layout: &PartyLayout) -> BasisParams {
        BasisParams {
            dims: layout.dims().to_vec(),
            parties: layout.dims().iter().map(|&d| PartyAngles::identity(d)).collect(),
        }
    }

    pub fn random<R: Rng>(layout: &PartyLayout, rng: &mut R) -> BasisParams {
        BasisParams {
            dims: layout.dims().to_vec(),
            parties: layout
                .dims()
                .iter()
                .map(|&d| PartyAngles::random(d, rng))
                .collect(),
        }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn party(&self, p: usize) -> &PartyAngles {
        &self.parties[p]
    }

    pub fn unitaries(&self) -> Vec<CMatrix> {
        self.parties
            .iter()
            .zip(self.dims.iter())
            .map(|(a, &d)| a.unitary(d))
            .collect()
    }

    /// Total number of free angles, for coordinate-wise search.
    pub fn len(&self) -> usize {
        self.parties
            .iter()
            .map(|a| a.rotations.len() * 2 + a.phases.len())
            .sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, mut k: usize) -> f64 {
        for a in &self.parties {
            if k < a.rotations.len() * 2 {
                let (t, p) = a.rotations[k / 2];
                return if k % 2 == 0 { t } else { p };
            }
            k -= a.rotations.len() * 2;
            if k < a.phases.len() {
                return a.phases[k];
            }
            k -= a.phases.len();
        }
        panic!("angle index out of range");
    }

    pub fn set(&mut self, mut k: usize, value: f64) {
        for a in &mut self.parties {
            if k < a.rotations.len() * 2 {
                let slot = &mut a.rotations[k / 2];
                if k % 2 == 0 {
                    slot.0 = value;
                } else {
                    slot.1 = value;
                }
                return;
            }
            k -= a.rotations.len() * 2;
            if k < a.phases.len() {
                a.phases[k] = value;
                return;
            }
            k -= a.phases.len();
        }
        panic!("angle index out of range");
    }
}

/// Measurement bases for every party.
#[derive(Debug, Clone)]
pub enum LocalBases {
    Computational,
    Params(BasisParams),
    Unitaries(Vec<CMatrix>),
}

impl LocalBases {
    /// Per-party unitaries `U` defining the bases `{ U|x> }`, checked
    /// against the layout and for unitarity within 1e-9.
    pub fn resolve(&self, layout: &PartyLayout) -> Result<Vec<CMatrix>> {
        let us = match self {
            LocalBases::Computational => layout
                .dims()
                .iter()
                .map(|&d| CMatrix::identity(d, d))
                .collect(),
            LocalBases::Params(p) => {
                if p.dims() != layout.dims() {
                    return Err(Error::InvalidParameter(format!(
                        "basis parameters are for dims {:?}, state has {:?}",
                        p.dims(),
                        layout.dims()
                    )));
                }
                p.unitaries()
            }
            LocalBases::Unitaries(us) => us.clone(),
        };
        if us.len() != layout.parties() {
            return Err(Error::InvalidParameter(format!(
                "{} bases supplied for {} parties",
                us.len(),
                layout.parties()
            )));
        }
        for (p, u) in us.iter().enumerate() {
            let d = layout.dim(p);
            if u.nrows() != d || u.ncols() != d {
                return Err(Error::DimMismatch {
                    party: p,
                    expected: d,
                    got: u.nrows(),
                });
            }
            let dev = (u.adjoint() * u - CMatrix::identity(d, d)).norm();
            if dev > UNITARY_TOL {
                return Err(Error::InvalidParameter(format!(
                    "basis for party {p} is not unitary (deviation {dev:.3e})"
                )));
            }
        }
        Ok(us)
    }
}

/// Outcome distribution of measuring every party in the basis `{ U_p|x> }`:
/// the squared amplitudes of `(U_0^dag x ... x U_{m-1}^dag) |psi>`.
pub fn rotated_pmf(psi: &PureState, unitaries: &[CMatrix]) -> Result<JointPmf> {
    let layout = psi.layout();
    let mut amps = psi.amplitudes().to_vec();
    for (p, u) in unitaries.iter().enumerate() {
        amps = apply_on_party(&amps, layout, p, &u.adjoint());
    }
    let mut probs: Vec<f64> = amps.iter().map(|a| a.norm_sqr()).collect();
    let sum: f64 = probs.iter().sum();
    for p in &mut probs {
        *p /= sum;
    }
    JointPmf::new(layout.dims().to_vec(), probs)
}

/// The d-dimensional discrete Fourier transform with entries
/// `exp(2 pi i kl / d) / sqrt(d)`.
pub fn fourier_matrix(d: usize) -> CMatrix {
    use std::f64::consts::PI;
    let scale = 1.0 / (d as f64).sqrt();
    CMatrix::from_fn(d, d, |k, l| {
        Complex64::from_polar(scale, 2.0 * PI * (k * l) as f64 / d as f64)
    })
}
