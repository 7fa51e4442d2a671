//! Builders for the named states used throughout the crate.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::state::{PartyLayout, PureState};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NamedState {
    /// (|001> + |010> + |100>) / sqrt(3) on three qubits.
    W3,
    /// (|0...0> + |1...1>) / sqrt(2) on m qubits.
    Ghz(usize),
    /// Fully antisymmetric three-qutrit state, amplitudes +-1/sqrt(6) with
    /// the sign of the permutation.
    Antisym3,
    /// Flower state on layout [2d, 2d, d]. Parties A and B hold the pair
    /// (i, j) as a single register of dimension 2d with index i*2 + j; the
    /// C register carries H^j |i> where H^0 = identity and H^1 is the
    /// d-dimensional discrete Fourier transform.
    Flower(usize),
    /// Bell pair, identical to Ghz(2).
    Epr,
}

impl NamedState {
    /// Parses names such as `w3`, `ghz3`, `ghz(3)`, `antisym3`, `flower4`,
    /// `flower(4)`, `epr`.
    pub fn parse(name: &str) -> Result<NamedState> {
        let n = name.trim().to_ascii_lowercase();
        let param = |prefix: &str| -> Option<usize> {
            let rest = n.strip_prefix(prefix)?;
            let rest = rest
                .strip_prefix('(')
                .and_then(|r| r.strip_suffix(')'))
                .unwrap_or(rest);
            rest.parse().ok()
        };
        match n.as_str() {
            "w3" => Ok(NamedState::W3),
            "antisym3" => Ok(NamedState::Antisym3),
            "epr" => Ok(NamedState::Epr),
            _ if n.starts_with("ghz") => param("ghz")
                .map(NamedState::Ghz)
                .ok_or_else(|| Error::UnknownState(name.into())),
            _ if n.starts_with("flower") => param("flower")
                .map(NamedState::Flower)
                .ok_or_else(|| Error::UnknownState(name.into())),
            _ => Err(Error::UnknownState(name.into())),
        }
    }
}

pub fn build_named_state(name: &NamedState) -> Result<PureState> {
    match name {
        NamedState::W3 => w_state(),
        NamedState::Ghz(m) => ghz_state(*m),
        NamedState::Antisym3 => antisymmetric_state(),
        NamedState::Flower(d) => flower_state(*d),
        NamedState::Epr => ghz_state(2),
    }
}

pub fn w_state() -> Result<PureState> {
    let layout = PartyLayout::new(vec![2, 2, 2])?;
    let a = Complex64::new(1.0 / 3f64.sqrt(), 0.0);
    let mut amps = vec![Complex64::new(0.0, 0.0); 8];
    amps[0b001] = a;
    amps[0b010] = a;
    amps[0b100] = a;
    PureState::new(layout, amps)
}

pub fn ghz_state(m: usize) -> Result<PureState> {
    if m < 2 {
        return Err(Error::InvalidParameter(format!(
            "ghz needs at least 2 parties, got {m}"
        )));
    }
    let layout = PartyLayout::new(vec![2; m])?;
    let total = layout.total_dim();
    let a = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let mut amps = vec![Complex64::new(0.0, 0.0); total];
    amps[0] = a;
    amps[total - 1] = a;
    PureState::new(layout, amps)
}

pub fn antisymmetric_state() -> Result<PureState> {
    let layout = PartyLayout::new(vec![3, 3, 3])?;
    let a = 1.0 / 6f64.sqrt();
    let mut amps = vec![Complex64::new(0.0, 0.0); 27];
    let signed: [([usize; 3], f64); 6] = [
        ([0, 1, 2], 1.0),
        ([1, 2, 0], 1.0),
        ([2, 0, 1], 1.0),
        ([0, 2, 1], -1.0),
        ([1, 0, 2], -1.0),
        ([2, 1, 0], -1.0),
    ];
    for (t, sign) in signed {
        amps[layout.index_of(&t)] = Complex64::new(sign * a, 0.0);
    }
    PureState::new(layout, amps)
}

pub fn flower_state(d: usize) -> Result<PureState> {
    if d < 2 {
        return Err(Error::InvalidParameter(format!(
            "flower needs d >= 2, got {d}"
        )));
    }
    let layout = PartyLayout::new(vec![2 * d, 2 * d, d])?;
    let mut amps = vec![Complex64::new(0.0, 0.0); layout.total_dim()];
    let scale = 1.0 / (2.0 * d as f64).sqrt();
    let fourier = 1.0 / (d as f64).sqrt();
    for i in 0..d {
        for j in 0..2usize {
            let ab = i * 2 + j;
            for c in 0..d {
                let coeff = if j == 0 {
                    if c == i {
                        Complex64::new(1.0, 0.0)
                    } else {
                        continue;
                    }
                } else {
                    let phase = 2.0 * PI * (c * i) as f64 / d as f64;
                    Complex64::new(fourier * phase.cos(), fourier * phase.sin())
                };
                amps[layout.index_of(&[ab, ab, c])] = coeff * scale;
            }
        }
    }
    PureState::new(layout, amps)
}
