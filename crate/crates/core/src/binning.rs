//! Monte Carlo validation of the classical omniscience rate region: random
//! binning encoders, joint-typicality decoding, empirical error accounting,
//! and randomness extraction.
//!
//! The binning hashes are a seeded keyed pseudorandom function over the
//! sequence bytes (fresh keys per trial), standing in for 2-universal
//! families: at desk scale only pairwise near-independence matters, which
//! the PRF supplies empirically. Randomness extraction uses a seeded
//! Carter-Wegman polynomial hash.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::pmf::JointPmf;

/// Hard cap on `support_size^n`, the number of candidate joint sequences.
pub const MAX_JOINT_SEQUENCES: f64 = 16_777_216.0; // 2^24

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub pmf: JointPmf,
    /// Bits per symbol broadcast by each party; binned into
    /// `2^ceil(n * rate)` bins.
    pub rates: Vec<f64>,
    pub n: usize,
    pub trials: usize,
    /// Per-symbol entropy slack of the typicality test.
    pub delta: f64,
    pub seed: u64,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::BadSimConfig("block length must be >= 1".into()));
        }
        if self.trials == 0 {
            return Err(Error::BadSimConfig("trial count must be >= 1".into()));
        }
        if !(self.delta > 0.0) {
            return Err(Error::BadSimConfig("delta must be positive".into()));
        }
        if self.rates.len() != self.pmf.parties() {
            return Err(Error::BadSimConfig(format!(
                "{} rates for {} parties",
                self.rates.len(),
                self.pmf.parties()
            )));
        }
        if self.rates.iter().any(|r| !r.is_finite() || *r < 0.0) {
            return Err(Error::BadSimConfig("rates must be nonnegative".into()));
        }
        Ok(())
    }
}

/// The jointly entropy-typical sequences of `pmf^n`: every nonempty subset
/// `I` of parties satisfies `|-(1/n) log p^n(x_I^n) - H(X_I)| <= delta`.
/// Sequences are stored as indices into the joint support.
#[derive(Debug, Clone)]
pub struct TypicalSet {
    n: usize,
    parties: usize,
    /// Joint support tuples, flat-index order.
    support: Vec<Vec<usize>>,
    support_probs: Vec<f64>,
    /// Per subset (bitmask order), per support symbol: -log2 of the
    /// marginal probability.
    costs: Vec<Vec<f64>>,
    /// Per subset: marginal entropy H(X_I).
    entropies: Vec<f64>,
    /// Flattened sequences, `n` support indices each.
    seqs: Vec<u8>,
    count: usize,
    total_prob: f64,
    /// Per party: distinct projected sequences and, per typical sequence,
    /// the id of its projection.
    proj_bytes: Vec<Vec<Vec<u8>>>,
    proj_ids: Vec<Vec<u32>>,
    proj_lookup: Vec<HashMap<Vec<u8>, u32>>,
}

impl TypicalSet {
    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    /// Total source probability of the set under `pmf^n`.
    pub fn total_probability(&self) -> f64 {
        self.total_prob
    }

    pub fn support(&self) -> &[Vec<usize>] {
        &self.support
    }

    /// Iterates sequences as slices of support indices.
    pub fn sequences(&self) -> impl Iterator<Item = &[u8]> {
        self.seqs.chunks(self.n)
    }

    fn seq(&self, k: usize) -> &[u8] {
        &self.seqs[k * self.n..(k + 1) * self.n]
    }

    /// Typicality check for an arbitrary support-index sequence.
    pub fn is_typical(&self, seq: &[u8], delta: f64) -> bool {
        for (s, (costs, h)) in self.costs.iter().zip(&self.entropies).enumerate() {
            let _ = s;
            let total: f64 = seq.iter().map(|&k| costs[k as usize]).sum();
            if (total / self.n as f64 - h).abs() > delta + 1e-12 {
                return false;
            }
        }
        true
    }

    fn project(&self, seq: &[u8], party: usize) -> Vec<u8> {
        seq.iter()
            .map(|&k| self.support[k as usize][party] as u8)
            .collect()
    }
}

/// Enumerates the jointly typical set. Rejects inputs where
/// `support^n` exceeds 2^24 candidate sequences.
pub fn typical_set(pmf: &JointPmf, n: usize, delta: f64) -> Result<TypicalSet> {
    if n == 0 {
        return Err(Error::BadSimConfig("block length must be >= 1".into()));
    }
    if !(delta > 0.0) {
        return Err(Error::BadSimConfig("delta must be positive".into()));
    }
    let support_entries = pmf.support();
    if support_entries.is_empty() {
        return Err(Error::BadPmf("pmf has empty support".into()));
    }
    if support_entries.len() > u8::MAX as usize {
        return Err(Error::BadSimConfig(
            "supports beyond 255 joint symbols are not enumerable here".into(),
        ));
    }
    let s = support_entries.len();
    if (s as f64).powi(n as i32) > MAX_JOINT_SEQUENCES {
        let entries = (s as u128).saturating_pow(n.min(127) as u32);
        return Err(Error::CapExceeded {
            entries,
            cap: MAX_JOINT_SEQUENCES as usize,
        });
    }
    let m = pmf.parties();
    let support: Vec<Vec<usize>> = support_entries.iter().map(|(t, _)| t.clone()).collect();
    let support_probs: Vec<f64> = support_entries.iter().map(|(_, p)| *p).collect();

    // subset masks 1..2^m, each with marginal costs per support symbol
    let mut costs = Vec::new();
    let mut entropies = Vec::new();
    for mask in 1usize..(1 << m) {
        let subset: Vec<usize> = (0..m).filter(|i| mask & (1 << i) != 0).collect();
        let marg = pmf.marginal(&subset)?;
        entropies.push(marg.entropy_bits());
        let c: Vec<f64> = support
            .iter()
            .map(|t| {
                let proj: Vec<usize> = subset.iter().map(|&p| t[p]).collect();
                -marg.prob(&proj).log2()
            })
            .collect();
        costs.push(c);
    }

    let n_subsets = costs.len();
    let nf = n as f64;
    let mut seqs: Vec<u8> = Vec::new();
    let mut count = 0usize;
    let mut total_prob = 0.0;

    // odometer over support indices with per-position running sums
    let mut digits = vec![0u8; n];
    let mut sums = vec![vec![0.0f64; n_subsets]; n + 1];
    let mut logp = vec![0.0f64; n + 1];
    let mut pos = 0usize;
    loop {
        // fill forward from pos
        while pos < n {
            let k = digits[pos] as usize;
            for si in 0..n_subsets {
                sums[pos + 1][si] = sums[pos][si] + costs[si][k];
            }
            logp[pos + 1] = logp[pos] + support_probs[k].log2();
            pos += 1;
        }
        let typical = (0..n_subsets)
            .all(|si| (sums[n][si] / nf - entropies[si]).abs() <= delta + 1e-12);
        if typical {
            seqs.extend_from_slice(&digits);
            count += 1;
            total_prob += logp[n].exp2();
        }
        // advance odometer
        let mut carry = n;
        loop {
            if carry == 0 {
                break;
            }
            carry -= 1;
            if (digits[carry] as usize) < s - 1 {
                digits[carry] += 1;
                for d in digits.iter_mut().skip(carry + 1) {
                    *d = 0;
                }
                pos = carry;
                break;
            }
            if carry == 0 {
                pos = usize::MAX;
                break;
            }
        }
        if pos == usize::MAX {
            break;
        }
    }

    // intern per-party projections
    let mut proj_bytes = vec![Vec::new(); m];
    let mut proj_ids = vec![Vec::with_capacity(count); m];
    let mut proj_lookup: Vec<HashMap<Vec<u8>, u32>> = vec![HashMap::new(); m];
    for k in 0..count {
        let seq = &seqs[k * n..(k + 1) * n];
        for party in 0..m {
            let proj: Vec<u8> = seq
                .iter()
                .map(|&idx| support[idx as usize][party] as u8)
                .collect();
            let next_id = proj_bytes[party].len() as u32;
            let id = *proj_lookup[party].entry(proj.clone()).or_insert(next_id);
            if id == next_id {
                proj_bytes[party].push(proj);
            }
            proj_ids[party].push(id);
        }
    }

    Ok(TypicalSet {
        n,
        parties: m,
        support,
        support_probs,
        costs,
        entropies,
        seqs,
        count,
        total_prob,
        proj_bytes,
        proj_ids,
        proj_lookup,
    })
}

/// Seeded keyed PRF over bytes (splitmix-based).
fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

fn prf_bytes(key: u64, bytes: &[u8]) -> u64 {
    let mut h = splitmix64(key);
    for chunk in bytes.chunks(8) {
        let mut buf = [0u8; 8];
        buf[..chunk.len()].copy_from_slice(chunk);
        h = splitmix64(h ^ u64::from_le_bytes(buf));
    }
    splitmix64(h ^ bytes.len() as u64)
}

fn derive_key(seed: u64, trial: u64, purpose: u64) -> u64 {
    splitmix64(splitmix64(seed ^ purpose.wrapping_mul(0xA076_1D64_78BD_642F)) ^ trial)
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct ExtractionReport {
    /// `floor(n (H(X) - 2 delta))` bits, 0 when the formula is nonpositive.
    pub output_bits: usize,
    pub prefix_bits: u32,
    pub samples: usize,
    /// Empirical total-variation distance of the prefix distribution from
    /// uniform; absent when there is nothing to extract or no samples.
    pub tv_distance: Option<f64>,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct SimResult {
    pub trials: usize,
    /// Trials where at least one decoder failed.
    pub errors: usize,
    pub error_rate: f64,
    pub per_decoder_errors: Vec<usize>,
    /// Failure classification, disjoint by priority
    /// atypical > no-candidate > ambiguous; the three sum to `errors`.
    pub err_atypical: usize,
    pub err_no_candidate: usize,
    pub err_ambiguous: usize,
    pub typical_set_size: usize,
    pub typical_set_probability: f64,
    pub extraction: ExtractionReport,
    /// Recovered joint sequences (support indices) of the successful
    /// trials, for further extraction analysis.
    #[serde(skip)]
    pub transcripts: Vec<Vec<u8>>,
}

/// Default prefix width for the uniformity estimate; small enough that the
/// estimator's own sampling noise stays below the deviations measured at
/// desk-scale trial counts.
const DEFAULT_PREFIX_BITS: u32 = 6;

/// Runs the random-binning omniscience protocol: samples a source block,
/// broadcasts per-party bin indices, and lets every decoder search the
/// typical set for the unique candidate matching its own sequence and all
/// bin indices. Success requires every decoder to recover the truth.
pub fn run_omniscience(cfg: &SimConfig) -> Result<SimResult> {
    cfg.validate()?;
    let set = typical_set(&cfg.pmf, cfg.n, cfg.delta)?;
    let m = set.parties;
    let n = cfg.n;
    let bits: Vec<u32> = cfg
        .rates
        .iter()
        .map(|r| ((n as f64 * r) - 1e-9).ceil().max(0.0).min(63.0) as u32)
        .collect();
    let masks: Vec<u64> = bits
        .iter()
        .map(|&b| if b == 0 { 0 } else { (1u64 << b) - 1 })
        .collect();

    let cum: Vec<f64> = {
        let mut acc = 0.0;
        set.support_probs
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect()
    };

    let mut errors = 0usize;
    let mut per_decoder = vec![0usize; m];
    let mut err_atypical = 0usize;
    let mut err_no_candidate = 0usize;
    let mut err_ambiguous = 0usize;
    let mut transcripts: Vec<Vec<u8>> = Vec::new();
    let mut bin_of: Vec<Vec<u64>> = (0..m).map(|p| vec![0u64; set.proj_bytes[p].len()]).collect();

    for trial in 0..cfg.trials {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_key(cfg.seed, trial as u64, 0));
        let truth: Vec<u8> = (0..n)
            .map(|_| {
                let u: f64 = rng.gen();
                cum.partition_point(|&c| c <= u).min(set.support.len() - 1) as u8
            })
            .collect();
        let truth_typical = set.is_typical(&truth, cfg.delta);

        // fresh binning keys each trial
        let keys: Vec<u64> = (0..m)
            .map(|p| derive_key(cfg.seed, trial as u64, 1 + p as u64))
            .collect();
        for p in 0..m {
            for (id, proj) in set.proj_bytes[p].iter().enumerate() {
                bin_of[p][id] = prf_bytes(keys[p], proj) & masks[p];
            }
        }
        let truth_projs: Vec<Vec<u8>> = (0..m).map(|p| set.project(&truth, p)).collect();
        let mus: Vec<u64> = (0..m)
            .map(|p| prf_bytes(keys[p], &truth_projs[p]) & masks[p])
            .collect();

        let mut any_wrong = false;
        let mut saw_no_candidate = false;
        let mut saw_ambiguous = false;
        for j in 0..m {
            let own = set.proj_lookup[j].get(&truth_projs[j]).copied();
            let mut n_cands = 0usize;
            let mut first = usize::MAX;
            if let Some(own_id) = own {
                'scan: for k in 0..set.count {
                    if set.proj_ids[j][k] != own_id {
                        continue;
                    }
                    for i in 0..m {
                        if i == j {
                            continue;
                        }
                        if bin_of[i][set.proj_ids[i][k] as usize] != mus[i] {
                            continue 'scan;
                        }
                    }
                    n_cands += 1;
                    if n_cands == 1 {
                        first = k;
                    } else {
                        break;
                    }
                }
            }
            let correct = n_cands == 1 && set.seq(first) == truth.as_slice();
            if !correct {
                per_decoder[j] += 1;
                any_wrong = true;
                if n_cands == 0 {
                    saw_no_candidate = true;
                } else if n_cands > 1 {
                    saw_ambiguous = true;
                }
            }
        }
        if any_wrong {
            errors += 1;
            if !truth_typical {
                err_atypical += 1;
            } else if saw_no_candidate {
                err_no_candidate += 1;
            } else if saw_ambiguous {
                err_ambiguous += 1;
            } else {
                // unique-but-wrong candidates can only involve an atypical
                // truth, handled above
                err_no_candidate += 1;
            }
        } else {
            transcripts.push(truth);
        }
    }

    let extraction = extract_uniform(cfg, &transcripts, DEFAULT_PREFIX_BITS);
    Ok(SimResult {
        trials: cfg.trials,
        errors,
        error_rate: errors as f64 / cfg.trials as f64,
        per_decoder_errors: per_decoder,
        err_atypical,
        err_no_candidate,
        err_ambiguous,
        typical_set_size: set.count,
        typical_set_probability: set.total_prob,
        extraction,
        transcripts,
    })
}

const EXTRACT_PURPOSE: u64 = 0xEC;
const CW_PRIME: u128 = (1 << 61) - 1;

/// Hashes recovered omniscience transcripts down to
/// `floor(n (H(X) - 2 delta))` bits with a seeded polynomial universal
/// hash, and estimates the total-variation distance from uniform of the
/// first `prefix_bits` bits (clamped to 10) over the samples.
pub fn extract_uniform(
    cfg: &SimConfig,
    transcripts: &[Vec<u8>],
    prefix_bits: u32,
) -> ExtractionReport {
    let h = cfg.pmf.entropy_bits();
    let bits_f = cfg.n as f64 * (h - 2.0 * cfg.delta);
    let output_bits = if bits_f > 0.0 { bits_f.floor() as usize } else { 0 };
    if output_bits == 0 {
        return ExtractionReport {
            output_bits: 0,
            prefix_bits: 0,
            samples: 0,
            tv_distance: None,
        };
    }
    let prefix = prefix_bits.min(10).min(output_bits as u32).max(1);
    if transcripts.is_empty() {
        return ExtractionReport {
            output_bits,
            prefix_bits: prefix,
            samples: 0,
            tv_distance: None,
        };
    }
    // one hash key for the whole run
    let a = (derive_key(cfg.seed, 0, EXTRACT_PURPOSE) as u128 % (CW_PRIME - 2)) + 1;
    let b = derive_key(cfg.seed, 1, EXTRACT_PURPOSE) as u128 % CW_PRIME;
    let cells = 1usize << prefix;
    let mut counts = vec![0usize; cells];
    for t in transcripts {
        let mut acc: u128 = 0;
        for &byte in t {
            acc = (acc * a + byte as u128 + 1) % CW_PRIME;
        }
        let value = (acc + b) % CW_PRIME;
        counts[(value as usize) & (cells - 1)] += 1;
    }
    let nsamp = transcripts.len() as f64;
    let uniform = 1.0 / cells as f64;
    let tv = 0.5
        * counts
            .iter()
            .map(|&c| (c as f64 / nsamp - uniform).abs())
            .sum::<f64>();
    ExtractionReport {
        output_bits,
        prefix_bits: prefix,
        samples: transcripts.len(),
        tv_distance: Some(tv),
    }
}
