//! Cross-module invariants on randomized inputs.

use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ghzdist::bases::{LocalBases, PartyAngles};
use ghzdist::measurement::{
    apply_instruments, cq_conditional_entropy, measure_joint_pure, LocalInstrument, Povm,
};
use ghzdist::pmf::JointPmf;
use ghzdist::rates::{combing_rate, entropy_upper_bound, ghz_rate_vc};
use ghzdist::region::{build_region_classical, build_region_cq, minimize_sum, oracle_minimize};
use ghzdist::state::{CMatrix, DensityMatrix, PartyLayout, PureState};
use ghzdist::states::{flower_state, w_state};

type C64 = Complex64;

fn random_pure_state(dims: &[usize], rng: &mut ChaCha8Rng) -> PureState {
    let layout = PartyLayout::new(dims.to_vec()).unwrap();
    let amps: Vec<C64> = (0..layout.total_dim())
        .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    PureState::normalized(layout, amps).unwrap()
}

fn random_pmf(sizes: &[usize], rng: &mut ChaCha8Rng) -> JointPmf {
    let total: usize = sizes.iter().product();
    let mut probs: Vec<f64> = (0..total).map(|_| -rng.gen::<f64>().ln()).collect();
    let sum: f64 = probs.iter().sum();
    for p in &mut probs {
        *p /= sum;
    }
    JointPmf::new(sizes.to_vec(), probs).unwrap()
}

/// Random two-outcome instrument with pure CP maps, complete by
/// construction: E_k = G_k (sum G^dag G)^{-1/2}.
fn random_instrument(party: usize, dim: usize, rng: &mut ChaCha8Rng) -> LocalInstrument {
    let g: Vec<CMatrix> = (0..2)
        .map(|_| {
            DMatrix::from_fn(dim, dim, |_, _| {
                C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
            })
        })
        .collect();
    let mut m = CMatrix::zeros(dim, dim);
    for gk in &g {
        m += gk.adjoint() * gk;
    }
    let inv_sqrt = inverse_psd_sqrt(&m);
    let kraus: Vec<(usize, CMatrix)> = g
        .into_iter()
        .enumerate()
        .map(|(k, gk)| (k, gk * &inv_sqrt))
        .collect();
    LocalInstrument::from_kraus(party, kraus).unwrap()
}

fn inverse_psd_sqrt(m: &CMatrix) -> CMatrix {
    let eig = m.clone().symmetric_eigen();
    let n = m.nrows();
    let mut out = CMatrix::zeros(n, n);
    for k in 0..n {
        let s = 1.0 / eig.eigenvalues[k].max(1e-12).sqrt();
        let v = eig.eigenvectors.column(k);
        for i in 0..n {
            for j in 0..n {
                out[(i, j)] += v[i] * v[j].conj() * C64::new(s, 0.0);
            }
        }
    }
    out
}

#[test]
fn pure_state_complementary_marginals_match() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    for _ in 0..25 {
        let psi = random_pure_state(&[2, 3, 2], &mut rng);
        for mask in 1usize..(1 << 3) - 1 {
            let subset: Vec<usize> = (0..3).filter(|i| mask & (1 << i) != 0).collect();
            let comp: Vec<usize> = (0..3).filter(|i| mask & (1 << i) == 0).collect();
            let a = psi.marginal_entropy(&subset).unwrap();
            let b = psi.marginal_entropy(&comp).unwrap();
            assert!((a - b).abs() < 1e-8, "{subset:?}: {a} vs {b}");
        }
    }
}

#[test]
fn diagonal_density_matrix_matches_shannon() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let pmf = random_pmf(&[2, 3], &mut rng);
        let layout = PartyLayout::new(vec![2, 3]).unwrap();
        let mat = CMatrix::from_fn(6, 6, |i, j| {
            if i == j {
                C64::new(pmf.probabilities()[i], 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        let rho = DensityMatrix::new(layout, mat).unwrap();
        assert!((rho.entropy_bits() - pmf.entropy_bits()).abs() < 1e-9);
    }
}

#[test]
fn oracle_and_simplex_agree_on_random_pmfs() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for trial in 0..60 {
        let sizes: &[usize] = if trial % 3 == 0 { &[2, 2, 2] } else { &[3, 3, 3] };
        let pmf = random_pmf(sizes, &mut rng);
        let region = build_region_classical(&pmf).unwrap();
        let lp = minimize_sum(&region).unwrap();
        let oracle = oracle_minimize(&region).unwrap();
        assert!(
            (lp.objective - oracle.objective).abs() < 1e-7,
            "trial {trial}: {} vs {}",
            lp.objective,
            oracle.objective
        );
    }
}

#[test]
fn cq_bounds_never_exceed_classical() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..15 {
        let psi = random_pure_state(&[2, 2, 2], &mut rng);
        let instruments: Vec<LocalInstrument> =
            (0..3).map(|p| random_instrument(p, 2, &mut rng)).collect();
        let omega = apply_instruments(&psi, &instruments).unwrap();
        let cq = build_region_cq(&omega).unwrap();
        let classical = build_region_classical(&omega.pmf()).unwrap();
        for (a, b) in cq.constraints.iter().zip(&classical.constraints) {
            assert_eq!(a.subset, b.subset);
            assert!(
                a.bound <= b.bound + 1e-8,
                "subset {:?}: cq {} vs classical {}",
                a.subset,
                a.bound,
                b.bound
            );
        }
    }
}

#[test]
fn cq_conditional_entropy_is_nonnegative_and_data_processed() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..10 {
        let psi = random_pure_state(&[2, 2, 2], &mut rng);
        let instruments: Vec<LocalInstrument> =
            (0..3).map(|p| random_instrument(p, 2, &mut rng)).collect();
        let omega = apply_instruments(&psi, &instruments).unwrap();
        let pmf = omega.pmf();
        for mask in 1usize..(1 << 3) - 1 {
            let l: Vec<usize> = (0..3).filter(|i| mask & (1 << i) != 0).collect();
            let comp: Vec<usize> = (0..3).filter(|i| mask & (1 << i) == 0).collect();
            let h_l = pmf.marginal(&l).unwrap().entropy_bits();
            for &j in &comp {
                let s = cq_conditional_entropy(&omega, &l, j).unwrap();
                assert!(s >= -1e-9, "S(X_{l:?}|..A'_{j}) = {s}");
                assert!(s <= h_l + 1e-8);
                let classical = pmf.conditional_entropy(&l, &comp).unwrap();
                assert!(s <= classical + 1e-8, "discarding A'_{j} helped? {s} > {classical}");
            }
        }
    }
}

#[test]
fn instrument_channel_output_matches_average() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..10 {
        let psi = random_pure_state(&[2, 2], &mut rng);
        let instruments: Vec<LocalInstrument> =
            (0..2).map(|p| random_instrument(p, 2, &mut rng)).collect();
        let omega = apply_instruments(&psi, &instruments).unwrap();
        let avg = omega.average_state().unwrap();
        // direct channel application
        let rho = psi.density_matrix().unwrap();
        let mut expect = CMatrix::zeros(4, 4);
        for (x0, e0) in instruments[0].kraus() {
            let _ = x0;
            for (x1, e1) in instruments[1].kraus() {
                let _ = x1;
                let full = e0.kronecker(e1);
                expect += &full * rho.matrix() * full.adjoint();
            }
        }
        assert!((avg.matrix() - expect).norm() < 1e-9);
    }
}

#[test]
fn measure_joint_marginals_match_partial_trace() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for _ in 0..10 {
        let psi = random_pure_state(&[2, 2, 3], &mut rng);
        let povms: Vec<Povm> = psi
            .layout()
            .dims()
            .iter()
            .map(|&d| Povm::computational(d))
            .collect();
        let joint = measure_joint_pure(&psi, &povms).unwrap();
        for p in 0..3usize {
            let marg = joint.marginal(&[p]).unwrap();
            let red = psi.marginal(&[p]).unwrap();
            for x in 0..psi.layout().dim(p) {
                let diag = red.matrix()[(x, x)].re;
                assert!((marg.probabilities()[x] - diag).abs() < 1e-9);
            }
        }
    }
}

#[test]
fn rates_invariant_under_conjugated_local_unitaries() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for _ in 0..5 {
        let psi = random_pure_state(&[2, 2, 2], &mut rng);
        let vs: Vec<CMatrix> = (0..3)
            .map(|_| PartyAngles::random(2, &mut rng).unitary(2))
            .collect();
        // rotate the state by V per party
        let mut amps = psi.amplitudes().to_vec();
        for (p, v) in vs.iter().enumerate() {
            amps = ghzdist::state::apply_on_party(&amps, psi.layout(), p, v);
        }
        let rotated = PureState::normalized(psi.layout().clone(), amps).unwrap();
        // measuring the rotated state in bases {V U |x>} matches measuring
        // the original in {U |x>}
        let us: Vec<CMatrix> = (0..3)
            .map(|_| PartyAngles::random(2, &mut rng).unitary(2))
            .collect();
        let conjugated: Vec<CMatrix> = us.iter().zip(&vs).map(|(u, v)| v * u).collect();
        let a = ghz_rate_vc(&psi, &LocalBases::Unitaries(us)).unwrap();
        let b = ghz_rate_vc(&rotated, &LocalBases::Unitaries(conjugated)).unwrap();
        assert!((a - b).abs() < 1e-7, "{a} vs {b}");
    }
}

#[test]
fn combing_positive_iff_entangled_across_every_cut() {
    // genuinely multiparty entangled example
    let w = w_state().unwrap();
    assert!(combing_rate(&w).unwrap() > 1e-8);
    // product across the {0} | {1,2} cut
    let l1 = PartyLayout::new(vec![2]).unwrap();
    let zero = PureState::new(l1, vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)]).unwrap();
    let bell = ghzdist::states::ghz_state(2).unwrap();
    let product = zero.tensor(&bell).unwrap();
    assert!(combing_rate(&product).unwrap() < 1e-8);
    // upper bound vanishes on the same cut
    assert!(entropy_upper_bound(&product).unwrap().value < 1e-8);
}

#[test]
fn flower_projective_rate_bounded_by_half_log_d() {
    for (d, seed) in [(2usize, 7u64), (4, 8)] {
        let psi = flower_state(d).unwrap();
        let bound = 0.5 * (d as f64).log2();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for trial in 0..50 {
            let u_c = PartyAngles::random(d, &mut rng).unitary(d);
            let us = vec![
                CMatrix::identity(2 * d, 2 * d),
                CMatrix::identity(2 * d, 2 * d),
                u_c,
            ];
            let rate = ghz_rate_vc(&psi, &LocalBases::Unitaries(us)).unwrap();
            assert!(
                rate <= bound + 1e-6,
                "d={d} trial={trial}: rate {rate} above {bound}"
            );
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn entropy_within_range(seed in 0u64..1_000_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let psi = random_pure_state(&[2, 2, 2], &mut rng);
        for p in 0..3usize {
            let s = psi.marginal_entropy(&[p]).unwrap();
            prop_assert!((0.0..=1.0 + 1e-9).contains(&s));
        }
    }

    #[test]
    fn conditional_entropy_chain_rule(seed in 0u64..1_000_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pmf = random_pmf(&[2, 3, 2], &mut rng);
        let h = pmf.conditional_entropy(&[0, 2], &[1]).unwrap();
        let joint = pmf.entropy_bits();
        let given = pmf.marginal(&[1]).unwrap().entropy_bits();
        prop_assert!((h - (joint - given)).abs() < 1e-12);
    }

    #[test]
    fn net_rate_is_nonnegative(seed in 0u64..1_000_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pmf = random_pmf(&[2, 2, 2], &mut rng);
        let region = build_region_classical(&pmf).unwrap();
        let sol = minimize_sum(&region).unwrap();
        prop_assert!(pmf.entropy_bits() - sol.objective >= -1e-8);
    }
}
