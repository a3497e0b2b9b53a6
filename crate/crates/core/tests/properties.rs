//! Randomized invariants across the crate. Each case draws a seed and builds its random
//! objects from a seeded generator, so failures shrink to a reproducible seed.

use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use qsignal::choi::{apply_channel, link, ChannelDescriptor, Instrument};
use qsignal::jc::{supermap_output_channel, JcConfig};
use qsignal::phase_cov::{evolve, p_backflow_lhs, s_backflow_lhs, RateModel, QUAD_TOL};
use qsignal::process::{born_table, random_process_matrix, validity_projection, A_I, A_O, B_I, B_O};
use qsignal::random::{
    random_channel, random_density, random_eb_channel, random_hermitian, random_trace_and_prepare, seeded,
};
use qsignal::sdp::diamond_norm_distance;
use qsignal::signalling::{exclusion_power, extract_exclusion_strategy, signalling_power};
use qsignal::tensor::{LabeledOperator, Wire};
use rand::Rng;

fn q(name: &str) -> Wire {
    Wire::new(name, 2)
}

fn cfg(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        ..ProptestConfig::default()
    }
}

/// Instrument with `n` outcomes: a random channel into `output ⊗ K`, read out on `K`.
fn random_instrument(input: Wire, output: Wire, n: usize, seed: u64) -> Instrument {
    let mut rng = seeded(seed);
    let joint = random_channel(input.clone(), Wire::new("OK", output.dim * n), &mut rng).unwrap();
    let k = Wire::new("K", n);
    let op = LabeledOperator::new(vec![input.clone(), output.clone(), k.clone()], joint.op().data().clone()).unwrap();
    let effects: Vec<LabeledOperator> = (0..n)
        .map(|x| {
            let proj = LabeledOperator::basis_projector(k.clone(), x).unwrap();
            link(&op, &proj).unwrap()
        })
        .collect();
    Instrument::new(effects, &[&input.name], &[&output.name], 1e-8).unwrap()
}

proptest! {
    #![proptest_config(cfg(32))]

    #[test]
    fn partial_trace_preserves_trace(seed in any::<u64>(), mask in 0usize..8) {
        let mut rng = seeded(seed);
        let wires = vec![Wire::new("a", 2), Wire::new("b", 3), Wire::new("c", 2)];
        let op = random_hermitian(wires, &mut rng).unwrap();
        let traced: Vec<&str> = ["a", "b", "c"].iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, n)| *n).collect();
        let t = op.partial_trace(&traced).unwrap().trace();
        prop_assert!((t - op.trace()).norm() <= 1e-12 * op.trace().norm().max(1.0));
    }

    #[test]
    fn partial_transpose_is_an_involution(seed in any::<u64>(), mask in 0usize..8) {
        let mut rng = seeded(seed);
        let op = random_hermitian(vec![Wire::new("a", 2), Wire::new("b", 3), Wire::new("c", 2)], &mut rng).unwrap();
        let names: Vec<&str> = ["a", "b", "c"].iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, n)| *n).collect();
        let back = op.partial_transpose(&names).unwrap().partial_transpose(&names).unwrap();
        prop_assert!(back.max_abs_diff(&op).unwrap() <= 1e-15);
    }

    #[test]
    fn tensor_then_trace_recovers_factor(seed in any::<u64>()) {
        let mut rng = seeded(seed);
        let a = random_hermitian(vec![Wire::new("a", 3)], &mut rng).unwrap();
        let b = random_density(vec![Wire::new("b", 2), Wire::new("c", 2)], &mut rng).unwrap().scale(1.7);
        let back = a.tensor(&b).unwrap().partial_trace(&["b", "c"]).unwrap();
        prop_assert!(back.max_abs_diff(&a.scale(1.7)).unwrap() <= 1e-12);
    }

    #[test]
    fn permutation_preserves_spectrum(seed in any::<u64>()) {
        let mut rng = seeded(seed);
        let op = random_hermitian(vec![Wire::new("a", 2), Wire::new("b", 3), Wire::new("c", 2)], &mut rng).unwrap();
        let p = op.permute_wires(&["c", "a", "b"]).unwrap();
        let (x, y) = (op.eigenvalues(), p.eigenvalues());
        prop_assert!(x.iter().zip(&y).all(|(u, v)| (u - v).abs() <= 1e-10));
    }

    #[test]
    fn json_round_trip_is_exact(seed in any::<u64>()) {
        let mut rng = seeded(seed);
        let op = random_hermitian(vec![Wire::new("a", 2), Wire::new("b", 3)], &mut rng).unwrap();
        let back = LabeledOperator::from_json_str(&op.to_json_string()).unwrap();
        prop_assert_eq!(back, op);
    }

    #[test]
    fn link_application_matches_choi_formula(seed in any::<u64>()) {
        let mut rng = seeded(seed);
        let n = random_channel(Wire::new("A", 3), Wire::new("B", 2), &mut rng).unwrap();
        let rho = random_density(vec![Wire::new("A", 3)], &mut rng).unwrap();
        // 𝒩(ρ) = Tr_A[(ρᵀ ⊗ id) N]
        let lifted = rho.data().transpose().kronecker(&DMatrix::<Complex64>::identity(2, 2));
        let direct = LabeledOperator::new(n.op().wires().to_vec(), lifted * n.op().data())
            .unwrap()
            .partial_trace(&["A"])
            .unwrap();
        prop_assert!(apply_channel(&n, &rho).unwrap().max_abs_diff(&direct).unwrap() <= 1e-12);
    }

    #[test]
    fn choi_round_trip_reproduces_map(seed in any::<u64>()) {
        let mut rng = seeded(seed);
        let k: Vec<DMatrix<Complex64>> = {
            let n = random_channel(q("A"), q("B"), &mut rng).unwrap();
            // Kraus operators from the Choi eigendecomposition
            let eig = n.op().data().clone().symmetric_eigen();
            (0..4)
                .filter(|&i| eig.eigenvalues[i] > 1e-14)
                .map(|i| {
                    let v = eig.eigenvectors.column(i) * Complex64::new(eig.eigenvalues[i].sqrt(), 0.0);
                    DMatrix::from_fn(2, 2, |o, a| v[a * 2 + o])
                })
                .collect()
        };
        let from_kraus = ChannelDescriptor::from_kraus(&k, q("A"), q("B")).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let mut e = DMatrix::<Complex64>::zeros(2, 2);
                e[(i, j)] = Complex64::new(1.0, 0.0);
                let want: DMatrix<Complex64> = k.iter().map(|m| m * &e * m.adjoint()).sum();
                let got = apply_channel(&from_kraus, &LabeledOperator::new(vec![q("A")], e).unwrap()).unwrap();
                let diff = (got.data() - &want).iter().map(|z| z.norm()).fold(0.0, f64::max);
                prop_assert!(diff <= 1e-12);
            }
        }
    }
}

proptest! {
    #![proptest_config(cfg(16))]

    #[test]
    fn signalling_power_is_nonnegative_with_small_gap(seed in any::<u64>()) {
        let mut rng = seeded(seed);
        let n = random_channel(q("A"), q("B"), &mut rng).unwrap();
        let r = signalling_power(&n).unwrap();
        prop_assert!(r.s_value >= -1e-9);
        prop_assert!(r.gap.abs() / r.raw_primal.abs().max(1.0) <= 1e-6);
        let w = ChannelDescriptor::with_tolerance(r.w_opt.clone(), &["B"], &["A"], 1e-7);
        prop_assert!(w.is_ok(), "optimal W is not a reverse channel: {:?}", w.err());
    }

    #[test]
    fn raw_signalling_power_is_convex(seed in any::<u64>(), k in 1usize..4) {
        let lambda = k as f64 / 4.0;
        let mut rng = seeded(seed);
        let n = random_channel(q("A"), q("B"), &mut rng).unwrap();
        let m = random_channel(q("A"), q("B"), &mut rng).unwrap();
        let mixed = signalling_power(&n.mix(&m, lambda).unwrap()).unwrap().raw_primal;
        let bound = lambda * signalling_power(&n).unwrap().raw_primal
            + (1.0 - lambda) * signalling_power(&m).unwrap().raw_primal;
        prop_assert!(mixed <= bound + 1e-7);
    }

    #[test]
    fn signalling_power_is_additive(seed in any::<u64>()) {
        let mut rng = seeded(seed);
        let n = random_channel(q("A1"), q("B1"), &mut rng).unwrap();
        let m = random_channel(q("A2"), q("B2"), &mut rng).unwrap();
        let joint = signalling_power(&n.tensor(&m).unwrap()).unwrap().s_value;
        let sum = signalling_power(&n).unwrap().s_value + signalling_power(&m).unwrap().s_value;
        prop_assert!((joint - sum).abs() <= 1e-5);
    }

    #[test]
    fn signalling_power_is_diamond_continuous(seed in any::<u64>(), eps in 0.0f64..0.3) {
        let mut rng = seeded(seed);
        let n = random_channel(q("A"), q("B"), &mut rng).unwrap();
        let other = random_channel(q("A"), q("B"), &mut rng).unwrap();
        let m = n.mix(&other, 1.0 - eps).unwrap();
        let gap = (signalling_power(&n).unwrap().s_value - signalling_power(&m).unwrap().s_value).abs();
        prop_assert!(gap <= 4.0 * diamond_norm_distance(&n, &m).unwrap() + 1e-6);
    }

    #[test]
    fn entanglement_breaking_channels_carry_at_most_one_bit(seed in any::<u64>(), outcomes in 2usize..6) {
        let mut rng = seeded(seed);
        let n = random_eb_channel(q("A"), q("B"), outcomes, &mut rng).unwrap();
        prop_assert!(signalling_power(&n).unwrap().s_value <= 1.0 + 1e-6);
    }

    #[test]
    fn trace_and_prepare_is_exactly_non_signalling(seed in any::<u64>()) {
        let mut rng = seeded(seed);
        let n = random_trace_and_prepare(Wire::new("A", 3), q("B"), &mut rng).unwrap();
        prop_assert!(signalling_power(&n).unwrap().s_value.abs() <= 1e-6);
    }

    #[test]
    fn exclusion_strategy_attains_p(seed in any::<u64>()) {
        let mut rng = seeded(seed);
        let n = random_channel(q("A"), q("B"), &mut rng).unwrap();
        let p = exclusion_power(&n).unwrap().p_value;
        prop_assert!((-1e-9..=1.0 + 1e-9).contains(&p));
        let s = extract_exclusion_strategy(&n).unwrap();
        prop_assert!(s.povm_residual().unwrap() <= 1e-6);
        prop_assert!((s.exclusion_value() - p).abs() <= 1e-5);
    }

    #[test]
    fn validity_projection_is_idempotent(seed in any::<u64>()) {
        let mut rng = seeded(seed);
        let wires = vec![q(A_I), q(A_O), q(B_I), q(B_O)];
        let h = random_hermitian(wires, &mut rng).unwrap();
        let once = validity_projection(&h).unwrap();
        let twice = validity_projection(&once).unwrap();
        prop_assert!(twice.max_abs_diff(&once).unwrap() <= 1e-12 * h.max_abs().max(1.0));
    }

    #[test]
    fn born_rule_is_a_distribution(seed in any::<u64>(), na in 2usize..4, nb in 2usize..4) {
        let mut rng = seeded(seed);
        let pm = random_process_matrix([2, 2, 2, 2], 0.95, &mut rng).unwrap();
        let alice = random_instrument(q(A_I), q(A_O), na, rng.random());
        let bob = random_instrument(q(B_I), q(B_O), nb, rng.random());
        let table = born_table(&pm, &alice, &bob).unwrap();
        let total: f64 = table.iter().flatten().sum();
        prop_assert!(table.iter().flatten().all(|p| *p >= -1e-9));
        prop_assert!((total - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn jc_witness_is_bounded(s in 0.0f64..6.0, dt in 0.0f64..3.0) {
        let cfg = JcConfig::standard().unwrap();
        let n = supermap_output_channel(&cfg, s, s + dt).unwrap();
        prop_assert!(n.check(1e-8).unwrap().is_valid());
        let w = signalling_power(&n).unwrap().s_value - 1.0;
        prop_assert!(w <= 1.0 + 1e-6);
    }
}

proptest! {
    #![proptest_config(cfg(64))]

    #[test]
    fn phase_covariant_choi_is_trace_preserving(kappa in 0.0f64..3.0, t in 0.0f64..12.0) {
        let pt = evolve(&RateModel::Kappa { kappa }, t, QUAD_TOL).unwrap();
        let marginal = pt.choi.partial_trace(&["B"]).unwrap();
        let id = LabeledOperator::identity(vec![q("A")]).unwrap();
        prop_assert!(marginal.max_abs_diff(&id).unwrap() <= 1e-9);
    }

    /// `d 2^S/dt = −(GΓ_z/2)·lhs₊` everywhere, and `dP/dt = −(GΓ_z/2)·lhs₋` where `Γ_z > G`.
    #[test]
    fn backflow_conditions_track_derivatives(kappa in 0.2f64..3.0, t in 0.1f64..10.0) {
        let model = RateModel::Kappa { kappa };
        let h = 1e-4;
        let at = |t: f64| evolve(&model, t, 1e-12).unwrap();
        let (lo, mid, hi) = (at(t - h), at(t), at(t + h));
        let two_s = |p: &qsignal::phase_cov::DynamicsPoint| 2f64.powf(p.s_closed);
        let ds = (two_s(&hi) - two_s(&lo)) / (2.0 * h);
        let scale = mid.g * mid.gamma_z / 2.0;
        let plus = s_backflow_lhs(model.rates(t), mid.g, mid.gamma_z);
        prop_assert!((ds + scale * plus).abs() <= 1e-6 * (1.0 + plus.abs()));
        if plus.abs() > 1e-3 {
            prop_assert_eq!(ds < 0.0, plus > 0.0);
        }
        let margin = 1e-2 * mid.g;
        if lo.gamma_z > lo.g + margin && hi.gamma_z > hi.g + margin {
            let dp = (hi.p_closed - lo.p_closed) / (2.0 * h);
            let minus = p_backflow_lhs(model.rates(t), mid.g, mid.gamma_z);
            prop_assert!((dp + scale * minus).abs() <= 1e-6 * (1.0 + minus.abs()));
            if minus.abs() > 1e-3 {
                prop_assert_eq!(dp < 0.0, minus > 0.0);
            }
        }
    }
}
