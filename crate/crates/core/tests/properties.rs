use std::f64::consts::{FRAC_PI_2, PI, TAU};

use proptest::prelude::*;
use qrev::channel::{channel_distance, choi_of, KrausChannel, PauliLabel, TRACE_TOL};
use qrev::io::{channel_from_json_slice, channel_to_json};
use qrev::linalg::{c, hermitian_eig, tensor, ComplexMatrix};
use qrev::qstate::{pure_state, BellWeights, BlochAngles};
use qrev::reversal::{
    avg_fidelity_closed_form, avg_fidelity_quadrature, optimal_unitary, optimize_reversal,
    t_vector, ExtremalParams, Objective, OptimizeOptions,
};
use qrev::teleport::{
    all_t_operators, bell_scheme, imperfect_scheme, induced_channel, induced_channels,
};

fn matrix(dim: usize) -> impl Strategy<Value = ComplexMatrix> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), dim * dim).prop_map(move |v| {
        ComplexMatrix::new(dim, dim, v.into_iter().map(|(re, im)| c(re, im)).collect()).unwrap()
    })
}

fn weights() -> impl Strategy<Value = BellWeights> {
    prop::array::uniform4(0.001f64..1.0).prop_map(|e| {
        let s: f64 = e.iter().sum();
        BellWeights::new(e.map(|x| x / s)).unwrap()
    })
}

fn extremal() -> impl Strategy<Value = ExtremalParams> {
    (0.0..TAU, 0.0..PI, 0usize..4, 0usize..4).prop_map(|(u, v, a, b)| {
        ExtremalParams::new(u, v, PauliLabel::ALL[a], PauliLabel::ALL[b]).unwrap()
    })
}

fn angles() -> impl Strategy<Value = BlochAngles> {
    (0.0..=PI, 0.0..TAU).prop_map(|(t, p)| BlochAngles::new(t, p).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn tensor_is_associative(a in matrix(2), b in matrix(2), d in matrix(2)) {
        let left = tensor(&tensor(&a, &b).unwrap(), &d).unwrap();
        let right = tensor(&a, &tensor(&b, &d).unwrap()).unwrap();
        prop_assert!(left.max_abs_diff(&right) < 1e-14);
    }

    #[test]
    fn apply_is_linear(p in extremal(), x in angles(), y in angles(), s in 0.0f64..1.0) {
        let ch = p.affine().to_kraus().unwrap();
        let (rx, ry) = (pure_state(x), pure_state(y));
        let mix = &rx.scale_real(s) + &ry.scale_real(1.0 - s);
        let lhs = ch.apply(&mix).unwrap();
        let rhs = &ch.apply(&rx).unwrap().scale_real(s) + &ch.apply(&ry).unwrap().scale_real(1.0 - s);
        prop_assert!(lhs.max_abs_diff(&rhs) < 1e-14);
    }

    #[test]
    fn channel_json_round_trip(p in extremal(), s in 0.1f64..1.0) {
        let ch = p.affine().to_kraus().unwrap().scaled(s);
        let back = channel_from_json_slice(channel_to_json(&ch).as_bytes()).unwrap();
        prop_assert_eq!(back.channel, ch);
    }

    #[test]
    fn trace_basis_does_not_matter(q in weights(), mu in 0.0..FRAC_PI_2, h in matrix(4), bell in any::<bool>()) {
        let scheme = if bell { bell_scheme(&q) } else { imperfect_scheme(mu).unwrap() };
        let herm = &h + &h.adjoint();
        let eig = hermitian_eig(&herm).unwrap();
        let basis: Vec<_> = (0..4).map(|k| eig.vector(k)).collect();
        let rotated = scheme.with_trace_basis(basis).unwrap();
        for i in 1..=scheme.outcome_count() {
            let a = induced_channel(&scheme, i).unwrap().channel;
            let b = induced_channel(&rotated, i).unwrap().channel;
            prop_assert!(choi_of(&a).distance(&choi_of(&b)) < 1e-12);
        }
    }

    #[test]
    fn outcomes_sum_to_trace_preserving(q in weights(), mu in 0.0..FRAC_PI_2) {
        for scheme in [bell_scheme(&q), imperfect_scheme(mu).unwrap()] {
            let kraus: Vec<ComplexMatrix> = induced_channels(&scheme)
                .unwrap()
                .into_iter()
                .flat_map(|e| e.channel.kraus().to_vec())
                .collect();
            prop_assert!(KrausChannel::new(kraus).unwrap().is_trace_preserving(TRACE_TOL));
        }
    }

    #[test]
    fn closed_form_matches_quadrature(q in weights(), u in 0.0..TAU, v in 0.0..PI) {
        let e1 = induced_channel(&bell_scheme(&q), 1).unwrap();
        let w = e1.mean_outcome_probability;
        let r = ExtremalParams::canonical(u, v).unwrap().affine().to_kraus().unwrap();
        let quad = avg_fidelity_quadrature(&[e1], &[r]).unwrap() / w;
        prop_assert!((quad - avg_fidelity_closed_form(&t_vector(&q), u, v)).abs() < 1e-10);
    }

    #[test]
    fn closed_form_corners_are_paulis(q in weights()) {
        let t = t_vector(&q);
        let corners = [(0.0, 0.0), (PI, PI), (0.0, PI), (PI, 0.0)];
        let best = corners
            .iter()
            .map(|&(u, v)| avg_fidelity_closed_form(&t, u, v))
            .fold(f64::NEG_INFINITY, f64::max);
        prop_assert!((best - optimal_unitary(&t).1).abs() < 1e-14);
        let [tx, ty, tz] = t.as_array();
        let paulis: Vec<f64> = PauliLabel::ALL
            .iter()
            .map(|l| {
                let [a, b, d] = l.bloch_signs();
                0.5 + (a * tx + b * ty + d * tz) / 6.0
            })
            .collect();
        for &(u, v) in &corners {
            let f = avg_fidelity_closed_form(&t, u, v);
            prop_assert!(paulis.iter().any(|p| (p - f).abs() < 1e-14));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn optimizer_dominates_unitaries(q in weights()) {
        let t_ops = all_t_operators(&bell_scheme(&q)).unwrap();
        let r = optimize_reversal(&t_ops, Objective::PerOutcome(1), &OptimizeOptions::default()).unwrap();
        prop_assert!(r.avg_fidelity >= optimal_unitary(&t_vector(&q)).1 - 1e-12);
    }

    #[test]
    fn restarts_are_monotone(mu in 0.0..FRAC_PI_2, seed in any::<u64>()) {
        let t_ops = all_t_operators(&imperfect_scheme(mu).unwrap()).unwrap();
        let mut last = f64::NEG_INFINITY;
        for restarts in [0, 2, 8, 24, 28] {
            let options = OptimizeOptions { restarts, seed, ..Default::default() };
            let f = optimize_reversal(&t_ops, Objective::PerOutcome(1), &options).unwrap().avg_fidelity;
            prop_assert!(f >= last - 1e-15);
            last = f;
        }
    }

    #[test]
    fn argmax_invariant_under_scaling(mu in 0.0..FRAC_PI_2, s in 0.2f64..5.0) {
        let t_ops = all_t_operators(&imperfect_scheme(mu).unwrap()).unwrap();
        let options = OptimizeOptions::default();
        let base = optimize_reversal(&t_ops, Objective::PerOutcome(1), &options).unwrap();
        let scaled: Vec<_> = t_ops.iter().map(|t| t.scale_pauli(s)).collect();
        let other = optimize_reversal(&scaled, Objective::PerOutcome(1), &options).unwrap();
        prop_assert!(channel_distance(&base.channel, &other.channel) <= 1e-8);
        prop_assert!(((other.avg_fidelity - 0.5) - s * (base.avg_fidelity - 0.5)).abs() < 1e-9);
    }
}
