//! Quantum operations induced on the receiver's qubit by a teleportation
//! scheme.
//!
//! Systems are ordered `1 ⊗ 2 ⊗ 3`: the input qubit 1 and the sender's half
//! 2 of the resource, then the receiver's qubit 3. The resource `χ₂₃` is
//! moved onto systems 1,2 by the swap `U₁₍₂₎₃`, which turns the conditional
//! state of qubit 3 into a Kraus map acting on a copy of the input.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2};

use nalgebra::{Matrix3, Vector3};

use crate::channel::{KrausChannel, TRACE_TOL};
use crate::error::{Error, Result};
use crate::linalg::{
    hermitian_eig, partial_trace, paulis, psd_sqrt, tensor, ComplexMatrix, ONE, PSD_TOL, ZERO,
};
use crate::qstate::{bell_diagonal, bell_projector, bell_state, BellLabel, BellWeights};

/// Resource eigenvalues below this contribute no Kraus operators.
pub const EIGENVALUE_CUTOFF: f64 = 1e-12;
/// Kraus operators with Frobenius norm below this are dropped.
pub const KRAUS_NORM_CUTOFF: f64 = 1e-12;
/// Orthonormality tolerance for the trace basis.
pub const BASIS_TOL: f64 = 1e-12;

/// Resource state, grouped measurement operators on systems 1,2, and the
/// orthonormal basis in which systems 1,2 are traced out.
#[derive(Debug, Clone, PartialEq)]
pub struct TeleportScheme {
    chi23: ComplexMatrix,
    povm: Vec<Vec<ComplexMatrix>>,
    trace_basis: Vec<ComplexMatrix>,
}

impl TeleportScheme {
    pub fn new(
        chi23: ComplexMatrix,
        povm: Vec<Vec<ComplexMatrix>>,
        trace_basis: Vec<ComplexMatrix>,
    ) -> Result<Self> {
        if chi23.rows() != 4 || chi23.cols() != 4 {
            return Err(Error::InvalidScheme("resource must be 4x4".into()));
        }
        let eig = hermitian_eig(&chi23)
            .map_err(|e| Error::InvalidScheme(format!("resource state: {e}")))?;
        if eig.values[3] < -EIGENVALUE_CUTOFF {
            return Err(Error::InvalidScheme(format!(
                "resource state has eigenvalue {:e}",
                eig.values[3]
            )));
        }
        if (chi23.trace() - ONE).norm() > TRACE_TOL {
            return Err(Error::InvalidScheme("resource state trace is not 1".into()));
        }

        if povm.is_empty() || povm.iter().any(Vec::is_empty) {
            return Err(Error::InvalidScheme(
                "every outcome needs an operator".into(),
            ));
        }
        let mut total = ComplexMatrix::zeros(4, 4);
        for op in povm.iter().flatten() {
            if op.rows() != 4 || op.cols() != 4 || !op.is_finite() {
                return Err(Error::InvalidScheme(
                    "measurement operators must be 4x4".into(),
                ));
            }
            total = &total + &(&op.adjoint() * op);
        }
        let dev = total.max_abs_diff(&ComplexMatrix::identity(4));
        if dev > TRACE_TOL {
            return Err(Error::InvalidScheme(format!(
                "measurement is not complete (deviation {dev:e})"
            )));
        }

        if trace_basis.len() != 4 || trace_basis.iter().any(|v| v.rows() != 4 || v.cols() != 1) {
            return Err(Error::InvalidScheme(
                "trace basis needs four 4-vectors".into(),
            ));
        }
        for (a, va) in trace_basis.iter().enumerate() {
            for (b, vb) in trace_basis.iter().enumerate() {
                let expect = if a == b { ONE } else { ZERO };
                if (va.inner(vb) - expect).norm() > BASIS_TOL {
                    return Err(Error::InvalidScheme(
                        "trace basis is not orthonormal".into(),
                    ));
                }
            }
        }
        Ok(Self {
            chi23,
            povm,
            trace_basis,
        })
    }

    pub fn chi23(&self) -> &ComplexMatrix {
        &self.chi23
    }

    pub fn povm(&self) -> &[Vec<ComplexMatrix>] {
        &self.povm
    }

    pub fn trace_basis(&self) -> &[ComplexMatrix] {
        &self.trace_basis
    }

    pub fn outcome_count(&self) -> usize {
        self.povm.len()
    }

    /// Same scheme with a different trace basis.
    pub fn with_trace_basis(&self, basis: Vec<ComplexMatrix>) -> Result<Self> {
        Self::new(self.chi23.clone(), self.povm.clone(), basis)
    }

    /// Operators of the 1-based outcome `i`.
    pub fn outcome(&self, i: usize) -> Result<&[ComplexMatrix]> {
        if i == 0 || i > self.povm.len() {
            return Err(Error::InvalidOutcome {
                index: i,
                count: self.povm.len(),
            });
        }
        Ok(&self.povm[i - 1])
    }

    /// `Σ_j Π^{ij†} Π^{ij}` for the 1-based outcome `i`.
    pub fn effect(&self, i: usize) -> Result<ComplexMatrix> {
        Ok(self
            .outcome(i)?
            .iter()
            .fold(ComplexMatrix::zeros(4, 4), |acc, p| {
                &acc + &(&p.adjoint() * p)
            }))
    }
}

/// Unnormalized operation on qubit 3 for one measurement outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct InducedChannel {
    pub outcome: usize,
    pub channel: KrausChannel,
    /// Outcome probability averaged over isotropic pure inputs.
    pub mean_outcome_probability: f64,
}

impl InducedChannel {
    /// Channel rescaled so that its average trace is one. For inputs whose
    /// outcome probability does not depend on the state this is the
    /// conditional channel.
    pub fn normalized(&self) -> Result<KrausChannel> {
        let w = self.mean_outcome_probability;
        if w.is_nan() || w <= crate::channel::MIN_NORMALIZATION {
            return Err(Error::VanishingNormalization(w));
        }
        Ok(self.channel.scaled(1.0 / w.sqrt()))
    }
}

/// `U₁₍₂₎₃ |a⟩|b⟩|c⟩ = |c⟩|b⟩|a⟩`.
pub fn swap_13() -> ComplexMatrix {
    let mut u = ComplexMatrix::zeros(8, 8);
    for a in 0..2 {
        for b in 0..2 {
            for cc in 0..2 {
                u[(4 * cc + 2 * b + a, 4 * a + 2 * b + cc)] = ONE;
            }
        }
    }
    u
}

/// The resource reinterpreted on systems 1,2. Numerically the same matrix;
/// the relabeling is carried by [`swap_13`].
pub fn counterpart_12(chi23: &ComplexMatrix) -> ComplexMatrix {
    chi23.clone()
}

/// Kraus operators `√q_k ⟨P_l|(Π^{ij} ⊗ I)U|s_k⟩` over all `(j, k, l)` for
/// the 1-based outcome `i`, without the `1/√p_i` normalization. The trace of
/// the output is the outcome probability.
pub fn induced_channel(s: &TeleportScheme, i: usize) -> Result<InducedChannel> {
    let ops = s.outcome(i)?;
    let eig = hermitian_eig(&counterpart_12(&s.chi23))?;
    if let Some(&min) = eig.values.last() {
        if min < -EIGENVALUE_CUTOFF {
            return Err(Error::InvalidScheme(format!("resource eigenvalue {min:e}")));
        }
    }
    let u = swap_13();
    let id2 = ComplexMatrix::identity(2);
    let mut kraus = Vec::new();

    for pi in ops {
        let pu = &tensor(pi, &id2)? * &u;
        for (k, &q) in eig.values.iter().enumerate() {
            if q < EIGENVALUE_CUTOFF {
                continue;
            }
            let s_k = eig.vector(k);
            // columns of (Π ⊗ I) U (|s_k⟩ ⊗ ·), one per basis state of qubit 3
            let lifted = &pu * &tensor(&s_k, &id2)?;
            for p in &s.trace_basis {
                let mut a = ComplexMatrix::zeros(2, 2);
                for out in 0..2 {
                    for col in 0..2 {
                        let mut acc = ZERO;
                        for x in 0..4 {
                            acc += p[(x, 0)].conj() * lifted[(2 * x + out, col)];
                        }
                        a[(out, col)] = acc * q.sqrt();
                    }
                }
                if a.frobenius_norm() >= KRAUS_NORM_CUTOFF {
                    kraus.push(a);
                }
            }
        }
    }
    if kraus.is_empty() {
        kraus.push(ComplexMatrix::zeros(2, 2));
    }
    let channel = KrausChannel::new(kraus)?;
    let mean = 0.5 * channel.apply(&id2)?.trace().re;
    Ok(InducedChannel {
        outcome: i,
        channel,
        mean_outcome_probability: mean.clamp(0.0, 1.0),
    })
}

pub fn induced_channels(s: &TeleportScheme) -> Result<Vec<InducedChannel>> {
    (1..=s.outcome_count())
        .map(|i| induced_channel(s, i))
        .collect()
}

fn bell_basis() -> Vec<ComplexMatrix> {
    BellLabel::ALL.iter().map(|&l| bell_state(l)).collect()
}

/// Bell-diagonal resource with weights `q`, measured in the Bell basis (one
/// projector per outcome, in the order `Φ⁺, Φ⁻, Ψ⁺, Ψ⁻`).
pub fn bell_scheme(q: &BellWeights) -> TeleportScheme {
    let povm = BellLabel::ALL
        .iter()
        .map(|&l| vec![bell_projector(l)])
        .collect();
    TeleportScheme::new(bell_diagonal(q), povm, bell_basis()).expect("Bell scheme is valid")
}

/// Singlet resource with the imperfect joint measurement parametrized by
/// `μ ∈ [0, π/2]`. Outcome 1 carries the two listed operators; outcome 2 is
/// the single remainder `(I − Σ_j Π^{1j†}Π^{1j})^{1/2}` completing the POVM.
pub fn imperfect_scheme(mu: f64) -> Result<TeleportScheme> {
    if !(0.0..=FRAC_PI_2).contains(&mu) {
        return Err(Error::InvalidArgument(format!(
            "mu = {mu} outside [0, π/2]"
        )));
    }
    let (sin_mu, cos_mu) = mu.sin_cos();
    let norm = (1.0 + cos_mu * cos_mu).sqrt();
    let e = |k| ComplexMatrix::basis_vector(4, k);

    let ket11 = e(0b11);
    let pi11 = (&ket11 * &ket11.adjoint()).scale_real(sin_mu * FRAC_1_SQRT_2);
    let a = &e(0b01).scale_real(cos_mu) - &e(0b10);
    let pi12 = (&a * &a.adjoint()).scale_real(FRAC_1_SQRT_2 / norm);

    let used = &(&pi11.adjoint() * &pi11) + &(&pi12.adjoint() * &pi12);
    let rest = psd_sqrt(&(&ComplexMatrix::identity(4) - &used), PSD_TOL)?;

    let basis = vec![
        e(0b00),
        (&e(0b01) + &e(0b10).scale_real(cos_mu)).scale_real(1.0 / norm),
        (&e(0b01).scale_real(cos_mu) - &e(0b10)).scale_real(1.0 / norm),
        e(0b11),
    ];
    TeleportScheme::new(
        bell_projector(BellLabel::PsiMinus),
        vec![vec![pi11, pi12], vec![rest]],
        basis,
    )
}

/// Operators `T₀, T_x, T_y, T_z` entering the isotropic average fidelity of
/// one outcome: `T_a = tr₁₂[(Σ_j Π^{ij†}Π^{ij} ⊗ I)(σ_a ⊗ χ₂₃)]`, with `σ`
/// replaced by `I` for `T₀`.
#[derive(Debug, Clone, PartialEq)]
pub struct TOperators {
    pub identity: ComplexMatrix,
    pub pauli: [ComplexMatrix; 3],
}

impl TOperators {
    /// The same operators derived from an (unnormalized) channel on qubit 3:
    /// `T₀ = E(I)`, `T_a = E(σ_a)`.
    pub fn of_channel(e: &KrausChannel) -> Result<Self> {
        let [x, y, z] = paulis();
        Ok(Self {
            identity: e.apply(&ComplexMatrix::identity(2))?,
            pauli: [e.apply(&x)?, e.apply(&y)?, e.apply(&z)?],
        })
    }

    /// Isotropic mean outcome probability `½ tr T₀`.
    pub fn weight(&self) -> f64 {
        0.5 * self.identity.trace().re
    }

    /// `G_ak = tr(σ_k T_a)`.
    pub fn coupling(&self) -> Matrix3<f64> {
        let sigma = paulis();
        Matrix3::from_fn(|a, k| sigma[k].trace_product(&self.pauli[a]).re)
    }

    /// `g_a = tr T_a`.
    pub fn offset(&self) -> Vector3<f64> {
        Vector3::from_fn(|a, _| self.pauli[a].trace().re)
    }

    /// `T_x, T_y, T_z` multiplied by `s`; `T₀` unchanged.
    pub fn scale_pauli(&self, s: f64) -> Self {
        Self {
            identity: self.identity.clone(),
            pauli: self.pauli.clone().map(|t| t.scale_real(s)),
        }
    }
}

pub fn t_operators(s: &TeleportScheme, i: usize) -> Result<TOperators> {
    let effect = tensor(&s.effect(i)?, &ComplexMatrix::identity(2))?;
    let reduce = |sigma: &ComplexMatrix| -> Result<ComplexMatrix> {
        let joint = &effect * &tensor(sigma, &s.chi23)?;
        partial_trace(&joint, &[2, 2, 2], &[0, 1])
    };
    let [x, y, z] = paulis();
    Ok(TOperators {
        identity: reduce(&ComplexMatrix::identity(2))?,
        pauli: [reduce(&x)?, reduce(&y)?, reduce(&z)?],
    })
}

pub fn all_t_operators(s: &TeleportScheme) -> Result<Vec<TOperators>> {
    (1..=s.outcome_count()).map(|i| t_operators(s, i)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{channel_distance, generalized_depolarizing, PauliLabel};
    use crate::linalg::c;
    use crate::qstate::{octahedral_states, pure_state, BlochAngles};

    fn weights(q: [f64; 4]) -> BellWeights {
        BellWeights::new(q).unwrap()
    }

    #[test]
    fn swap_action_and_involution() {
        let u = swap_13();
        let v = &u * &ComplexMatrix::basis_vector(8, 0b011);
        assert_eq!(v, ComplexMatrix::basis_vector(8, 0b110));
        assert_eq!(&u * &u, ComplexMatrix::identity(8));
        assert_eq!(u.adjoint(), u);
    }

    #[test]
    fn counterpart_identity_holds() {
        let u = swap_13();
        let chi = bell_diagonal(&weights([0.1, 0.2, 0.3, 0.4]));
        let rho = ComplexMatrix::diag_real(&[1.0, 0.0]);
        let lhs = &(&u * &tensor(&counterpart_12(&chi), &rho).unwrap()) * &u.adjoint();
        let rhs = tensor(&rho, &chi).unwrap();
        assert!(lhs.max_abs_diff(&rhs) < 1e-12);
        assert_eq!(counterpart_12(&counterpart_12(&chi)), chi);
        let phi = bell_projector(BellLabel::PhiPlus);
        assert_eq!(counterpart_12(&phi), phi);
    }

    #[test]
    fn perfect_bell_outcome_one_is_identity() {
        let s = bell_scheme(&weights([1.0, 0.0, 0.0, 0.0]));
        let e1 = induced_channel(&s, 1).unwrap();
        let half_id = KrausChannel::identity().scaled(0.5);
        assert!(channel_distance(&e1.channel, &half_id) < 1e-12);
        for rho in octahedral_states() {
            let p = e1.channel.apply(&rho).unwrap().trace().re;
            assert!((p - 0.25).abs() < 1e-12);
        }
        assert!((e1.mean_outcome_probability - 0.25).abs() < 1e-14);
    }

    #[test]
    fn bell_outcome_one_is_generalized_depolarizing() {
        let q = weights([0.4, 0.1, 0.3, 0.2]);
        let e1 = induced_channel(&bell_scheme(&q), 1).unwrap();
        let d = channel_distance(&e1.channel.scaled(2.0), &generalized_depolarizing(&q));
        assert!(d <= 1e-12, "distance {d}");
    }

    #[test]
    fn perfect_bell_outcome_two_is_phase_flip() {
        let s = bell_scheme(&weights([1.0, 0.0, 0.0, 0.0]));
        let e2 = induced_channel(&s, 2).unwrap().normalized().unwrap();
        assert!(channel_distance(&e2, &KrausChannel::pauli(PauliLabel::Z)) < 1e-12);
    }

    #[test]
    fn bell_povm_and_probabilities() {
        let s = bell_scheme(&weights([0.3, 0.3, 0.2, 0.2]));
        let total = (1..=4).fold(ComplexMatrix::zeros(4, 4), |acc, i| {
            &acc + &s.effect(i).unwrap()
        });
        assert!(total.max_abs_diff(&ComplexMatrix::identity(4)) < 1e-14);
        for e in induced_channels(&s).unwrap() {
            for rho in octahedral_states() {
                assert!((e.channel.apply(&rho).unwrap().trace().re - 0.25).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn outcome_index_is_checked() {
        let s = bell_scheme(&weights([0.25; 4]));
        assert!(matches!(
            induced_channel(&s, 0),
            Err(Error::InvalidOutcome { index: 0, count: 4 })
        ));
        assert!(induced_channel(&s, 5).is_err());
    }

    #[test]
    fn imperfect_operators() {
        let s = imperfect_scheme(FRAC_PI_2).unwrap();
        let mut expect = ComplexMatrix::zeros(4, 4);
        expect[(3, 3)] = c(FRAC_1_SQRT_2, 0.0);
        assert!(s.outcome(1).unwrap()[0].max_abs_diff(&expect) < 1e-15);

        let s0 = imperfect_scheme(0.0).unwrap();
        let ops = s0.outcome(1).unwrap();
        assert!(ops[0].max_abs() < 1e-15);
        assert!(ops[1].max_abs_diff(&bell_projector(BellLabel::PsiMinus)) < 1e-15);
        let e1 = induced_channel(&s0, 1).unwrap();
        assert!((e1.mean_outcome_probability - 0.25).abs() < 1e-14);

        assert!(imperfect_scheme(-0.1).is_err());
        assert!(imperfect_scheme(FRAC_PI_2 + 1e-9).is_err());
    }

    #[test]
    fn imperfect_outcome_probability() {
        for mu in [0.0, 0.3, 0.9, 1.4, FRAC_PI_2] {
            let e1 = induced_channel(&imperfect_scheme(mu).unwrap(), 1).unwrap();
            for theta in [0.0, 0.4, 1.3, 2.9] {
                let rho = pure_state(BlochAngles::new(theta, 1.1).unwrap());
                let p = e1.channel.apply(&rho).unwrap().trace().re;
                let expect = 0.25 * (1.0 - mu.sin().powi(2) * theta.cos());
                assert!((p - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn bell_t_operators() {
        let q = [0.4, 0.1, 0.3, 0.2];
        let t = [
            q[0] - q[1] + q[2] - q[3],
            q[0] - q[1] - q[2] + q[3],
            q[0] + q[1] - q[2] - q[3],
        ];
        let ops = t_operators(&bell_scheme(&weights(q)), 1).unwrap();
        let sigma = paulis();
        for a in 0..3 {
            assert!(ops.pauli[a].max_abs_diff(&sigma[a].scale_real(0.25 * t[a])) < 1e-15);
        }
        assert!(
            ops.identity
                .max_abs_diff(&ComplexMatrix::identity(2).scale_real(0.25))
                < 1e-15
        );
    }

    #[test]
    fn t_operators_sum_to_zero_over_bell_outcomes() {
        let s = bell_scheme(&weights([0.4, 0.1, 0.3, 0.2]));
        let all = all_t_operators(&s).unwrap();
        for a in 0..3 {
            let total = all
                .iter()
                .fold(ComplexMatrix::zeros(2, 2), |acc, t| &acc + &t.pauli[a]);
            assert!(total.max_abs() < 1e-15);
        }
    }

    #[test]
    fn t_operators_agree_with_induced_channel() {
        for s in [
            bell_scheme(&weights([0.05, 0.5, 0.15, 0.3])),
            imperfect_scheme(0.8).unwrap(),
        ] {
            for i in 1..=s.outcome_count() {
                let direct = t_operators(&s, i).unwrap();
                let via = TOperators::of_channel(&induced_channel(&s, i).unwrap().channel).unwrap();
                assert!(direct.identity.max_abs_diff(&via.identity) < 1e-12);
                for a in 0..3 {
                    assert!(direct.pauli[a].max_abs_diff(&via.pauli[a]) < 1e-12);
                }
            }
        }
    }

    #[test]
    fn scheme_validation() {
        let good = bell_scheme(&weights([0.25; 4]));
        let bad_povm = TeleportScheme::new(
            good.chi23().clone(),
            vec![vec![bell_projector(BellLabel::PhiPlus)]],
            good.trace_basis().to_vec(),
        );
        assert!(matches!(bad_povm, Err(Error::InvalidScheme(_))));

        let not_psd = TeleportScheme::new(
            ComplexMatrix::diag_real(&[1.5, -0.5, 0.0, 0.0]),
            good.povm().to_vec(),
            good.trace_basis().to_vec(),
        );
        assert!(not_psd.is_err());

        let mut basis = good.trace_basis().to_vec();
        basis[1] = basis[0].clone();
        assert!(good.with_trace_basis(basis).is_err());
    }
}
