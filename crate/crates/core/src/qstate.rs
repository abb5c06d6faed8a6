//! Qubit input states, Bell states and averaging over the Bloch sphere.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, paulis, ComplexMatrix, ONE, ZERO};

/// Tolerance on the normalization of Bell-diagonal weights.
pub const WEIGHT_SUM_TOL: f64 = 1e-12;

/// Polar and azimuthal angles of a pure qubit state, in radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochAngles {
    theta: f64,
    phi: f64,
}

impl BlochAngles {
    pub fn new(theta: f64, phi: f64) -> Result<Self> {
        if !(0.0..=PI).contains(&theta) {
            return Err(Error::InvalidAngle(format!(
                "theta = {theta} outside [0, π]"
            )));
        }
        if !(0.0..TAU).contains(&phi) {
            return Err(Error::InvalidAngle(format!("phi = {phi} outside [0, 2π)")));
        }
        Ok(Self { theta, phi })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    /// Unit Bloch vector `(sinθ cosφ, sinθ sinφ, cosθ)`.
    pub fn bloch_vector(&self) -> [f64; 3] {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        [st * cp, st * sp, ct]
    }

    /// `cos(θ/2)|0⟩ + e^{iφ} sin(θ/2)|1⟩` as a 2×1 column.
    pub fn ket(&self) -> ComplexMatrix {
        let (s, co) = (self.theta / 2.0).sin_cos();
        ComplexMatrix::column(&[c(co, 0.0), num_complex::Complex64::from_polar(s, self.phi)])
            .expect("2x1")
    }
}

/// Density matrix `|ψ⟩⟨ψ|` of the pure state with the given angles.
pub fn pure_state(angles: BlochAngles) -> ComplexMatrix {
    let ket = angles.ket();
    &ket * &ket.adjoint()
}

/// Bloch vector of a 2×2 operator: `r_j = tr(σ_j ρ)`.
pub fn bloch_vector_of(rho: &ComplexMatrix) -> [f64; 3] {
    let [x, y, z] = paulis();
    [
        x.trace_product(rho).re,
        y.trace_product(rho).re,
        z.trace_product(rho).re,
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BellLabel {
    PhiPlus,
    PhiMinus,
    PsiPlus,
    PsiMinus,
}

impl BellLabel {
    /// In the order `Φ⁺, Φ⁻, Ψ⁺, Ψ⁻` used for weights `q₁..q₄`.
    pub const ALL: [BellLabel; 4] = [
        BellLabel::PhiPlus,
        BellLabel::PhiMinus,
        BellLabel::PsiPlus,
        BellLabel::PsiMinus,
    ];
}

/// Bell state as a 4×1 column in the `|00⟩, |01⟩, |10⟩, |11⟩` basis.
pub fn bell_state(label: BellLabel) -> ComplexMatrix {
    let s = c(FRAC_1_SQRT_2, 0.0);
    let entries = match label {
        BellLabel::PhiPlus => [s, ZERO, ZERO, s],
        BellLabel::PhiMinus => [s, ZERO, ZERO, -s],
        BellLabel::PsiPlus => [ZERO, s, s, ZERO],
        BellLabel::PsiMinus => [ZERO, s, -s, ZERO],
    };
    ComplexMatrix::column(&entries).expect("4x1")
}

pub fn bell_projector(label: BellLabel) -> ComplexMatrix {
    let v = bell_state(label);
    &v * &v.adjoint()
}

/// Weights `(q₁, q₂, q₃, q₄)` on `Φ⁺, Φ⁻, Ψ⁺, Ψ⁻`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BellWeights([f64; 4]);

impl BellWeights {
    pub fn new(q: [f64; 4]) -> Result<Self> {
        if let Some(bad) = q.iter().find(|x| !(0.0..=1.0).contains(*x)) {
            return Err(Error::InvalidWeights(format!(
                "weight {bad} outside [0, 1]"
            )));
        }
        let sum: f64 = q.iter().sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::InvalidWeights(format!("weights sum to {sum}")));
        }
        Ok(Self(q))
    }

    pub fn as_array(&self) -> [f64; 4] {
        self.0
    }

    pub fn get(&self, k: usize) -> f64 {
        self.0[k]
    }
}

/// `Σ_k q_k |B_k⟩⟨B_k|` over the Bell basis.
pub fn bell_diagonal(q: &BellWeights) -> ComplexMatrix {
    BellLabel::ALL
        .iter()
        .zip(q.as_array())
        .fold(ComplexMatrix::zeros(4, 4), |acc, (&label, w)| {
            &acc + &bell_projector(label).scale_real(w)
        })
}

/// Seeded source of isotropically distributed pure input states
/// (`cos θ` uniform on `[-1, 1]`, `φ` uniform on `[0, 2π)`).
#[derive(Debug, Clone)]
pub struct IsotropicSampler {
    rng: ChaCha8Rng,
}

impl IsotropicSampler {
    /// Identifier of the underlying generator, recorded with seeded outputs.
    pub const ALGORITHM: &'static str = "ChaCha8";

    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn sample(&mut self) -> BlochAngles {
        let cos_theta: f64 = self.rng.random_range(-1.0..=1.0);
        let phi: f64 = self.rng.random_range(0.0..TAU);
        BlochAngles {
            theta: cos_theta.clamp(-1.0, 1.0).acos(),
            phi,
        }
    }
}

impl Iterator for IsotropicSampler {
    type Item = BlochAngles;

    fn next(&mut self) -> Option<BlochAngles> {
        Some(self.sample())
    }
}

pub fn isotropic_samples(n: usize, seed: u64) -> Vec<BlochAngles> {
    IsotropicSampler::new(seed).take(n).collect()
}

/// The six states `±x, ±y, ±z` with weight 1/6 each. Exact for sphere
/// averages of polynomials of degree at most 2 in the Bloch vector.
pub fn octahedral_quadrature() -> Vec<(BlochAngles, f64)> {
    let nodes = [
        (FRAC_PI_2, 0.0),
        (FRAC_PI_2, PI),
        (FRAC_PI_2, FRAC_PI_2),
        (FRAC_PI_2, 3.0 * FRAC_PI_2),
        (0.0, 0.0),
        (PI, 0.0),
    ];
    nodes
        .iter()
        .map(|&(theta, phi)| (BlochAngles { theta, phi }, 1.0 / 6.0))
        .collect()
}

/// Density matrices of the octahedral nodes, built directly from their Bloch
/// vectors so that entries are exact.
pub fn octahedral_states() -> Vec<ComplexMatrix> {
    let half = c(0.5, 0.0);
    let ih = c(0.0, 0.5);
    let s = |a, b, cc, d| ComplexMatrix::new(2, 2, vec![a, b, cc, d]).expect("2x2");
    vec![
        s(half, half, half, half),
        s(half, -half, -half, half),
        s(half, -ih, ih, half),
        s(half, ih, -ih, half),
        s(ONE, ZERO, ZERO, ZERO),
        s(ZERO, ZERO, ZERO, ONE),
    ]
}
