//! Qubit quantum operations in Kraus, Choi and Bloch-affine form.
//!
//! Channels are stored as Kraus lists. The Choi matrix uses the convention
//! `C = Σ_{jk} |j⟩⟨k| ⊗ E(|j⟩⟨k|)`, i.e. `(I ⊗ E)` applied to the
//! unnormalized maximally entangled operator, with the output as the second
//! tensor factor. Two channels are compared only through their Choi matrices.

use std::fmt;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    c, hermitian_eig_with_tol, partial_trace, paulis, ComplexMatrix, HERMITIAN_TOL, I, ONE,
};

/// Tolerance for `Σ A†A ≤ I` and for trace preservation.
pub const TRACE_TOL: f64 = 1e-10;
/// Tolerance on negative Choi eigenvalues for complete positivity.
pub const CP_TOL: f64 = 1e-10;
/// Default eigenvalue cutoff when factorizing a Choi matrix.
pub const KRAUS_CUTOFF: f64 = 1e-12;
/// Traces at or below this are treated as an annihilated input.
pub const MIN_NORMALIZATION: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PauliLabel {
    I,
    X,
    Y,
    Z,
}

impl PauliLabel {
    pub const ALL: [PauliLabel; 4] = [PauliLabel::I, PauliLabel::X, PauliLabel::Y, PauliLabel::Z];

    pub fn matrix(self) -> ComplexMatrix {
        let [x, y, z] = paulis();
        match self {
            PauliLabel::I => ComplexMatrix::identity(2),
            PauliLabel::X => x,
            PauliLabel::Y => y,
            PauliLabel::Z => z,
        }
    }

    /// Diagonal of the Bloch rotation induced by conjugation `ρ ↦ σρσ`.
    pub fn bloch_signs(self) -> [f64; 3] {
        match self {
            PauliLabel::I => [1.0, 1.0, 1.0],
            PauliLabel::X => [1.0, -1.0, -1.0],
            PauliLabel::Y => [-1.0, 1.0, -1.0],
            PauliLabel::Z => [-1.0, -1.0, 1.0],
        }
    }

    pub fn bloch_rotation(self) -> Matrix3<f64> {
        Matrix3::from_diagonal(&Vector3::from(self.bloch_signs()))
    }
}

impl fmt::Display for PauliLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            PauliLabel::I => "I",
            PauliLabel::X => "X",
            PauliLabel::Y => "Y",
            PauliLabel::Z => "Z",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for PauliLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "I" => Ok(PauliLabel::I),
            "X" => Ok(PauliLabel::X),
            "Y" => Ok(PauliLabel::Y),
            "Z" => Ok(PauliLabel::Z),
            _ => Err(Error::Parse(format!("unknown Pauli label {s:?}"))),
        }
    }
}

/// A trace-nonincreasing quantum operation `ρ ↦ Σ_k A_k ρ A_k†`.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausChannel {
    dim: usize,
    kraus: Vec<ComplexMatrix>,
}

impl KrausChannel {
    /// Validates shapes and `Σ A†A ≤ I` within [`TRACE_TOL`].
    pub fn new(kraus: Vec<ComplexMatrix>) -> Result<Self> {
        let ch = Self::new_unchecked(kraus)?;
        let excess = ch.trace_excess();
        if excess.is_nan() || excess > TRACE_TOL {
            return Err(Error::TraceIncreasing(excess));
        }
        Ok(ch)
    }

    /// Shape checks only; used where the operator-sum bound is checked later
    /// or is guaranteed by construction.
    pub(crate) fn new_unchecked(kraus: Vec<ComplexMatrix>) -> Result<Self> {
        let first = kraus
            .first()
            .ok_or_else(|| Error::InvalidArgument("empty Kraus list".into()))?;
        let dim = first.rows();
        if dim != 2 {
            return Err(Error::UnsupportedDimension(dim));
        }
        for a in &kraus {
            if !a.is_square() || a.rows() != dim {
                return Err(Error::DimensionMismatch(format!(
                    "Kraus operator of shape {}x{} in a dimension-{dim} channel",
                    a.rows(),
                    a.cols()
                )));
            }
            if !a.is_finite() {
                return Err(Error::InvalidArgument("non-finite Kraus entry".into()));
            }
        }
        Ok(Self { dim, kraus })
    }

    pub fn identity() -> Self {
        Self::unitary(ComplexMatrix::identity(2))
    }

    pub fn unitary(u: ComplexMatrix) -> Self {
        Self::new_unchecked(vec![u]).expect("square operator")
    }

    pub fn pauli(label: PauliLabel) -> Self {
        Self::unitary(label.matrix())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kraus(&self) -> &[ComplexMatrix] {
        &self.kraus
    }

    /// `Σ_k A_k† A_k`.
    pub fn gram(&self) -> ComplexMatrix {
        self.kraus
            .iter()
            .fold(ComplexMatrix::zeros(self.dim, self.dim), |acc, a| {
                &acc + &(&a.adjoint() * a)
            })
    }

    /// Largest eigenvalue of `Σ A†A − I`; positive values mean the map
    /// increases the trace of some input.
    pub fn trace_excess(&self) -> f64 {
        let diff = &self.gram() - &ComplexMatrix::identity(self.dim);
        hermitian_eig_with_tol(&diff.hermitian_part(), f64::INFINITY)
            .map(|e| e.values[0])
            .unwrap_or(f64::INFINITY)
    }

    /// `max |Σ A†A − I|` entrywise.
    pub fn trace_deviation(&self) -> f64 {
        self.gram().max_abs_diff(&ComplexMatrix::identity(self.dim))
    }

    pub fn is_trace_preserving(&self, tol: f64) -> bool {
        self.trace_deviation() <= tol
    }

    /// `Σ A ρ A†` (unnormalized).
    pub fn apply(&self, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
        self.check_operand(rho)?;
        Ok(self
            .kraus
            .iter()
            .fold(ComplexMatrix::zeros(self.dim, self.dim), |acc, a| {
                &acc + &(&(a * rho) * &a.adjoint())
            }))
    }

    /// Heisenberg-picture image `Σ A† X A`.
    pub fn apply_adjoint(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        self.check_operand(x)?;
        Ok(self
            .kraus
            .iter()
            .fold(ComplexMatrix::zeros(self.dim, self.dim), |acc, a| {
                &acc + &(&(&a.adjoint() * x) * a)
            }))
    }

    /// Normalized output and the success probability `tr E(ρ)`.
    pub fn apply_normalized(&self, rho: &ComplexMatrix) -> Result<(ComplexMatrix, f64)> {
        let out = self.apply(rho)?;
        let prob = out.trace().re;
        if prob.is_nan() || prob <= MIN_NORMALIZATION {
            return Err(Error::VanishingNormalization(prob));
        }
        Ok((out.scale_real(1.0 / prob), prob))
    }

    /// Every Kraus operator multiplied by `s`; the map scales by `|s|²`.
    pub fn scaled(&self, s: f64) -> Self {
        Self {
            dim: self.dim,
            kraus: self.kraus.iter().map(|a| a.scale_real(s)).collect(),
        }
    }

    fn check_operand(&self, rho: &ComplexMatrix) -> Result<()> {
        if !rho.is_square() || rho.rows() != self.dim {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} operand for a dimension-{} channel",
                rho.rows(),
                rho.cols(),
                self.dim
            )));
        }
        Ok(())
    }
}

/// `r ∘ e`: Kraus operators `B_n A_m` over all pairs.
pub fn compose(r: &KrausChannel, e: &KrausChannel) -> Result<KrausChannel> {
    if r.dim != e.dim {
        return Err(Error::DimensionMismatch(format!(
            "composing dimension {} with dimension {}",
            r.dim, e.dim
        )));
    }
    let kraus = r
        .kraus
        .iter()
        .flat_map(|b| e.kraus.iter().map(move |a| b * a))
        .collect();
    KrausChannel::new_unchecked(kraus)
}

/// Choi matrix of a qubit map, output as the second factor.
#[derive(Debug, Clone, PartialEq)]
pub struct ChoiMatrix(ComplexMatrix);

impl ChoiMatrix {
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        if !m.is_square() || m.rows() != 4 {
            return Err(Error::DimensionMismatch("Choi matrix must be 4x4".into()));
        }
        let dev = m.hermitian_deviation();
        if dev > HERMITIAN_TOL {
            return Err(Error::NotHermitian(dev));
        }
        Ok(Self(m))
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    /// Descending eigenvalues.
    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eig_with_tol(&self.0, f64::INFINITY)
            .expect("validated Hermitian")
            .values
    }

    pub fn is_completely_positive(&self, tol: f64) -> bool {
        self.eigenvalues().last().is_some_and(|&l| l >= -tol)
    }

    /// `tr_out C = (Σ A†A)ᵀ`.
    pub fn input_marginal(&self) -> ComplexMatrix {
        partial_trace(&self.0, &[2, 2], &[1]).expect("4x4 on 2x2")
    }

    pub fn distance(&self, other: &ChoiMatrix) -> f64 {
        self.0.max_abs_diff(&other.0)
    }

    /// Assembles `Σ_{jk} |j⟩⟨k| ⊗ E(|j⟩⟨k|)` from a linear map on 2×2 operators.
    fn from_map(image: impl Fn(&ComplexMatrix) -> ComplexMatrix) -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros(4, 4);
        for j in 0..2 {
            for k in 0..2 {
                let mut unit = ComplexMatrix::zeros(2, 2);
                unit[(j, k)] = ONE;
                let block = image(&unit);
                for a in 0..2 {
                    for b in 0..2 {
                        m[(2 * j + a, 2 * k + b)] = block[(a, b)];
                    }
                }
            }
        }
        m
    }
}

pub fn choi_of(ch: &KrausChannel) -> ChoiMatrix {
    assert_eq!(ch.dim, 2, "Choi matrices are defined for qubit channels");
    let m = ChoiMatrix::from_map(|unit| ch.apply(unit).expect("2x2 operand"));
    ChoiMatrix(m.hermitian_part())
}

/// Factorizes a Choi matrix into at most four Kraus operators, dropping
/// eigenvalues at or below `tol`.
pub fn kraus_from_choi(choi: &ChoiMatrix, tol: f64) -> Result<KrausChannel> {
    let eig = hermitian_eig_with_tol(&choi.0, f64::INFINITY)?;
    let min = *eig.values.last().expect("nonempty spectrum");
    if min < -tol {
        return Err(Error::NotCompletelyPositive(min));
    }
    let mut kraus = Vec::new();
    for (k, &lambda) in eig.values.iter().enumerate() {
        if lambda <= tol {
            continue;
        }
        let s = lambda.sqrt();
        let mut a = ComplexMatrix::zeros(2, 2);
        for j in 0..2 {
            for out in 0..2 {
                a[(out, j)] = eig.vectors[(2 * j + out, k)] * s;
            }
        }
        kraus.push(a);
    }
    if kraus.is_empty() {
        // the zero map
        kraus.push(ComplexMatrix::zeros(2, 2));
    }
    KrausChannel::new_unchecked(kraus)
}

/// Max-abs-entry distance between Choi matrices.
pub fn channel_distance(a: &KrausChannel, b: &KrausChannel) -> f64 {
    choi_of(a).distance(&choi_of(b))
}

/// Trace-preserving qubit channel in the Bloch picture: `r ↦ M r + c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochAffineMap {
    pub m: Matrix3<f64>,
    pub c: Vector3<f64>,
}

impl BlochAffineMap {
    pub fn new(m: Matrix3<f64>, c: Vector3<f64>) -> Self {
        Self { m, c }
    }

    pub fn identity() -> Self {
        Self::new(Matrix3::identity(), Vector3::zeros())
    }

    pub fn is_finite(&self) -> bool {
        self.m.iter().chain(self.c.iter()).all(|x| x.is_finite())
    }

    pub fn apply_to_vector(&self, r: &Vector3<f64>) -> Vector3<f64> {
        self.m * r + self.c
    }

    /// Image of an arbitrary 2×2 operator, extended by linearity from
    /// `E(I) = I + c·σ` and `E(σ_k) = Σ_j M_jk σ_j`.
    pub fn apply_to_operator(&self, op: &ComplexMatrix) -> ComplexMatrix {
        let sigma = paulis();
        let a0 = op.trace() * 0.5;
        let a: Vec<_> = sigma.iter().map(|s| s.trace_product(op) * 0.5).collect();
        let mut out = ComplexMatrix::identity(2).scale(a0);
        for (j, s) in sigma.iter().enumerate() {
            let coeff = a
                .iter()
                .enumerate()
                .fold(a0 * self.c[j], |acc, (k, ak)| acc + ak * self.m[(j, k)]);
            out = &out + &s.scale(coeff);
        }
        out
    }

    /// Heisenberg images `X_j = c_j I + Σ_k M_jk σ_k` of `σ_x, σ_y, σ_z`.
    pub fn pauli_images(&self) -> [ComplexMatrix; 3] {
        let sigma = paulis();
        std::array::from_fn(|j| {
            sigma.iter().enumerate().fold(
                ComplexMatrix::identity(2).scale_real(self.c[j]),
                |x, (k, s)| &x + &s.scale_real(self.m[(j, k)]),
            )
        })
    }

    pub fn choi(&self) -> Result<ChoiMatrix> {
        let m = ChoiMatrix::from_map(|unit| self.apply_to_operator(unit));
        ChoiMatrix::new(m.hermitian_part())
    }

    /// Kraus form via the Choi matrix; fails if the affine map is not CP.
    pub fn to_kraus(&self) -> Result<KrausChannel> {
        kraus_from_choi(&self.choi()?, KRAUS_CUTOFF)
    }

    pub fn singular_values(&self) -> Vector3<f64> {
        self.m.svd(false, false).singular_values
    }
}

/// `M_jk = ½ tr[σ_j E(σ_k)]`, `c_j = ½ tr[σ_j E(I)]`.
pub fn bloch_affine_of(ch: &KrausChannel) -> Result<BlochAffineMap> {
    if ch.dim != 2 {
        return Err(Error::DimensionMismatch(
            "Bloch form needs a qubit channel".into(),
        ));
    }
    let dev = ch.trace_deviation();
    if dev > TRACE_TOL {
        return Err(Error::NotTracePreserving(dev));
    }
    let sigma = paulis();
    let images: Vec<_> = sigma.iter().map(|s| ch.apply(s).expect("2x2")).collect();
    let bias = ch.apply(&ComplexMatrix::identity(2))?;
    let m = Matrix3::from_fn(|j, k| 0.5 * sigma[j].trace_product(&images[k]).re);
    let c = Vector3::from_fn(|j, _| 0.5 * sigma[j].trace_product(&bias).re);
    Ok(BlochAffineMap { m, c })
}

/// Images of `I, σˣ, σʸ, σᶻ` under `X ↦ Σ B† X B`.
pub fn adjoint_pauli_image(ch: &KrausChannel) -> [ComplexMatrix; 4] {
    let [x, y, z] = paulis();
    [ComplexMatrix::identity(2), x, y, z].map(|op| ch.apply_adjoint(&op).expect("qubit channel"))
}

/// Canonical Kraus set `{√q₁ I, √q₂ σᶻ, √q₃ σˣ, √q₄ σʸ}` of the generalized
/// depolarizing channel.
pub fn generalized_depolarizing(q: &crate::qstate::BellWeights) -> KrausChannel {
    let q = q.as_array();
    let ops = [PauliLabel::I, PauliLabel::Z, PauliLabel::X, PauliLabel::Y];
    let kraus = ops
        .iter()
        .zip(q)
        .map(|(p, w)| p.matrix().scale_real(w.sqrt()))
        .collect();
    KrausChannel::new_unchecked(kraus).expect("2x2 operators")
}

/// Rotation `exp(-i θ n·σ / 2)` realizing the Bloch rotation `r`.
pub fn unitary_for_rotation(r: &Matrix3<f64>) -> ComplexMatrix {
    let rot = nalgebra::Rotation3::from_matrix_unchecked(*r);
    let q = nalgebra::UnitQuaternion::from_rotation_matrix(&rot);
    let (w, v) = (q.scalar(), q.vector());
    // U = w I − i (v·σ)
    let [x, y, z] = paulis();
    let mut u = ComplexMatrix::identity(2).scale(c(w, 0.0));
    for (s, comp) in [x, y, z].iter().zip(v.iter()) {
        u = &u + &s.scale(-I * *comp);
    }
    u
}
