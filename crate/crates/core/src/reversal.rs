//! Average fidelity of a reversal channel and the search for the best one.
//!
//! For an outcome with fidelity operators `T₀, T_a` and a trace-preserving
//! reversal whose Heisenberg images are `X_a = c_a I + Σ_k M_ak σ_k`, the
//! contribution of that outcome to the isotropic average fidelity is
//!
//! ```text
//! C = ½ w + (1/12) Σ_a tr(X_a T_a),    w = ½ tr T₀,
//! ```
//!
//! which is linear in `(M, c)`. The maximum therefore sits on extremal maps,
//! searched here as rotated copies of `M = diag(cos u, cos v, cos u cos v)`,
//! `c = (0, 0, sin u sin v)`.

use std::f64::consts::{PI, TAU};

use nalgebra::{DMatrix, DVector, Matrix3, Rotation3, SymmetricEigen, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{
    bloch_affine_of, BlochAffineMap, KrausChannel, PauliLabel, MIN_NORMALIZATION, TRACE_TOL,
};
use crate::error::{Error, Result};
use crate::qstate::{octahedral_states, pure_state, BellWeights, IsotropicSampler};
use crate::simplex::NelderMead;
use crate::teleport::{InducedChannel, TOperators};

/// Tolerance for membership of the t-vector in the tetrahedron.
pub const TETRAHEDRON_TOL: f64 = 1e-10;
/// Candidates within this of the best fidelity are ties.
pub const TIE_TOL: f64 = 1e-12;
/// `|t_z|` at or below this has no nonunitary stationary point.
pub const SINGULAR_TZ: f64 = 1e-12;

pub const DEFAULT_GRID_N: usize = 32;
pub const DEFAULT_CLOSED_FORM_GRID_N: usize = 256;
pub const DEFAULT_RESTARTS: usize = 24;

/// Diagonal Bloch entries `(t_x, t_y, t_z)` of a generalized depolarizing
/// channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TVector([f64; 3]);

impl TVector {
    pub fn new(t: [f64; 3]) -> Result<Self> {
        if t.iter()
            .any(|x| !x.is_finite() || x.abs() > 1.0 + TETRAHEDRON_TOL)
        {
            return Err(Error::InvalidArgument(format!(
                "t = {t:?} outside [-1, 1]³"
            )));
        }
        let v = Self(t);
        if v.weights_unchecked().iter().any(|&q| q < -TETRAHEDRON_TOL) {
            return Err(Error::InvalidArgument(format!(
                "t = {t:?} outside the tetrahedron of Pauli channels"
            )));
        }
        Ok(v)
    }

    pub fn as_array(&self) -> [f64; 3] {
        self.0
    }

    pub fn x(&self) -> f64 {
        self.0[0]
    }

    pub fn y(&self) -> f64 {
        self.0[1]
    }

    pub fn z(&self) -> f64 {
        self.0[2]
    }

    fn weights_unchecked(&self) -> [f64; 4] {
        let [x, y, z] = self.0;
        [
            (1.0 + x + y + z) / 4.0,
            (1.0 - x - y + z) / 4.0,
            (1.0 + x - y - z) / 4.0,
            (1.0 - x + y - z) / 4.0,
        ]
    }

    /// Inverse of [`t_vector`].
    pub fn weights(&self) -> Result<BellWeights> {
        BellWeights::new(self.weights_unchecked().map(|q| q.clamp(0.0, 1.0)))
    }
}

pub fn t_vector(q: &BellWeights) -> TVector {
    let [q1, q2, q3, q4] = q.as_array();
    TVector([q1 - q2 + q3 - q4, q1 - q2 - q3 + q4, q1 + q2 - q3 - q4])
}

/// Extremal map in canonical form, optionally framed by Pauli conjugations
/// applied before and after it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtremalParams {
    pub u: f64,
    pub v: f64,
    pub pre_pauli: PauliLabel,
    pub post_pauli: PauliLabel,
}

impl ExtremalParams {
    pub fn new(u: f64, v: f64, pre_pauli: PauliLabel, post_pauli: PauliLabel) -> Result<Self> {
        if !(0.0..TAU).contains(&u) {
            return Err(Error::InvalidAngle(format!("u = {u} outside [0, 2π)")));
        }
        if !(0.0..PI).contains(&v) {
            return Err(Error::InvalidAngle(format!("v = {v} outside [0, π)")));
        }
        Ok(Self {
            u,
            v,
            pre_pauli,
            post_pauli,
        })
    }

    pub fn canonical(u: f64, v: f64) -> Result<Self> {
        Self::new(u, v, PauliLabel::I, PauliLabel::I)
    }

    pub fn affine(&self) -> BlochAffineMap {
        let post = self.post_pauli.bloch_rotation();
        let pre = self.pre_pauli.bloch_rotation();
        let (m, c) = canonical_extremal(self.u, self.v);
        BlochAffineMap::new(post * m * pre, post * c)
    }
}

/// `(diag(cos u, cos v, cos u cos v), (0, 0, sin u sin v))`.
fn canonical_extremal(u: f64, v: f64) -> (Matrix3<f64>, Vector3<f64>) {
    let (su, cu) = u.sin_cos();
    let (sv, cv) = v.sin_cos();
    (
        Matrix3::from_diagonal(&Vector3::new(cu, cv, cu * cv)),
        Vector3::new(0.0, 0.0, su * sv),
    )
}

pub fn extremal_channel(p: &ExtremalParams) -> KrausChannel {
    p.affine()
        .to_kraus()
        .expect("extremal parametrization is completely positive")
}

/// Contribution `½ w + (1/12) Σ_a tr(X_a T_a)` of one outcome.
pub fn outcome_contribution(t: &TOperators, reversal: &BlochAffineMap) -> f64 {
    let x = reversal.pauli_images();
    let coupling: f64 = (0..3).map(|a| x[a].trace_product(&t.pauli[a]).re).sum();
    0.5 * t.weight() + coupling / 12.0
}

/// `Σ_i C^i`; equals the average fidelity when the outcomes are complete.
pub fn avg_fidelity_analytic(t_ops: &[TOperators], reversals: &[BlochAffineMap]) -> Result<f64> {
    if t_ops.len() != reversals.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} outcomes but {} reversals",
            t_ops.len(),
            reversals.len()
        )));
    }
    Ok(t_ops
        .iter()
        .zip(reversals)
        .map(|(t, r)| outcome_contribution(t, r))
        .sum())
}

/// `½ + (1/6)(t_x cos u + t_y cos v + t_z cos u cos v)`.
pub fn avg_fidelity_closed_form(t: &TVector, u: f64, v: f64) -> f64 {
    let (cu, cv) = (u.cos(), v.cos());
    0.5 + (t.x() * cu + t.y() * cv + t.z() * cu * cv) / 6.0
}

/// `(∂/∂u, ∂/∂v)` of [`avg_fidelity_closed_form`].
pub fn closed_form_gradient(t: &TVector, u: f64, v: f64) -> [f64; 2] {
    let (su, cu) = u.sin_cos();
    let (sv, cv) = v.sin_cos();
    [
        (-t.x() * su - t.z() * su * cv) / 6.0,
        (-t.y() * sv - t.z() * cu * sv) / 6.0,
    ]
}

/// Best Pauli reversal of the generalized depolarizing channel with
/// t-vector `t`; ties go to the first label in `I, X, Y, Z`.
pub fn optimal_unitary(t: &TVector) -> (PauliLabel, f64) {
    let [tx, ty, tz] = t.as_array();
    let mut best = (PauliLabel::I, f64::NEG_INFINITY);
    for label in PauliLabel::ALL {
        let [sx, sy, sz] = label.bloch_signs();
        let f = 0.5 + (sx * tx + sy * ty + sz * tz) / 6.0;
        if f > best.1 + TIE_TOL {
            best = (label, f);
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StationaryPoint {
    pub u: f64,
    pub v: f64,
    pub fidelity: f64,
}

/// Interior stationary point of the closed form, at `cos v = −t_x/t_z`,
/// `cos u = −t_y/t_z`, when `|t_x|, |t_y| < |t_z|`.
pub fn stationary_nonunitary(t: &TVector) -> Option<StationaryPoint> {
    let [tx, ty, tz] = t.as_array();
    if tz.abs() <= SINGULAR_TZ || tx.abs() >= tz.abs() || ty.abs() >= tz.abs() {
        return None;
    }
    Some(StationaryPoint {
        u: (-ty / tz).acos(),
        v: (-tx / tz).acos(),
        fidelity: 0.5 - tx * ty / (6.0 * tz),
    })
}

/// Which outcomes a single reversal channel is optimized for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    /// One reversal applied after every outcome.
    Total,
    /// Only the given 1-based outcome.
    PerOutcome(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Analytic,
    Grid,
    Multistart,
}

/// How a reversal channel was specified.
#[derive(Debug, Clone, PartialEq)]
pub enum ReversalParams {
    Unitary(PauliLabel),
    /// General unitary, by its Bloch rotation.
    Rotation(Matrix3<f64>),
    /// `post_rotation ∘ extremal(u, v) ∘ pre_rotation` on Bloch vectors.
    Extremal {
        params: ExtremalParams,
        pre_rotation: Matrix3<f64>,
        post_rotation: Matrix3<f64>,
    },
}

impl ReversalParams {
    pub fn affine(&self) -> BlochAffineMap {
        match self {
            ReversalParams::Unitary(label) => {
                BlochAffineMap::new(label.bloch_rotation(), Vector3::zeros())
            }
            ReversalParams::Rotation(r) => BlochAffineMap::new(*r, Vector3::zeros()),
            ReversalParams::Extremal {
                params,
                pre_rotation,
                post_rotation,
            } => {
                let inner = params.affine();
                BlochAffineMap::new(
                    post_rotation * inner.m * pre_rotation,
                    post_rotation * inner.c,
                )
            }
        }
    }

    fn tie_key(&self) -> (u8, f64, f64) {
        match self {
            ReversalParams::Unitary(label) => (*label as u8, 0.0, 0.0),
            ReversalParams::Rotation(_) => (4, 0.0, 0.0),
            ReversalParams::Extremal { params, .. } => (5, params.u, params.v),
        }
    }
}

/// Outcome of a reversal search.
#[derive(Debug, Clone)]
pub struct ReversalResult {
    pub channel: KrausChannel,
    pub params: ReversalParams,
    /// Fidelity averaged over inputs and over the selected outcomes,
    /// `Σ C^i / Σ w_i`.
    pub avg_fidelity: f64,
    /// Unnormalized `Σ C^i`.
    pub contribution: f64,
    /// `Σ w_i` over the selected outcomes.
    pub weight: f64,
    pub method: Method,
    pub objective: Objective,
}

#[derive(Debug, Clone, Copy)]
pub struct OptimizeOptions {
    pub grid_n: usize,
    pub restarts: usize,
    pub seed: u64,
    pub method: Method,
    pub simplex: NelderMead,
}

impl Default for OptimizeOptions {
    fn default() -> Self {
        Self {
            grid_n: DEFAULT_GRID_N,
            restarts: DEFAULT_RESTARTS,
            seed: 0,
            method: Method::Multistart,
            simplex: NelderMead::default(),
        }
    }
}

/// The optimization target reduced to its linear data:
/// `F(M, c) = ½ + (tr(Mᵀ G) + c·g) / (12 W)`.
#[derive(Debug, Clone, Copy)]
pub struct FidelityProblem {
    pub coupling: Matrix3<f64>,
    pub offset: Vector3<f64>,
    pub weight: f64,
}

impl FidelityProblem {
    pub fn new(t_ops: &[TOperators], objective: Objective) -> Result<Self> {
        if t_ops.is_empty() {
            return Err(Error::InvalidArgument("no fidelity operators".into()));
        }
        let selected: Vec<&TOperators> = match objective {
            Objective::Total => t_ops.iter().collect(),
            Objective::PerOutcome(i) => {
                if i == 0 || i > t_ops.len() {
                    return Err(Error::InvalidOutcome {
                        index: i,
                        count: t_ops.len(),
                    });
                }
                vec![&t_ops[i - 1]]
            }
        };
        let mut p = Self {
            coupling: Matrix3::zeros(),
            offset: Vector3::zeros(),
            weight: 0.0,
        };
        for t in selected {
            p.coupling += t.coupling();
            p.offset += t.offset();
            p.weight += t.weight();
        }
        if p.weight.is_nan() || p.weight <= MIN_NORMALIZATION {
            return Err(Error::VanishingNormalization(p.weight));
        }
        Ok(p)
    }

    /// Normalized average fidelity of the reversal `(M, c)`.
    pub fn fidelity(&self, map: &BlochAffineMap) -> f64 {
        0.5 + self.linear_term(map) / (12.0 * self.weight)
    }

    pub fn contribution(&self, map: &BlochAffineMap) -> f64 {
        0.5 * self.weight + self.linear_term(map) / 12.0
    }

    fn linear_term(&self, map: &BlochAffineMap) -> f64 {
        map.m.component_mul(&self.coupling).sum() + map.c.dot(&self.offset)
    }

    /// Best unitary reversal, as the rotation maximizing `tr(Rᵀ G)`.
    pub fn optimal_rotation(&self) -> Matrix3<f64> {
        let (u, _, v) = proper_svd(&self.coupling);
        u * v.transpose()
    }
}

/// `G = U Σ Vᵀ` with `U, V ∈ SO(3)` and a signed diagonal `Σ`.
fn proper_svd(g: &Matrix3<f64>) -> (Matrix3<f64>, Vector3<f64>, Matrix3<f64>) {
    let svd = g.svd(true, true);
    let mut u = svd.u.expect("requested U");
    let mut v = svd.v_t.expect("requested Vᵀ").transpose();
    let mut s = svd.singular_values;
    if u.determinant() < 0.0 {
        u.column_mut(2).neg_mut();
        s[2] = -s[2];
    }
    if v.determinant() < 0.0 {
        v.column_mut(2).neg_mut();
        s[2] = -s[2];
    }
    (u, s, v)
}

/// The 24 signed permutation matrices with determinant +1.
pub fn proper_signed_permutations() -> Vec<Matrix3<f64>> {
    const PERMS: [[usize; 3]; 6] = [
        [0, 1, 2],
        [0, 2, 1],
        [1, 0, 2],
        [1, 2, 0],
        [2, 0, 1],
        [2, 1, 0],
    ];
    let mut out = Vec::with_capacity(24);
    for perm in PERMS {
        for signs in 0..8u8 {
            let mut m = Matrix3::zeros();
            for (row, &col) in perm.iter().enumerate() {
                m[(row, col)] = if signs >> row & 1 == 1 { -1.0 } else { 1.0 };
            }
            if m.determinant() > 0.0 {
                out.push(m);
            }
        }
    }
    out
}

/// A search point: `(u, v)` plus Tait-Bryan angles of the rotations applied
/// on each side of a fixed frame pair.
struct Parametrization {
    post_frame: Matrix3<f64>,
    pre_frame: Matrix3<f64>,
}

impl Parametrization {
    fn rotations(&self, x: &[f64]) -> (Matrix3<f64>, Matrix3<f64>) {
        let pre = Rotation3::from_euler_angles(x[2], x[3], x[4]).into_inner() * self.pre_frame;
        let post = self.post_frame * Rotation3::from_euler_angles(x[5], x[6], x[7]).into_inner();
        (pre, post)
    }

    fn affine(&self, x: &[f64]) -> BlochAffineMap {
        let (pre, post) = self.rotations(x);
        let (m, c) = canonical_extremal(x[0], x[1]);
        BlochAffineMap::new(post * m * pre, post * c)
    }

    /// Folds `(u, v)` into `[0, 2π) × [0, π)`.
    fn params(&self, x: &[f64]) -> ReversalParams {
        let (pre, mut post) = self.rotations(x);
        let mut u = x[0].rem_euclid(TAU);
        let mut v = x[1].rem_euclid(TAU);
        if v > PI {
            // (u, v) and (2π − u, 2π − v) give the same map
            u = (TAU - u).rem_euclid(TAU);
            v = TAU - v;
        }
        if v >= PI {
            // diag(cos u, −1, −cos u) = diag(1, −1, −1) · diag(cos u, 1, cos u)
            post *= PauliLabel::X.bloch_rotation();
            v = 0.0;
        }
        if u >= TAU {
            u = 0.0;
        }
        ReversalParams::Extremal {
            params: ExtremalParams::canonical(u, v).expect("folded into range"),
            pre_rotation: pre,
            post_rotation: post,
        }
    }
}

struct Candidate {
    params: ReversalParams,
    fidelity: f64,
}

/// Maximizes the normalized average fidelity over rotated extremal maps.
///
/// Every `(u, v)` grid point is scored under 24 frame pairs aligned with the
/// singular vectors of the coupling matrix; the best grid points (and, past
/// 24 restarts, seeded random points) are refined by simplex descent and a
/// final Newton polish. Pauli unitaries and the best rotation are always
/// candidates, so the result never falls below them.
pub fn optimize_reversal(
    t_ops: &[TOperators],
    objective: Objective,
    options: &OptimizeOptions,
) -> Result<ReversalResult> {
    if options.grid_n < 8 {
        return Err(Error::InvalidArgument(format!(
            "grid_n = {} (need at least 8)",
            options.grid_n
        )));
    }
    let problem = FidelityProblem::new(t_ops, objective)?;

    let mut candidates: Vec<Candidate> = PauliLabel::ALL
        .iter()
        .map(|&label| {
            let params = ReversalParams::Unitary(label);
            Candidate {
                fidelity: problem.fidelity(&params.affine()),
                params,
            }
        })
        .collect();
    let rotation = ReversalParams::Rotation(problem.optimal_rotation());
    candidates.push(Candidate {
        fidelity: problem.fidelity(&rotation.affine()),
        params: rotation,
    });

    let (u_svd, _, v_svd) = proper_svd(&problem.coupling);
    let frames: Vec<Parametrization> = proper_signed_permutations()
        .into_iter()
        .map(|s| Parametrization {
            post_frame: u_svd * s,
            pre_frame: s.transpose() * v_svd.transpose(),
        })
        .collect();

    // best grid point per frame
    let n = options.grid_n;
    let mut seeds: Vec<(usize, f64, f64, f64)> = frames
        .iter()
        .enumerate()
        .map(|(k, frame)| {
            let h = frame.post_frame.transpose() * problem.coupling * frame.pre_frame.transpose();
            let gz = (frame.post_frame.transpose() * problem.offset)[2];
            let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
            for i in 0..n {
                let u = TAU * i as f64 / n as f64;
                let (su, cu) = u.sin_cos();
                for j in 0..n {
                    let v = PI * j as f64 / n as f64;
                    let (sv, cv) = v.sin_cos();
                    let val = h[(0, 0)] * cu + h[(1, 1)] * cv + h[(2, 2)] * cu * cv + gz * su * sv;
                    if val > best.0 {
                        best = (val, u, v);
                    }
                }
            }
            (k, best.0, best.1, best.2)
        })
        .collect();
    seeds.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));

    match options.method {
        Method::Grid | Method::Analytic => {
            let (k, _, u, v) = seeds[0];
            let x = [u, v, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0];
            let params = frames[k].params(&x);
            candidates.push(Candidate {
                fidelity: problem.fidelity(&params.affine()),
                params,
            });
        }
        Method::Multistart => {
            let step_u = TAU / n as f64;
            let step_v = PI / n as f64;
            let steps = [step_u, step_v, 0.2, 0.2, 0.2, 0.2, 0.2, 0.2];
            let refined: Vec<Candidate> = (0..options.restarts)
                .into_par_iter()
                .map(|r| {
                    let (frame, x0) = if r < seeds.len() {
                        let (k, _, u, v) = seeds[r];
                        (&frames[k], [u, v, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0])
                    } else {
                        let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
                        rng.set_stream(r as u64);
                        let k = rng.random_range(0..frames.len());
                        let mut x = [0.0; 8];
                        x[0] = rng.random_range(0.0..TAU);
                        x[1] = rng.random_range(0.0..PI);
                        for xi in &mut x[2..] {
                            *xi = rng.random_range(-PI..PI);
                        }
                        (&frames[k], x)
                    };
                    let objective = |x: &[f64]| -problem.fidelity(&frame.affine(x));
                    let found = options.simplex.minimize(objective, &x0, &steps);
                    let x = newton_polish(&objective, found.x);
                    let params = frame.params(&x);
                    Candidate {
                        fidelity: problem.fidelity(&params.affine()),
                        params,
                    }
                })
                .collect();
            candidates.extend(refined);
        }
    }

    let best = candidates
        .iter()
        .map(|c| c.fidelity)
        .fold(f64::NEG_INFINITY, f64::max);
    let chosen = candidates
        .into_iter()
        .filter(|c| c.fidelity >= best - TIE_TOL)
        .min_by(|a, b| {
            let (ka, kb) = (a.params.tie_key(), b.params.tie_key());
            ka.0.cmp(&kb.0)
                .then(ka.1.total_cmp(&kb.1))
                .then(ka.2.total_cmp(&kb.2))
        })
        .expect("at least the unitary candidates");

    finish(
        chosen.params,
        &problem,
        objective,
        match options.method {
            Method::Analytic => Method::Grid,
            m => m,
        },
    )
}

fn finish(
    params: ReversalParams,
    problem: &FidelityProblem,
    objective: Objective,
    method: Method,
) -> Result<ReversalResult> {
    let channel = match &params {
        ReversalParams::Unitary(label) => KrausChannel::pauli(*label),
        ReversalParams::Rotation(r) => {
            KrausChannel::unitary(crate::channel::unitary_for_rotation(r))
        }
        ReversalParams::Extremal { .. } => params.affine().to_kraus()?,
    };
    // score the channel actually returned
    let map = bloch_affine_of(&channel)?;
    Ok(ReversalResult {
        avg_fidelity: problem.fidelity(&map),
        contribution: problem.contribution(&map),
        weight: problem.weight,
        channel,
        params,
        method,
        objective,
    })
}

/// Closed-form optimum for a generalized depolarizing channel: the best
/// Pauli unitary.
pub fn analytic_reversal(t: &TVector) -> ReversalResult {
    let (label, fidelity) = optimal_unitary(t);
    ReversalResult {
        channel: KrausChannel::pauli(label),
        params: ReversalParams::Unitary(label),
        avg_fidelity: fidelity,
        contribution: fidelity / 4.0,
        weight: 0.25,
        method: Method::Analytic,
        objective: Objective::PerOutcome(1),
    }
}

/// Newton steps on the positive-curvature subspace of a finite-difference
/// Hessian, starting from a simplex minimum of `f`.
fn newton_polish(f: &impl Fn(&[f64]) -> f64, mut x: Vec<f64>) -> Vec<f64> {
    const H: f64 = 1e-5;
    const H2: f64 = 1e-4;
    let n = x.len();
    let mut fx = f(&x);
    for _ in 0..6 {
        let mut grad = DVector::zeros(n);
        let mut hess = DMatrix::zeros(n, n);
        let shifted = |x: &[f64], moves: &[(usize, f64)]| {
            let mut y = x.to_vec();
            for &(i, d) in moves {
                y[i] += d;
            }
            f(&y)
        };
        for i in 0..n {
            grad[i] = (shifted(&x, &[(i, H)]) - shifted(&x, &[(i, -H)])) / (2.0 * H);
            for j in i..n {
                let val = if i == j {
                    (shifted(&x, &[(i, H2)]) - 2.0 * fx + shifted(&x, &[(i, -H2)])) / (H2 * H2)
                } else {
                    (shifted(&x, &[(i, H2), (j, H2)])
                        - shifted(&x, &[(i, H2), (j, -H2)])
                        - shifted(&x, &[(i, -H2), (j, H2)])
                        + shifted(&x, &[(i, -H2), (j, -H2)]))
                        / (4.0 * H2 * H2)
                };
                hess[(i, j)] = val;
                hess[(j, i)] = val;
            }
        }
        // minimizing: use the positive-curvature directions
        let eig = SymmetricEigen::new(hess);
        let scale = eig.eigenvalues.iter().fold(0.0f64, |m, l| m.max(l.abs()));
        if scale == 0.0 {
            break;
        }
        let mut step = DVector::zeros(n);
        for k in 0..n {
            let lambda = eig.eigenvalues[k];
            if lambda > 1e-6 * scale {
                let dir = eig.eigenvectors.column(k);
                step -= dir * (dir.dot(&grad) / lambda);
            }
        }
        if step.norm() < 1e-14 || step.norm() > 0.1 {
            break;
        }
        let trial: Vec<f64> = x.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
        let f_trial = f(&trial);
        if f_trial > fx {
            break;
        }
        x = trial;
        fx = f_trial;
    }
    x
}

/// `Σ_nodes (1/6) Σ_i tr[ρ R_i(E_i(ρ))]` over the six octahedral states;
/// exact because the integrand is quadratic in the Bloch vector.
pub fn avg_fidelity_quadrature(
    induced: &[InducedChannel],
    reversals: &[KrausChannel],
) -> Result<f64> {
    check_reversals(induced, reversals)?;
    let states = octahedral_states();
    let mut total = 0.0;
    for rho in &states {
        total += pipeline_overlap(induced, reversals, rho)? / states.len() as f64;
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: usize,
    pub seed: u64,
}

/// Sample mean of `Σ_i tr[ρ R_i(E_i(ρ))]` over isotropic pure inputs.
pub fn avg_fidelity_monte_carlo(
    induced: &[InducedChannel],
    reversals: &[KrausChannel],
    samples: usize,
    seed: u64,
) -> Result<MonteCarloEstimate> {
    check_reversals(induced, reversals)?;
    if samples < 2 {
        return Err(Error::InvalidArgument("need at least 2 samples".into()));
    }
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for angles in IsotropicSampler::new(seed).take(samples) {
        let val = pipeline_overlap(induced, reversals, &pure_state(angles))?;
        sum += val;
        sum_sq += val * val;
    }
    let n = samples as f64;
    let mean = sum / n;
    let var = ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0);
    Ok(MonteCarloEstimate {
        mean,
        std_error: (var / n).sqrt(),
        samples,
        seed,
    })
}

fn pipeline_overlap(
    induced: &[InducedChannel],
    reversals: &[KrausChannel],
    rho: &crate::linalg::ComplexMatrix,
) -> Result<f64> {
    let mut total = 0.0;
    for (e, r) in induced.iter().zip(reversals) {
        let out = r.apply(&e.channel.apply(rho)?)?;
        total += rho.trace_product(&out).re;
    }
    Ok(total)
}

fn check_reversals(induced: &[InducedChannel], reversals: &[KrausChannel]) -> Result<()> {
    if induced.len() != reversals.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} outcomes but {} reversals",
            induced.len(),
            reversals.len()
        )));
    }
    for r in reversals {
        let dev = r.trace_deviation();
        if dev > TRACE_TOL {
            return Err(Error::NotTracePreserving(dev));
        }
    }
    Ok(())
}
