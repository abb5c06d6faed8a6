//! JSON documents for channels, teleportation schemes and reversal results.
//!
//! Complex numbers are `[re, im]` pairs and matrices are arrays of rows.
//! Floats are written in shortest round-trip form, so reading a document
//! back reproduces every value bit for bit.

use nalgebra::Matrix3;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::{KrausChannel, PauliLabel, TRACE_TOL};
use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;
use crate::qstate::BellWeights;
use crate::reversal::{ExtremalParams, Method, Objective, ReversalParams, ReversalResult};
use crate::teleport::{InducedChannel, TeleportScheme};

type JsonMatrix = Vec<Vec<[f64; 2]>>;

fn matrix_to_json(m: &ComplexMatrix) -> JsonMatrix {
    (0..m.rows())
        .map(|r| m.row(r).iter().map(|z| [z.re, z.im]).collect())
        .collect()
}

fn matrix_from_json(rows: &JsonMatrix, what: &str) -> Result<ComplexMatrix> {
    let rows: Vec<Vec<Complex64>> = rows
        .iter()
        .map(|row| row.iter().map(|&[re, im]| Complex64::new(re, im)).collect())
        .collect();
    ComplexMatrix::from_rows(&rows).map_err(|e| Error::Parse(format!("{what}: {e}")))
}

fn real3_to_json(m: &Matrix3<f64>) -> [[f64; 3]; 3] {
    std::array::from_fn(|r| std::array::from_fn(|c| m[(r, c)]))
}

fn real3_from_json(rows: &[[f64; 3]; 3]) -> Matrix3<f64> {
    Matrix3::from_fn(|r, c| rows[r][c])
}

fn parse_err(e: serde_json::Error) -> Error {
    Error::Parse(e.to_string())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChannelJson {
    dim: usize,
    trace_preserving: bool,
    kraus: Vec<JsonMatrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    outcome: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    mean_outcome_probability: Option<f64>,
}

/// A channel read from a channel document, with the optional outcome
/// metadata written for teleportation-induced operations.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelDocument {
    pub channel: KrausChannel,
    pub outcome: Option<usize>,
    pub mean_outcome_probability: Option<f64>,
}

impl ChannelDocument {
    pub fn plain(channel: KrausChannel) -> Self {
        Self {
            channel,
            outcome: None,
            mean_outcome_probability: None,
        }
    }

    pub fn induced(induced: &InducedChannel) -> Self {
        Self {
            channel: induced.channel.clone(),
            outcome: Some(induced.outcome),
            mean_outcome_probability: Some(induced.mean_outcome_probability),
        }
    }

    fn to_json(&self) -> ChannelJson {
        ChannelJson {
            dim: self.channel.dim(),
            trace_preserving: self.channel.is_trace_preserving(TRACE_TOL),
            kraus: self.channel.kraus().iter().map(matrix_to_json).collect(),
            outcome: self.outcome,
            mean_outcome_probability: self.mean_outcome_probability,
        }
    }

    fn from_json(doc: ChannelJson) -> Result<Self> {
        let kraus = doc
            .kraus
            .iter()
            .enumerate()
            .map(|(k, m)| matrix_from_json(m, &format!("Kraus operator {k}")))
            .collect::<Result<Vec<_>>>()?;
        if kraus
            .iter()
            .any(|a| a.rows() != doc.dim || a.cols() != doc.dim)
        {
            return Err(Error::Parse(format!(
                "Kraus operators do not match dim = {}",
                doc.dim
            )));
        }
        let channel = KrausChannel::new(kraus)?;
        if doc.trace_preserving && !channel.is_trace_preserving(TRACE_TOL) {
            return Err(Error::NotTracePreserving(channel.trace_deviation()));
        }
        if let Some(w) = doc.mean_outcome_probability {
            if !(0.0..=1.0 + TRACE_TOL).contains(&w) {
                return Err(Error::Parse(format!(
                    "mean outcome probability {w} outside [0, 1]"
                )));
            }
        }
        Ok(Self {
            channel,
            outcome: doc.outcome,
            mean_outcome_probability: doc.mean_outcome_probability,
        })
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.to_json()).expect("channel document serializes")
    }
}

pub fn channel_to_json(channel: &KrausChannel) -> String {
    ChannelDocument::plain(channel.clone()).to_json_string()
}

pub fn channel_from_json_slice(bytes: &[u8]) -> Result<ChannelDocument> {
    ChannelDocument::from_json(serde_json::from_slice(bytes).map_err(parse_err)?)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SchemeJson {
    chi23: JsonMatrix,
    povm: Vec<Vec<JsonMatrix>>,
    /// One basis vector per row.
    trace_basis: JsonMatrix,
}

pub fn scheme_to_json(scheme: &TeleportScheme) -> String {
    let basis = scheme
        .trace_basis()
        .iter()
        .map(|v| {
            (0..v.rows())
                .map(|r| [v[(r, 0)].re, v[(r, 0)].im])
                .collect()
        })
        .collect();
    let doc = SchemeJson {
        chi23: matrix_to_json(scheme.chi23()),
        povm: scheme
            .povm()
            .iter()
            .map(|ops| ops.iter().map(matrix_to_json).collect())
            .collect(),
        trace_basis: basis,
    };
    serde_json::to_string_pretty(&doc).expect("scheme document serializes")
}

pub fn scheme_from_json_slice(bytes: &[u8]) -> Result<TeleportScheme> {
    let doc: SchemeJson = serde_json::from_slice(bytes).map_err(parse_err)?;
    let chi23 = matrix_from_json(&doc.chi23, "chi23")?;
    let povm = doc
        .povm
        .iter()
        .enumerate()
        .map(|(i, ops)| {
            ops.iter()
                .map(|m| matrix_from_json(m, &format!("outcome {}", i + 1)))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let basis = doc
        .trace_basis
        .iter()
        .map(|row| {
            ComplexMatrix::column(
                &row.iter()
                    .map(|&[re, im]| Complex64::new(re, im))
                    .collect::<Vec<_>>(),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    TeleportScheme::new(chi23, povm, basis)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum ParamsJson {
    Unitary {
        unitary: PauliLabel,
    },
    Rotation {
        rotation: [[f64; 3]; 3],
    },
    Extremal {
        u: f64,
        v: f64,
        pre_pauli: PauliLabel,
        post_pauli: PauliLabel,
        pre: [[f64; 3]; 3],
        post: [[f64; 3]; 3],
    },
}

impl ParamsJson {
    fn from_params(p: &ReversalParams) -> Self {
        match p {
            ReversalParams::Unitary(label) => ParamsJson::Unitary { unitary: *label },
            ReversalParams::Rotation(r) => ParamsJson::Rotation {
                rotation: real3_to_json(r),
            },
            ReversalParams::Extremal {
                params,
                pre_rotation,
                post_rotation,
            } => ParamsJson::Extremal {
                u: params.u,
                v: params.v,
                pre_pauli: params.pre_pauli,
                post_pauli: params.post_pauli,
                pre: real3_to_json(pre_rotation),
                post: real3_to_json(post_rotation),
            },
        }
    }

    fn into_params(self) -> Result<ReversalParams> {
        Ok(match self {
            ParamsJson::Unitary { unitary } => ReversalParams::Unitary(unitary),
            ParamsJson::Rotation { rotation } => {
                ReversalParams::Rotation(real3_from_json(&rotation))
            }
            ParamsJson::Extremal {
                u,
                v,
                pre_pauli,
                post_pauli,
                pre,
                post,
            } => ReversalParams::Extremal {
                params: ExtremalParams::new(u, v, pre_pauli, post_pauli)?,
                pre_rotation: real3_from_json(&pre),
                post_rotation: real3_from_json(&post),
            },
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ResultJson {
    method: Method,
    objective: Objective,
    params: ParamsJson,
    avg_fidelity: f64,
    contribution: f64,
    weight: f64,
    channel: ChannelJson,
}

/// A reversal result as read back from disk.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultDocument {
    pub method: Method,
    pub objective: Objective,
    pub params: ReversalParams,
    pub avg_fidelity: f64,
    pub contribution: f64,
    pub weight: f64,
    pub channel: KrausChannel,
}

pub fn result_to_json(result: &ReversalResult) -> String {
    let doc = ResultJson {
        method: result.method,
        objective: result.objective,
        params: ParamsJson::from_params(&result.params),
        avg_fidelity: result.avg_fidelity,
        contribution: result.contribution,
        weight: result.weight,
        channel: ChannelDocument::plain(result.channel.clone()).to_json(),
    };
    serde_json::to_string_pretty(&doc).expect("result document serializes")
}

pub fn result_from_json_slice(bytes: &[u8]) -> Result<ResultDocument> {
    let doc: ResultJson = serde_json::from_slice(bytes).map_err(parse_err)?;
    let channel = ChannelDocument::from_json(doc.channel)?.channel;
    if !channel.is_trace_preserving(TRACE_TOL) {
        return Err(Error::NotTracePreserving(channel.trace_deviation()));
    }
    Ok(ResultDocument {
        method: doc.method,
        objective: doc.objective,
        params: doc.params.into_params()?,
        avg_fidelity: doc.avg_fidelity,
        contribution: doc.contribution,
        weight: doc.weight,
        channel,
    })
}

/// Reads a reversal channel from either a result document or a channel
/// document.
pub fn reversal_from_json_slice(bytes: &[u8]) -> Result<KrausChannel> {
    let value: serde_json::Value = serde_json::from_slice(bytes).map_err(parse_err)?;
    if value.get("params").is_some() {
        Ok(result_from_json_slice(bytes)?.channel)
    } else {
        Ok(channel_from_json_slice(bytes)?.channel)
    }
}

/// Parses comma-separated Bell weights such as `0.7,0.1,0.1,0.1`.
pub fn parse_weights(s: &str) -> Result<BellWeights> {
    let parts = s
        .split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("weight {p:?}: {e}")))
        })
        .collect::<Result<Vec<_>>>()?;
    let q: [f64; 4] = parts
        .try_into()
        .map_err(|v: Vec<f64>| Error::Parse(format!("expected 4 weights, got {}", v.len())))?;
    BellWeights::new(q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reversal::{optimize_reversal, OptimizeOptions};
    use crate::teleport::{all_t_operators, bell_scheme, imperfect_scheme, induced_channel};

    #[test]
    fn channel_round_trip_is_exact() {
        let induced = induced_channel(&imperfect_scheme(0.7).unwrap(), 1).unwrap();
        let doc = ChannelDocument::induced(&induced);
        let text = doc.to_json_string();
        assert!(text.contains("\"trace_preserving\": false"));
        let back = channel_from_json_slice(text.as_bytes()).unwrap();
        assert_eq!(back, doc);
    }

    #[test]
    fn channel_rejections() {
        let bad_dim =
            r#"{"dim":3,"trace_preserving":true,"kraus":[[[[1,0],[0,0]],[[0,0],[1,0]]]]}"#;
        assert!(channel_from_json_slice(bad_dim.as_bytes()).is_err());
        let increasing =
            r#"{"dim":2,"trace_preserving":false,"kraus":[[[[2,0],[0,0]],[[0,0],[1,0]]]]}"#;
        assert!(matches!(
            channel_from_json_slice(increasing.as_bytes()),
            Err(Error::TraceIncreasing(_))
        ));
        let false_claim =
            r#"{"dim":2,"trace_preserving":true,"kraus":[[[[0.5,0],[0,0]],[[0,0],[1,0]]]]}"#;
        assert!(matches!(
            channel_from_json_slice(false_claim.as_bytes()),
            Err(Error::NotTracePreserving(_))
        ));
        let ragged = r#"{"dim":2,"trace_preserving":true,"kraus":[[[[1,0]],[[0,0],[1,0]]]]}"#;
        assert!(channel_from_json_slice(ragged.as_bytes()).is_err());
        assert!(channel_from_json_slice(b"not json").is_err());
    }

    #[test]
    fn scheme_round_trip() {
        for scheme in [
            bell_scheme(&BellWeights::new([0.7, 0.1, 0.1, 0.1]).unwrap()),
            imperfect_scheme(0.3).unwrap(),
        ] {
            let text = scheme_to_json(&scheme);
            assert_eq!(scheme_from_json_slice(text.as_bytes()).unwrap(), scheme);
        }
    }

    #[test]
    fn result_round_trip() {
        let t_ops = all_t_operators(&imperfect_scheme(1.4).unwrap()).unwrap();
        let result = optimize_reversal(
            &t_ops,
            Objective::PerOutcome(1),
            &OptimizeOptions::default(),
        )
        .unwrap();
        let text = result_to_json(&result);
        let back = result_from_json_slice(text.as_bytes()).unwrap();
        assert_eq!(back.params, result.params);
        assert_eq!(back.channel, result.channel);
        assert_eq!(back.avg_fidelity, result.avg_fidelity);
        assert_eq!(
            reversal_from_json_slice(text.as_bytes()).unwrap(),
            result.channel
        );
    }

    #[test]
    fn weights_parsing() {
        assert_eq!(
            parse_weights("0.7, 0.1,0.1,0.1").unwrap().as_array(),
            [0.7, 0.1, 0.1, 0.1]
        );
        assert!(parse_weights("0.5,0.5").is_err());
        assert!(parse_weights("0.5,0.5,0.5,0.5").is_err());
        assert!(parse_weights("a,b,c,d").is_err());
    }
}
