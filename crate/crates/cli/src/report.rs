//! Serializable views of the analysis results.
//!
//! Scalars keep the tensor-file encoding: `"num/den"` strings for rational
//! input, `[re, im]` pairs for complex input.

use bfstab_core::io::JsonScalar;
use bfstab_core::jumping::{JumpingHyperplane, JumpingReport};
use bfstab_core::nondegeneracy::{FiberPoint, NondegeneracyVerdict};
use bfstab_core::stabilizer::{Certificates, StabilizerReport};
use bfstab_core::BoundaryTensor;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

pub const SCHEMA_VERSION: u32 = 1;
pub const TOOL_NAME: &str = "bfstab";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tool {
    pub name: String,
    pub version: String,
}

impl Default for Tool {
    fn default() -> Self {
        Self {
            name: TOOL_NAME.into(),
            version: TOOL_VERSION.into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InputInfo {
    pub sha256: String,
    pub format: String,
    pub k: Vec<usize>,
    pub dims: Vec<usize>,
    pub field: String,
}

impl InputInfo {
    pub fn new<T: JsonScalar>(bytes: &[u8], a: &BoundaryTensor<T>) -> Self {
        Self {
            sha256: hex::encode(Sha256::digest(bytes)),
            format: a.format().to_string(),
            k: a.format().k().to_vec(),
            dims: a.format().dims(),
            field: T::FIELD.into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointOut {
    pub j: usize,
    /// One vector per slot; `null` at slots `0` and `j`.
    pub x: Vec<Option<Vec<Value>>>,
}

fn point<T: JsonScalar>(p: &FiberPoint<T>) -> PointOut {
    PointOut {
        j: p.j,
        x: p.x.iter().map(|v| v.as_ref().map(|v| scalars(v))).collect(),
    }
}

fn scalars<T: JsonScalar>(v: &[T]) -> Vec<Value> {
    v.iter().map(JsonScalar::to_json).collect()
}

fn complex(v: &[bfstab_core::C64]) -> Vec<Value> {
    scalars(v)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerdictOut {
    pub status: String,
    pub method: String,
    /// `hyperdet_p2` when it was evaluated.
    pub det: Option<Value>,
    /// Rank-drop point confirmed in the input field.
    pub witness: Option<PointOut>,
    /// Best point of the numeric search, in complex coordinates.
    pub numeric_point: Option<PointOut>,
    pub min_sigma: Option<f64>,
}

impl VerdictOut {
    pub fn new<T: JsonScalar>(v: &NondegeneracyVerdict<T>) -> Self {
        Self {
            status: v.status.name().into(),
            method: serde_json::to_value(v.method)
                .ok()
                .and_then(|m| m.as_str().map(String::from))
                .unwrap_or_default(),
            det: v.det_value.as_ref().map(JsonScalar::to_json),
            witness: v.witness.as_ref().map(point),
            numeric_point: v.numeric_point.as_ref().map(point),
            min_sigma: v.min_sigma,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightsOut {
    pub lambda_sq: Value,
    pub lambda: Option<Value>,
    /// Integer progressions `-k_i, ..., k_i` per slot.
    pub normalized: Vec<Vec<i64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabOut {
    pub dim: usize,
    pub class: String,
    /// Per generator, one row-major block per slot.
    pub generators: Vec<Vec<Vec<Value>>>,
    pub weights: Option<WeightsOut>,
    pub certificates: Certificates,
    pub nondegeneracy: Option<String>,
    pub warnings: Vec<String>,
}

impl StabOut {
    pub fn new<T: JsonScalar>(r: &StabilizerReport<T>) -> Self {
        Self {
            dim: r.dim,
            class: r.class.name().into(),
            generators: r
                .generators
                .iter()
                .map(|g| g.mats.iter().map(|m| scalars(m.data())).collect())
                .collect(),
            weights: r.weights.as_ref().map(|w| WeightsOut {
                lambda_sq: w.lambda_sq.to_json(),
                lambda: w.lambda.as_ref().map(JsonScalar::to_json),
                normalized: w.normalized.clone(),
            }),
            certificates: r.certificates.clone(),
            nondegeneracy: r.nondegeneracy.map(|s| s.name().to_string()),
            warnings: r.warnings.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HyperplaneOut {
    pub xi: Vec<Value>,
    /// The covector in the input field, when confirmed there.
    pub xi_exact: Option<Vec<Value>>,
    pub witnesses: Vec<Vec<Value>>,
    pub residual: f64,
    pub source: String,
}

fn hyperplane<T: JsonScalar>(h: &JumpingHyperplane<T>) -> HyperplaneOut {
    HyperplaneOut {
        xi: complex(&h.xi),
        xi_exact: h.xi_exact.as_ref().map(|v| scalars(v)),
        witnesses: match &h.witnesses_exact {
            Some(w) => w.iter().map(|v| scalars(v)).collect(),
            None => h.witnesses.iter().map(|v| complex(v)).collect(),
        },
        residual: h.residual,
        source: h.source.name().into(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveOut {
    pub local_dim: usize,
    pub traced_points: usize,
    pub complete: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JumpingOut {
    pub mode: String,
    pub slot: Option<usize>,
    pub count_distinct: usize,
    pub identity_flag: Option<bool>,
    pub items: Vec<HyperplaneOut>,
    pub curve: Option<CurveOut>,
    pub restarts: usize,
    pub seed: u64,
}

impl JumpingOut {
    pub fn new<T: JsonScalar>(r: &JumpingReport<T>) -> Self {
        Self {
            mode: r.kind.name().into(),
            slot: r.kind.slot(),
            count_distinct: r.count_distinct,
            identity_flag: r.identity_flag,
            items: r.items.iter().map(hyperplane).collect(),
            curve: r.curve_evidence.as_ref().map(|c| CurveOut {
                local_dim: c.local_dim,
                traced_points: c.points.len(),
                complete: c.complete,
            }),
            restarts: r.restarts,
            seed: r.seed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Consistency {
    pub identity_flag: bool,
    pub class_is_sl2: Option<bool>,
    /// The equivalence is only asserted for nondegenerate input.
    pub applicable: bool,
    /// `"consistent"` or `"INCONSISTENT"`.
    pub status: String,
}

impl Consistency {
    pub fn new(identity_flag: bool, class_is_sl2: Option<bool>) -> Self {
        let applicable = class_is_sl2.is_some();
        let ok = class_is_sl2.is_none_or(|sl2| sl2 == identity_flag);
        Self {
            identity_flag,
            class_is_sl2,
            applicable,
            status: if ok { "consistent" } else { "INCONSISTENT" }.into(),
        }
    }

    pub fn is_consistent(&self) -> bool {
        self.status == "consistent"
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub nondegeneracy_ms: f64,
    pub stabilizer_ms: f64,
    pub jumping_ms: f64,
    pub total_ms: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub tool: Tool,
    pub input: InputInfo,
    pub seed: u64,
    pub nondegeneracy: VerdictOut,
    pub stabilizer: Option<StabOut>,
    /// Why `stabilizer` is absent.
    pub stabilizer_error: Option<String>,
    pub jumping: Vec<JumpingOut>,
    pub consistency: Consistency,
    pub timings: Timings,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn consistency_flags() {
        assert!(Consistency::new(true, Some(true)).is_consistent());
        assert!(Consistency::new(false, Some(false)).is_consistent());
        assert_eq!(Consistency::new(true, Some(false)).status, "INCONSISTENT");
        let na = Consistency::new(true, None);
        assert!(!na.applicable && na.is_consistent());
    }
}
