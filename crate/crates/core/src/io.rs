//! The JSON envelope shared by tensor and group-element files.
//!
//! ```json
//! {"dims": [3, 2, 2], "field": "rational", "entries": ["1/1", "0/1", ...]}
//! ```
//!
//! Rationals are `"num/den"` strings, complex numbers `[re, im]` pairs.
//! Entries are row-major with the last index fastest. Group files carry
//! `"matrices"` (one row-major list per slot) in place of `"entries"`.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::{format_rational, parse_rational, Rational, C64};
use crate::tensor::{BoundaryTensor, Format, GroupElement};

pub trait JsonScalar: crate::Field {
    const FIELD: &'static str;

    fn to_json(&self) -> Value;

    fn from_json(v: &Value) -> Result<Self>;
}

impl JsonScalar for Rational {
    const FIELD: &'static str = "rational";

    fn to_json(&self) -> Value {
        Value::String(format_rational(self))
    }

    fn from_json(v: &Value) -> Result<Self> {
        match v {
            Value::String(s) => {
                parse_rational(s).ok_or_else(|| Error::Malformed(format!("bad rational {s:?}")))
            }
            Value::Number(n) if n.is_i64() => {
                Ok(Rational::from_integer(n.as_i64().unwrap().into()))
            }
            other => Err(Error::Malformed(format!(
                "expected a \"num/den\" string, got {other}"
            ))),
        }
    }
}

impl JsonScalar for C64 {
    const FIELD: &'static str = "complex";

    fn to_json(&self) -> Value {
        json!([self.re, self.im])
    }

    fn from_json(v: &Value) -> Result<Self> {
        let bad = || Error::Malformed(format!("expected [re, im], got {v}"));
        let pair = v.as_array().filter(|a| a.len() == 2).ok_or_else(bad)?;
        let re = pair[0].as_f64().ok_or_else(bad)?;
        let im = pair[1].as_f64().ok_or_else(bad)?;
        if !(re.is_finite() && im.is_finite()) {
            return Err(bad());
        }
        Ok(C64::new(re, im))
    }
}

/// Raw envelope, before the entries are interpreted.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Envelope {
    pub dims: Vec<usize>,
    pub field: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entries: Option<Vec<Value>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrices: Option<Vec<Vec<Value>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected: Option<Value>,
}

/// A tensor file in whichever field it declares.
#[derive(Clone, Debug, PartialEq)]
pub enum AnyTensor {
    Rational(BoundaryTensor<Rational>),
    Complex(BoundaryTensor<C64>),
}

impl AnyTensor {
    pub fn format(&self) -> &Format {
        match self {
            AnyTensor::Rational(a) => a.format(),
            AnyTensor::Complex(a) => a.format(),
        }
    }

    pub fn field(&self) -> &'static str {
        match self {
            AnyTensor::Rational(_) => Rational::FIELD,
            AnyTensor::Complex(_) => C64::FIELD,
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            AnyTensor::Rational(a) => tensor_to_json(a),
            AnyTensor::Complex(a) => tensor_to_json(a),
        }
    }
}

fn parse_envelope(text: &str) -> Result<Envelope> {
    serde_json::from_str(text).map_err(|e| Error::Malformed(format!("not a tensor envelope: {e}")))
}

fn entries_of<T: JsonScalar>(values: &[Value]) -> Result<Vec<T>> {
    values.iter().map(T::from_json).collect()
}

fn tensor_from_envelope<T: JsonScalar>(env: &Envelope) -> Result<BoundaryTensor<T>> {
    let values = env
        .entries
        .as_ref()
        .ok_or_else(|| Error::Malformed("missing \"entries\"".into()))?;
    let format = Format::from_dims(&env.dims)?;
    if values.len() != format.len() {
        return Err(Error::Malformed(format!(
            "dims {:?} need {} entries, got {}",
            env.dims,
            format.len(),
            values.len()
        )));
    }
    BoundaryTensor::new(format, entries_of(values)?)
}

pub fn parse_tensor(text: &str) -> Result<AnyTensor> {
    let env = parse_envelope(text)?;
    match env.field.as_str() {
        "rational" => Ok(AnyTensor::Rational(tensor_from_envelope(&env)?)),
        "complex" => Ok(AnyTensor::Complex(tensor_from_envelope(&env)?)),
        other => Err(Error::Malformed(format!("unknown field {other:?}"))),
    }
}

/// Parses a tensor file that must be in the field of `T`.
pub fn parse_tensor_as<T: JsonScalar>(text: &str) -> Result<BoundaryTensor<T>> {
    let env = parse_envelope(text)?;
    if env.field != T::FIELD {
        return Err(Error::Malformed(format!(
            "expected field {:?}, got {:?}",
            T::FIELD,
            env.field
        )));
    }
    tensor_from_envelope(&env)
}

/// The `"expected"` block of a fixture file, if present.
pub fn expected_block(text: &str) -> Result<Option<Value>> {
    Ok(parse_envelope(text)?.expected)
}

pub fn tensor_to_json<T: JsonScalar>(a: &BoundaryTensor<T>) -> Value {
    json!({
        "dims": a.format().dims(),
        "field": T::FIELD,
        "entries": a.entries().iter().map(JsonScalar::to_json).collect::<Vec<_>>(),
    })
}

pub fn group_to_json<T: JsonScalar>(g: &GroupElement<T>) -> Value {
    json!({
        "dims": g.dims(),
        "field": T::FIELD,
        "matrices": g
            .matrices()
            .iter()
            .map(|m| m.data().iter().map(JsonScalar::to_json).collect::<Vec<_>>())
            .collect::<Vec<_>>(),
    })
}

pub fn parse_group<T: JsonScalar>(text: &str) -> Result<GroupElement<T>> {
    let env = parse_envelope(text)?;
    if env.field != T::FIELD {
        return Err(Error::Malformed(format!(
            "expected field {:?}, got {:?}",
            T::FIELD,
            env.field
        )));
    }
    let blocks = env
        .matrices
        .as_ref()
        .ok_or_else(|| Error::Malformed("missing \"matrices\"".into()))?;
    if blocks.len() != env.dims.len() {
        return Err(Error::Malformed(format!(
            "{} dims but {} matrices",
            env.dims.len(),
            blocks.len()
        )));
    }
    let mats = env
        .dims
        .iter()
        .zip(blocks)
        .map(|(&d, block)| {
            if block.len() != d * d {
                return Err(Error::Malformed(format!(
                    "a {d}x{d} block needs {} entries, got {}",
                    d * d,
                    block.len()
                )));
            }
            Matrix::from_vec(d, d, entries_of(block)?)
        })
        .collect::<Result<Vec<_>>>()?;
    GroupElement::new(mats)
}
