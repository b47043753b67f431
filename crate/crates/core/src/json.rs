//! JSON encodings shared by states, channels and results. Complex numbers are
//! always `[re, im]` pairs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, CMat, CVec};

pub type ComplexPair = [f64; 2];
pub type MatrixJson = Vec<Vec<ComplexPair>>;

pub fn matrix_to_json(m: &CMat) -> MatrixJson {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

pub fn matrix_from_json(rows: &MatrixJson) -> Result<CMat> {
    let nrows = rows.len();
    let ncols = rows.first().map(|r| r.len()).unwrap_or(0);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::Schema("ragged matrix rows".into()));
    }
    Ok(CMat::from_fn(nrows, ncols, |i, j| c(rows[i][j][0], rows[i][j][1])))
}

pub fn vector_to_json(v: &CVec) -> Vec<ComplexPair> {
    v.iter().map(|z| [z.re, z.im]).collect()
}

pub fn vector_from_json(v: &[ComplexPair]) -> CVec {
    CVec::from_iterator(v.len(), v.iter().map(|p| c(p[0], p[1])))
}

/// Real number that may be `+inf`; encoded as a JSON number or the string `"inf"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtendedReal(pub f64);

impl Serialize for ExtendedReal {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0.is_infinite() && self.0 > 0.0 {
            s.serialize_str("inf")
        } else if self.0.is_infinite() {
            s.serialize_str("-inf")
        } else {
            s.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for ExtendedReal {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(x) => Ok(ExtendedReal(x)),
            Raw::Str(s) if s == "inf" => Ok(ExtendedReal(f64::INFINITY)),
            Raw::Str(s) if s == "-inf" => Ok(ExtendedReal(f64::NEG_INFINITY)),
            Raw::Str(s) => Err(serde::de::Error::custom(format!("not a number: {s}"))),
        }
    }
}

/// `serialize_with` adapter for matrices.
pub fn serialize_matrix<S: serde::Serializer>(m: &CMat, s: S) -> std::result::Result<S::Ok, S::Error> {
    matrix_to_json(m).serialize(s)
}

/// `serialize_with` adapter for optional matrices.
pub fn serialize_opt_matrix<S: serde::Serializer>(m: &Option<CMat>, s: S) -> std::result::Result<S::Ok, S::Error> {
    m.as_ref().map(matrix_to_json).serialize(s)
}

/// `serialize_with` adapter for lists of matrices.
pub fn serialize_matrices<S: serde::Serializer>(ms: &[CMat], s: S) -> std::result::Result<S::Ok, S::Error> {
    ms.iter().map(matrix_to_json).collect::<Vec<_>>().serialize(s)
}
