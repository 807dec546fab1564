//! Text formatting shared by the CSV and JSON emitters.

use serde::ser::SerializeSeq;
use serde::{Serialize, Serializer};
use serde_json::value::RawValue;

/// A float with 17 significant digits in scientific notation.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".to_string()
    } else if x > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

/// Joins formatted fields with ',' and terminates the row.
pub fn csv_row<I, S>(fields: I) -> String
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut line = fields.into_iter().map(|f| f.as_ref().to_string()).collect::<Vec<_>>().join(",");
    line.push('\n');
    line
}

fn raw_number<E: serde::ser::Error>(x: f64) -> Result<Box<RawValue>, E> {
    if !x.is_finite() {
        return Err(E::custom(format!("{x} has no JSON representation")));
    }
    RawValue::from_string(fmt_f64(x)).map_err(E::custom)
}

/// Serializes a float as a JSON number with 17 significant digits.
pub fn serialize_f64<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    raw_number::<S::Error>(*x)?.serialize(s)
}

/// A float that serializes as a JSON number with 17 significant digits.
/// Non-finite values serialize as the strings `nan`, `inf` and `-inf`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Float(pub f64);

impl Serialize for Float {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.0.is_finite() {
            serialize_f64(&self.0, s)
        } else {
            s.serialize_str(&fmt_f64(self.0))
        }
    }
}

/// Serializes `[re, im]` pairs with 17 significant digits.
pub fn serialize_complex_list<S: Serializer>(
    values: &[[f64; 2]],
    s: S,
) -> Result<S::Ok, S::Error> {
    let mut seq = s.serialize_seq(Some(values.len()))?;
    for [re, im] in values {
        seq.serialize_element(&[raw_number::<S::Error>(*re)?, raw_number::<S::Error>(*im)?])?;
    }
    seq.end()
}
