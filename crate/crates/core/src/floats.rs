//! Serde adapter writing `Vec<f64>` as one space-separated string of
//! 17-significant-digit values. Parsing that text gives back the same bits,
//! so save → load → save is byte-identical.

use serde::{de, Deserialize, Deserializer, Serializer};

pub fn format(values: &[f64]) -> String {
    let mut s = String::with_capacity(values.len() * 24);
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            s.push(' ');
        }
        s.push_str(&format!("{v:.16e}"));
    }
    s
}

pub fn parse(text: &str) -> Result<Vec<f64>, std::num::ParseFloatError> {
    text.split_ascii_whitespace().map(str::parse).collect()
}

pub fn serialize<S: Serializer>(values: &[f64], s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&format(values))
}

pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
    let text = String::deserialize(d)?;
    parse(&text).map_err(de::Error::custom)
}

/// Same encoding for a list of vectors.
pub mod nested {
    use serde::ser::SerializeSeq;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(rows: &[Vec<f64>], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(rows.len()))?;
        for r in rows {
            seq.serialize_element(&super::format(r))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Vec<f64>>, D::Error> {
        let rows = Vec::<String>::deserialize(d)?;
        rows.iter()
            .map(|r| super::parse(r).map_err(serde::de::Error::custom))
            .collect()
    }
}
