//! Float fields that accept either a number or a decimal string (`"1e-3"`).

use serde::de::{self, Deserializer};
use serde::Deserialize;

#[derive(Deserialize)]
#[serde(untagged)]
enum Decimal {
    Number(f64),
    Int(i64),
    Text(String),
}

impl Decimal {
    fn value<E: de::Error>(self) -> Result<f64, E> {
        match self {
            Decimal::Number(x) => Ok(x),
            Decimal::Int(i) => Ok(i as f64),
            Decimal::Text(s) => s
                .trim()
                .parse::<f64>()
                .map_err(|_| E::custom(format!("`{s}` is not a decimal number"))),
        }
    }
}

/// Report floats: JSON writes non-finite values as `null`, read back as NaN.
pub fn f64_or_nan<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    Ok(Option::<Decimal>::deserialize(d)?.map(|v| v.value()).transpose()?.unwrap_or(f64::NAN))
}

pub fn f64<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    Decimal::deserialize(d)?.value()
}

pub fn opt_f64<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
    Option::<Decimal>::deserialize(d)?.map(Decimal::value).transpose()
}

pub fn vec_f64<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
    Vec::<Decimal>::deserialize(d)?.into_iter().map(Decimal::value).collect()
}

pub fn vec_vec_f64<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Vec<f64>>, D::Error> {
    Vec::<Vec<Decimal>>::deserialize(d)?
        .into_iter()
        .map(|row| row.into_iter().map(Decimal::value).collect())
        .collect()
}
