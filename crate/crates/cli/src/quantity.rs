//! Physical quantities as written in configuration files: either a bare
//! number (linear ratio, watts) or a string with a unit such as `"20 dB"`,
//! `"-150 dBm"` or `"30 mW"`.

use std::fmt;

use infrashare::units::{db_to_linear, dbm_to_watts};
use serde::de::{self, Deserializer, Visitor};
use serde::Deserialize;

#[derive(Debug, Clone, PartialEq)]
pub enum Quantity {
    Number(f64),
    Text(String),
}

impl<'de> Deserialize<'de> for Quantity {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = Quantity;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a number or a string with a unit, e.g. \"20 dB\" or \"30 mW\"")
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Quantity, E> {
                Ok(Quantity::Number(v))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Quantity, E> {
                Ok(Quantity::Number(v as f64))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Quantity, E> {
                Ok(Quantity::Number(v as f64))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<Quantity, E> {
                Ok(Quantity::Text(v.to_owned()))
            }
        }
        d.deserialize_any(V)
    }
}

fn split(text: &str) -> Result<(f64, &str), String> {
    let text = text.trim();
    let at = text
        .find(|c: char| c.is_ascii_alphabetic() || c == 'µ')
        .ok_or_else(|| format!("`{text}` has no unit"))?;
    let (num, unit) = text.split_at(at);
    let value: f64 = num.trim().parse().map_err(|_| format!("`{}` is not a number", num.trim()))?;
    Ok((value, unit.trim()))
}

impl Quantity {
    /// Dimensionless ratio; strings must be in dB.
    pub fn ratio(&self) -> Result<f64, String> {
        match self {
            Quantity::Number(v) => Ok(*v),
            Quantity::Text(t) => match split(t)? {
                (v, "dB") => Ok(db_to_linear(v)),
                (_, unit) => Err(format!("expected a ratio in dB, got unit `{unit}`")),
            },
        }
    }

    /// Power in watts.
    pub fn watts(&self) -> Result<f64, String> {
        match self {
            Quantity::Number(v) => Ok(*v),
            Quantity::Text(t) => match split(t)? {
                (v, "W") => Ok(v),
                (v, "mW") => Ok(v * 1e-3),
                (v, "uW" | "µW") => Ok(v * 1e-6),
                (v, "dBm") => Ok(dbm_to_watts(v)),
                (v, "dBW") => Ok(db_to_linear(v)),
                (_, unit) => Err(format!("expected a power in W, mW, uW, dBm or dBW, got unit `{unit}`")),
            },
        }
    }
}
