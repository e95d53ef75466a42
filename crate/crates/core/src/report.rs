//! Uniform result record for every checked inequality, and JSON helpers for
//! non-finite reals (JSON has no `inf`, reports can legitimately contain it).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub name: String,
    #[serde(with = "extf64")]
    pub lhs: f64,
    #[serde(with = "extf64")]
    pub rhs: f64,
    #[serde(with = "extf64")]
    pub ratio: f64,
    pub worst: String,
    pub suite_size: usize,
    #[serde(with = "extf64")]
    pub ceiling: f64,
    pub pass: bool,
    #[serde(with = "extf64::map")]
    pub details: BTreeMap<String, f64>,
}

impl InequalityReport {
    /// Builds a report; `ratio = lhs / rhs` (0 for `0/0`, ∞ for `x/0`).
    pub fn new(name: impl Into<String>, lhs: f64, rhs: f64, ceiling: f64) -> Self {
        let ratio = ratio(lhs, rhs);
        Self {
            name: name.into(),
            lhs,
            rhs,
            ratio,
            worst: String::new(),
            suite_size: 1,
            ceiling,
            pass: ratio <= ceiling,
            details: BTreeMap::new(),
        }
    }

    /// Report whose ratio is given directly (a sup of per-instance ratios).
    pub fn from_ratio(name: impl Into<String>, ratio: f64, ceiling: f64) -> Self {
        let mut r = Self::new(name, ratio, 1.0, ceiling);
        r.ratio = ratio;
        r.pass = ratio <= ceiling;
        r
    }

    pub fn worst(mut self, w: impl Into<String>) -> Self {
        self.worst = w.into();
        self
    }

    pub fn suite_size(mut self, n: usize) -> Self {
        self.suite_size = n;
        self
    }

    pub fn detail(mut self, key: impl Into<String>, v: f64) -> Self {
        self.details.insert(key.into(), v);
        self
    }

    /// Adds an extra pass condition (e.g. a violation count of zero).
    pub fn require(mut self, ok: bool) -> Self {
        self.pass &= ok;
        self
    }
}

pub fn ratio(lhs: f64, rhs: f64) -> f64 {
    if rhs > 0.0 {
        lhs / rhs
    } else if lhs == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

/// Serialises finite reals as numbers and `±inf`/`nan` as strings.
pub mod extf64 {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    fn to_repr(v: f64) -> Repr {
        if v.is_finite() {
            Repr::Num(v)
        } else if v.is_nan() {
            Repr::Text("nan".into())
        } else if v > 0.0 {
            Repr::Text("inf".into())
        } else {
            Repr::Text("-inf".into())
        }
    }

    fn from_repr<E: serde::de::Error>(r: Repr) -> Result<f64, E> {
        match r {
            Repr::Num(v) => Ok(v),
            Repr::Text(s) => match s.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                _ => Err(E::custom(format!("not a real: {s}"))),
            },
        }
    }

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        to_repr(*v).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        from_repr(Repr::deserialize(d)?)
    }

    pub mod map {
        use std::collections::BTreeMap;

        use super::*;

        pub fn serialize<S: Serializer>(m: &BTreeMap<String, f64>, s: S) -> Result<S::Ok, S::Error> {
            m.iter()
                .map(|(k, v)| (k.clone(), to_repr(*v)))
                .collect::<BTreeMap<_, _>>()
                .serialize(s)
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<String, f64>, D::Error> {
            BTreeMap::<String, Repr>::deserialize(d)?
                .into_iter()
                .map(|(k, r)| from_repr(r).map(|v| (k, v)))
                .collect()
        }
    }
}
