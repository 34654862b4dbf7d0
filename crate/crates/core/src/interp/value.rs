use std::fmt;

use crate::ir::{Attr, ScalarType};

/// Runtime payload. Integers are kept sign-extended to 64 bits after being
/// truncated to their type's width; `f32` values are kept rounded to single
/// precision.
#[derive(Clone, Copy, Debug)]
pub enum Payload {
    Int(i64),
    Float(f64),
}

impl PartialEq for Payload {
    /// Bit-exact comparison, so `NaN == NaN` and `0.0 != -0.0`.
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Payload::Int(a), Payload::Int(b)) => a == b,
            (Payload::Float(a), Payload::Float(b)) => a.to_bits() == b.to_bits(),
            _ => false,
        }
    }
}

impl Eq for Payload {}

impl fmt::Display for Payload {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Payload::Int(v) => write!(f, "{}", v),
            Payload::Float(v) => write!(f, "{:?}", v),
        }
    }
}

impl Payload {
    pub fn zero(t: ScalarType) -> Self {
        if t.is_float() {
            Payload::Float(0.0)
        } else {
            Payload::Int(0)
        }
    }

    /// Coerces to `t`: wraps integers to the width, rounds `f32`.
    pub fn normalize(self, t: ScalarType) -> Self {
        match (self, t) {
            (Payload::Int(v), ScalarType::I1) => Payload::Int(v & 1),
            (Payload::Int(v), ScalarType::I32) => Payload::Int(v as i32 as i64),
            (Payload::Int(v), ScalarType::I64 | ScalarType::Index) => Payload::Int(v),
            (Payload::Float(v), ScalarType::F32) => Payload::Float(v as f32 as f64),
            (Payload::Float(v), ScalarType::F64) => Payload::Float(v),
            (Payload::Int(v), ScalarType::F32) => Payload::Float(v as f32 as f64),
            (Payload::Int(v), ScalarType::F64) => Payload::Float(v as f64),
            (Payload::Float(v), _) => Payload::Int(v as i64).normalize(t),
        }
    }

    pub fn as_int(self) -> i64 {
        match self {
            Payload::Int(v) => v,
            Payload::Float(v) => v as i64,
        }
    }

    pub fn as_float(self) -> f64 {
        match self {
            Payload::Int(v) => v as f64,
            Payload::Float(v) => v,
        }
    }

    pub fn as_bool(self) -> bool {
        match self {
            Payload::Int(v) => v != 0,
            Payload::Float(v) => v != 0.0,
        }
    }

    pub fn from_attr(a: &Attr, t: ScalarType) -> Option<Self> {
        match a {
            Attr::Int(v, _) => Some(Payload::Int(*v).normalize(t)),
            Attr::Float(v, _) => Some(Payload::Float(*v).normalize(t)),
            Attr::Str(_) => None,
        }
    }

    /// Raw 64-bit memory cell holding this payload.
    pub fn to_cell(self) -> i64 {
        match self {
            Payload::Int(v) => v,
            Payload::Float(v) => v.to_bits() as i64,
        }
    }

    pub fn from_cell(cell: i64, t: ScalarType) -> Self {
        if t.is_float() {
            Payload::Float(f64::from_bits(cell as u64)).normalize(t)
        } else {
            Payload::Int(cell).normalize(t)
        }
    }

    /// Parses a literal: integers, or anything with `.`/`e`/`inf`/`nan` as a float.
    pub fn parse(s: &str) -> Option<Self> {
        let s = s.trim();
        if let Ok(v) = s.parse::<i64>() {
            return Some(Payload::Int(v));
        }
        s.parse::<f64>().ok().map(Payload::Float)
    }
}

/// A data payload paired with its predicate bit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PredValue {
    pub data: Payload,
    pub pred: bool,
}

impl PredValue {
    pub fn new(data: Payload, pred: bool) -> Self {
        PredValue { data, pred }
    }

    pub fn valid(data: Payload) -> Self {
        PredValue { data, pred: true }
    }
}

impl fmt::Display for PredValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.data, self.pred)
    }
}
