use std::fmt;

/// Payload type of an SSA value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ScalarType {
    I1,
    I32,
    I64,
    F32,
    F64,
    /// Abstract index type; resolved to a concrete width by cast canonicalization.
    Index,
}

impl ScalarType {
    pub fn is_float(self) -> bool {
        matches!(self, ScalarType::F32 | ScalarType::F64)
    }

    pub fn is_int(self) -> bool {
        !self.is_float()
    }

    /// Bit width, `None` for the abstract index type.
    pub fn width(self) -> Option<u32> {
        match self {
            ScalarType::I1 => Some(1),
            ScalarType::I32 | ScalarType::F32 => Some(32),
            ScalarType::I64 | ScalarType::F64 => Some(64),
            ScalarType::Index => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ScalarType::I1 => "i1",
            ScalarType::I32 => "i32",
            ScalarType::I64 => "i64",
            ScalarType::F32 => "f32",
            ScalarType::F64 => "f64",
            ScalarType::Index => "index",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Some(match s {
            "i1" => ScalarType::I1,
            "i32" => ScalarType::I32,
            "i64" => ScalarType::I64,
            "f32" => ScalarType::F32,
            "f64" => ScalarType::F64,
            "index" => ScalarType::Index,
            _ => return None,
        })
    }
}

impl fmt::Display for ScalarType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A value type: a payload type, optionally paired with a 1-bit predicate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Type {
    pub scalar: ScalarType,
    pub predicated: bool,
}

impl Type {
    pub const fn plain(scalar: ScalarType) -> Self {
        Type { scalar, predicated: false }
    }

    pub const fn pred(scalar: ScalarType) -> Self {
        Type { scalar, predicated: true }
    }

    pub fn with_scalar(self, scalar: ScalarType) -> Self {
        Type { scalar, ..self }
    }
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.predicated {
            write!(f, "!pred<{}>", self.scalar)
        } else {
            write!(f, "{}", self.scalar)
        }
    }
}
