use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Binary stance toward the topic: +1 affirms, -1 denies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Stance {
    Negative,
    Positive,
}

impl Stance {
    pub const ALL: [Stance; 2] = [Stance::Positive, Stance::Negative];

    pub fn from_i64(value: i64) -> Option<Self> {
        match value {
            1 => Some(Stance::Positive),
            -1 => Some(Stance::Negative),
            _ => None,
        }
    }

    pub fn as_i8(self) -> i8 {
        match self {
            Stance::Positive => 1,
            Stance::Negative => -1,
        }
    }

    pub fn as_f64(self) -> f64 {
        f64::from(self.as_i8())
    }

    /// 1.0 for positive, 0.0 for negative; the target used by the
    /// cross-entropy loss.
    pub fn as_target(self) -> f64 {
        match self {
            Stance::Positive => 1.0,
            Stance::Negative => 0.0,
        }
    }

    /// Sign rule with zero mapped to positive.
    pub fn from_score(score: f64) -> Self {
        if score >= 0.0 {
            Stance::Positive
        } else {
            Stance::Negative
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Stance::Positive => Stance::Negative,
            Stance::Negative => Stance::Positive,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Stance::Positive => 0,
            Stance::Negative => 1,
        }
    }
}

impl fmt::Display for Stance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_i8())
    }
}

impl Serialize for Stance {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_i8(self.as_i8())
    }
}

impl<'de> Deserialize<'de> for Stance {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = i64::deserialize(deserializer)?;
        Stance::from_i64(raw)
            .ok_or_else(|| serde::de::Error::custom(format!("stance must be -1 or 1, got {raw}")))
    }
}
