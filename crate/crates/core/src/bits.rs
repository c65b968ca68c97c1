use std::fmt;
use std::ops::Deref;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A bit sequence that serializes as a string of `0`/`1` characters.
#[derive(Debug, Clone, PartialEq, Eq, Default, Hash)]
pub struct BitString(pub Vec<bool>);

impl BitString {
    pub fn into_inner(self) -> Vec<bool> {
        self.0
    }

    /// Number of positions where `self` and `other` differ. Extra trailing
    /// bits of the longer string are ignored.
    pub fn hamming(&self, other: &BitString) -> usize {
        self.0.iter().zip(&other.0).filter(|(a, b)| a != b).count()
    }
}

impl Deref for BitString {
    type Target = [bool];

    fn deref(&self) -> &[bool] {
        &self.0
    }
}

impl From<Vec<bool>> for BitString {
    fn from(v: Vec<bool>) -> Self {
        Self(v)
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseBitsError(pub char);

impl fmt::Display for ParseBitsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid bit character {:?}", self.0)
    }
}

impl std::error::Error for ParseBitsError {}

impl FromStr for BitString {
    type Err = ParseBitsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(ParseBitsError(other)),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(BitString)
    }
}

impl Serialize for BitString {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for BitString {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn display_and_parse() {
        let b = BitString(vec![false, true, true, false]);
        assert_eq!(b.to_string(), "0110");
        assert_eq!("0110".parse::<BitString>().unwrap(), b);
        assert_eq!("01x".parse::<BitString>(), Err(ParseBitsError('x')));
    }

    #[test]
    fn json_form_is_a_string() {
        let b = BitString(vec![true, false]);
        assert_eq!(serde_json::to_string(&b).unwrap(), "\"10\"");
        assert_eq!(serde_json::from_str::<BitString>("\"10\"").unwrap(), b);
    }
}
