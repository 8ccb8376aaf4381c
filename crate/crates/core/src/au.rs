//! Facial action units and their normalized weights.

use std::fmt;
use std::str::FromStr;

/// Canonical facial action unit codes.
///
/// Vendor blendshape channels are renamed onto this set before parsing
/// (see [`crate::config::VendorAdapter`]).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AuCode {
    /// Inner brow raiser.
    Au1,
    /// Outer brow raiser.
    Au2,
    /// Brow lowerer.
    Au4,
    /// Upper lid raiser.
    Au5,
    /// Cheek raiser.
    Au6,
    /// Lid tightener.
    Au7,
    /// Nose wrinkler.
    Au9,
    /// Upper lip raiser.
    Au10,
    /// Lip corner puller.
    Au12,
    /// Dimpler, left side.
    Au14L,
    /// Dimpler, right side.
    Au14R,
    /// Lip corner depressor.
    Au15,
    /// Lower lip depressor.
    Au16,
    /// Lip stretcher.
    Au20,
    /// Lip tightener.
    Au23,
    /// Jaw drop.
    Au26,
}

impl AuCode {
    pub const ALL: [AuCode; 16] = [
        AuCode::Au1,
        AuCode::Au2,
        AuCode::Au4,
        AuCode::Au5,
        AuCode::Au6,
        AuCode::Au7,
        AuCode::Au9,
        AuCode::Au10,
        AuCode::Au12,
        AuCode::Au14L,
        AuCode::Au14R,
        AuCode::Au15,
        AuCode::Au16,
        AuCode::Au20,
        AuCode::Au23,
        AuCode::Au26,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AuCode::Au1 => "AU1",
            AuCode::Au2 => "AU2",
            AuCode::Au4 => "AU4",
            AuCode::Au5 => "AU5",
            AuCode::Au6 => "AU6",
            AuCode::Au7 => "AU7",
            AuCode::Au9 => "AU9",
            AuCode::Au10 => "AU10",
            AuCode::Au12 => "AU12",
            AuCode::Au14L => "AU14L",
            AuCode::Au14R => "AU14R",
            AuCode::Au15 => "AU15",
            AuCode::Au16 => "AU16",
            AuCode::Au20 => "AU20",
            AuCode::Au23 => "AU23",
            AuCode::Au26 => "AU26",
        }
    }
}

impl fmt::Display for AuCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown action unit code `{0}`")]
pub struct UnknownAu(pub String);

impl FromStr for AuCode {
    type Err = UnknownAu;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        AuCode::ALL
            .iter()
            .copied()
            .find(|au| au.as_str() == s)
            .ok_or_else(|| UnknownAu(s.to_string()))
    }
}

/// An action-unit weight in `[0, 1]`, stored with four decimal places.
///
/// Fixed precision keeps the text rendering exact: a weight written with
/// `{:.4}` parses back to the identical value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Weight(u16);

impl Weight {
    pub const SCALE: u16 = 10_000;
    pub const ZERO: Weight = Weight(0);
    pub const ONE: Weight = Weight(Self::SCALE);

    /// Rounds `value` to the nearest ten-thousandth. Returns `None` outside `[0, 1]` or for NaN.
    pub fn new(value: f64) -> Option<Weight> {
        if !(0.0..=1.0).contains(&value) {
            return None;
        }
        Some(Weight((value * f64::from(Self::SCALE)).round() as u16))
    }

    pub fn from_units(units: u16) -> Option<Weight> {
        (units <= Self::SCALE).then_some(Weight(units))
    }

    pub fn units(self) -> u16 {
        self.0
    }

    pub fn value(self) -> f64 {
        f64::from(self.0) / f64::from(Self::SCALE)
    }
}

impl fmt::Display for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.4}", self.value())
    }
}
