use std::fmt;

use serde::{Deserialize, Serialize};

use super::LedgerError;

/// Fixed-point fraction in `[0, 1]` with six decimal places.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FixedRep(u32);

impl FixedRep {
    pub const SCALE: u32 = 1_000_000;
    pub const ZERO: FixedRep = FixedRep(0);
    pub const ONE: FixedRep = FixedRep(Self::SCALE);

    pub fn from_raw(raw: u32) -> Result<Self, LedgerError> {
        if raw > Self::SCALE {
            return Err(LedgerError::OutOfRange(raw));
        }
        Ok(FixedRep(raw))
    }

    /// Nearest fixed-point value to `x`, half away from zero; `x` must lie in
    /// `[0, 1]`.
    pub fn from_f64(x: f64) -> Result<Self, LedgerError> {
        if !(0.0..=1.0).contains(&x) {
            return Err(LedgerError::OutOfRange((x * f64::from(Self::SCALE)) as u32));
        }
        Ok(FixedRep((x * f64::from(Self::SCALE)).round() as u32))
    }

    pub fn raw(self) -> u32 {
        self.0
    }

    pub fn to_f64(self) -> f64 {
        f64::from(self.0) / f64::from(Self::SCALE)
    }

    /// `self·(1 − ω) + ω·inc`, rounded half up at the fixed-point scale.
    pub fn blend(self, inc: FixedRep, omega: FixedRep) -> FixedRep {
        let scale = u64::from(Self::SCALE);
        let num = u64::from(self.0) * (scale - u64::from(omega.0)) + u64::from(omega.0) * u64::from(inc.0);
        FixedRep(((num + scale / 2) / scale) as u32)
    }
}

impl fmt::Display for FixedRep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{:06}", self.0 / Self::SCALE, self.0 % Self::SCALE)
    }
}

/// Normalized task incentive `max((∇ − RT)/∇, 0)`.
///
/// Both times are quantized to whole microseconds before the integer
/// division, so the result depends only on integer arithmetic.
pub fn incentive(measurement_ms: f64, nabla_ms: f64) -> Result<FixedRep, LedgerError> {
    if !(nabla_ms > 0.0 && nabla_ms.is_finite()) {
        return Err(LedgerError::Domain(format!(
            "constraint {nabla_ms} ms must be positive"
        )));
    }
    if !(measurement_ms >= 0.0) {
        return Err(LedgerError::Domain(format!(
            "measurement {measurement_ms} ms must be non-negative"
        )));
    }
    let nabla = to_micros(nabla_ms).max(1);
    let rt = to_micros(measurement_ms);
    if measurement_ms >= nabla_ms || rt >= nabla {
        return Ok(FixedRep::ZERO);
    }
    let scale = u128::from(FixedRep::SCALE);
    let num = u128::from(nabla - rt) * scale;
    let den = u128::from(nabla);
    Ok(FixedRep(((num + den / 2) / den) as u32))
}

fn to_micros(ms: f64) -> u64 {
    let us = (ms * 1000.0).round();
    if us >= u64::MAX as f64 {
        u64::MAX
    } else {
        us as u64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn incentive_hand_values() {
        assert_eq!(incentive(150.0, 100.0).unwrap(), FixedRep::ZERO);
        assert_eq!(incentive(100.0, 100.0).unwrap(), FixedRep::ZERO);
        assert_eq!(incentive(25.0, 100.0).unwrap().raw(), 750_000);
        assert_eq!(incentive(0.0, 100.0).unwrap(), FixedRep::ONE);
        assert_eq!(incentive(0.0002, 0.0002).unwrap(), FixedRep::ZERO);
        assert!(incentive(10.0, 0.0).is_err());
        assert!(incentive(10.0, -5.0).is_err());
    }

    #[test]
    fn blend_hand_values() {
        let omega = FixedRep::from_f64(0.3).unwrap();
        let old = FixedRep::from_f64(0.5).unwrap();
        assert_eq!(old.blend(FixedRep::ONE, omega).raw(), 650_000);
        assert_eq!(old.blend(FixedRep::ONE, FixedRep::ZERO), old);
    }

    #[test]
    fn display_has_six_places() {
        assert_eq!(FixedRep::from_raw(300_000).unwrap().to_string(), "0.300000");
        assert_eq!(FixedRep::ONE.to_string(), "1.000000");
        assert!(FixedRep::from_raw(1_000_001).is_err());
    }
}
