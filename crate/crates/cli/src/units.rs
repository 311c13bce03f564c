//! Unit-bearing configuration values.
//!
//! A quantity is written as `"<number> <unit>"` with a unit from a fixed,
//! case-sensitive whitelist per dimension. Values are stored in SI with
//! angular frequencies: `Hz` multiplies by 2π, for rates as well as for
//! frequencies. Serialization always emits the canonical SI unit, so an echoed
//! config parses back to the identical value.

use std::f64::consts::TAU;
use std::fmt;
use std::marker::PhantomData;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub trait Dimension {
    const NAME: &'static str;
    const CANONICAL: &'static str;
    const UNITS: &'static [(&'static str, f64)];
}

macro_rules! dimension {
    ($ty:ident, $name:expr, $canonical:expr, [$(($u:expr, $f:expr)),* $(,)?]) => {
        #[derive(Debug, Clone, Copy, PartialEq)]
        pub struct $ty;
        impl Dimension for $ty {
            const NAME: &'static str = $name;
            const CANONICAL: &'static str = $canonical;
            const UNITS: &'static [(&'static str, f64)] = &[$(($u, $f)),*];
        }
    };
}

dimension!(LengthDim, "length", "m", [("m", 1.0), ("mm", 1e-3), ("um", 1e-6), ("µm", 1e-6), ("μm", 1e-6), ("nm", 1e-9)]);
dimension!(FrequencyDim, "frequency", "rad/s", [("rad/s", 1.0), ("Hz", TAU), ("kHz", TAU * 1e3), ("MHz", TAU * 1e6), ("GHz", TAU * 1e9)]);
dimension!(RateDim, "rate", "1/s", [("1/s", 1.0), ("s^-1", 1.0), ("Hz", TAU), ("kHz", TAU * 1e3), ("MHz", TAU * 1e6)]);
dimension!(TimeDim, "time", "s", [("s", 1.0), ("ms", 1e-3), ("us", 1e-6), ("µs", 1e-6), ("μs", 1e-6), ("ns", 1e-9)]);
dimension!(TemperatureDim, "temperature", "K", [("K", 1.0), ("mK", 1e-3), ("uK", 1e-6), ("µK", 1e-6), ("μK", 1e-6), ("nK", 1e-9)]);
dimension!(FieldDim, "magnetic field", "T", [("T", 1.0), ("mT", 1e-3), ("uT", 1e-6), ("µT", 1e-6), ("μT", 1e-6), ("G", 1e-4), ("mG", 1e-7)]);
dimension!(GradientDim, "field gradient", "T/m", [("T/m", 1.0), ("G/cm", 1e-2)]);
dimension!(MassDim, "mass", "kg", [("kg", 1.0), ("g", 1e-3)]);
dimension!(DensityDim, "density", "kg/m^3", [("kg/m^3", 1.0), ("g/cm^3", 1e3)]);
dimension!(PressureDim, "elastic modulus", "Pa", [("Pa", 1.0), ("kPa", 1e3), ("MPa", 1e6), ("GPa", 1e9)]);
dimension!(MagnetizationDim, "magnetization", "A/m", [("A/m", 1.0), ("kA/m", 1e3), ("MA/m", 1e6)]);

/// SI value of dimension `D`.
pub struct Quantity<D>(f64, PhantomData<D>);

pub type Length = Quantity<LengthDim>;
pub type Frequency = Quantity<FrequencyDim>;
pub type Rate = Quantity<RateDim>;
pub type Time = Quantity<TimeDim>;
pub type Temperature = Quantity<TemperatureDim>;
pub type Field = Quantity<FieldDim>;
pub type Gradient = Quantity<GradientDim>;
pub type Mass = Quantity<MassDim>;
pub type Density = Quantity<DensityDim>;
pub type Pressure = Quantity<PressureDim>;
pub type Magnetization = Quantity<MagnetizationDim>;

impl<D> Quantity<D> {
    pub fn si(value: f64) -> Self {
        Quantity(value, PhantomData)
    }

    pub fn value(&self) -> f64 {
        self.0
    }
}

impl<D> Clone for Quantity<D> {
    fn clone(&self) -> Self {
        *self
    }
}
impl<D> Copy for Quantity<D> {}
impl<D> PartialEq for Quantity<D> {
    fn eq(&self, other: &Self) -> bool {
        self.0 == other.0
    }
}

impl<D: Dimension> fmt::Debug for Quantity<D> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:e} {}", self.0, D::CANONICAL)
    }
}

impl<D: Dimension> fmt::Display for Quantity<D> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:e} {}", self.0, D::CANONICAL)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnitError(pub String);

impl fmt::Display for UnitError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UnitError {}

/// Parses `"<number> <unit>"` into SI.
pub fn parse<D: Dimension>(text: &str) -> Result<f64, UnitError> {
    let mut parts = text.split_whitespace();
    let (Some(num), Some(unit), None) = (parts.next(), parts.next(), parts.next()) else {
        return Err(UnitError(format!(
            "{} '{text}' must be '<number> <unit>' (units: {})",
            D::NAME,
            unit_list::<D>()
        )));
    };
    let x: f64 = num
        .parse()
        .map_err(|_| UnitError(format!("invalid number '{num}' in {} '{text}'", D::NAME)))?;
    if !x.is_finite() {
        return Err(UnitError(format!("{} '{text}' is not finite", D::NAME)));
    }
    let factor = D::UNITS
        .iter()
        .find(|(u, _)| *u == unit)
        .map(|(_, f)| *f)
        .ok_or_else(|| UnitError(format!("unknown {} unit '{unit}' (expected one of: {})", D::NAME, unit_list::<D>())))?;
    Ok(if factor == 1.0 { x } else { x * factor })
}

fn unit_list<D: Dimension>() -> String {
    D::UNITS.iter().map(|(u, _)| *u).collect::<Vec<_>>().join(", ")
}

impl<D: Dimension> std::str::FromStr for Quantity<D> {
    type Err = UnitError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse::<D>(s).map(Quantity::si)
    }
}

impl<D: Dimension> Serialize for Quantity<D> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

struct QuantityVisitor<D>(PhantomData<D>);

impl<D: Dimension> Visitor<'_> for QuantityVisitor<D> {
    type Value = Quantity<D>;

    fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
        write!(f, "a {} string such as \"1.0 {}\"", D::NAME, D::UNITS[0].0)
    }

    fn visit_str<E: de::Error>(self, v: &str) -> Result<Self::Value, E> {
        v.parse().map_err(|e: UnitError| E::custom(e.0))
    }

    fn visit_f64<E: de::Error>(self, v: f64) -> Result<Self::Value, E> {
        Err(E::custom(format!("{} {v} has no unit; write e.g. \"{v} {}\"", D::NAME, D::UNITS[0].0)))
    }

    fn visit_i64<E: de::Error>(self, v: i64) -> Result<Self::Value, E> {
        self.visit_f64(v as f64)
    }

    fn visit_u64<E: de::Error>(self, v: u64) -> Result<Self::Value, E> {
        self.visit_f64(v as f64)
    }
}

impl<'de, D: Dimension> Deserialize<'de> for Quantity<D> {
    fn deserialize<De: Deserializer<'de>>(d: De) -> Result<Self, De::Error> {
        d.deserialize_any(QuantityVisitor(PhantomData))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn whitelist_conversions() {
        assert_eq!(parse::<LengthDim>("7.0 um").unwrap(), 7.0e-6);
        assert_eq!(parse::<LengthDim>("250 nm").unwrap(), 250.0 * 1e-9);
        assert_eq!(parse::<FrequencyDim>("2.8 MHz").unwrap(), 2.8 * TAU * 1e6);
        assert_eq!(parse::<FrequencyDim>("3 rad/s").unwrap(), 3.0);
        assert_eq!(parse::<RateDim>("0.3 Hz").unwrap(), 0.3 * TAU);
        assert_eq!(parse::<RateDim>("21 1/s").unwrap(), 21.0);
        assert_eq!(parse::<FieldDim>("1.6 G").unwrap(), 1.6 * 1e-4);
        assert_eq!(parse::<TemperatureDim>("50 mK").unwrap(), 50.0 * 1e-3);
        assert_eq!(parse::<PressureDim>("169 GPa").unwrap(), 169.0 * 1e9);
    }

    #[test]
    fn unit_case_matters() {
        for bad in ["2.8 Mhz", "2.8 mhz", "2.8 MHZ", "2.8MHz", "2.8", "MHz", "2.8 MHz extra", "x MHz"] {
            assert!(parse::<FrequencyDim>(bad).is_err(), "{bad}");
        }
        assert!(parse::<LengthDim>("1 M").is_err());
        assert!(parse::<FieldDim>("1 g").is_err());
        assert!(parse::<LengthDim>("inf m").is_err());
    }

    #[test]
    fn error_names_the_allowed_units() {
        let e = parse::<FrequencyDim>("2.8 Mhz").unwrap_err();
        assert!(e.0.contains("Mhz") && e.0.contains("MHz"));
    }

    proptest! {
        #[test]
        fn canonical_round_trip(x in -1e30f64..1e30) {
            let q = Frequency::si(x);
            let back: Frequency = q.to_string().parse().unwrap();
            prop_assert_eq!(back.value(), x);
        }
    }
}
