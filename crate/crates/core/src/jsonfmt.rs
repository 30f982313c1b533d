//! JSON output with floating-point values fixed at 17 significant digits.

use std::io;

use serde::Serialize;
use serde_json::ser::Formatter;

/// Formats finite `f64` as `d.ddddddddddddddddde±x`, which round-trips
/// exactly and is independent of the shortest-representation algorithm.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sig17;

impl Formatter for Sig17 {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(fmt_f64(value).as_bytes())
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }
}

pub fn fmt_f64(value: f64) -> String {
    if value.is_finite() {
        format!("{value:.16e}")
    } else {
        // JSON has no representation for these; null is what serde_json emits.
        "null".to_string()
    }
}

pub fn to_string<T: Serialize + ?Sized>(value: &T) -> serde_json::Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Sig17);
    value.serialize(&mut ser)?;
    Ok(String::from_utf8(buf).expect("serde_json writes utf-8"))
}

pub fn to_writer<W: io::Write, T: Serialize + ?Sized>(writer: W, value: &T) -> serde_json::Result<()> {
    let mut ser = serde_json::Serializer::with_formatter(writer, Sig17);
    value.serialize(&mut ser)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for x in [0.1f64, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0] {
            let s = to_string(&x).unwrap();
            let back: f64 = serde_json::from_str(&s).unwrap();
            assert_eq!(back.to_bits(), x.to_bits(), "{s}");
        }
        assert_eq!(to_string(&0.5).unwrap(), "5.0000000000000000e-1");
    }
}
