//! Text output helpers shared by every file format: 17 significant digit
//! floats, `,`-separated CSV with `\n` line endings.

use std::io::{self, Write};

use serde::{Serialize, Serializer};

/// Formats `x` like C's `%.17g`: 17 significant digits, shortest of fixed or
/// scientific notation, trailing zeros removed. Always round-trips exactly.
pub fn sig17(x: f64) -> String {
    if x.is_nan() {
        return "NaN".to_owned();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.to_owned();
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0" } else { "0" }.to_owned();
    }
    let sci = format!("{x:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent marker");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..17).contains(&exp) {
        let decimals = (16 - exp) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        format!(
            "{}e{}{:02}",
            trim_zeros(mantissa.to_owned()),
            if exp < 0 { '-' } else { '+' },
            exp.abs()
        )
    }
}

fn trim_zeros(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    s.trim_end_matches('0').trim_end_matches('.').to_owned()
}

/// Serializes an `f64` through [`sig17`] as a JSON number.
pub fn serialize_sig17<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    if !x.is_finite() {
        return s.serialize_none();
    }
    let raw =
        serde_json::value::RawValue::from_string(sig17(*x)).map_err(serde::ser::Error::custom)?;
    raw.serialize(s)
}

/// `f64` wrapper that serializes with 17 significant digits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sig17(pub f64);

impl Serialize for Sig17 {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        serialize_sig17(&self.0, s)
    }
}

pub fn sig17_vec(v: &[f64]) -> Vec<Sig17> {
    v.iter().copied().map(Sig17).collect()
}

/// Writes a CSV header plus rows of floats.
pub fn write_csv<W: Write, R: AsRef<[f64]>>(
    mut out: W,
    header: &[&str],
    rows: impl IntoIterator<Item = R>,
) -> io::Result<()> {
    writeln!(out, "{}", header.join(","))?;
    for row in rows {
        let fields: Vec<String> = row.as_ref().iter().map(|&v| sig17(v)).collect();
        writeln!(out, "{}", fields.join(","))?;
    }
    out.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn matches_printf_g17() {
        assert_eq!(sig17(0.1), "0.10000000000000001");
        assert_eq!(sig17(-0.98), "-0.97999999999999998");
        assert_eq!(sig17(1.0), "1");
        assert_eq!(sig17(58.08), "58.079999999999998");
        assert_eq!(sig17(1e-5), "1.0000000000000001e-05");
        assert_eq!(sig17(1e20), "1e+20");
        assert_eq!(sig17(0.0008), "0.00080000000000000004");
        assert_eq!(sig17(0.0), "0");
    }

    #[test]
    fn json_uses_sig17() {
        let s = serde_json::to_string(&vec![Sig17(0.1), Sig17(2.0)]).unwrap();
        assert_eq!(s, "[0.10000000000000001,2]");
    }

    proptest! {
        #[test]
        fn roundtrips_exactly(bits in any::<u64>()) {
            let x = f64::from_bits(bits);
            prop_assume!(x.is_finite());
            let back: f64 = sig17(x).parse().unwrap();
            prop_assert_eq!(back.to_bits(), x.to_bits());
        }
    }
}
