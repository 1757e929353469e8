//! JSON with 17 significant digits and the CSV report summary.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};
use std::io::{self, Write};

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::error::{Error, Result};
use crate::harness::VerificationReport;

/// Pretty JSON formatter printing every float as `{:.16e}`.
/// Non-finite floats become `null` (serde_json routes them to `write_null`).
struct Precise<'a> {
    inner: PrettyFormatter<'a>,
}

impl Formatter for Precise<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        write!(writer, "{:.16e}", value as f64)
    }

    fn begin_array<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.begin_array(writer)
    }

    fn end_array<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.end_array(writer)
    }

    fn begin_array_value<W: ?Sized + Write>(
        &mut self,
        writer: &mut W,
        first: bool,
    ) -> io::Result<()> {
        self.inner.begin_array_value(writer, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.end_array_value(writer)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.begin_object(writer)
    }

    fn end_object<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.end_object(writer)
    }

    fn begin_object_key<W: ?Sized + Write>(
        &mut self,
        writer: &mut W,
        first: bool,
    ) -> io::Result<()> {
        self.inner.begin_object_key(writer, first)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.begin_object_value(writer)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.end_object_value(writer)
    }
}

/// Serializes `value` as indented JSON with full-precision floats.
pub fn to_json_string<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(
        &mut buf,
        Precise {
            inner: PrettyFormatter::new(),
        },
    );
    value
        .serialize(&mut ser)
        .map_err(|e| Error::Config(format!("serialization failed: {e}")))?;
    String::from_utf8(buf).map_err(|e| Error::Config(e.to_string()))
}

/// Stable hex digest of a report's parameter map.
pub fn params_hash(report: &VerificationReport) -> String {
    let text = serde_json::to_string(report.parameters()).unwrap_or_default();
    let mut h = DefaultHasher::new();
    text.hash(&mut h);
    format!("{:016x}", h.finish())
}

/// One CSV row per report: `inequality_id,params_hash,lhs,rhs,margin,pass`.
pub fn write_summary_csv<W: Write>(reports: &[VerificationReport], out: &mut W) -> io::Result<()> {
    writeln!(out, "inequality_id,params_hash,lhs,rhs,margin,pass")?;
    for r in reports {
        writeln!(
            out,
            "{},{},{:.16e},{:.16e},{:.16e},{}",
            r.inequality_id(),
            params_hash(r),
            r.lhs().value,
            r.rhs().value,
            r.margin(),
            r.pass()
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{Provenance, Side};

    #[test]
    fn floats_carry_seventeen_digits() {
        let s = to_json_string(&vec![0.1f64, 1.0 / 3.0, f64::NAN]).unwrap();
        assert!(s.contains("1.0000000000000001e-1"), "{s}");
        assert!(s.contains("3.3333333333333331e-1"), "{s}");
        assert!(s.contains("null"));
        let back: Vec<Option<f64>> = serde_json::from_str(&s).unwrap();
        assert_eq!(back[1], Some(1.0 / 3.0));
    }

    #[test]
    fn summary_rows() {
        let r = VerificationReport::new(
            "demo",
            Side::new(1.0, Provenance::Quadrature),
            Side::new(2.0, Provenance::ExactFormula),
            2.0,
            0.0,
        )
        .param("t", 0.5);
        let mut out = Vec::new();
        write_summary_csv(&[r.clone(), r], &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[1], lines[2]);
        assert!(lines[1].starts_with("demo,") && lines[1].ends_with(",true"));
    }
}
