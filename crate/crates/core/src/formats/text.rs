//! Line-delimited `tag key=value ...` records shared by every document the
//! crate writes. Values never contain whitespace; `-` marks an absent
//! optional value. Floats are written with 17 significant digits.

use std::fmt::Write as _;
use std::str::FromStr;

use crate::error::{Error, Result};

pub(crate) const ABSENT: &str = "-";

pub(crate) fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub(crate) fn fmt_f64_list(values: &[f64]) -> String {
    values.iter().map(|v| fmt_f64(*v)).collect::<Vec<_>>().join(",")
}

#[derive(Debug)]
pub(crate) struct Record<'a> {
    pub line: usize,
    pub tag: &'a str,
    fields: Vec<(&'a str, &'a str)>,
}

impl<'a> Record<'a> {
    fn parse(line: usize, text: &'a str) -> Result<Self> {
        let mut tokens = text.split_whitespace();
        let tag = tokens
            .next()
            .ok_or_else(|| Error::parse(line, "empty record"))?;
        let mut fields = Vec::new();
        for tok in tokens {
            let (k, v) = tok
                .split_once('=')
                .ok_or_else(|| Error::parse(line, format!("expected key=value, found {tok:?}")))?;
            fields.push((k, v));
        }
        Ok(Self { line, tag, fields })
    }

    pub fn str(&self, key: &str) -> Result<&'a str> {
        self.fields
            .iter()
            .find(|(k, _)| *k == key)
            .map(|(_, v)| *v)
            .ok_or_else(|| Error::parse(self.line, format!("`{}` record missing field `{key}`", self.tag)))
    }

    pub fn opt_str(&self, key: &str) -> Result<Option<&'a str>> {
        let v = self.str(key)?;
        Ok(if v == ABSENT { None } else { Some(v) })
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<T> {
        let raw = self.str(key)?;
        self.convert(key, raw)
    }

    pub fn opt<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.opt_str(key)? {
            None => Ok(None),
            Some(raw) => self.convert(key, raw).map(Some),
        }
    }

    pub fn list<T: FromStr>(&self, key: &str) -> Result<Vec<T>> {
        let raw = self.str(key)?;
        if raw.is_empty() || raw == ABSENT {
            return Ok(Vec::new());
        }
        raw.split(',').map(|t| self.convert(key, t)).collect()
    }

    pub fn array<const N: usize>(&self, key: &str) -> Result<[f64; N]> {
        let values: Vec<f64> = self.list(key)?;
        values.try_into().map_err(|v: Vec<f64>| {
            Error::parse(
                self.line,
                format!("field `{key}` needs {N} values, found {}", v.len()),
            )
        })
    }

    fn convert<T: FromStr>(&self, key: &str, raw: &str) -> Result<T> {
        raw.parse()
            .map_err(|_| Error::parse(self.line, format!("field `{key}` has invalid value {raw:?}")))
    }

    pub fn error(&self, message: impl Into<String>) -> Error {
        Error::parse(self.line, message)
    }
}

/// Splits a document into records after checking its header line
/// (`<kind> v<version>`).
pub(crate) fn read_document<'a>(
    text: &'a str,
    kind: &'static str,
    supported: &'static str,
) -> Result<Vec<Record<'a>>> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (line, header) = lines
        .next()
        .ok_or_else(|| Error::parse(1, format!("empty document, expected `{kind}` header")))?;
    let (found_kind, version) = header
        .split_once(' ')
        .ok_or_else(|| Error::parse(line, format!("malformed header {header:?}")))?;
    if found_kind != kind {
        return Err(Error::parse(
            line,
            format!("expected a `{kind}` document, found `{found_kind}`"),
        ));
    }
    if version.trim() != supported {
        return Err(Error::Version {
            kind,
            found: version.trim().to_string(),
            supported,
        });
    }
    lines.map(|(n, l)| Record::parse(n, l)).collect()
}

/// Accumulates records into a document string.
pub(crate) struct DocWriter {
    out: String,
}

impl DocWriter {
    pub fn new(kind: &str, version: &str) -> Self {
        Self {
            out: format!("{kind} {version}\n"),
        }
    }

    pub fn record(&mut self, tag: &str) -> RecordWriter<'_> {
        self.out.push_str(tag);
        RecordWriter { out: &mut self.out }
    }

    pub fn finish(self) -> String {
        self.out
    }
}

pub(crate) struct RecordWriter<'a> {
    out: &'a mut String,
}

impl RecordWriter<'_> {
    pub fn field(self, key: &str, value: impl std::fmt::Display) -> Self {
        let _ = write!(self.out, " {key}={value}");
        self
    }

    pub fn float(self, key: &str, value: f64) -> Self {
        self.field(key, fmt_f64(value))
    }

    pub fn floats(self, key: &str, values: &[f64]) -> Self {
        self.field(key, fmt_f64_list(values))
    }

    pub fn opt<T: std::fmt::Display>(self, key: &str, value: Option<T>) -> Self {
        match value {
            Some(v) => self.field(key, v),
            None => self.field(key, ABSENT),
        }
    }

    pub fn list<T: std::fmt::Display>(self, key: &str, values: &[T]) -> Self {
        let joined = values
            .iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join(",");
        self.field(key, if joined.is_empty() { ABSENT.to_string() } else { joined })
    }

    pub fn end(self) {
        self.out.push('\n');
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for v in [0.1, -1.0 / 3.0, 1e-300, 6.02214076e23, std::f64::consts::PI] {
            let s = fmt_f64(v);
            assert_eq!(s.parse::<f64>().unwrap(), v);
        }
        assert_eq!(fmt_f64(1.5), "1.5000000000000000e0");
    }

    #[test]
    fn header_checks() {
        assert!(matches!(
            read_document("thing v2\n", "thing", "v1"),
            Err(Error::Version { .. })
        ));
        assert!(matches!(
            read_document("other v1\n", "thing", "v1"),
            Err(Error::Parse { line: 1, .. })
        ));
        let recs = read_document("# c\nthing v1\na x=1 y=-\n", "thing", "v1").unwrap();
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].get::<u32>("x").unwrap(), 1);
        assert_eq!(recs[0].opt::<u32>("y").unwrap(), None);
        assert!(recs[0].str("z").is_err());
    }
}
