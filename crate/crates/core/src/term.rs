//! RDF atoms: IRIs, blank nodes, literals, triples and quads.

use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use chrono::{DateTime, FixedOffset, NaiveDateTime};
use num_rational::BigRational;
use num_traits::FromPrimitive;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::vocab::{rdf, xsd};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TermError {
    #[error("IRI `{0}` is not absolute (missing scheme)")]
    RelativeIri(String),
    #[error("IRI `{0}` contains forbidden characters")]
    InvalidIri(String),
    #[error("predicate must be an IRI, got {0}")]
    BadPredicate(String),
    #[error("subject must be an IRI or blank node, got {0}")]
    BadSubject(String),
    #[error("graph name must be an IRI, got {0}")]
    BadGraph(String),
}

/// An absolute IRI.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Iri(Arc<str>);

impl Iri {
    pub fn new(value: impl AsRef<str>) -> Result<Self, TermError> {
        let value = value.as_ref();
        if value
            .chars()
            .any(|c| c.is_whitespace() || matches!(c, '<' | '>' | '"' | '{' | '}' | '|' | '^' | '`' | '\\'))
        {
            return Err(TermError::InvalidIri(value.to_owned()));
        }
        if !has_scheme(value) {
            return Err(TermError::RelativeIri(value.to_owned()));
        }
        Ok(Self(Arc::from(value)))
    }

    /// Builds an IRI from a string known to be valid (vocabulary constants).
    pub fn from_static(value: &'static str) -> Self {
        debug_assert!(has_scheme(value));
        Self(Arc::from(value))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

fn has_scheme(value: &str) -> bool {
    let Some(colon) = value.find(':') else {
        return false;
    };
    let scheme = &value[..colon];
    let mut chars = scheme.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic())
        && chars.all(|c| c.is_ascii_alphanumeric() || matches!(c, '+' | '-' | '.'))
}

impl TryFrom<String> for Iri {
    type Error = TermError;
    fn try_from(value: String) -> Result<Self, Self::Error> {
        Iri::new(value)
    }
}

impl From<Iri> for String {
    fn from(value: Iri) -> Self {
        value.0.to_string()
    }
}

impl fmt::Display for Iri {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{}>", self.0)
    }
}

impl fmt::Debug for Iri {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{}>", self.0)
    }
}

/// A blank node, identified by a label local to a document, a delta or the store.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct BlankNode(Arc<str>);

impl BlankNode {
    pub fn new(label: impl AsRef<str>) -> Self {
        Self(Arc::from(label.as_ref()))
    }

    pub fn label(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for BlankNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "_:{}", self.0)
    }
}

/// A literal with lexical form, datatype and optional language tag.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Literal {
    lexical: Arc<str>,
    datatype: Iri,
    language: Option<Arc<str>>,
}

impl Literal {
    /// A plain `xsd:string` literal.
    pub fn string(value: impl AsRef<str>) -> Self {
        Self::typed(value, xsd::string())
    }

    pub fn typed(value: impl AsRef<str>, datatype: Iri) -> Self {
        Self {
            lexical: Arc::from(value.as_ref()),
            datatype,
            language: None,
        }
    }

    /// A language-tagged string; the datatype is forced to `rdf:langString`.
    pub fn lang(value: impl AsRef<str>, language: impl AsRef<str>) -> Self {
        Self {
            lexical: Arc::from(value.as_ref()),
            datatype: rdf::lang_string(),
            language: Some(Arc::from(language.as_ref().to_ascii_lowercase().as_str())),
        }
    }

    pub fn integer(value: i64) -> Self {
        Self::typed(value.to_string(), xsd::integer())
    }

    pub fn double(value: f64) -> Self {
        Self::typed(format_double(value), xsd::double())
    }

    pub fn boolean(value: bool) -> Self {
        Self::typed(if value { "true" } else { "false" }, xsd::boolean())
    }

    pub fn date_time(value: DateTime<chrono::Utc>) -> Self {
        Self::typed(
            value.to_rfc3339_opts(chrono::SecondsFormat::AutoSi, true),
            xsd::date_time(),
        )
    }

    pub fn any_uri(value: impl AsRef<str>) -> Self {
        Self::typed(value, xsd::any_uri())
    }

    pub fn lexical(&self) -> &str {
        &self.lexical
    }

    pub fn datatype(&self) -> &Iri {
        &self.datatype
    }

    pub fn language(&self) -> Option<&str> {
        self.language.as_deref()
    }

    /// Interprets the literal in its datatype's value space, when supported.
    pub fn value(&self) -> Option<LiteralValue> {
        LiteralValue::parse(self.lexical(), self.datatype.as_str())
    }

    /// True when the lexical form is valid for a supported datatype, or the
    /// datatype is outside the supported set (no check possible).
    pub fn is_well_formed(&self) -> bool {
        if is_value_datatype(self.datatype.as_str()) {
            self.value().is_some()
        } else {
            true
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self.value()? {
            LiteralValue::Integer(i) => Some(i as f64),
            LiteralValue::Decimal(d) => Some(d),
            LiteralValue::Double(d) => Some(d),
            _ => None,
        }
    }

    pub fn as_i64(&self) -> Option<i64> {
        match self.value()? {
            LiteralValue::Integer(i) => Some(i),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self.value()? {
            LiteralValue::Boolean(b) => Some(b),
            _ => None,
        }
    }
}

impl fmt::Debug for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.lexical())?;
        if let Some(lang) = &self.language {
            write!(f, "@{lang}")
        } else if self.datatype.as_str() != xsd::STRING {
            write!(f, "^^{}", self.datatype)
        } else {
            Ok(())
        }
    }
}

/// Shortest round-tripping lexical form for a double, always with an exponent
/// or decimal point so that it re-reads as a double.
pub fn format_double(value: f64) -> String {
    if value.is_nan() {
        "NaN".into()
    } else if value.is_infinite() {
        if value > 0.0 { "INF".into() } else { "-INF".into() }
    } else {
        let s = format!("{value:e}");
        s.replace("e", "E")
    }
}

fn is_value_datatype(dt: &str) -> bool {
    matches!(
        dt,
        xsd::INTEGER | xsd::DECIMAL | xsd::DOUBLE | xsd::FLOAT | xsd::BOOLEAN | xsd::DATE_TIME
    ) || integer_bounds(dt).is_some()
}

/// Value range of the built-in types derived from xsd:integer.
fn integer_bounds(dt: &str) -> Option<(i64, i64)> {
    let local = dt.strip_prefix(xsd::NS)?;
    Some(match local {
        "long" => (i64::MIN, i64::MAX),
        "int" => (i32::MIN as i64, i32::MAX as i64),
        "short" => (i16::MIN as i64, i16::MAX as i64),
        "byte" => (i8::MIN as i64, i8::MAX as i64),
        "nonNegativeInteger" | "unsignedLong" => (0, i64::MAX),
        "positiveInteger" => (1, i64::MAX),
        "nonPositiveInteger" => (i64::MIN, 0),
        "negativeInteger" => (i64::MIN, -1),
        "unsignedInt" => (0, u32::MAX as i64),
        "unsignedShort" => (0, u16::MAX as i64),
        "unsignedByte" => (0, u8::MAX as i64),
        _ => return None,
    })
}

/// Value-space interpretation of a literal.
#[derive(Debug, Clone, PartialEq)]
pub enum LiteralValue {
    Integer(i64),
    Decimal(f64),
    Double(f64),
    Boolean(bool),
    DateTime(DateTime<FixedOffset>),
}

impl LiteralValue {
    pub fn parse(lexical: &str, datatype: &str) -> Option<Self> {
        let trimmed = lexical.trim();
        match datatype {
            xsd::INTEGER => trimmed.parse::<i64>().ok().map(Self::Integer),
            xsd::DECIMAL => {
                if trimmed.contains(['e', 'E']) {
                    return None;
                }
                trimmed.parse::<f64>().ok().filter(|v| v.is_finite()).map(Self::Decimal)
            }
            xsd::DOUBLE | xsd::FLOAT => match trimmed {
                "INF" | "+INF" => Some(Self::Double(f64::INFINITY)),
                "-INF" => Some(Self::Double(f64::NEG_INFINITY)),
                "NaN" => Some(Self::Double(f64::NAN)),
                _ if trimmed.eq_ignore_ascii_case("inf")
                    || trimmed.eq_ignore_ascii_case("infinity")
                    || trimmed.eq_ignore_ascii_case("nan") =>
                {
                    None
                }
                _ => trimmed.parse::<f64>().ok().map(Self::Double),
            },
            xsd::BOOLEAN => match trimmed {
                "true" | "1" => Some(Self::Boolean(true)),
                "false" | "0" => Some(Self::Boolean(false)),
                _ => None,
            },
            xsd::DATE_TIME => parse_date_time(trimmed).map(Self::DateTime),
            other => {
                let (lo, hi) = integer_bounds(other)?;
                trimmed
                    .parse::<i64>()
                    .ok()
                    .filter(|v| (lo..=hi).contains(v))
                    .map(Self::Integer)
            }
        }
    }

    /// Exact rational value for numeric literals.
    pub fn as_rational(&self) -> Option<BigRational> {
        match self {
            Self::Integer(i) => BigRational::from_i64(*i),
            Self::Decimal(d) | Self::Double(d) => BigRational::from_f64(*d),
            _ => None,
        }
    }

    pub fn is_numeric(&self) -> bool {
        matches!(self, Self::Integer(_) | Self::Decimal(_) | Self::Double(_))
    }
}

pub(crate) fn parse_date_time(value: &str) -> Option<DateTime<FixedOffset>> {
    if let Ok(dt) = DateTime::parse_from_rfc3339(value) {
        return Some(dt);
    }
    // Timezone-less values are read as UTC.
    NaiveDateTime::parse_from_str(value, "%Y-%m-%dT%H:%M:%S%.f")
        .ok()
        .map(|naive| naive.and_utc().fixed_offset())
}

/// Compares two literals in value space. `None` when they are not comparable
/// (different value spaces, unsupported datatype, or NaN).
pub fn compare_literals(a: &Literal, b: &Literal) -> Option<Ordering> {
    match (a.value(), b.value()) {
        (Some(x), Some(y)) if x.is_numeric() && y.is_numeric() => {
            if let (LiteralValue::Double(f), _) | (_, LiteralValue::Double(f)) = (&x, &y) {
                if f.is_nan() {
                    return None;
                }
            }
            match (&x, &y) {
                (LiteralValue::Double(p), LiteralValue::Double(q)) if p.is_infinite() || q.is_infinite() => {
                    p.partial_cmp(q)
                }
                (LiteralValue::Double(p), _) if p.is_infinite() => Some(if *p > 0.0 { Ordering::Greater } else { Ordering::Less }),
                (_, LiteralValue::Double(q)) if q.is_infinite() => Some(if *q > 0.0 { Ordering::Less } else { Ordering::Greater }),
                _ => Some(x.as_rational()?.cmp(&y.as_rational()?)),
            }
        }
        (Some(LiteralValue::Boolean(x)), Some(LiteralValue::Boolean(y))) => Some(x.cmp(&y)),
        (Some(LiteralValue::DateTime(x)), Some(LiteralValue::DateTime(y))) => Some(x.cmp(&y)),
        _ => {
            let plain = |l: &Literal| {
                l.language.is_none()
                    && matches!(l.datatype.as_str(), xsd::STRING | xsd::ANY_URI)
            };
            if plain(a) && plain(b) && a.datatype == b.datatype {
                Some(a.lexical().cmp(b.lexical()))
            } else {
                None
            }
        }
    }
}

/// Value-based equality for supported datatypes, term equality otherwise.
pub fn literals_equal(a: &Literal, b: &Literal) -> bool {
    match (a.value(), b.value()) {
        (Some(x), Some(y)) => {
            if x.is_numeric() && y.is_numeric() {
                compare_literals(a, b) == Some(Ordering::Equal)
            } else {
                x == y
            }
        }
        _ => a == b,
    }
}

/// An RDF term.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Term {
    Iri(Iri),
    Blank(BlankNode),
    Literal(Literal),
}

impl Term {
    pub fn iri(value: impl AsRef<str>) -> Result<Self, TermError> {
        Iri::new(value).map(Term::Iri)
    }

    pub fn blank(label: impl AsRef<str>) -> Self {
        Term::Blank(BlankNode::new(label))
    }

    pub fn as_iri(&self) -> Option<&Iri> {
        match self {
            Term::Iri(iri) => Some(iri),
            _ => None,
        }
    }

    pub fn as_literal(&self) -> Option<&Literal> {
        match self {
            Term::Literal(lit) => Some(lit),
            _ => None,
        }
    }

    pub fn as_blank(&self) -> Option<&BlankNode> {
        match self {
            Term::Blank(b) => Some(b),
            _ => None,
        }
    }

    pub fn is_iri(&self) -> bool {
        matches!(self, Term::Iri(_))
    }

    pub fn is_blank(&self) -> bool {
        matches!(self, Term::Blank(_))
    }

    pub fn is_literal(&self) -> bool {
        matches!(self, Term::Literal(_))
    }
}

impl From<Iri> for Term {
    fn from(value: Iri) -> Self {
        Term::Iri(value)
    }
}

impl From<&Iri> for Term {
    fn from(value: &Iri) -> Self {
        Term::Iri(value.clone())
    }
}

impl From<Literal> for Term {
    fn from(value: Literal) -> Self {
        Term::Literal(value)
    }
}

impl From<BlankNode> for Term {
    fn from(value: BlankNode) -> Self {
        Term::Blank(value)
    }
}

impl fmt::Debug for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Iri(i) => write!(f, "{i:?}"),
            Term::Blank(b) => write!(f, "{b:?}"),
            Term::Literal(l) => write!(f, "{l:?}"),
        }
    }
}

/// N-Triples style rendering, used for TSV output and diagnostics.
impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Iri(i) => write!(f, "{i}"),
            Term::Blank(b) => write!(f, "_:{}", b.label()),
            Term::Literal(l) => {
                write!(f, "\"{}\"", crate::turtle::escape_string(l.lexical()))?;
                if let Some(lang) = l.language() {
                    write!(f, "@{lang}")
                } else if l.datatype().as_str() != xsd::STRING {
                    write!(f, "^^{}", l.datatype())
                } else {
                    Ok(())
                }
            }
        }
    }
}

/// A subject–predicate–object statement.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Triple {
    pub subject: Term,
    pub predicate: Term,
    pub object: Term,
}

impl Triple {
    /// Builds a triple, enforcing positional constraints.
    pub fn new(subject: Term, predicate: Term, object: Term) -> Result<Self, TermError> {
        if subject.is_literal() {
            return Err(TermError::BadSubject(format!("{subject:?}")));
        }
        if !predicate.is_iri() {
            return Err(TermError::BadPredicate(format!("{predicate:?}")));
        }
        Ok(Self { subject, predicate, object })
    }

    pub fn in_graph(self, graph: &Iri) -> Quad {
        Quad {
            subject: self.subject,
            predicate: self.predicate,
            object: self.object,
            graph: Term::Iri(graph.clone()),
        }
    }
}

impl fmt::Debug for Triple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?} {:?} {:?}", self.subject, self.predicate, self.object)
    }
}

/// A statement scoped to a named graph.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Quad {
    pub subject: Term,
    pub predicate: Term,
    pub object: Term,
    pub graph: Term,
}

impl Quad {
    pub fn new(subject: Term, predicate: Term, object: Term, graph: Term) -> Result<Self, TermError> {
        if !graph.is_iri() {
            return Err(TermError::BadGraph(format!("{graph:?}")));
        }
        let t = Triple::new(subject, predicate, object)?;
        Ok(Self {
            subject: t.subject,
            predicate: t.predicate,
            object: t.object,
            graph,
        })
    }

    /// Shorthand for IRI-only positions, used heavily by fixtures and tests.
    pub fn iris(s: &Iri, p: &Iri, o: impl Into<Term>, g: &Iri) -> Self {
        Self {
            subject: s.into(),
            predicate: p.into(),
            object: o.into(),
            graph: g.into(),
        }
    }

    pub fn triple(&self) -> Triple {
        Triple {
            subject: self.subject.clone(),
            predicate: self.predicate.clone(),
            object: self.object.clone(),
        }
    }

    pub fn validate(&self) -> Result<(), TermError> {
        Quad::new(
            self.subject.clone(),
            self.predicate.clone(),
            self.object.clone(),
            self.graph.clone(),
        )
        .map(|_| ())
    }
}

impl fmt::Debug for Quad {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:?} {:?} {:?} {:?}",
            self.subject, self.predicate, self.object, self.graph
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn iri_requires_scheme() {
        assert!(Iri::new("http://example.org/a").is_ok());
        assert!(Iri::new("urn:kapps:default").is_ok());
        assert_eq!(
            Iri::new("relative/path"),
            Err(TermError::RelativeIri("relative/path".into()))
        );
        assert!(Iri::new("http://exa mple.org").is_err());
    }

    #[test]
    fn literal_defaults() {
        assert_eq!(Literal::string("x").datatype().as_str(), xsd::STRING);
        let l = Literal::lang("chat", "FR");
        assert_eq!(l.datatype().as_str(), rdf::LANG_STRING);
        assert_eq!(l.language(), Some("fr"));
    }

    #[test]
    fn value_equality_for_integers() {
        let a = Literal::typed("01", xsd::integer());
        let b = Literal::integer(1);
        assert!(literals_equal(&a, &b));
        assert_ne!(a, b);
        let d = Literal::double(1.0);
        assert!(literals_equal(&a, &d));
    }

    #[test]
    fn numeric_comparison_is_exact() {
        let big = Literal::integer(9_007_199_254_740_993);
        let approx = Literal::double(9_007_199_254_740_992.0);
        assert_eq!(compare_literals(&big, &approx), Some(Ordering::Greater));
        let nan = Literal::typed("NaN", xsd::double());
        assert_eq!(compare_literals(&nan, &Literal::integer(1)), None);
    }

    #[test]
    fn unsupported_datatypes_do_not_order() {
        let dt = Iri::new("http://example.org/dt").unwrap();
        let a = Literal::typed("b", dt.clone());
        let b = Literal::typed("a", dt);
        assert_eq!(compare_literals(&a, &b), None);
        assert_eq!(compare_literals(&a, &Literal::integer(3)), None);
        assert_eq!(compare_literals(&Literal::lang("b", "en"), &Literal::lang("a", "en")), None);
        assert_eq!(compare_literals(&Literal::string("b"), &Literal::string("a")), Some(Ordering::Greater));
    }

    #[test]
    fn positional_constraints() {
        let s = Term::iri("http://e/s").unwrap();
        let lit = Term::Literal(Literal::string("x"));
        assert!(Triple::new(lit.clone(), s.clone(), s.clone()).is_err());
        assert!(Triple::new(s.clone(), Term::blank("b"), s.clone()).is_err());
        assert!(Quad::new(s.clone(), s.clone(), lit, Term::blank("g")).is_err());
    }

    #[test]
    fn double_formatting_round_trips() {
        for v in [0.0, 1.5, -2.25e-7, 1e300, 123456.789] {
            let l = Literal::double(v);
            assert_eq!(l.as_f64(), Some(v));
        }
    }
}
