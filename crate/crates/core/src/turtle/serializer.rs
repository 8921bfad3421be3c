use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt::Write;

use crate::term::{Iri, Quad, Term, Triple};
use crate::vocab::{rdf, xsd};

/// Escapes a string for a short (`"..."`) Turtle literal.
pub fn escape_string(value: &str) -> String {
    let mut out = String::with_capacity(value.len());
    for c in value.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\r' => out.push_str("\\r"),
            c if (c as u32) < 0x20 => {
                let _ = write!(out, "\\u{:04X}", c as u32);
            }
            c => out.push(c),
        }
    }
    out
}

/// Serializes quads, ignoring their graph component.
pub fn serialize_quads<'a>(quads: impl IntoIterator<Item = &'a Quad>, prefixes: &[(String, String)]) -> String {
    let triples: Vec<Triple> = quads.into_iter().map(Quad::triple).collect();
    serialize(&triples, prefixes)
}

/// Deterministic Turtle output: IRI subjects in lexicographic order, then
/// blank node subjects; blank nodes are relabeled `_:b1, _:b2, ...` in order
/// of first appearance in the output.
pub fn serialize<'a>(triples: impl IntoIterator<Item = &'a Triple>, prefixes: &[(String, String)]) -> String {
    let mut out = String::new();
    for (prefix, ns) in prefixes {
        let _ = writeln!(out, "@prefix {prefix}: <{ns}> .");
    }

    let mut by_subject: BTreeMap<&Term, Vec<(&Term, &Term)>> = BTreeMap::new();
    for t in triples {
        by_subject.entry(&t.subject).or_default().push((&t.predicate, &t.object));
    }
    if by_subject.is_empty() {
        return out;
    }
    for entries in by_subject.values_mut() {
        entries.sort_by(|a, b| predicate_rank(a.0).cmp(&predicate_rank(b.0)).then(a.cmp(b)));
        entries.dedup();
    }

    let writer = TermWriter::new(prefixes);
    let mut labels: HashMap<&Term, usize> = HashMap::new();
    let mut pending: VecDeque<&Term> = VecDeque::new();
    let mut emitted = 0usize;
    let total = by_subject.len();

    let emit = |subject: &'a Term,
                    entries: &Vec<(&'a Term, &'a Term)>,
                    labels: &mut HashMap<&'a Term, usize>,
                    pending: &mut VecDeque<&'a Term>,
                    out: &mut String| {
        out.push('\n');
        let subj = writer.render(subject, labels, pending);
        out.push_str(&subj);
        let mut last_pred: Option<&Term> = None;
        for (i, (p, o)) in entries.iter().enumerate() {
            let obj = writer.render(o, labels, pending);
            if last_pred == Some(*p) {
                let _ = write!(out, ", {obj}");
            } else {
                if i > 0 {
                    out.push_str(" ;\n    ");
                } else {
                    out.push(' ');
                }
                let _ = write!(out, "{} {obj}", writer.render(p, labels, pending));
                last_pred = Some(*p);
            }
        }
        out.push_str(" .\n");
    };

    for (subject, entries) in by_subject.iter().filter(|(s, _)| !s.is_blank()) {
        emit(subject, entries, &mut labels, &mut pending, &mut out);
        emitted += 1;
    }
    let mut done: std::collections::HashSet<&Term> = std::collections::HashSet::new();
    while emitted < total {
        let next = loop {
            match pending.pop_front() {
                Some(t) if done.contains(t) || !by_subject.contains_key(t) => continue,
                Some(t) => break t,
                None => {
                    let t = by_subject
                        .keys()
                        .find(|k| k.is_blank() && !done.contains(*k))
                        .copied()
                        .expect("remaining blank subject");
                    break t;
                }
            }
        };
        done.insert(next);
        let entries = &by_subject[next];
        emit(next, entries, &mut labels, &mut pending, &mut out);
        emitted += 1;
    }
    out
}

fn predicate_rank(p: &Term) -> u8 {
    match p.as_iri() {
        Some(i) if i.as_str() == rdf::TYPE => 0,
        _ => 1,
    }
}

struct TermWriter<'p> {
    prefixes: &'p [(String, String)],
}

impl<'p> TermWriter<'p> {
    fn new(prefixes: &'p [(String, String)]) -> Self {
        Self { prefixes }
    }

    fn render<'t>(&self, term: &'t Term, labels: &mut HashMap<&'t Term, usize>, pending: &mut VecDeque<&'t Term>) -> String {
        match term {
            Term::Iri(iri) => self.iri(iri),
            Term::Blank(_) => {
                let next = labels.len() + 1;
                let n = *labels.entry(term).or_insert_with(|| {
                    pending.push_back(term);
                    next
                });
                format!("_:b{n}")
            }
            Term::Literal(lit) => {
                let mut s = format!("\"{}\"", escape_string(lit.lexical()));
                if let Some(lang) = lit.language() {
                    let _ = write!(s, "@{lang}");
                } else if lit.datatype().as_str() != xsd::STRING {
                    let _ = write!(s, "^^{}", self.iri(lit.datatype()));
                }
                s
            }
        }
    }

    fn iri(&self, iri: &Iri) -> String {
        let value = iri.as_str();
        let best = self
            .prefixes
            .iter()
            .filter(|(_, ns)| value.starts_with(ns.as_str()) && is_pn_local(&value[ns.len()..]))
            .max_by_key(|(_, ns)| ns.len());
        match best {
            Some((prefix, ns)) => format!("{prefix}:{}", &value[ns.len()..]),
            None => format!("<{value}>"),
        }
    }
}

fn is_pn_local(local: &str) -> bool {
    let mut chars = local.chars();
    let Some(first) = chars.next() else {
        return true;
    };
    (first.is_alphanumeric() || first == '_')
        && local.chars().all(|c| c.is_alphanumeric() || matches!(c, '_' | '-' | '.'))
        && !local.ends_with('.')
}

/// Renders one term in Turtle syntax, abbreviating IRIs with `prefixes`.
/// Blank nodes keep their own label.
pub fn format_term(term: &Term, prefixes: &[(String, String)]) -> String {
    match term {
        Term::Blank(b) => format!("_:{}", b.label()),
        other => {
            let mut labels = HashMap::new();
            let mut pending = VecDeque::new();
            TermWriter::new(prefixes).render(other, &mut labels, &mut pending)
        }
    }
}
