use std::collections::{BTreeMap, HashMap};
use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::term::{Iri, Literal, Term};
use crate::turtle::format_term;
use crate::vocab::{rdf, rdf4j, rdf4j_sh, sh, standard_prefixes};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ValidationResult {
    pub focus_node: Term,
    pub result_path: Option<Iri>,
    pub value: Option<Term>,
    pub source_constraint_component: Iri,
    pub result_severity: Iri,
    pub result_message: String,
    pub source_shape: Term,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub conforms: bool,
    pub results: Vec<ValidationResult>,
    /// Statements describing blank-node source shapes, keyed by shape node.
    #[serde(default, with = "shape_pairs")]
    pub source_shapes: BTreeMap<Term, Vec<(Iri, Term)>>,
}

/// JSON object keys must be strings, so the map travels as a list of pairs.
mod shape_pairs {
    use std::collections::BTreeMap;

    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::term::{Iri, Term};

    type Map = BTreeMap<Term, Vec<(Iri, Term)>>;

    pub fn serialize<S: Serializer>(map: &Map, s: S) -> Result<S::Ok, S::Error> {
        map.iter().collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Map, D::Error> {
        Ok(Vec::<(Term, Vec<(Iri, Term)>)>::deserialize(d)?.into_iter().collect())
    }
}

impl ValidationReport {
    pub fn conforming() -> Self {
        Self {
            conforms: true,
            results: Vec::new(),
            source_shapes: BTreeMap::new(),
        }
    }

    /// True if any result has severity `sh:Violation`.
    pub fn has_violations(&self) -> bool {
        self.results.iter().any(|r| r.result_severity.as_str() == sh::VIOLATION)
    }

    pub fn components(&self) -> impl Iterator<Item = &Iri> {
        self.results.iter().map(|r| &r.source_constraint_component)
    }
}

#[derive(Debug, Clone, Default)]
pub struct ReportOptions {
    /// Emit the vendor triples (`rdf4j:truncated`, `rdf4j-sh:shapesGraph`)
    /// some triple stores add to their reports.
    pub vendor_compat: bool,
    /// Prefixes for the header; the standard set is used when empty.
    pub prefixes: Vec<(String, String)>,
}

/// Renders a report as Turtle with labels `_:report`, `_:resultN`, `_:shapeN`.
pub fn serialize_report(report: &ValidationReport, options: &ReportOptions) -> String {
    let mut prefixes = if options.prefixes.is_empty() {
        standard_prefixes()
    } else {
        options.prefixes.clone()
    };
    if options.vendor_compat {
        for (p, ns) in [("rdf4j", rdf4j::NS), ("rdf4j-sh", rdf4j_sh::NS)] {
            if !prefixes.iter().any(|(x, _)| x == p) {
                prefixes.push((p.to_owned(), ns.to_owned()));
            }
        }
    }
    let mut out = String::new();
    for (p, ns) in &prefixes {
        let _ = writeln!(out, "@prefix {p}: <{ns}> .");
    }
    out.push('\n');

    let mut shape_labels: HashMap<&Term, String> = HashMap::new();
    let mut shape_order: Vec<&Term> = Vec::new();
    for r in &report.results {
        if r.source_shape.is_blank() && !shape_labels.contains_key(&r.source_shape) {
            shape_order.push(&r.source_shape);
            shape_labels.insert(&r.source_shape, format!("_:shape{}", shape_order.len()));
        }
    }
    let term = |t: &Term| -> String {
        match shape_labels.get(t) {
            Some(label) => label.clone(),
            None => format_term(t, &prefixes),
        }
    };
    let iri = |i: &Iri| format_term(&Term::Iri(i.clone()), &prefixes);

    let mut lines: Vec<String> = vec![
        format!("{} {}", iri(&rdf::type_()), iri(&sh::validation_report())),
        format!(
            "{} {}",
            iri(&sh::conforms()),
            format_term(&Term::Literal(Literal::boolean(report.conforms)), &prefixes)
        ),
    ];
    if options.vendor_compat {
        lines.push(format!(
            "{} {}",
            iri(&rdf4j::truncated()),
            format_term(&Term::Literal(Literal::boolean(false)), &prefixes)
        ));
    }
    for i in 1..=report.results.len() {
        lines.push(format!("{} _:result{i}", iri(&sh::result())));
    }
    write_block(&mut out, "_:report", &lines);

    for (i, r) in report.results.iter().enumerate() {
        let mut lines = vec![
            format!("{} {}", iri(&rdf::type_()), iri(&sh::validation_result())),
            format!("{} {}", iri(&sh::focus_node()), term(&r.focus_node)),
        ];
        if let Some(p) = &r.result_path {
            lines.push(format!("{} {}", iri(&sh::result_path()), iri(p)));
        }
        if let Some(v) = &r.value {
            lines.push(format!("{} {}", iri(&sh::value()), term(v)));
        }
        lines.push(format!("{} {}", iri(&sh::source_constraint_component()), iri(&r.source_constraint_component)));
        lines.push(format!("{} {}", iri(&sh::result_severity()), iri(&r.result_severity)));
        lines.push(format!(
            "{} {}",
            iri(&sh::result_message()),
            format_term(&Term::Literal(Literal::string(&r.result_message)), &prefixes)
        ));
        if options.vendor_compat {
            lines.push(format!("{} {}", iri(&rdf4j_sh::shapes_graph()), iri(&rdf4j::shacl_shape_graph())));
        }
        lines.push(format!("{} {}", iri(&sh::source_shape()), term(&r.source_shape)));
        write_block(&mut out, &format!("_:result{}", i + 1), &lines);
    }

    for shape in shape_order {
        let Some(desc) = report.source_shapes.get(shape) else {
            continue;
        };
        let lines: Vec<String> = desc.iter().map(|(p, o)| format!("{} {}", iri(p), term(o))).collect();
        if !lines.is_empty() {
            write_block(&mut out, &shape_labels[shape], &lines);
        }
    }
    out
}

fn write_block(out: &mut String, subject: &str, lines: &[String]) {
    out.push_str(subject);
    for (i, line) in lines.iter().enumerate() {
        out.push_str(if i == 0 { " " } else { " ;\n    " });
        out.push_str(line);
    }
    out.push_str(" .\n\n");
}
