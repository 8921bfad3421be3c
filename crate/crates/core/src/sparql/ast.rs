use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::term::Term;

/// A query variable, stored without its `?`/`$` sigil.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var(Arc<str>);

impl Var {
    pub fn new(name: impl AsRef<str>) -> Self {
        Self(Arc::from(name.as_ref()))
    }

    pub fn name(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "?{}", self.0)
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "?{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TermPattern {
    Var(Var),
    Term(Term),
}

impl TermPattern {
    pub fn as_var(&self) -> Option<&Var> {
        match self {
            TermPattern::Var(v) => Some(v),
            TermPattern::Term(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TriplePattern {
    pub subject: TermPattern,
    pub predicate: TermPattern,
    pub object: TermPattern,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CompareOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    Var(Var),
    Const(Term),
    Compare(CompareOp, Box<Expr>, Box<Expr>),
    And(Box<Expr>, Box<Expr>),
    Or(Box<Expr>, Box<Expr>),
    Not(Box<Expr>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PatternElement {
    Triple(TriplePattern),
    SubSelect(Box<SelectQuery>),
    Group(GroupPattern),
    Filter(Expr),
}

/// A `{ ... }` block. Filters apply to the whole group wherever they appear.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GroupPattern {
    pub elements: Vec<PatternElement>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProjectionItem {
    Var(Var),
    /// `(COUNT([DISTINCT] ?v | *) AS ?alias)`; `var` is `None` for `*`.
    Count { var: Option<Var>, distinct: bool, alias: Var },
}

impl ProjectionItem {
    pub fn output(&self) -> &Var {
        match self {
            ProjectionItem::Var(v) => v,
            ProjectionItem::Count { alias, .. } => alias,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Projection {
    All,
    Items(Vec<ProjectionItem>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SelectQuery {
    pub distinct: bool,
    pub projection: Projection,
    pub pattern: GroupPattern,
    pub group_by: Vec<Var>,
}

impl SelectQuery {
    pub fn is_aggregate(&self) -> bool {
        !self.group_by.is_empty()
            || matches!(&self.projection, Projection::Items(items)
                if items.iter().any(|i| matches!(i, ProjectionItem::Count { .. })))
    }

    /// Variables visible to an enclosing pattern, in projection order.
    pub fn output_vars(&self) -> Vec<Var> {
        match &self.projection {
            Projection::All => self.pattern.in_scope_vars(),
            Projection::Items(items) => items.iter().map(|i| i.output().clone()).collect(),
        }
    }
}

impl GroupPattern {
    /// Variables bound by this group, in first-occurrence order.
    pub fn in_scope_vars(&self) -> Vec<Var> {
        let mut out: Vec<Var> = Vec::new();
        let mut push = |v: &Var| {
            if !out.contains(v) {
                out.push(v.clone());
            }
        };
        for el in &self.elements {
            match el {
                PatternElement::Triple(t) => {
                    for p in [&t.subject, &t.predicate, &t.object] {
                        if let Some(v) = p.as_var() {
                            push(v);
                        }
                    }
                }
                PatternElement::SubSelect(q) => q.output_vars().iter().for_each(&mut push),
                PatternElement::Group(g) => g.in_scope_vars().iter().for_each(&mut push),
                PatternElement::Filter(_) => {}
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum QueryForm {
    Select(SelectQuery),
    Ask(GroupPattern),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Query {
    pub prefixes: BTreeMap<String, String>,
    pub form: QueryForm,
}
