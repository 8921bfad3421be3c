use std::collections::BTreeMap;

use super::ast::*;
use super::SparqlError;
use crate::term::{Iri, Literal, Term};
use crate::vocab::{rdf, xsd};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    IriRef(String),
    PName(String, String),
    Var(String),
    Str(String),
    Integer(String),
    Decimal(String),
    Double(String),
    LangTag(String),
    Word(String),
    Punct(&'static str),
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    offset: usize,
}

const UNSUPPORTED_KEYWORDS: &[&str] = &[
    "OPTIONAL", "UNION", "MINUS", "BIND", "VALUES", "SERVICE", "GRAPH", "ORDER", "LIMIT", "OFFSET", "HAVING",
    "CONSTRUCT", "DESCRIBE", "INSERT", "DELETE", "LOAD", "CLEAR", "DROP", "CREATE", "WITH", "FROM", "NAMED",
    "REDUCED", "SUM", "AVG", "MIN", "MAX", "SAMPLE", "GROUP_CONCAT", "EXISTS", "NOT", "IN", "BASE", "BOUND",
    "REGEX", "STR", "LANG", "DATATYPE", "IF", "COALESCE",
];

fn position(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rfind('\n').map_or(before.chars().count(), |i| before[i + 1..].chars().count()) + 1;
    (line, column)
}

fn syntax(text: &str, offset: usize, message: impl Into<String>) -> SparqlError {
    let (line, column) = position(text, offset);
    SparqlError::Syntax {
        line,
        column,
        message: message.into(),
    }
}

fn is_pn_chars(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '-' || c == '.'
}

fn tokenize(text: &str) -> Result<Vec<Spanned>, SparqlError> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut i = 0;
    let mut out = Vec::new();
    let at = |i: usize| chars.get(i).map(|&(_, c)| c);
    let off = |i: usize| chars.get(i).map_or(text.len(), |&(o, _)| o);
    while i < chars.len() {
        let c = chars[i].1;
        let start = off(i);
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i].1 != '\n' {
                i += 1;
            }
            continue;
        }
        let two: String = chars[i..chars.len().min(i + 2)].iter().map(|&(_, c)| c).collect();
        let tok = match c {
            '<' if two != "<=" && looks_like_iri(&chars[i + 1..]) => {
                let mut j = i + 1;
                let mut s = String::new();
                while j < chars.len() && chars[j].1 != '>' {
                    s.push(chars[j].1);
                    j += 1;
                }
                if j >= chars.len() {
                    return Err(syntax(text, start, "unterminated IRI"));
                }
                i = j + 1;
                Tok::IriRef(s)
            }
            '?' | '$' => {
                let mut j = i + 1;
                let mut s = String::new();
                while let Some(c) = at(j).filter(|c| c.is_alphanumeric() || *c == '_') {
                    s.push(c);
                    j += 1;
                }
                if s.is_empty() {
                    return Err(syntax(text, start, "empty variable name"));
                }
                i = j;
                Tok::Var(s)
            }
            '"' | '\'' => {
                let long = chars.len() >= i + 3 && chars[i + 1].1 == c && chars[i + 2].1 == c;
                let mut j = if long { i + 3 } else { i + 1 };
                let mut s = String::new();
                loop {
                    let Some(d) = at(j) else {
                        return Err(syntax(text, start, "unterminated string"));
                    };
                    if d == '\\' {
                        let e = at(j + 1).ok_or_else(|| syntax(text, start, "unterminated escape"))?;
                        s.push(match e {
                            'n' => '\n',
                            't' => '\t',
                            'r' => '\r',
                            '"' => '"',
                            '\'' => '\'',
                            '\\' => '\\',
                            _ => return Err(syntax(text, off(j), format!("unknown escape `\\{e}`"))),
                        });
                        j += 2;
                        continue;
                    }
                    if long {
                        if d == c && at(j + 1) == Some(c) && at(j + 2) == Some(c) {
                            j += 3;
                            break;
                        }
                    } else if d == c {
                        j += 1;
                        break;
                    } else if d == '\n' {
                        return Err(syntax(text, off(j), "newline in short string"));
                    }
                    s.push(d);
                    j += 1;
                }
                i = j;
                Tok::Str(s)
            }
            '@' => {
                let mut j = i + 1;
                let mut s = String::new();
                while let Some(c) = at(j).filter(|c| c.is_ascii_alphanumeric() || *c == '-') {
                    s.push(c);
                    j += 1;
                }
                if s.is_empty() {
                    return Err(syntax(text, start, "empty language tag"));
                }
                i = j;
                Tok::LangTag(s)
            }
            c if c.is_ascii_digit() || ((c == '+' || c == '-' || c == '.') && at(i + 1).is_some_and(|d| d.is_ascii_digit())) => {
                let mut j = i;
                let mut s = String::new();
                if c == '+' || c == '-' {
                    s.push(c);
                    j += 1;
                }
                let mut dot = false;
                let mut exp = false;
                while let Some(d) = at(j) {
                    if d.is_ascii_digit() {
                        s.push(d);
                    } else if d == '.' && !dot && !exp && at(j + 1).is_some_and(|x| x.is_ascii_digit()) {
                        dot = true;
                        s.push(d);
                    } else if (d == 'e' || d == 'E') && !exp {
                        exp = true;
                        s.push(d);
                        if let Some(sign) = at(j + 1).filter(|x| *x == '+' || *x == '-') {
                            s.push(sign);
                            j += 1;
                        }
                    } else {
                        break;
                    }
                    j += 1;
                }
                i = j;
                if exp {
                    Tok::Double(s)
                } else if dot {
                    Tok::Decimal(s)
                } else {
                    Tok::Integer(s)
                }
            }
            c if c.is_alphabetic() || c == '_' || c == ':' => {
                let mut j = i;
                let mut word = String::new();
                while let Some(d) = at(j).filter(|d| is_pn_chars(*d)) {
                    word.push(d);
                    j += 1;
                }
                if at(j) == Some(':') {
                    j += 1;
                    let mut local = String::new();
                    while let Some(d) = at(j).filter(|d| is_pn_chars(*d) || *d == ':') {
                        local.push(d);
                        j += 1;
                    }
                    while local.ends_with('.') {
                        local.pop();
                        j -= 1;
                    }
                    i = j;
                    if word.starts_with('_') && word == "_" {
                        return Err(SparqlError::Unsupported("blank node in pattern".into()));
                    }
                    Tok::PName(word, local)
                } else {
                    while word.ends_with('.') {
                        word.pop();
                        j -= 1;
                    }
                    i = j;
                    Tok::Word(word)
                }
            }
            _ => {
                let puncts: [&'static str; 19] = [
                    "&&", "||", "!=", "<=", ">=", "^^", "{", "}", "(", ")", ".", ";", ",", "*", "=", "<", ">", "!", "[",
                ];
                let Some(p) = puncts.iter().find(|p| two.starts_with(**p)) else {
                    if matches!(c, '/' | '|' | '^' | '+') {
                        return Err(SparqlError::Unsupported("property paths".into()));
                    }
                    return Err(syntax(text, start, format!("unexpected character `{c}`")));
                };
                if *p == "[" {
                    return Err(SparqlError::Unsupported("blank node in pattern".into()));
                }
                i += p.chars().count();
                Tok::Punct(p)
            }
        };
        out.push(Spanned { tok, offset: start });
    }
    Ok(out)
}

fn looks_like_iri(rest: &[(usize, char)]) -> bool {
    for &(_, c) in rest {
        match c {
            '>' => return true,
            c if c.is_whitespace() || matches!(c, '<' | '"' | '{' | '}' | '|' | '^' | '`' | '\\') => return false,
            _ => {}
        }
    }
    false
}

struct Parser<'t> {
    text: &'t str,
    toks: Vec<Spanned>,
    pos: usize,
    prefixes: BTreeMap<String, String>,
}

/// Prefixes every query may use without declaring them.
pub fn predeclared_prefixes() -> BTreeMap<String, String> {
    use crate::vocab::{owl, rdfs, sh};
    [("rdf", rdf::NS), ("rdfs", rdfs::NS), ("xsd", xsd::NS), ("owl", owl::NS), ("sh", sh::NS)]
        .into_iter()
        .map(|(p, n)| (p.to_owned(), n.to_owned()))
        .collect()
}

pub fn parse_query_with(text: &str, extra_prefixes: &BTreeMap<String, String>) -> Result<Query, SparqlError> {
    let mut prefixes = predeclared_prefixes();
    prefixes.extend(extra_prefixes.iter().map(|(k, v)| (k.clone(), v.clone())));
    let mut p = Parser {
        text,
        toks: tokenize(text)?,
        pos: 0,
        prefixes,
    };
    let query = p.query()?;
    if p.pos < p.toks.len() {
        return Err(p.err("unexpected trailing input"));
    }
    Ok(query)
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|s| &s.tok)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.text.len(), |s| s.offset)
    }

    fn err(&self, message: impl Into<String>) -> SparqlError {
        let found = match self.peek() {
            Some(t) => format!(" (found {t:?})"),
            None => " (found end of input)".to_owned(),
        };
        syntax(self.text, self.offset(), format!("{}{found}", message.into()))
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.peek().cloned();
        self.pos += 1;
        t
    }

    fn is_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Some(Tok::Word(w)) if w.eq_ignore_ascii_case(kw))
    }

    fn eat_keyword(&mut self, kw: &str) -> bool {
        if self.is_keyword(kw) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_keyword(&mut self, kw: &str) -> Result<(), SparqlError> {
        if self.eat_keyword(kw) {
            Ok(())
        } else {
            Err(self.err(format!("expected `{kw}`")))
        }
    }

    fn is_punct(&self, p: &str) -> bool {
        matches!(self.peek(), Some(Tok::Punct(q)) if *q == p)
    }

    fn eat_punct(&mut self, p: &str) -> bool {
        if self.is_punct(p) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_punct(&mut self, p: &str) -> Result<(), SparqlError> {
        if self.eat_punct(p) {
            Ok(())
        } else {
            Err(self.err(format!("expected `{p}`")))
        }
    }

    fn check_unsupported(&self) -> Result<(), SparqlError> {
        if let Some(Tok::Word(w)) = self.peek() {
            let upper = w.to_ascii_uppercase();
            if UNSUPPORTED_KEYWORDS.contains(&upper.as_str()) {
                return Err(SparqlError::Unsupported(upper));
            }
        }
        Ok(())
    }

    fn query(&mut self) -> Result<Query, SparqlError> {
        loop {
            self.check_unsupported()?;
            if self.eat_keyword("PREFIX") {
                let Some(Tok::PName(prefix, local)) = self.next() else {
                    self.pos -= 1;
                    return Err(self.err("expected prefix name"));
                };
                if !local.is_empty() {
                    self.pos -= 1;
                    return Err(self.err("prefix declaration must end with `:`"));
                }
                let Some(Tok::IriRef(ns)) = self.next() else {
                    self.pos -= 1;
                    return Err(self.err("expected namespace IRI"));
                };
                self.prefixes.insert(prefix, ns);
            } else {
                break;
            }
        }
        self.check_unsupported()?;
        let form = if self.eat_keyword("ASK") {
            self.eat_keyword("WHERE");
            QueryForm::Ask(self.group()?)
        } else if self.is_keyword("SELECT") {
            QueryForm::Select(self.select()?)
        } else {
            return Err(self.err("expected SELECT or ASK"));
        };
        self.check_unsupported()?;
        Ok(Query {
            prefixes: self.prefixes.clone(),
            form,
        })
    }

    fn select(&mut self) -> Result<SelectQuery, SparqlError> {
        self.expect_keyword("SELECT")?;
        self.check_unsupported()?;
        let distinct = self.eat_keyword("DISTINCT");
        self.check_unsupported()?;
        let projection = if self.eat_punct("*") {
            Projection::All
        } else {
            let mut items = Vec::new();
            loop {
                match self.peek() {
                    Some(Tok::Var(v)) => {
                        items.push(ProjectionItem::Var(Var::new(v)));
                        self.pos += 1;
                    }
                    Some(Tok::Punct("(")) => {
                        self.pos += 1;
                        self.check_unsupported()?;
                        self.expect_keyword("COUNT")?;
                        self.expect_punct("(")?;
                        let distinct = self.eat_keyword("DISTINCT");
                        let var = if self.eat_punct("*") {
                            None
                        } else if let Some(Tok::Var(v)) = self.peek().cloned() {
                            self.pos += 1;
                            Some(Var::new(v))
                        } else {
                            return Err(self.err("expected variable or `*` in COUNT"));
                        };
                        self.expect_punct(")")?;
                        self.expect_keyword("AS")?;
                        let Some(Tok::Var(alias)) = self.peek().cloned() else {
                            return Err(self.err("expected alias variable"));
                        };
                        self.pos += 1;
                        self.expect_punct(")")?;
                        items.push(ProjectionItem::Count {
                            var,
                            distinct,
                            alias: Var::new(alias),
                        });
                    }
                    _ => break,
                }
            }
            if items.is_empty() {
                return Err(self.err("expected projection"));
            }
            Projection::Items(items)
        };
        self.check_unsupported()?;
        self.eat_keyword("WHERE");
        let start = self.offset();
        let pattern = self.group()?;
        let mut group_by = Vec::new();
        self.check_unsupported()?;
        if self.eat_keyword("GROUP") {
            self.expect_keyword("BY")?;
            while let Some(Tok::Var(v)) = self.peek().cloned() {
                self.pos += 1;
                group_by.push(Var::new(v));
            }
            if group_by.is_empty() {
                return Err(self.err("expected GROUP BY variable"));
            }
        }
        self.check_unsupported()?;
        let query = SelectQuery {
            distinct,
            projection,
            pattern,
            group_by,
        };
        self.check_projection(&query, start)?;
        Ok(query)
    }

    fn check_projection(&self, q: &SelectQuery, offset: usize) -> Result<(), SparqlError> {
        let bound = q.pattern.in_scope_vars();
        if q.is_aggregate() && matches!(q.projection, Projection::All) {
            return Err(syntax(self.text, offset, "SELECT * is not allowed with GROUP BY"));
        }
        if let Projection::Items(items) = &q.projection {
            let mut seen = Vec::new();
            for item in items {
                if seen.contains(item.output()) {
                    return Err(syntax(self.text, offset, format!("variable {} projected twice", item.output())));
                }
                seen.push(item.output().clone());
                match item {
                    ProjectionItem::Var(v) => {
                        if !bound.contains(v) {
                            return Err(syntax(self.text, offset, format!("projected variable {v} is not bound in WHERE")));
                        }
                        if q.is_aggregate() && !q.group_by.contains(v) {
                            return Err(syntax(self.text, offset, format!("variable {v} must appear in GROUP BY")));
                        }
                    }
                    ProjectionItem::Count { var, alias, .. } => {
                        if let Some(v) = var {
                            if !bound.contains(v) {
                                return Err(syntax(self.text, offset, format!("counted variable {v} is not bound in WHERE")));
                            }
                        }
                        if bound.contains(alias) {
                            return Err(syntax(self.text, offset, format!("alias {alias} is already bound in WHERE")));
                        }
                    }
                }
            }
        }
        for v in &q.group_by {
            if !bound.contains(v) {
                return Err(syntax(self.text, offset, format!("GROUP BY variable {v} is not bound in WHERE")));
            }
        }
        Ok(())
    }

    fn group(&mut self) -> Result<GroupPattern, SparqlError> {
        self.expect_punct("{")?;
        let mut elements = Vec::new();
        loop {
            self.check_unsupported()?;
            if self.eat_punct("}") {
                break;
            }
            if self.eat_keyword("FILTER") {
                elements.push(PatternElement::Filter(self.bracketed_expr()?));
                self.eat_punct(".");
                continue;
            }
            if self.is_punct("{") {
                let save = self.pos;
                self.pos += 1;
                if self.is_keyword("SELECT") {
                    let q = self.select()?;
                    self.expect_punct("}")?;
                    elements.push(PatternElement::SubSelect(Box::new(q)));
                } else {
                    self.pos = save;
                    let g = self.group()?;
                    if self.is_keyword("UNION") {
                        return Err(SparqlError::Unsupported("UNION".into()));
                    }
                    elements.push(PatternElement::Group(g));
                }
                self.eat_punct(".");
                continue;
            }
            if self.peek().is_none() {
                return Err(self.err("unterminated group"));
            }
            self.triples_block(&mut elements)?;
            if !self.eat_punct(".") && !self.is_punct("}") {
                self.check_unsupported()?;
                if !self.is_keyword("FILTER") && !self.is_punct("{") {
                    return Err(self.err("expected `.` or `}`"));
                }
            }
        }
        Ok(GroupPattern { elements })
    }

    fn triples_block(&mut self, out: &mut Vec<PatternElement>) -> Result<(), SparqlError> {
        let subject = self.term_pattern(false)?;
        loop {
            let predicate = if self.eat_keyword("a") {
                TermPattern::Term(Term::Iri(rdf::type_()))
            } else {
                self.term_pattern(false)?
            };
            if let TermPattern::Term(t) = &predicate {
                if !t.is_iri() {
                    return Err(self.err("predicate must be an IRI or variable"));
                }
            }
            loop {
                let object = self.term_pattern(true)?;
                out.push(PatternElement::Triple(TriplePattern {
                    subject: subject.clone(),
                    predicate: predicate.clone(),
                    object,
                }));
                if !self.eat_punct(",") {
                    break;
                }
            }
            if !self.eat_punct(";") {
                break;
            }
            if self.is_punct(".") || self.is_punct("}") {
                break;
            }
        }
        Ok(())
    }

    fn term_pattern(&mut self, allow_literal: bool) -> Result<TermPattern, SparqlError> {
        if let Some(Tok::Var(v)) = self.peek().cloned() {
            self.pos += 1;
            return Ok(TermPattern::Var(Var::new(v)));
        }
        let save = self.pos;
        let t = self.constant()?;
        if t.is_literal() && !allow_literal {
            self.pos = save;
            return Err(self.err("literal not allowed here"));
        }
        Ok(TermPattern::Term(t))
    }

    fn iri(&self, raw: &str) -> Result<Iri, SparqlError> {
        Iri::new(raw).map_err(|e| self.err(e.to_string()))
    }

    fn constant(&mut self) -> Result<Term, SparqlError> {
        self.check_unsupported()?;
        let Some(tok) = self.next() else {
            return Err(self.err("unexpected end of input"));
        };
        let term = match tok {
            Tok::IriRef(s) => {
                self.pos -= 1;
                let iri = self.iri(&s)?;
                self.pos += 1;
                Term::Iri(iri)
            }
            Tok::PName(prefix, local) => {
                let Some(ns) = self.prefixes.get(&prefix) else {
                    self.pos -= 1;
                    return Err(self.err(format!("undeclared prefix `{prefix}:`")));
                };
                let full = format!("{ns}{local}");
                self.pos -= 1;
                let iri = self.iri(&full)?;
                self.pos += 1;
                Term::Iri(iri)
            }
            Tok::Str(s) => {
                if let Some(Tok::LangTag(lang)) = self.peek().cloned() {
                    self.pos += 1;
                    Term::Literal(Literal::lang(s, lang))
                } else if self.eat_punct("^^") {
                    match self.constant()? {
                        Term::Iri(dt) => Term::Literal(Literal::typed(s, dt)),
                        _ => return Err(self.err("expected datatype IRI")),
                    }
                } else {
                    Term::Literal(Literal::string(s))
                }
            }
            Tok::Integer(s) => Term::Literal(Literal::typed(s, xsd::integer())),
            Tok::Decimal(s) => Term::Literal(Literal::typed(s, xsd::decimal())),
            Tok::Double(s) => Term::Literal(Literal::typed(s, xsd::double())),
            Tok::Word(w) if w == "true" || w == "false" => Term::Literal(Literal::typed(w, xsd::boolean())),
            _ => {
                self.pos -= 1;
                return Err(self.err("expected a term"));
            }
        };
        Ok(term)
    }

    fn bracketed_expr(&mut self) -> Result<Expr, SparqlError> {
        self.check_unsupported()?;
        self.expect_punct("(")?;
        let e = self.or_expr()?;
        self.expect_punct(")")?;
        Ok(e)
    }

    fn or_expr(&mut self) -> Result<Expr, SparqlError> {
        let mut e = self.and_expr()?;
        while self.eat_punct("||") {
            e = Expr::Or(Box::new(e), Box::new(self.and_expr()?));
        }
        Ok(e)
    }

    fn and_expr(&mut self) -> Result<Expr, SparqlError> {
        let mut e = self.relational()?;
        while self.eat_punct("&&") {
            e = Expr::And(Box::new(e), Box::new(self.relational()?));
        }
        Ok(e)
    }

    fn relational(&mut self) -> Result<Expr, SparqlError> {
        let left = self.unary()?;
        let op = match self.peek() {
            Some(Tok::Punct("=")) => CompareOp::Eq,
            Some(Tok::Punct("!=")) => CompareOp::Ne,
            Some(Tok::Punct("<")) => CompareOp::Lt,
            Some(Tok::Punct("<=")) => CompareOp::Le,
            Some(Tok::Punct(">")) => CompareOp::Gt,
            Some(Tok::Punct(">=")) => CompareOp::Ge,
            _ => return Ok(left),
        };
        self.pos += 1;
        let right = self.unary()?;
        Ok(Expr::Compare(op, Box::new(left), Box::new(right)))
    }

    fn unary(&mut self) -> Result<Expr, SparqlError> {
        if self.eat_punct("!") {
            return Ok(Expr::Not(Box::new(self.unary()?)));
        }
        if self.is_punct("(") {
            return self.bracketed_expr();
        }
        if let Some(Tok::Var(v)) = self.peek().cloned() {
            self.pos += 1;
            return Ok(Expr::Var(Var::new(v)));
        }
        if let Some(Tok::Word(w)) = self.peek() {
            if w != "true" && w != "false" {
                return Err(SparqlError::Unsupported(format!("function {}", w.to_ascii_uppercase())));
            }
        }
        Ok(Expr::Const(self.constant()?))
    }
}
