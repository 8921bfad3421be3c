use std::collections::HashMap;

use super::{TurtleDocument, TurtleError};
use crate::term::{BlankNode, Iri, Literal, Term, Triple};
use crate::vocab::{rdf, xsd};

/// Parses a Turtle document. Relative IRIs are resolved against `base` (or a
/// leading `@base` directive); without either they are rejected.
pub fn parse(text: &str, base: Option<&str>) -> Result<TurtleDocument, TurtleError> {
    let mut p = Parser {
        chars: text.chars().collect(),
        pos: 0,
        line: 1,
        column: 1,
        prefixes: HashMap::new(),
        base: base.map(str::to_owned),
        base_locked: false,
        blank_labels: HashMap::new(),
        blank_counter: 0,
        doc: TurtleDocument::default(),
    };
    p.document()?;
    Ok(p.doc)
}

struct Parser {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    column: usize,
    prefixes: HashMap<String, String>,
    base: Option<String>,
    base_locked: bool,
    blank_labels: HashMap<String, BlankNode>,
    blank_counter: usize,
    doc: TurtleDocument,
}

impl Parser {
    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn peek_at(&self, offset: usize) -> Option<char> {
        self.chars.get(self.pos + offset).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.get(self.pos).copied()?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn starts_with(&self, s: &str) -> bool {
        s.chars().enumerate().all(|(i, c)| self.peek_at(i) == Some(c))
    }

    fn starts_with_keyword(&self, kw: &str) -> bool {
        kw.chars()
            .enumerate()
            .all(|(i, c)| self.peek_at(i).map(|x| x.eq_ignore_ascii_case(&c)).unwrap_or(false))
            && !self
                .peek_at(kw.chars().count())
                .map(|c| c.is_alphanumeric() || c == ':' || c == '_')
                .unwrap_or(false)
    }

    fn current_token(&self) -> String {
        let mut s = String::new();
        let mut i = self.pos;
        while let Some(&c) = self.chars.get(i) {
            if c.is_whitespace() || (s.len() >= 24) {
                break;
            }
            s.push(c);
            i += 1;
        }
        if s.is_empty() {
            "<end of input>".into()
        } else {
            s
        }
    }

    fn error(&self, message: impl Into<String>) -> TurtleError {
        TurtleError {
            line: self.line,
            column: self.column,
            token: self.current_token(),
            message: message.into(),
        }
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if c.is_whitespace() {
                self.bump();
            } else if c == '#' {
                while let Some(c) = self.bump() {
                    if c == '\n' {
                        break;
                    }
                }
            } else {
                break;
            }
        }
    }

    fn expect(&mut self, c: char) -> Result<(), TurtleError> {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.bump();
            Ok(())
        } else {
            Err(self.error(format!("expected `{c}`")))
        }
    }

    fn document(&mut self) -> Result<(), TurtleError> {
        loop {
            self.skip_ws();
            let Some(c) = self.peek() else {
                return Ok(());
            };
            if c == '@' {
                self.at_directive()?;
            } else if self.starts_with_keyword("PREFIX") {
                for _ in 0..6 {
                    self.bump();
                }
                self.prefix_decl()?;
            } else if self.starts_with_keyword("BASE") {
                for _ in 0..4 {
                    self.bump();
                }
                self.base_decl()?;
            } else {
                self.base_locked = true;
                self.triples()?;
                self.expect('.')?;
            }
        }
    }

    fn at_directive(&mut self) -> Result<(), TurtleError> {
        if self.starts_with("@prefix") {
            for _ in 0..7 {
                self.bump();
            }
            self.prefix_decl()?;
            self.expect('.')
        } else if self.starts_with("@base") {
            for _ in 0..5 {
                self.bump();
            }
            self.base_decl()?;
            self.expect('.')
        } else {
            Err(self.error("unknown directive"))
        }
    }

    fn prefix_decl(&mut self) -> Result<(), TurtleError> {
        self.skip_ws();
        let mut prefix = String::new();
        while let Some(c) = self.peek() {
            if c == ':' {
                break;
            }
            if c.is_alphanumeric() || c == '_' || c == '-' || c == '.' {
                prefix.push(c);
                self.bump();
            } else {
                return Err(self.error("invalid prefix name"));
            }
        }
        self.expect(':')?;
        self.skip_ws();
        let ns = self.iriref()?;
        self.prefixes.insert(prefix.clone(), ns.clone());
        self.doc.prefixes.retain(|(p, _)| p != &prefix);
        self.doc.prefixes.push((prefix, ns));
        Ok(())
    }

    fn base_decl(&mut self) -> Result<(), TurtleError> {
        if self.base_locked {
            return Err(self.error("@base redefinition is not supported"));
        }
        self.skip_ws();
        let iri = self.iriref()?;
        self.base = Some(iri);
        self.base_locked = true;
        Ok(())
    }

    /// Reads `<...>` and returns the resolved absolute IRI string.
    fn iriref(&mut self) -> Result<String, TurtleError> {
        if self.peek() != Some('<') {
            return Err(self.error("expected IRI"));
        }
        let (line, column) = (self.line, self.column);
        self.bump();
        let mut raw = String::new();
        loop {
            match self.bump() {
                Some('>') => break,
                Some('\\') => raw.push(self.unicode_escape()?),
                Some(c) if c.is_whitespace() || c == '<' || c == '"' => {
                    return Err(self.error("illegal character in IRI"))
                }
                Some(c) => raw.push(c),
                None => return Err(self.error("unterminated IRI")),
            }
        }
        self.resolve(&raw).map_err(|message| TurtleError {
            line,
            column,
            token: format!("<{raw}>"),
            message,
        })
    }

    fn resolve(&self, raw: &str) -> Result<String, String> {
        if Iri::new(raw).is_ok() {
            return Ok(raw.to_owned());
        }
        let Some(base) = &self.base else {
            return Err("relative IRI without a base".into());
        };
        if let Some(fragment) = raw.strip_prefix('#') {
            let stem = base.split('#').next().unwrap_or(base);
            return Ok(format!("{stem}#{fragment}"));
        }
        if raw.is_empty() {
            return Ok(base.clone());
        }
        let base_url = url::Url::parse(base).map_err(|e| format!("invalid base: {e}"))?;
        if base_url.cannot_be_a_base() {
            return Err(format!("cannot resolve `{raw}` against non-hierarchical base"));
        }
        base_url
            .join(raw)
            .map(|u| u.to_string())
            .map_err(|e| format!("cannot resolve relative IRI: {e}"))
    }

    fn unicode_escape(&mut self) -> Result<char, TurtleError> {
        let width = match self.bump() {
            Some('u') => 4,
            Some('U') => 8,
            _ => return Err(self.error("unsupported escape in IRI")),
        };
        self.hex_char(width)
    }

    fn hex_char(&mut self, width: usize) -> Result<char, TurtleError> {
        let mut code = 0u32;
        for _ in 0..width {
            let d = self
                .bump()
                .and_then(|c| c.to_digit(16))
                .ok_or_else(|| self.error("invalid unicode escape"))?;
            code = code * 16 + d;
        }
        char::from_u32(code).ok_or_else(|| self.error("invalid code point"))
    }

    fn triples(&mut self) -> Result<(), TurtleError> {
        self.skip_ws();
        if self.peek() == Some('[') {
            let subject = self.blank_property_list()?;
            self.skip_ws();
            if self.peek() != Some('.') {
                self.predicate_object_list(&subject)?;
            }
            Ok(())
        } else {
            let subject = self.subject()?;
            self.predicate_object_list(&subject)
        }
    }

    fn subject(&mut self) -> Result<Term, TurtleError> {
        self.skip_ws();
        match self.peek() {
            Some('<') => Ok(Term::Iri(self.iri_term()?)),
            Some('_') if self.peek_at(1) == Some(':') => Ok(self.blank_label()),
            Some('(') => Err(self.error("collections are not supported")),
            Some(c) if c.is_alphabetic() || c == ':' => {
                let name = self.read_name();
                match name.as_str() {
                    "a" | "true" | "false" => Err(self.error("keyword in subject position")),
                    _ => self.pname_to_iri(&name).map(Term::Iri),
                }
            }
            _ => Err(self.error("expected subject")),
        }
    }

    fn iri_term(&mut self) -> Result<Iri, TurtleError> {
        let s = self.iriref()?;
        Iri::new(&s).map_err(|e| self.error(e.to_string()))
    }

    fn fresh_blank(&mut self) -> BlankNode {
        self.blank_counter += 1;
        BlankNode::new(format!("b{}", self.blank_counter))
    }

    fn blank_label(&mut self) -> Term {
        self.bump();
        self.bump();
        let mut label = String::new();
        while let Some(c) = self.peek() {
            if c.is_alphanumeric() || c == '_' || c == '-' || (c == '.' && self.label_continues()) {
                label.push(c);
                self.bump();
            } else {
                break;
            }
        }
        if let Some(b) = self.blank_labels.get(&label) {
            return Term::Blank(b.clone());
        }
        let b = self.fresh_blank();
        self.blank_labels.insert(label, b.clone());
        Term::Blank(b)
    }

    fn label_continues(&self) -> bool {
        self.peek_at(1)
            .map(|c| c.is_alphanumeric() || c == '_' || c == '-' || c == ':' || c == '%')
            .unwrap_or(false)
    }

    /// Reads a prefixed name or bare keyword.
    fn read_name(&mut self) -> String {
        let mut name = String::new();
        while let Some(c) = self.peek() {
            let ok = c.is_alphanumeric()
                || c == '_'
                || c == '-'
                || c == ':'
                || c == '%'
                || (c == '.' && self.label_continues());
            if ok {
                name.push(c);
                self.bump();
            } else if c == '\\' && self.peek_at(1).map(|n| "_~.-!$&'()*+,;=/?#@%".contains(n)).unwrap_or(false) {
                self.bump();
                if let Some(n) = self.bump() {
                    name.push(n);
                }
            } else {
                break;
            }
        }
        name
    }

    fn pname_to_iri(&self, name: &str) -> Result<Iri, TurtleError> {
        let Some((prefix, local)) = name.split_once(':') else {
            return Err(self.error(format!("expected prefixed name, found `{name}`")));
        };
        let Some(ns) = self.prefixes.get(prefix) else {
            return Err(self.error(format!("undeclared prefix `{prefix}:`")));
        };
        Iri::new(format!("{ns}{local}")).map_err(|e| self.error(e.to_string()))
    }

    fn predicate_object_list(&mut self, subject: &Term) -> Result<(), TurtleError> {
        loop {
            self.skip_ws();
            let predicate = self.verb()?;
            self.object_list(subject, &predicate)?;
            self.skip_ws();
            if self.peek() != Some(';') {
                return Ok(());
            }
            while self.peek() == Some(';') {
                self.bump();
                self.skip_ws();
            }
            if matches!(self.peek(), Some('.') | Some(']') | None) {
                return Ok(());
            }
        }
    }

    fn verb(&mut self) -> Result<Term, TurtleError> {
        self.skip_ws();
        match self.peek() {
            Some('<') => Ok(Term::Iri(self.iri_term()?)),
            Some(c) if c.is_alphabetic() || c == ':' => {
                let name = self.read_name();
                if name == "a" {
                    Ok(Term::Iri(rdf::type_()))
                } else {
                    self.pname_to_iri(&name).map(Term::Iri)
                }
            }
            _ => Err(self.error("expected predicate")),
        }
    }

    fn object_list(&mut self, subject: &Term, predicate: &Term) -> Result<(), TurtleError> {
        loop {
            let object = self.object()?;
            self.doc.triples.push(Triple {
                subject: subject.clone(),
                predicate: predicate.clone(),
                object,
            });
            self.skip_ws();
            if self.peek() == Some(',') {
                self.bump();
            } else {
                return Ok(());
            }
        }
    }

    fn object(&mut self) -> Result<Term, TurtleError> {
        self.skip_ws();
        match self.peek() {
            Some('<') => Ok(Term::Iri(self.iri_term()?)),
            Some('_') if self.peek_at(1) == Some(':') => Ok(self.blank_label()),
            Some('[') => self.blank_property_list(),
            Some('(') => Err(self.error("collections are not supported")),
            Some('"') | Some('\'') => self.rdf_literal(),
            Some(c) if c.is_ascii_digit() || c == '+' || c == '-' || c == '.' => self.numeric_literal(),
            Some(c) if c.is_alphabetic() || c == ':' => {
                let name = self.read_name();
                match name.as_str() {
                    "true" => Ok(Term::Literal(Literal::boolean(true))),
                    "false" => Ok(Term::Literal(Literal::boolean(false))),
                    "a" => Err(self.error("`a` is only valid as a predicate")),
                    _ => self.pname_to_iri(&name).map(Term::Iri),
                }
            }
            _ => Err(self.error("expected object")),
        }
    }

    fn blank_property_list(&mut self) -> Result<Term, TurtleError> {
        self.expect('[')?;
        let node = Term::Blank(self.fresh_blank());
        self.skip_ws();
        if self.peek() != Some(']') {
            self.predicate_object_list(&node)?;
        }
        self.expect(']')?;
        Ok(node)
    }

    fn rdf_literal(&mut self) -> Result<Term, TurtleError> {
        let lexical = self.string()?;
        self.skip_ws();
        match self.peek() {
            Some('@') => {
                self.bump();
                let mut tag = String::new();
                while let Some(c) = self.peek() {
                    if c.is_ascii_alphanumeric() || (c == '-' && !tag.is_empty()) {
                        tag.push(c);
                        self.bump();
                    } else {
                        break;
                    }
                }
                if tag.is_empty() {
                    return Err(self.error("empty language tag"));
                }
                Ok(Term::Literal(Literal::lang(lexical, tag)))
            }
            Some('^') if self.peek_at(1) == Some('^') => {
                self.bump();
                self.bump();
                self.skip_ws();
                let dt = match self.peek() {
                    Some('<') => self.iri_term()?,
                    _ => {
                        let name = self.read_name();
                        self.pname_to_iri(&name)?
                    }
                };
                Ok(Term::Literal(Literal::typed(lexical, dt)))
            }
            _ => Ok(Term::Literal(Literal::string(lexical))),
        }
    }

    fn string(&mut self) -> Result<String, TurtleError> {
        let quote = self.bump().expect("caller checked quote");
        let long = self.peek() == Some(quote) && self.peek_at(1) == Some(quote);
        if long {
            self.bump();
            self.bump();
        }
        let mut out = String::new();
        loop {
            match self.bump() {
                None => return Err(self.error("unterminated string literal")),
                Some(c) if c == quote => {
                    if !long {
                        return Ok(out);
                    }
                    if self.peek() == Some(quote) && self.peek_at(1) == Some(quote) {
                        // Quotes immediately before the closing delimiter belong to the content.
                        while self.peek_at(2) == Some(quote) {
                            out.push(quote);
                            self.bump();
                        }
                        self.bump();
                        self.bump();
                        return Ok(out);
                    }
                    out.push(c);
                }
                Some('\\') => out.push(self.string_escape()?),
                Some('\n') | Some('\r') if !long => {
                    return Err(self.error("line break in short string literal"))
                }
                Some(c) => out.push(c),
            }
        }
    }

    fn string_escape(&mut self) -> Result<char, TurtleError> {
        match self.bump() {
            Some('"') => Ok('"'),
            Some('\'') => Ok('\''),
            Some('\\') => Ok('\\'),
            Some('n') => Ok('\n'),
            Some('t') => Ok('\t'),
            Some('r') => Ok('\r'),
            Some('b') => Ok('\u{8}'),
            Some('f') => Ok('\u{c}'),
            Some('u') => self.hex_char(4),
            Some('U') => self.hex_char(8),
            _ => Err(self.error("unsupported string escape")),
        }
    }

    fn numeric_literal(&mut self) -> Result<Term, TurtleError> {
        let mut s = String::new();
        if let Some(c @ ('+' | '-')) = self.peek() {
            s.push(c);
            self.bump();
        }
        let mut digits_before = 0;
        while let Some(c) = self.peek().filter(char::is_ascii_digit) {
            s.push(c);
            self.bump();
            digits_before += 1;
        }
        let mut datatype = xsd::integer();
        if self.peek() == Some('.') && self.peek_at(1).map(|c| c.is_ascii_digit()).unwrap_or(false) {
            s.push('.');
            self.bump();
            while let Some(c) = self.peek().filter(char::is_ascii_digit) {
                s.push(c);
                self.bump();
            }
            datatype = xsd::decimal();
        } else if digits_before == 0 {
            return Err(self.error("malformed number"));
        }
        if let Some(e @ ('e' | 'E')) = self.peek() {
            s.push(e);
            self.bump();
            if let Some(c @ ('+' | '-')) = self.peek() {
                s.push(c);
                self.bump();
            }
            let mut exp_digits = 0;
            while let Some(c) = self.peek().filter(char::is_ascii_digit) {
                s.push(c);
                self.bump();
                exp_digits += 1;
            }
            if exp_digits == 0 {
                return Err(self.error("malformed exponent"));
            }
            datatype = xsd::double();
        }
        Ok(Term::Literal(Literal::typed(s, datatype)))
    }
}
