//! RDF terms of the triple projection and their N-Triples form.

use std::fmt::Write as _;

use serde::Serialize;

use crate::ids::NodeId;
use crate::model::{Datatype, Literal, XSD};
use crate::vocab;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(tag = "type", rename_all = "camelCase")]
pub enum Term {
    Node { id: NodeId },
    Iri { iri: String },
    Literal { value: String, datatype: Datatype },
}

impl Term {
    pub fn node(id: NodeId) -> Self {
        Term::Node { id }
    }

    /// An IRI term; IRIs inside the node paths become `Term::Node`.
    pub fn iri(iri: &str) -> Self {
        match vocab::node_id_from_iri(iri) {
            Some(id) => Term::Node { id },
            None => Term::Iri {
                iri: iri.to_string(),
            },
        }
    }

    pub fn literal(lit: &Literal) -> Self {
        Term::Literal {
            value: lit.lexical.clone(),
            datatype: lit.datatype,
        }
    }

    pub fn string(value: &str) -> Self {
        Term::Literal {
            value: value.to_string(),
            datatype: Datatype::String,
        }
    }

    pub fn as_node(&self) -> Option<&NodeId> {
        match self {
            Term::Node { id } => Some(id),
            _ => None,
        }
    }

    pub fn iri_string(&self) -> Option<String> {
        match self {
            Term::Node { id } => Some(vocab::node_iri(id)),
            Term::Iri { iri } => Some(iri.clone()),
            Term::Literal { .. } => None,
        }
    }

    pub fn to_ntriples(&self) -> String {
        let mut out = String::new();
        self.write_ntriples(&mut out);
        out
    }

    pub fn write_ntriples(&self, out: &mut String) {
        match self {
            Term::Node { id } => {
                out.push('<');
                out.push_str(&vocab::node_iri(id));
                out.push('>');
            }
            Term::Iri { iri } => {
                out.push('<');
                out.push_str(iri);
                out.push('>');
            }
            Term::Literal { value, datatype } => {
                out.push('"');
                escape_into(value, out);
                out.push_str("\"^^<");
                out.push_str(XSD);
                out.push_str(datatype.as_str());
                out.push('>');
            }
        }
    }
}

pub fn escape_into(value: &str, out: &mut String) {
    for c in value.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '"' => out.push_str("\\\""),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if (c as u32) < 0x20 || c as u32 == 0x7f => {
                let _ = write!(out, "\\u{:04X}", c as u32);
            }
            c => out.push(c),
        }
    }
}

/// Characters N-Triples forbids inside `<...>`.
fn iri_char_ok(c: char) -> bool {
    !(c as u32 <= 0x20 || matches!(c, '<' | '>' | '"' | '{' | '}' | '|' | '^' | '`' | '\\'))
}

/// Cursor over one line of term syntax.
pub(crate) struct TermReader<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> TermReader<'a> {
    pub fn new(src: &'a str) -> Self {
        TermReader { src, pos: 0 }
    }

    pub fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    pub fn skip_ws(&mut self) {
        let rest = self.rest();
        self.pos += rest.len() - rest.trim_start_matches([' ', '\t']).len();
    }

    pub fn at_end(&self) -> bool {
        self.pos >= self.src.len()
    }

    pub fn peek(&self) -> Option<char> {
        self.rest().chars().next()
    }

    pub fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    /// `<iri>`; the cursor must be on `<`.
    pub fn read_iri(&mut self) -> Result<String, String> {
        if !self.eat('<') {
            return Err("expected `<`".into());
        }
        let rest = self.rest();
        let end = rest.find('>').ok_or("unterminated IRI")?;
        let iri = &rest[..end];
        if iri.is_empty() || !iri.chars().all(iri_char_ok) {
            return Err(format!("invalid IRI `<{iri}>`"));
        }
        self.pos += end + 1;
        Ok(iri.to_string())
    }

    /// Quoted lexical form with escapes; the cursor must be on `"`.
    pub fn read_quoted(&mut self) -> Result<String, String> {
        if !self.eat('"') {
            return Err("expected `\"`".into());
        }
        let mut out = String::new();
        let mut chars = self.rest().char_indices();
        while let Some((i, c)) = chars.next() {
            match c {
                '"' => {
                    self.pos += i + 1;
                    return Ok(out);
                }
                '\\' => {
                    let (_, e) = chars.next().ok_or("dangling escape")?;
                    match e {
                        't' => out.push('\t'),
                        'b' => out.push('\u{8}'),
                        'n' => out.push('\n'),
                        'r' => out.push('\r'),
                        'f' => out.push('\u{c}'),
                        '"' => out.push('"'),
                        '\'' => out.push('\''),
                        '\\' => out.push('\\'),
                        'u' | 'U' => {
                            let n = if e == 'u' { 4 } else { 8 };
                            let hex: String = (0..n)
                                .map(|_| chars.next().map(|(_, h)| h))
                                .collect::<Option<String>>()
                                .ok_or("short unicode escape")?;
                            let code = u32::from_str_radix(&hex, 16)
                                .map_err(|_| format!("bad unicode escape `{hex}`"))?;
                            out.push(char::from_u32(code).ok_or("invalid code point")?);
                        }
                        other => return Err(format!("unknown escape `\\{other}`")),
                    }
                }
                '\n' | '\r' => return Err("raw line break in literal".into()),
                c => out.push(c),
            }
        }
        Err("unterminated literal".into())
    }

    /// Literal with a mandatory `^^<xsd:...>` datatype.
    pub fn read_typed_literal(&mut self) -> Result<Term, String> {
        let value = self.read_quoted()?;
        if !(self.eat('^') && self.eat('^')) {
            return Err("literal without datatype".into());
        }
        let dt = self.read_iri()?;
        let datatype =
            Datatype::from_iri(&dt).ok_or_else(|| format!("unsupported datatype <{dt}>"))?;
        if !datatype.accepts(&value) {
            return Err(format!("`{value}` is not a valid {}", datatype.as_str()));
        }
        Ok(Term::Literal { value, datatype })
    }

    /// Characters up to the next whitespace.
    pub fn read_bare(&mut self) -> &'a str {
        let rest = self.rest();
        let end = rest.find([' ', '\t']).unwrap_or(rest.len());
        self.pos += end;
        &rest[..end]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn literal_escaping_reads_back() {
        let nasty = "quote \" back \\ nl \n tab \t cr \r bell \u{7} caf\u{e9}";
        let term = Term::string(nasty);
        let text = term.to_ntriples();
        assert!(!text.contains('\n'));
        let mut r = TermReader::new(&text);
        assert_eq!(r.read_typed_literal().unwrap(), term);
        assert!(r.at_end());
    }

    #[test]
    fn node_iris_become_nodes() {
        let t = Term::iri("http://cognet.example/ns#frame/Commerce_buy");
        assert_eq!(t, Term::node(NodeId::frame("Commerce_buy")));
        assert!(matches!(Term::iri(vocab::RDF_TYPE), Term::Iri { .. }));
    }

    #[test]
    fn reader_rejects_bad_iris_and_literals() {
        assert!(TermReader::new("<a b>").read_iri().is_err());
        assert!(TermReader::new("<abc").read_iri().is_err());
        assert!(TermReader::new("\"x\"").read_typed_literal().is_err());
        assert!(TermReader::new("\"x\"^^<http://www.w3.org/2001/XMLSchema#integer>")
            .read_typed_literal()
            .is_err());
    }
}
