//! Model formulas: a `+`-separated list of term calls such as
//! `edges + b1cov("tenure") + b2nodematch("hardskill", alpha = 0)`.
//!
//! Positional arguments come first (the attribute name, or the integer of
//! `b2star`/`b2degree`), then named ones: `alpha`, `beta`, `diff`, `keep`.
//! Booleans may be written `TRUE`/`FALSE` or `true`/`false`; `keep` takes a
//! string or `c("a", "b")`. A nodematch term without `alpha` or `beta` is a
//! profile template.

use crate::error::FormulaError;
use crate::terms::{Exponent, ModelSpec, ModelTerm, TermKind};

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Str(String),
    Num(String),
    LParen,
    RParen,
    Comma,
    Plus,
    Eq,
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    pos: usize,
}

fn err<T>(pos: usize, message: impl Into<String>) -> Result<T, FormulaError> {
    Err(FormulaError { pos, message: message.into() })
}

fn lex(src: &str) -> Result<Vec<Token>, FormulaError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut p = 0;
    while p < chars.len() {
        let c = chars[p];
        let pos = p + 1;
        match c {
            c if c.is_whitespace() => p += 1,
            '(' | ')' | ',' | '+' | '=' => {
                out.push(Token {
                    tok: match c {
                        '(' => Tok::LParen,
                        ')' => Tok::RParen,
                        ',' => Tok::Comma,
                        '+' => Tok::Plus,
                        _ => Tok::Eq,
                    },
                    pos,
                });
                p += 1;
            }
            '"' | '\'' => {
                let quote = c;
                let mut s = String::new();
                p += 1;
                loop {
                    match chars.get(p) {
                        None => return err(pos, "unterminated string"),
                        Some(&ch) if ch == quote => break,
                        Some('\\') if chars.get(p + 1).is_some() => {
                            s.push(chars[p + 1]);
                            p += 2;
                        }
                        Some(&ch) => {
                            s.push(ch);
                            p += 1;
                        }
                    }
                }
                p += 1;
                out.push(Token { tok: Tok::Str(s), pos });
            }
            c if c.is_ascii_digit() || c == '.' || c == '-' => {
                let start = p;
                p += 1;
                while p < chars.len() {
                    let d = chars[p];
                    let exp_sign = (d == '-' || d == '+') && matches!(chars[p - 1], 'e' | 'E');
                    if d.is_ascii_digit() || d == '.' || d == 'e' || d == 'E' || exp_sign {
                        p += 1;
                    } else {
                        break;
                    }
                }
                out.push(Token { tok: Tok::Num(chars[start..p].iter().collect()), pos });
            }
            c if c.is_alphabetic() || c == '_' => {
                let start = p;
                while p < chars.len() && (chars[p].is_alphanumeric() || chars[p] == '_' || chars[p] == '.') {
                    p += 1;
                }
                out.push(Token { tok: Tok::Ident(chars[start..p].iter().collect()), pos });
            }
            other => return err(pos, format!("unexpected character `{other}`")),
        }
    }
    Ok(out)
}

#[derive(Debug)]
enum Value {
    Str(String),
    Num(String),
    Bool(bool),
    List(Vec<String>),
}

struct Parser {
    toks: Vec<Token>,
    at: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|t| &t.tok)
    }

    fn pos(&self) -> usize {
        self.toks.get(self.at).map_or(self.end, |t| t.pos)
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.toks.get(self.at).cloned();
        self.at += 1;
        t
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<(), FormulaError> {
        let pos = self.pos();
        match self.next() {
            Some(t) if t.tok == want => Ok(()),
            _ => err(pos, format!("expected {what}")),
        }
    }

    fn value(&mut self) -> Result<Value, FormulaError> {
        let pos = self.pos();
        match self.next().map(|t| t.tok) {
            Some(Tok::Str(s)) => Ok(Value::Str(s)),
            Some(Tok::Num(n)) => Ok(Value::Num(n)),
            Some(Tok::Ident(id)) => match id.as_str() {
                "TRUE" | "true" | "T" => Ok(Value::Bool(true)),
                "FALSE" | "false" | "F" => Ok(Value::Bool(false)),
                "c" => {
                    self.expect(Tok::LParen, "`(` after c")?;
                    let mut items = Vec::new();
                    if self.peek() != Some(&Tok::RParen) {
                        loop {
                            let p = self.pos();
                            match self.next().map(|t| t.tok) {
                                Some(Tok::Str(s)) | Some(Tok::Num(s)) => items.push(s),
                                _ => return err(p, "expected a level in c(...)"),
                            }
                            if self.peek() == Some(&Tok::Comma) {
                                self.at += 1;
                            } else {
                                break;
                            }
                        }
                    }
                    self.expect(Tok::RParen, "`)` closing c(...)")?;
                    Ok(Value::List(items))
                }
                other => err(pos, format!("unexpected identifier `{other}` as value")),
            },
            _ => err(pos, "expected a value"),
        }
    }

    fn term(&mut self) -> Result<ModelTerm, FormulaError> {
        let pos = self.pos();
        let name = match self.next().map(|t| t.tok) {
            Some(Tok::Ident(id)) => id,
            _ => return err(pos, "expected a term name"),
        };
        let kind = TermKind::from_name(&name)
            .ok_or_else(|| FormulaError { pos, message: format!("unknown term `{name}`") })?;
        let mut term = ModelTerm::new(kind);
        let mut positional = Vec::new();
        let mut seen_named: Vec<String> = Vec::new();
        let (mut alpha, mut beta) = (None, None);
        if self.peek() == Some(&Tok::LParen) {
            self.at += 1;
            if self.peek() != Some(&Tok::RParen) {
                loop {
                    let apos = self.pos();
                    let named = matches!(
                        (self.peek(), self.toks.get(self.at + 1).map(|t| &t.tok)),
                        (Some(Tok::Ident(_)), Some(Tok::Eq))
                    );
                    if named {
                        let Some(Tok::Ident(key)) = self.next().map(|t| t.tok) else { unreachable!() };
                        self.at += 1;
                        if seen_named.contains(&key) {
                            return err(apos, format!("argument `{key}` given twice"));
                        }
                        seen_named.push(key.clone());
                        let vpos = self.pos();
                        let v = self.value()?;
                        match (key.as_str(), v) {
                            ("alpha", Value::Num(n)) => alpha = Some((number(&n, vpos)?, apos)),
                            ("beta", Value::Num(n)) => beta = Some((number(&n, vpos)?, apos)),
                            ("diff", Value::Bool(b)) => term.diff = b,
                            ("keep", Value::Str(s)) => term.keep = Some(vec![s]),
                            ("keep", Value::List(l)) => term.keep = Some(l),
                            ("alpha" | "beta" | "diff" | "keep", _) => {
                                return err(vpos, format!("wrong value type for `{key}`"))
                            }
                            _ => return err(apos, format!("unknown argument `{key}` for {name}")),
                        }
                    } else {
                        if !seen_named.is_empty() {
                            return err(apos, "positional argument after named ones");
                        }
                        positional.push((self.value()?, apos));
                    }
                    if self.peek() == Some(&Tok::Comma) {
                        self.at += 1;
                    } else {
                        break;
                    }
                }
            }
            self.expect(Tok::RParen, "`,` or `)`")?;
        }

        if positional.len() > 1 {
            return err(positional[1].1, format!("{name} takes at most one positional argument"));
        }
        if let Some((v, apos)) = positional.pop() {
            match v {
                Value::Str(s) if kind.needs_attribute() => term.attribute = Some(s),
                Value::Num(n) if kind.needs_order() => {
                    term.order = Some(n.parse::<usize>().map_err(|_| FormulaError {
                        pos: apos,
                        message: format!("`{n}` is not a non-negative integer"),
                    })?)
                }
                _ => return err(apos, format!("unexpected argument for {name}")),
            }
        }
        match (alpha, beta) {
            (Some(_), Some((_, bpos))) => {
                return err(bpos, "alpha and beta are mutually exclusive")
            }
            (Some((a, p)), None) | (None, Some((a, p))) if !(0.0..=1.0).contains(&a) => {
                return err(p, format!("exponent {a} outside [0, 1]"))
            }
            (Some((a, _)), None) => term.exponent = Some(Exponent::Alpha(a)),
            (None, Some((b, _))) => term.exponent = Some(Exponent::Beta(b)),
            (None, None) => {}
        }
        term.validate(true).map_err(|e| FormulaError { pos, message: e.to_string() })?;
        Ok(term)
    }
}

fn number(s: &str, pos: usize) -> Result<f64, FormulaError> {
    s.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| FormulaError { pos, message: format!("`{s}` is not a number") })
}

/// Parses a formula into a model spec.
pub fn parse(text: &str) -> Result<ModelSpec, FormulaError> {
    let toks = lex(text)?;
    let mut p = Parser { toks, at: 0, end: text.chars().count() + 1 };
    let mut terms = vec![p.term()?];
    while p.at < p.toks.len() {
        p.expect(Tok::Plus, "`+` between terms")?;
        terms.push(p.term()?);
    }
    Ok(ModelSpec::new(terms))
}

fn quote(s: &str) -> String {
    let mut q = String::with_capacity(s.len() + 2);
    q.push('"');
    for ch in s.chars() {
        if ch == '"' || ch == '\\' {
            q.push('\\');
        }
        q.push(ch);
    }
    q.push('"');
    q
}

fn format_term(t: &ModelTerm) -> String {
    let mut args = Vec::new();
    if let Some(a) = &t.attribute {
        args.push(quote(a));
    }
    if let Some(o) = t.order {
        args.push(o.to_string());
    }
    match t.exponent {
        Some(Exponent::Alpha(a)) => args.push(format!("alpha = {a}")),
        Some(Exponent::Beta(b)) => args.push(format!("beta = {b}")),
        None => {}
    }
    if t.diff {
        args.push("diff = TRUE".into());
    }
    if let Some(keep) = &t.keep {
        let items: Vec<String> = keep.iter().map(|s| quote(s)).collect();
        args.push(format!("keep = c({})", items.join(", ")));
    }
    if args.is_empty() {
        t.kind.name().to_string()
    } else {
        format!("{}({})", t.kind.name(), args.join(", "))
    }
}

/// Canonical text of a spec; `parse(&format(s)) == s`.
pub fn format(spec: &ModelSpec) -> String {
    spec.terms.iter().map(format_term).collect::<Vec<_>>().join(" + ")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Mode;

    #[test]
    fn parses_paper_listings() {
        let s = parse(r#"edges + b2nodematch("gender", beta = 0.1, diff = TRUE)"#).unwrap();
        assert_eq!(
            s.terms,
            vec![
                ModelTerm::edges(),
                ModelTerm::nodematch(Mode::Two, "gender", Exponent::Beta(0.1)).diff(true)
            ]
        );
        let t1 = r#"edges + b1cov("tenure") + b1factor("gender") + b2nodematch("hardskill", alpha = 0)"#;
        let spec = parse(t1).unwrap();
        assert_eq!(format(&spec), t1);
        assert_eq!(parse("edges").unwrap().terms, vec![ModelTerm::edges()]);
        assert_eq!(format(&ModelSpec::new(vec![ModelTerm::edges()])), "edges");
    }

    #[test]
    fn rejects_bad_input() {
        let e = parse(r#"b2nodematch("x", alpha = 0.5, beta = 0.5)"#).unwrap_err();
        assert!(e.message.contains("mutually exclusive"), "{e}");
        assert_eq!(e.pos, 31);
        assert!(parse("edges + foo").unwrap_err().message.contains("unknown term"));
        assert!(parse(r#"b1nodematch("x", alpha = 1.5)"#).unwrap_err().message.contains("outside"));
        assert!(parse("edges +").is_err());
        assert!(parse("edges edges").is_err());
        assert!(parse(r#"b1cov("x""#).is_err());
        assert!(parse("b1cov").is_err());
        assert!(parse(r#"b1cov("x", diff = TRUE)"#).is_err());
        assert!(parse(r#"b1nodematch(alpha = 1, "x")"#).is_err());
        assert!(parse("b2star(2.5)").is_err());
    }

    #[test]
    fn whitespace_and_booleans() {
        let a = parse(r#"  edges+b1nodematch( "c" ,beta=1,diff=true,keep=c("A","B") )+b2star(2)+b2degree(1)"#)
            .unwrap();
        let b = parse(
            r#"edges + b1nodematch("c", beta = 1, diff = TRUE, keep = c("A", "B")) + b2star(2) + b2degree(1)"#,
        )
        .unwrap();
        assert_eq!(a, b);
        assert_eq!(parse(&format(&a)).unwrap(), a);
        let unbound = parse(r#"b2nodematch("c")"#).unwrap();
        assert_eq!(unbound.terms[0].exponent, None);
    }
}
