//! Recursive-descent parser for model files.
//!
//! Statements are separated by `;` or newlines; newlines inside brackets are
//! ignored and `#` starts a comment. See `docs/model-grammar.ebnf`.

use crate::dsl::ast::{Expr, Func, Var};
use crate::dsl::model::{Domain, Interval, Lagrangian, ModelSpec};
use crate::error::{FinslerError, Result};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Str(String),
    Sym(char),
    Sep,
    Eof,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(src: &str) -> Result<Vec<Token>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let mut depth = 0i32;
    while i < chars.len() {
        let c = chars[i];
        let (tl, tc) = (line, col);
        let push = |out: &mut Vec<Token>, tok| out.push(Token { tok, line: tl, col: tc });
        match c {
            '\n' => {
                if depth == 0 {
                    push(&mut out, Tok::Sep);
                }
                i += 1;
                line += 1;
                col = 1;
                continue;
            }
            '#' => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
                continue;
            }
            c if c.is_whitespace() => {}
            ';' => push(&mut out, Tok::Sep),
            '(' | '[' => {
                depth += 1;
                push(&mut out, Tok::Sym(c));
            }
            ')' | ']' => {
                depth -= 1;
                push(&mut out, Tok::Sym(c));
            }
            '+' | '-' | '*' | '/' | '^' | ',' | '=' => push(&mut out, Tok::Sym(c)),
            '"' => {
                let start = i + 1;
                let mut j = start;
                while j < chars.len() && chars[j] != '"' && chars[j] != '\n' {
                    j += 1;
                }
                if j >= chars.len() || chars[j] != '"' {
                    return Err(FinslerError::Syntax { line: tl, col: tc, msg: "unterminated string".into() });
                }
                push(&mut out, Tok::Str(chars[start..j].iter().collect()));
                col += j + 1 - i;
                i = j + 1;
                continue;
            }
            c if c.is_ascii_digit() || c == '.' => {
                let start = i;
                let mut j = i;
                while j < chars.len() && (chars[j].is_ascii_digit() || chars[j] == '.') {
                    j += 1;
                }
                if j < chars.len() && (chars[j] == 'e' || chars[j] == 'E') {
                    let mut k = j + 1;
                    if k < chars.len() && (chars[k] == '+' || chars[k] == '-') {
                        k += 1;
                    }
                    if k < chars.len() && chars[k].is_ascii_digit() {
                        while k < chars.len() && chars[k].is_ascii_digit() {
                            k += 1;
                        }
                        j = k;
                    }
                }
                let text: String = chars[start..j].iter().collect();
                let v: f64 = text.parse().map_err(|_| FinslerError::Syntax {
                    line: tl,
                    col: tc,
                    msg: format!("malformed number `{text}`"),
                })?;
                push(&mut out, Tok::Num(v));
                col += j - i;
                i = j;
                continue;
            }
            c if c.is_alphabetic() || c == '_' => {
                let start = i;
                let mut j = i;
                while j < chars.len() && (chars[j].is_alphanumeric() || chars[j] == '_') {
                    j += 1;
                }
                push(&mut out, Tok::Ident(chars[start..j].iter().collect()));
                col += j - i;
                i = j;
                continue;
            }
            other => {
                return Err(FinslerError::Syntax { line: tl, col: tc, msg: format!("unexpected character `{other}`") })
            }
        }
        i += 1;
        col += 1;
    }
    out.push(Token { tok: Tok::Eof, line, col });
    Ok(out)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn next(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err<T>(&self, t: &Token, msg: impl Into<String>) -> Result<T> {
        Err(FinslerError::Syntax { line: t.line, col: t.col, msg: msg.into() })
    }

    fn expect_sym(&mut self, c: char) -> Result<()> {
        let t = self.next();
        if t.tok == Tok::Sym(c) {
            Ok(())
        } else {
            self.err(&t, format!("expected `{c}`, found {}", describe(&t.tok)))
        }
    }

    fn at_sym(&self, c: char) -> bool {
        self.peek().tok == Tok::Sym(c)
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            if self.at_sym('+') {
                self.next();
                lhs = Expr::add(lhs, self.term()?);
            } else if self.at_sym('-') {
                self.next();
                lhs = Expr::sub(lhs, self.term()?);
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            if self.at_sym('*') {
                self.next();
                lhs = Expr::mul(lhs, self.unary()?);
            } else if self.at_sym('/') {
                self.next();
                lhs = Expr::div(lhs, self.unary()?);
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.at_sym('-') {
            self.next();
            return Ok(Expr::neg(self.unary()?));
        }
        if self.at_sym('+') {
            self.next();
            return self.unary();
        }
        let base = self.atom()?;
        if self.at_sym('^') {
            self.next();
            return Ok(Expr::pow(base, self.unary()?));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        let t = self.next();
        match &t.tok {
            Tok::Num(v) => Ok(Expr::Num(*v)),
            Tok::Sym('(') => {
                let e = self.expr()?;
                self.expect_sym(')')?;
                Ok(e)
            }
            Tok::Ident(name) => {
                if let Some(f) = Func::from_name(name) {
                    self.expect_sym('(')?;
                    let e = self.expr()?;
                    self.expect_sym(')')?;
                    return Ok(Expr::call(f, e));
                }
                match parse_var(name) {
                    Some(Ok(v)) => Ok(Expr::Var(v)),
                    Some(Err(())) => Err(FinslerError::VariableOutOfRange { name: name.clone(), dim: 0 }),
                    None => Err(FinslerError::UnknownIdentifier { name: name.clone(), line: t.line, col: t.col }),
                }
            }
            other => self.err(&t, format!("expected an expression, found {}", describe(other))),
        }
    }

    fn signed_number(&mut self) -> Result<f64> {
        let neg = if self.at_sym('-') {
            self.next();
            true
        } else {
            false
        };
        let t = self.next();
        match t.tok {
            Tok::Num(v) => Ok(if neg { -v } else { v }),
            ref other => self.err(&t, format!("expected a number, found {}", describe(other))),
        }
    }

    fn at_statement_end(&self) -> bool {
        matches!(self.peek().tok, Tok::Sep | Tok::Eof)
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Num(v) => format!("number {v}"),
        Tok::Ident(s) => format!("`{s}`"),
        Tok::Str(s) => format!("string \"{s}\""),
        Tok::Sym(c) => format!("`{c}`"),
        Tok::Sep => "end of statement".into(),
        Tok::Eof => "end of input".into(),
    }
}

/// `x3` → `Var::X(2)`; `Some(Err)` for index 0.
fn parse_var(name: &str) -> Option<std::result::Result<Var, ()>> {
    let (head, digits) = name.split_at(1);
    if digits.is_empty() || !digits.chars().all(|c| c.is_ascii_digit()) {
        return None;
    }
    let k: usize = digits.parse().ok()?;
    if k == 0 {
        return Some(Err(()));
    }
    match head {
        "x" => Some(Ok(Var::X(k - 1))),
        "y" => Some(Ok(Var::Y(k - 1))),
        _ => None,
    }
}

enum RangeTarget {
    AllX,
    AllY,
    One(Var),
}

/// Parses and validates a model source text.
pub fn parse_model(source: &str) -> Result<ModelSpec> {
    let mut p = Parser { toks: lex(source)?, pos: 0 };
    let mut dim: Option<usize> = None;
    let mut name: Option<String> = None;
    let mut l2: Option<Expr> = None;
    let mut zeta: Option<Vec<Expr>> = None;
    let mut ranges: Vec<(RangeTarget, Interval, Token)> = Vec::new();

    loop {
        while p.peek().tok == Tok::Sep {
            p.next();
        }
        let t = p.next();
        let kw = match &t.tok {
            Tok::Eof => break,
            Tok::Ident(s) => s.clone(),
            other => return p.err(&t, format!("expected a statement keyword, found {}", describe(other))),
        };
        match kw.as_str() {
            "dim" => {
                let v = p.next();
                match v.tok {
                    Tok::Num(d) if d.fract() == 0.0 && d >= 1.0 => dim = Some(d as usize),
                    _ => return p.err(&v, "dim expects a positive integer"),
                }
            }
            "name" => {
                let v = p.next();
                match v.tok {
                    Tok::Ident(s) | Tok::Str(s) => name = Some(s),
                    ref other => return p.err(&v, format!("name expects a label, found {}", describe(other))),
                }
            }
            "L2" => {
                p.expect_sym('=')?;
                l2 = Some(p.expr()?);
            }
            "zeta" => {
                p.expect_sym('=')?;
                p.expect_sym('(')?;
                let mut comps = vec![p.expr()?];
                while p.at_sym(',') {
                    p.next();
                    comps.push(p.expr()?);
                }
                p.expect_sym(')')?;
                zeta = Some(comps);
            }
            "domain" => {
                if p.at_statement_end() {
                    return p.err(p.peek(), "domain expects at least one range");
                }
                while !p.at_statement_end() {
                    let vt = p.next();
                    let target = match &vt.tok {
                        Tok::Ident(s) if s == "x" => RangeTarget::AllX,
                        Tok::Ident(s) if s == "y" => RangeTarget::AllY,
                        Tok::Ident(s) => match parse_var(s) {
                            Some(Ok(v)) => RangeTarget::One(v),
                            Some(Err(())) => {
                                return Err(FinslerError::VariableOutOfRange { name: s.clone(), dim: dim.unwrap_or(0) })
                            }
                            None => {
                                return Err(FinslerError::UnknownIdentifier { name: s.clone(), line: vt.line, col: vt.col })
                            }
                        },
                        other => return p.err(&vt, format!("expected a coordinate name, found {}", describe(other))),
                    };
                    let kw_in = p.next();
                    if kw_in.tok != Tok::Ident("in".into()) {
                        return p.err(&kw_in, format!("expected `in`, found {}", describe(&kw_in.tok)));
                    }
                    p.expect_sym('[')?;
                    let lo = p.signed_number()?;
                    p.expect_sym(',')?;
                    let hi = p.signed_number()?;
                    p.expect_sym(']')?;
                    if !(lo <= hi) {
                        return p.err(&vt, format!("empty interval [{lo}, {hi}]"));
                    }
                    ranges.push((target, Interval::new(lo, hi), vt));
                }
            }
            _ => return Err(FinslerError::UnknownIdentifier { name: kw, line: t.line, col: t.col }),
        }
        if !p.at_statement_end() {
            let t = p.peek().clone();
            return p.err(&t, format!("expected end of statement, found {}", describe(&t.tok)));
        }
    }

    let dim = dim.ok_or_else(|| FinslerError::InvalidModel("missing `dim` statement".into()))?;
    let l2 = l2.ok_or_else(|| FinslerError::InvalidModel("missing `L2` statement".into()))?;
    let mut domain = Domain::default_for(dim);
    for (target, iv, tok) in ranges {
        match target {
            RangeTarget::AllX => domain.x.iter_mut().for_each(|s| *s = iv),
            RangeTarget::AllY => domain.y.iter_mut().for_each(|s| *s = iv),
            RangeTarget::One(v) => {
                let (slot, i) = match v {
                    Var::X(i) => (&mut domain.x, i),
                    Var::Y(i) => (&mut domain.y, i),
                };
                if i >= dim {
                    let _ = tok;
                    return Err(FinslerError::VariableOutOfRange { name: v.to_string(), dim });
                }
                slot[i] = iv;
            }
        }
    }
    let spec = ModelSpec {
        name: name.unwrap_or_else(|| "model".into()),
        dim,
        lagrangian: Lagrangian::Expr(l2),
        zeta,
        domain,
        source: Some(source.to_string()),
    };
    spec.validate()?;
    Ok(spec)
}

/// Parses a bare expression (used for command-line vectors and tests).
pub fn parse_expr(source: &str) -> Result<Expr> {
    let mut p = Parser { toks: lex(source)?, pos: 0 };
    let e = p.expr()?;
    if p.peek().tok != Tok::Eof {
        let t = p.peek().clone();
        return p.err(&t, format!("trailing input: {}", describe(&t.tok)));
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence_and_associativity() {
        let e = parse_expr("2^3^2").unwrap();
        assert_eq!(e.eval(&[], &[]).unwrap(), 512.0);
        let e = parse_expr("-2^2").unwrap();
        assert_eq!(e.eval(&[], &[]).unwrap(), -4.0);
        let e = parse_expr("1 - 2 - 3").unwrap();
        assert_eq!(e.eval(&[], &[]).unwrap(), -4.0);
        let e = parse_expr("8 / 2 / 2").unwrap();
        assert_eq!(e.eval(&[], &[]).unwrap(), 2.0);
        let e = parse_expr("1e-1 * 10").unwrap();
        assert_eq!(e.eval(&[], &[]).unwrap(), 1.0);
    }

    #[test]
    fn syntax_error_has_position() {
        let err = parse_model("dim 2\nL2 = y1^2 + * y2").unwrap_err();
        match err {
            FinslerError::Syntax { line, col, .. } => assert_eq!((line, col), (2, 13)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_identifier() {
        let err = parse_model("dim 2; L2 = y1^2 + z^2").unwrap_err();
        assert!(matches!(err, FinslerError::UnknownIdentifier { ref name, .. } if name == "z"));
        let err = parse_model("dim 2; L2 = tan(y1)").unwrap_err();
        assert!(matches!(err, FinslerError::UnknownIdentifier { .. }));
    }

    #[test]
    fn multiline_with_comments() {
        let src = "# polar chart\ndim 2\nname polar\nL2 = y1^2 +\n  x1^2*y2^2   # not split: no parens\n";
        assert!(parse_model(src).is_err());
        let src = "# polar chart\ndim 2\nname polar\nL2 = (y1^2 +\n  x1^2*y2^2)\ndomain x1 in [1,3]\n";
        let m = parse_model(src).unwrap();
        assert_eq!(m.name, "polar");
        assert_eq!(m.domain.x[0], Interval::new(1.0, 3.0));
    }
}
