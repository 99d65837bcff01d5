//! Text grammar for spectral queries:
//!
//! ```text
//! query  := norm( expr ) | lambda2( expr ) | qform( vec , expr , vec )
//! expr   := ['+'|'-'] term { ('+'|'-') term }
//! term   := factor { '*' factor }
//! factor := atom [ '^' uint ]
//! atom   := number | Id | L( expr ) | ( expr ) | R[...] | Q[...]
//! vec    := chi({wires};...;{wires})   one set per row
//! ```
//!
//! `L(e)` is the Laplacian Id − e. Numbers scale the identity, so `2*R[nn]`
//! and `R[nn]*2` both mean the scaled operator.

use super::OperatorExpr;
use crate::error::{Error, Result};
use crate::walk::{parse_operator, FourierIndex};

#[derive(Clone, Debug)]
pub enum Query {
    Norm(OperatorExpr),
    Lambda2(OperatorExpr),
    QForm(FourierIndex, OperatorExpr, FourierIndex),
}

pub fn parse_query(text: &str, n: usize, k: usize) -> Result<Query> {
    let t = text.trim();
    if let Some(inner) = strip_call(t, "norm") {
        return Ok(Query::Norm(parse_expression(inner, n, k)?));
    }
    if let Some(inner) = strip_call(t, "lambda2") {
        return Ok(Query::Lambda2(parse_expression(inner, n, k)?));
    }
    if let Some(inner) = strip_call(t, "qform") {
        let parts = split_top_level(inner, ',');
        if parts.len() != 3 {
            return Err(Error::Parse(format!(
                "qform takes (vector, expression, vector), got {} arguments",
                parts.len()
            )));
        }
        let f = parse_chi(parts[0].trim(), n, k)?;
        let expr = parse_expression(parts[1], n, k)?;
        let g = parse_chi(parts[2].trim(), n, k)?;
        return Ok(Query::QForm(f, expr, g));
    }
    Err(Error::Parse(format!("expected norm(..), lambda2(..) or qform(..), got {t:?}")))
}

fn strip_call<'a>(t: &'a str, name: &str) -> Option<&'a str> {
    let rest = t.strip_prefix(name)?.trim_start();
    let inner = rest.strip_prefix('(')?;
    let inner = inner.strip_suffix(')')?;
    Some(inner)
}

/// Split on `sep` at bracket depth zero (tracking (), [], {}).
fn split_top_level(t: &str, sep: char) -> Vec<&str> {
    let mut parts = Vec::new();
    let mut depth = 0i32;
    let mut start = 0usize;
    for (i, c) in t.char_indices() {
        match c {
            '(' | '[' | '{' => depth += 1,
            ')' | ']' | '}' => depth -= 1,
            c if c == sep && depth == 0 => {
                parts.push(&t[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    parts.push(&t[start..]);
    parts
}

/// `chi({1};{1,3})`: one wire set per row.
pub fn parse_chi(t: &str, n: usize, k: usize) -> Result<FourierIndex> {
    let inner = strip_call(t.trim(), "chi")
        .ok_or_else(|| Error::Parse(format!("expected chi(..), got {t:?}")))?;
    let mut sets = Vec::new();
    for part in split_top_level(inner, ';') {
        let part = part.trim();
        let body = part
            .strip_prefix('{')
            .and_then(|s| s.strip_suffix('}'))
            .ok_or_else(|| Error::Parse(format!("expected {{..}} wire set, got {part:?}")))?;
        let mut wires = Vec::new();
        if !body.trim().is_empty() {
            for w in body.split(',') {
                wires.push(
                    w.trim()
                        .parse::<usize>()
                        .map_err(|_| Error::Parse(format!("bad wire {w:?}")))?,
                );
            }
        }
        sets.push(wires);
    }
    if sets.len() != k {
        return Err(Error::Parse(format!("chi has {} row sets, operator has k={k}", sets.len())));
    }
    FourierIndex::new(sets, n)
}

pub fn parse_expression(text: &str, n: usize, k: usize) -> Result<OperatorExpr> {
    let mut p = Parser { s: text.as_bytes(), pos: 0, n, k };
    let expr = p.expr()?;
    p.skip_ws();
    if p.pos != p.s.len() {
        return Err(Error::Parse(format!(
            "trailing input at byte {}: {:?}",
            p.pos,
            &text[p.pos..]
        )));
    }
    expr.validate()?;
    Ok(expr)
}

struct Parser<'a> {
    s: &'a [u8],
    pos: usize,
    n: usize,
    k: usize,
}

impl<'a> Parser<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.s.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> Result<()> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(Error::Parse(format!(
                "expected {:?} at byte {} of {:?}",
                c as char,
                self.pos,
                String::from_utf8_lossy(self.s)
            )))
        }
    }

    fn expr(&mut self) -> Result<OperatorExpr> {
        let mut terms = Vec::new();
        let mut sign = 1.0;
        if let Some(c) = self.peek() {
            if c == b'+' || c == b'-' {
                self.pos += 1;
                sign = if c == b'-' { -1.0 } else { 1.0 };
            }
        }
        let first = self.term()?;
        terms.push(if sign < 0.0 { OperatorExpr::Scale(-1.0, Box::new(first)) } else { first });
        while let Some(c) = self.peek() {
            if c != b'+' && c != b'-' {
                break;
            }
            self.pos += 1;
            let t = self.term()?;
            terms.push(if c == b'-' { OperatorExpr::Scale(-1.0, Box::new(t)) } else { t });
        }
        Ok(if terms.len() == 1 { terms.pop().unwrap() } else { OperatorExpr::Sum(terms) })
    }

    fn term(&mut self) -> Result<OperatorExpr> {
        let mut factors = vec![self.factor()?];
        while self.peek() == Some(b'*') {
            self.pos += 1;
            factors.push(self.factor()?);
        }
        Ok(if factors.len() == 1 {
            factors.pop().unwrap()
        } else {
            OperatorExpr::Product(factors)
        })
    }

    fn factor(&mut self) -> Result<OperatorExpr> {
        let atom = self.atom()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            self.skip_ws();
            let start = self.pos;
            while self.pos < self.s.len() && self.s[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            if start == self.pos {
                return Err(Error::Parse("expected integer exponent after '^'".into()));
            }
            let p: u32 = std::str::from_utf8(&self.s[start..self.pos])
                .unwrap()
                .parse()
                .map_err(|_| Error::Parse("exponent out of range".into()))?;
            return Ok(OperatorExpr::Power(Box::new(atom), p));
        }
        Ok(atom)
    }

    fn atom(&mut self) -> Result<OperatorExpr> {
        match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                Ok(OperatorExpr::Scale(-1.0, Box::new(self.atom()?)))
            }
            Some(b'(') => {
                self.eat(b'(')?;
                let e = self.expr()?;
                self.eat(b')')?;
                Ok(e)
            }
            Some(b'L') if self.lookahead_call(b'L') => {
                self.pos += 1;
                self.eat(b'(')?;
                let e = self.expr()?;
                self.eat(b')')?;
                OperatorExpr::laplacian(e)
            }
            Some(b'I') if self.lookahead_word("Id") => {
                self.pos += 2;
                Ok(OperatorExpr::identity(self.n, self.k))
            }
            Some(b'R') | Some(b'Q') => {
                let start = self.pos;
                let open = self.s[self.pos..]
                    .iter()
                    .position(|&c| c == b'[')
                    .ok_or_else(|| Error::Parse("operator atom missing '['".into()))?;
                let close = self.s[self.pos + open..]
                    .iter()
                    .position(|&c| c == b']')
                    .ok_or_else(|| Error::Parse("operator atom missing ']'".into()))?;
                let end = self.pos + open + close + 1;
                let text = std::str::from_utf8(&self.s[start..end])
                    .map_err(|_| Error::Parse("non-utf8 operator text".into()))?;
                self.pos = end;
                Ok(OperatorExpr::leaf(parse_operator(text, self.n, self.k)?))
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => {
                let start = self.pos;
                while self.pos < self.s.len()
                    && (self.s[self.pos].is_ascii_digit()
                        || self.s[self.pos] == b'.'
                        || self.s[self.pos] == b'e'
                        || (self.pos > start
                            && (self.s[self.pos] == b'-' || self.s[self.pos] == b'+')
                            && (self.s[self.pos - 1] == b'e')))
                {
                    self.pos += 1;
                }
                let text = std::str::from_utf8(&self.s[start..self.pos]).unwrap();
                let v: f64 =
                    text.parse().map_err(|_| Error::Parse(format!("bad number {text:?}")))?;
                Ok(OperatorExpr::Scale(v, Box::new(OperatorExpr::identity(self.n, self.k))))
            }
            other => Err(Error::Parse(format!(
                "unexpected {:?} at byte {} of {:?}",
                other.map(|c| c as char),
                self.pos,
                String::from_utf8_lossy(self.s)
            ))),
        }
    }

    fn lookahead_call(&mut self, head: u8) -> bool {
        self.skip_ws();
        if self.s.get(self.pos) != Some(&head) {
            return false;
        }
        let mut i = self.pos + 1;
        while i < self.s.len() && self.s[i].is_ascii_whitespace() {
            i += 1;
        }
        self.s.get(i) == Some(&b'(')
    }

    fn lookahead_word(&mut self, word: &str) -> bool {
        self.skip_ws();
        let bytes = word.as_bytes();
        if self.s.len() < self.pos + bytes.len() {
            return false;
        }
        if &self.s[self.pos..self.pos + bytes.len()] != bytes {
            return false;
        }
        // must not continue as an identifier
        !matches!(self.s.get(self.pos + bytes.len()),
            Some(c) if c.is_ascii_alphanumeric() || *c == b'_')
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{op_norm, quadratic_form, PowerConfig, SpectralMethod};
    use crate::walk::{chi_vector, OperatorSpec, DEFAULT_STATE_CAP};

    #[test]
    fn parses_documented_queries() {
        let (n, k) = (3, 2);
        match parse_query("norm( R[nn] - R[full] )", n, k).unwrap() {
            Query::Norm(e) => {
                let got =
                    op_norm(&e, SpectralMethod::Dense, &PowerConfig::default(), DEFAULT_STATE_CAP)
                        .unwrap();
                let direct = op_norm(
                    &OperatorExpr::minus_full(&OperatorSpec::r_nn(n, k).unwrap()).unwrap(),
                    SpectralMethod::Dense,
                    &PowerConfig::default(),
                    DEFAULT_STATE_CAP,
                )
                .unwrap();
                assert!((got.value - direct.value).abs() < 1e-14);
            }
            other => panic!("wrong query {other:?}"),
        }

        assert!(matches!(parse_query("lambda2( L(R[nn]) )", n, k), Ok(Query::Lambda2(_))));

        match parse_query("qform( chi({1};{1}), Q[loo]-Q[full], chi({1};{1}) )", n, k).unwrap() {
            Query::QForm(f, e, g) => {
                let fv = chi_vector(&f, n, k).unwrap();
                let gv = chi_vector(&g, n, k).unwrap();
                let v = quadratic_form(&fv, &e, &gv).unwrap();
                assert!((v - 1.0 / 3.0).abs() < 1e-12);
            }
            other => panic!("wrong query {other:?}"),
        }
    }

    #[test]
    fn precedence_and_scalars() {
        let (n, k) = (3, 1);
        let e = parse_expression("2*R[full]^2 + R[nn] - 0.5*Id", n, k).unwrap();
        let m = e.materialize(DEFAULT_STATE_CAP).unwrap();
        let full = OperatorSpec::r_full(n, k).unwrap().materialize(DEFAULT_STATE_CAP).unwrap();
        let nn = OperatorSpec::r_nn(n, k).unwrap().materialize(DEFAULT_STATE_CAP).unwrap();
        let mut expect = full.matmul(&full).scaled(2.0);
        expect.add_assign_scaled(&nn, 1.0);
        expect.add_assign_scaled(&crate::linalg::DenseMatrix::identity(m.dim()), -0.5);
        assert!(m.max_abs_diff(&expect) < 1e-14);
    }

    #[test]
    fn laplacian_text_form() {
        let (n, k) = (3, 1);
        let e = parse_expression("L(R[full])", n, k).unwrap();
        let m = e.materialize(DEFAULT_STATE_CAP).unwrap();
        let full = OperatorSpec::r_full(n, k).unwrap().materialize(DEFAULT_STATE_CAP).unwrap();
        let mut expect = crate::linalg::DenseMatrix::identity(m.dim());
        expect.add_assign_scaled(&full, -1.0);
        assert!(m.max_abs_diff(&expect) < 1e-15);
    }

    #[test]
    fn leading_minus_and_power() {
        let (n, k) = (3, 1);
        let e = parse_expression("-R[full] + Id", n, k).unwrap();
        let m = e.materialize(DEFAULT_STATE_CAP).unwrap();
        let l = parse_expression("L(R[full])", n, k).unwrap().materialize(DEFAULT_STATE_CAP).unwrap();
        assert!(m.max_abs_diff(&l) < 1e-15);

        let p = parse_expression("(R[nn])^3", n, k).unwrap();
        let m3 = p.materialize(DEFAULT_STATE_CAP).unwrap();
        let nn = OperatorSpec::r_nn(n, k).unwrap().materialize(DEFAULT_STATE_CAP).unwrap();
        assert!(m3.max_abs_diff(&nn.matmul(&nn).matmul(&nn)) < 1e-14);
    }

    #[test]
    fn expression_text_reparses() {
        let (n, k) = (4, 2);
        for text in [
            "R[nn] - R[full]",
            "L(R[brickwork,dist=des2])",
            "0.25*(R[m=3] + R[full])*Q[loo]",
            "(R[site={1,2,3}])^2",
        ] {
            let e = parse_expression(text, n, k).unwrap();
            let again = parse_expression(&e.text(), n, k).unwrap();
            let a = e.materialize(DEFAULT_STATE_CAP).unwrap();
            let b = again.materialize(DEFAULT_STATE_CAP).unwrap();
            assert!(a.max_abs_diff(&b) < 1e-14, "{text}");
        }
    }

    #[test]
    fn rejects_malformed() {
        let (n, k) = (3, 1);
        assert!(parse_expression("R[nn] +", n, k).is_err());
        assert!(parse_expression("norm(R[nn])", n, k).is_err());
        assert!(parse_query("gap(R[nn])", n, k).is_err());
        assert!(parse_query("qform(chi({1}), R[nn], chi({1}))", 3, 2).is_err());
        assert!(parse_expression("R[nn] R[full]", n, k).is_err());
    }
}
