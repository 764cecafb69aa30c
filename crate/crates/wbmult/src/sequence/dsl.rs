//! Text format for block-periodic sequences.
//!
//! ```text
//! seq halves
//! prelude [ (1, 1) ]
//! block t>=1 {
//!   repeat 1: [ (w=(1/2)^t, idx=1), (w=1, idx=t+1) ]
//!   repeat t-1: [ (w=t^(-1/2), idx=2*t+1) ]
//! }
//! ```

use super::{Entry, Group, Index, SequenceSpec, SpecError};
use crate::scalar::{ExactScalar, Exp};
use crate::series::TermExpr;

struct Src<'a> {
    text: &'a [u8],
    pos: usize,
}

impl<'a> Src<'a> {
    fn line(&self) -> usize {
        self.text[..self.pos.min(self.text.len())].iter().filter(|c| **c == b'\n').count() + 1
    }

    fn err(&self, msg: impl Into<String>) -> SpecError {
        SpecError::Parse { line: self.line(), msg: msg.into() }
    }

    fn skip(&mut self) {
        loop {
            while self.pos < self.text.len() && self.text[self.pos].is_ascii_whitespace() {
                self.pos += 1;
            }
            if self.pos < self.text.len() && self.text[self.pos] == b'#' {
                while self.pos < self.text.len() && self.text[self.pos] != b'\n' {
                    self.pos += 1;
                }
                continue;
            }
            break;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip();
        self.text.get(self.pos).copied()
    }

    fn expect(&mut self, c: u8) -> Result<(), SpecError> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(format!("expected `{}`", c as char)))
        }
    }

    fn word(&mut self) -> String {
        self.skip();
        let start = self.pos;
        while self.pos < self.text.len()
            && (self.text[self.pos].is_ascii_alphanumeric() || b"_.-".contains(&self.text[self.pos]))
        {
            self.pos += 1;
        }
        String::from_utf8_lossy(&self.text[start..self.pos]).into_owned()
    }

    fn keyword(&mut self, kw: &str) -> Result<(), SpecError> {
        let w = self.word();
        if w == kw {
            Ok(())
        } else {
            Err(self.err(format!("expected `{}`, found `{}`", kw, w)))
        }
    }

    /// Raw text up to a top-level delimiter, which is not consumed.
    fn raw_until(&mut self, stops: &[u8]) -> Result<String, SpecError> {
        self.skip();
        let start = self.pos;
        let mut depth = 0i32;
        while self.pos < self.text.len() {
            let c = self.text[self.pos];
            if depth == 0 && stops.contains(&c) {
                break;
            }
            match c {
                b'(' => depth += 1,
                b')' => depth -= 1,
                b'\n' | b'#' => return Err(self.err("unterminated item")),
                _ => {}
            }
            self.pos += 1;
        }
        let raw: String = String::from_utf8_lossy(&self.text[start..self.pos])
            .chars()
            .filter(|c| !c.is_whitespace())
            .collect();
        if raw.is_empty() {
            return Err(self.err("empty item"));
        }
        Ok(raw)
    }
}

/// Parse a complete sequence description.
pub fn parse_spec(src: &str) -> Result<SequenceSpec, SpecError> {
    let mut s = Src { text: src.as_bytes(), pos: 0 };
    s.keyword("seq")?;
    let name = s.word();
    if name.is_empty() {
        return Err(s.err("missing sequence name"));
    }
    let mut spec = SequenceSpec { name, prelude: Vec::new(), groups: Vec::new() };
    loop {
        match s.peek() {
            None => break,
            Some(_) => {}
        }
        let line = s.line();
        match s.word().as_str() {
            "prelude" => {
                s.expect(b'[')?;
                while s.peek() != Some(b']') {
                    s.expect(b'(')?;
                    let w = s.raw_until(b",)")?;
                    let weight = parse_scalar(&w).map_err(|m| SpecError::Parse { line, msg: m })?;
                    let index = if s.peek() == Some(b',') {
                        s.pos += 1;
                        let raw = s.raw_until(b")")?;
                        parse_index(&raw).map_err(|m| SpecError::Parse { line, msg: m })?
                    } else {
                        Index::Free
                    };
                    if matches!(index, Index::Line(..)) {
                        return Err(SpecError::Parse { line, msg: "prelude index must be a constant".into() });
                    }
                    s.expect(b')')?;
                    spec.prelude.push(Entry { weight: TermExpr::constant(weight), index });
                    if s.peek() == Some(b',') {
                        s.pos += 1;
                    }
                }
                s.expect(b']')?;
            }
            "block" => {
                s.keyword("t")?;
                s.expect(b'>')?;
                s.expect(b'=')?;
                let start = s.word();
                if start != "1" {
                    return Err(s.err("blocks are indexed from t>=1"));
                }
                s.expect(b'{')?;
                while s.peek() != Some(b'}') {
                    let gl = s.line();
                    s.keyword("repeat")?;
                    let raw = s.raw_until(b":")?;
                    let repeat = parse_affine(&raw).map_err(|m| SpecError::Parse { line: gl, msg: m })?;
                    s.expect(b':')?;
                    s.expect(b'[')?;
                    let mut entries = Vec::new();
                    while s.peek() != Some(b']') {
                        entries.push(parse_entry(&mut s)?);
                        if s.peek() == Some(b',') {
                            s.pos += 1;
                        }
                    }
                    s.expect(b']')?;
                    spec.groups.push(Group { repeat, entries });
                }
                s.expect(b'}')?;
            }
            other => return Err(SpecError::Parse { line, msg: format!("unexpected `{}`", other) }),
        }
    }
    spec.validate()?;
    Ok(spec)
}

fn parse_entry(s: &mut Src) -> Result<Entry, SpecError> {
    let line = s.line();
    s.expect(b'(')?;
    let mut weight = None;
    let mut index = Index::Free;
    loop {
        let key = s.word();
        s.expect(b'=')?;
        let raw = s.raw_until(b",)")?;
        let wrap = |m: String| SpecError::Parse { line, msg: m };
        match key.as_str() {
            "w" => weight = Some(parse_weight(&raw).map_err(wrap)?),
            "idx" => index = parse_index(&raw).map_err(wrap)?,
            other => return Err(SpecError::Parse { line, msg: format!("unknown field `{}`", other) }),
        }
        if s.peek() == Some(b',') {
            s.pos += 1;
            continue;
        }
        break;
    }
    s.expect(b')')?;
    let weight = weight.ok_or(SpecError::Parse { line, msg: "entry without weight".into() })?;
    Ok(Entry { weight, index })
}

fn parse_int(s: &str) -> Result<i64, String> {
    s.parse::<i64>().map_err(|_| format!("bad integer `{}`", s))
}

fn parse_rat(s: &str) -> Result<Exp, String> {
    let s = s.trim_start_matches('(').trim_end_matches(')');
    match s.split_once('/') {
        Some((a, b)) => {
            let d = parse_int(b)?;
            if d == 0 {
                return Err("zero denominator".into());
            }
            Ok(Exp::new(parse_int(a)?, d))
        }
        None => Ok(Exp::from_integer(parse_int(s)?)),
    }
}

fn parse_scalar(s: &str) -> Result<ExactScalar, String> {
    s.parse::<ExactScalar>().map_err(|e| e.to_string())
}

/// `a*t+b`, `t`, `t-1`, `2*t`, or a plain integer.
pub fn parse_affine(s: &str) -> Result<(i64, i64), String> {
    let s: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let s = s.trim_start_matches('(').trim_end_matches(')');
    let tpos = match s.find('t') {
        None => return Ok((0, parse_int(s)?)),
        Some(p) => p,
    };
    let head = &s[..tpos];
    let tail = &s[tpos + 1..];
    let a = match head {
        "" => 1,
        h => parse_int(h.strip_suffix('*').ok_or_else(|| format!("bad affine `{}`", s))?)?,
    };
    let b = match tail {
        "" => 0,
        t => parse_int(t.strip_prefix('+').unwrap_or(t))?,
    };
    Ok((a, b))
}

fn parse_index(s: &str) -> Result<Index, String> {
    if s == "_" {
        return Ok(Index::Free);
    }
    let (a, b) = parse_affine(s)?;
    if a == 0 {
        Ok(Index::Const(b))
    } else {
        Ok(Index::Line(a, b))
    }
}

fn split_top(s: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut depth = 0;
    let mut start = 0;
    for (i, c) in s.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            '*' if depth == 0 => {
                out.push(&s[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    out.push(&s[start..]);
    out
}

/// `<scalar> [* t^(<rat>)] [* (a*t+b)^(<rat>)] [* (<scalar>)^t]`, factors in any order.
pub fn parse_weight(s: &str) -> Result<TermExpr, String> {
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s),
    };
    let mut acc = TermExpr::constant(ExactScalar::one());
    let err = |e: crate::series::SeriesError| e.to_string();
    for f in split_top(body) {
        if f.is_empty() {
            return Err(format!("empty factor in `{}`", s));
        }
        let factor = if let Some(base) = f.strip_suffix("^t") {
            let inner = base.strip_prefix('(').and_then(|b| b.strip_suffix(')')).unwrap_or(base);
            let r = parse_scalar(inner)?;
            TermExpr::geometric(r).map_err(err)?
        } else if f.contains('t') {
            let (base, p) = match f.rfind('^') {
                Some(i) if !f[..i].ends_with(')') || f[..i].contains('t') => (&f[..i], parse_rat(&f[i + 1..])?),
                _ => (f, Exp::from_integer(1)),
            };
            let (a, b) = parse_affine(base)?;
            TermExpr::affine_pow(a, b, p).map_err(err)?
        } else {
            TermExpr::constant(parse_scalar(f)?)
        };
        acc = acc.mul(&factor);
    }
    Ok(if neg { acc.neg() } else { acc })
}

/// Render a weight back into the text format.
pub fn weight_to_string(w: &TermExpr) -> String {
    let c = w.c.as_scalar().map(|x| x.to_string()).unwrap_or_else(|| format!("({})", w.c));
    let mut out = if c.starts_with('-') && c.contains('^') { format!("-1*{}", &c[1..]) } else { c };
    for ((a, b), p) in w.shape.factors() {
        let base = match (*a, *b) {
            (1, 0) => "t".to_string(),
            (1, b) => format!("(t{:+})", b),
            (a, 0) => format!("({}*t)", a),
            (a, b) => format!("({}*t{:+})", a, b),
        };
        if p.is_integer() && p.to_integer() == 1 {
            out.push_str(&format!("*{}", base));
        } else {
            out.push_str(&format!("*{}^({})", base, p));
        }
    }
    if *w.shape.geo() != ExactScalar::one() {
        out.push_str(&format!("*({})^t", w.shape.geo()));
    }
    out
}

fn affine_to_string(a: i64, b: i64) -> String {
    match (a, b) {
        (0, b) => b.to_string(),
        (1, 0) => "t".into(),
        (1, b) => format!("t{:+}", b),
        (a, 0) => format!("{}*t", a),
        (a, b) => format!("{}*t{:+}", a, b),
    }
}

fn index_to_string(i: &Index) -> String {
    match i {
        Index::Free => "_".into(),
        Index::Const(k) => k.to_string(),
        Index::Line(a, b) => affine_to_string(*a, *b),
    }
}

/// Render a sequence in the text format.
pub fn to_dsl(spec: &SequenceSpec) -> String {
    let mut out = format!("seq {}\n", spec.name);
    if !spec.prelude.is_empty() {
        let items: Vec<String> = spec
            .prelude
            .iter()
            .map(|e| match e.index {
                Index::Free => format!("({})", weight_to_string(&e.weight)),
                ref i => format!("({}, {})", weight_to_string(&e.weight), index_to_string(i)),
            })
            .collect();
        out.push_str(&format!("prelude [ {} ]\n", items.join(", ")));
    }
    if !spec.groups.is_empty() {
        out.push_str("block t>=1 {\n");
        for g in &spec.groups {
            let items: Vec<String> = g
                .entries
                .iter()
                .map(|e| match e.index {
                    Index::Free => format!("(w={})", weight_to_string(&e.weight)),
                    ref i => format!("(w={}, idx={})", weight_to_string(&e.weight), index_to_string(i)),
                })
                .collect();
            out.push_str(&format!(
                "  repeat {}: [ {} ]\n",
                affine_to_string(g.repeat.0, g.repeat.1),
                items.join(", ")
            ));
        }
        out.push_str("}\n");
    }
    out
}
