//! Text forms of values, descriptors, forms and pipelines, with a parser
//! that reads back exactly what the printers write.
//!
//! ```text
//! cell(v(1) <= v(x - 3) < v(25), x - 3 in 2*P_2 level 1)
//! presented(l=2, k=1: v(x2) <= v(5 * x1^2), x1 in 1*P_3)
//! box(l=2, k=1) * point(1/5) | space(1)
//! pipeline(source: box(l=1, k=1), target: image, steps: [power(gamma=1, n=2, k=1), translate(3)])
//! ```

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::atlas::{IsoPipeline, IsoStep};
use crate::error::{Error, Result};
use crate::padic::{is_prime, PAdic};
use crate::setmodel::{Cell1D, Cmp, Coset, MonomialBound, MonomialForm, Point, PresentedCell, SetDescriptor, Side};

#[derive(Clone, Debug, PartialEq)]
pub enum Tok {
    Ident(String),
    Int(BigInt),
    Sym(&'static str),
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Int(n) => write!(f, "`{n}`"),
            Tok::Sym(s) => write!(f, "`{s}`"),
            Tok::Eof => write!(f, "end of input"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
}

const SYMBOLS: &[&str] = &[
    "<=", "(", ")", "[", "]", "{", "}", ",", ";", ":", "=", "*", "/", "|", "+", "-", "^", "<", "@",
];

pub fn lex(src: &str) -> Result<Vec<Token>> {
    let mut out = Vec::new();
    let chars: Vec<char> = src.chars().collect();
    let (mut i, mut line, mut col) = (0, 1, 1);
    while i < chars.len() {
        let c = chars[i];
        let (l0, c0) = (line, col);
        let mut bump = |n: usize, i: &mut usize| {
            *i += n;
            col += n;
        };
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            bump(1, &mut i);
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                bump(1, &mut i);
            }
            let s: String = chars[start..i].iter().collect();
            out.push(Token {
                tok: Tok::Int(s.parse().expect("digits")),
                line: l0,
                col: c0,
            });
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                bump(1, &mut i);
            }
            out.push(Token {
                tok: Tok::Ident(chars[start..i].iter().collect()),
                line: l0,
                col: c0,
            });
            continue;
        }
        if c == '≤' {
            bump(1, &mut i);
            out.push(Token {
                tok: Tok::Sym("<="),
                line: l0,
                col: c0,
            });
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 2)].iter().collect();
        match SYMBOLS.iter().find(|s| rest.starts_with(**s)) {
            Some(s) => {
                bump(s.len(), &mut i);
                out.push(Token {
                    tok: Tok::Sym(s),
                    line: l0,
                    col: c0,
                });
            }
            None => {
                return Err(Error::Parse {
                    line: l0,
                    col: c0,
                    message: format!("unexpected character `{c}`"),
                    expected: vec![],
                })
            }
        }
    }
    out.push(Token {
        tok: Tok::Eof,
        line,
        col,
    });
    Ok(out)
}

/// Recursive-descent parser over a token stream. Values need the prime,
/// which is either given up front or declared by the input.
pub struct Parser {
    toks: Vec<Token>,
    pos: usize,
    pub p: Option<u32>,
}

impl Parser {
    pub fn new(src: &str, p: Option<u32>) -> Result<Self> {
        Ok(Parser {
            toks: lex(src)?,
            pos: 0,
            p,
        })
    }

    pub fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].tok
    }

    pub fn advance(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    pub fn at_eof(&self) -> bool {
        *self.peek() == Tok::Eof
    }

    pub fn error<T>(&self, message: impl Into<String>, expected: &[&str]) -> Result<T> {
        let t = &self.toks[self.pos];
        Err(Error::Parse {
            line: t.line,
            col: t.col,
            message: message.into(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
        })
    }

    fn unexpected<T>(&self, expected: &[&str]) -> Result<T> {
        self.error(format!("unexpected {}", self.peek()), expected)
    }

    pub fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(t) if *t == s)
    }

    pub fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(t) if t == kw)
    }

    pub fn eat_sym(&mut self, s: &str) -> bool {
        if self.is_sym(s) {
            self.advance();
            true
        } else {
            false
        }
    }

    pub fn eat_kw(&mut self, kw: &str) -> bool {
        if self.is_kw(kw) {
            self.advance();
            true
        } else {
            false
        }
    }

    pub fn expect_sym(&mut self, s: &str) -> Result<()> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            self.unexpected(&[&format!("`{s}`")])
        }
    }

    pub fn expect_kw(&mut self, kw: &str) -> Result<()> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            self.unexpected(&[&format!("`{kw}`")])
        }
    }

    pub fn ident(&mut self) -> Result<String> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.advance();
                Ok(s)
            }
            _ => self.unexpected(&["name"]),
        }
    }

    pub fn int(&mut self) -> Result<BigInt> {
        let neg = self.eat_sym("-");
        match self.peek().clone() {
            Tok::Int(n) => {
                self.advance();
                Ok(if neg { -n } else { n })
            }
            _ => self.unexpected(&["integer"]),
        }
    }

    pub fn small<T: TryFrom<i64>>(&mut self) -> Result<T> {
        let n = self.int()?;
        match n.to_i64().and_then(|v| T::try_from(v).ok()) {
            Some(v) => Ok(v),
            None => self.error(format!("{n} is out of range"), &[]),
        }
    }

    fn key(&mut self, k: &str) -> Result<()> {
        self.expect_kw(k)?;
        self.expect_sym("=")
    }

    pub fn prime(&self) -> Result<u32> {
        match self.p {
            Some(p) => Ok(p),
            None => self.error("a value appears before `prime`", &["`prime`"]),
        }
    }

    pub fn set_prime(&mut self, p: u64) -> Result<()> {
        if p > u32::MAX as u64 || !is_prime(p as u32) {
            return self.error(format!("{p} is not a prime"), &[]);
        }
        if self.p.is_none() {
            self.p = Some(p as u32);
        }
        Ok(())
    }

    /// `-3/5`, `7`, or a truncated value `[d0,d1,…]@v`.
    pub fn value(&mut self) -> Result<PAdic> {
        let p = self.prime()?;
        if self.eat_sym("[") {
            let mut digits = Vec::new();
            if !self.is_sym("]") {
                loop {
                    let d: u32 = self.small()?;
                    if d >= p {
                        return self.error(format!("digit {d} is not below {p}"), &[]);
                    }
                    digits.push(d);
                    if !self.eat_sym(",") {
                        break;
                    }
                }
            }
            self.expect_sym("]")?;
            self.expect_sym("@")?;
            let v: i64 = self.small()?;
            return PAdic::from_digits(p, &digits, v);
        }
        let num = self.int()?;
        let den = if self.is_sym("/") && matches!(self.peek_at(1), Tok::Int(_)) {
            self.advance();
            self.int()?
        } else {
            BigInt::from(1)
        };
        if den.is_zero() {
            return self.error("zero denominator", &[]);
        }
        Ok(PAdic::from_rational(p, &BigRational::new(num, den)))
    }

    fn values_until(&mut self, close: &str) -> Result<Vec<PAdic>> {
        let mut out = Vec::new();
        if self.eat_sym(close) {
            return Ok(out);
        }
        loop {
            out.push(self.value()?);
            if self.eat_sym(close) {
                return Ok(out);
            }
            self.expect_sym(",")?;
        }
    }

    fn int_list(&mut self) -> Result<Vec<i64>> {
        self.expect_sym("[")?;
        let mut out = Vec::new();
        if self.eat_sym("]") {
            return Ok(out);
        }
        loop {
            out.push(self.small()?);
            if self.eat_sym("]") {
                return Ok(out);
            }
            self.expect_sym(",")?;
        }
    }

    /// `(1, 1/5)`.
    pub fn point(&mut self) -> Result<Point> {
        self.expect_sym("(")?;
        self.values_until(")")
    }

    fn cmp(&mut self) -> Result<Cmp> {
        if self.eat_sym("<=") {
            Ok(Cmp::Le)
        } else if self.eat_sym("<") {
            Ok(Cmp::Lt)
        } else {
            self.unexpected(&["`<`", "`<=`"])
        }
    }

    /// `x`, `x - c` or `x + c`; returns `c`.
    fn centred_x(&mut self) -> Result<PAdic> {
        self.expect_kw("x")?;
        if self.eat_sym("-") {
            self.value()
        } else if self.eat_sym("+") {
            Ok(self.value()?.neg())
        } else {
            Ok(PAdic::zero(self.prime()?))
        }
    }

    /// `λ*P_n [level k]`.
    fn power_class(&mut self) -> Result<(PAdic, u64, u32)> {
        let lambda = self.value()?;
        self.expect_sym("*")?;
        let n = match self.peek().clone() {
            Tok::Ident(s) if s.starts_with("P_") => match s[2..].parse::<u64>() {
                Ok(n) if n >= 1 => {
                    self.advance();
                    n
                }
                _ => return self.error(format!("bad power class `{s}`"), &["`P_<n>`"]),
            },
            _ => return self.unexpected(&["`P_<n>`"]),
        };
        let level = if self.eat_kw("level") { self.small()? } else { 0 };
        Ok((lambda, n, level))
    }

    fn cell_body(&mut self) -> Result<Cell1D> {
        let p = self.prime()?;
        let mut lower = None;
        let mut upper = None;
        let mut centre: Option<PAdic> = None;
        let mut class = None;
        let mut agree = |c: PAdic, this: &Parser| -> Result<()> {
            match &centre {
                Some(old) if *old != c => this.error("the two mentions of x use different centres", &[]),
                _ => {
                    centre = Some(c);
                    Ok(())
                }
            }
        };
        if self.is_kw("v") {
            self.advance();
            self.expect_sym("(")?;
            if self.is_kw("x") {
                let c = self.centred_x()?;
                agree(c, self)?;
                self.expect_sym(")")?;
                let cmp = self.cmp()?;
                self.expect_kw("v")?;
                self.expect_sym("(")?;
                upper = Some((cmp, self.value()?));
                self.expect_sym(")")?;
            } else {
                let a = self.value()?;
                self.expect_sym(")")?;
                lower = Some((a, self.cmp()?));
                self.expect_kw("v")?;
                self.expect_sym("(")?;
                let c = self.centred_x()?;
                agree(c, self)?;
                self.expect_sym(")")?;
                if self.is_sym("<") || self.is_sym("<=") {
                    let cmp = self.cmp()?;
                    self.expect_kw("v")?;
                    self.expect_sym("(")?;
                    upper = Some((cmp, self.value()?));
                    self.expect_sym(")")?;
                }
            }
            if self.eat_sym(",") {
                let c = self.centred_x()?;
                agree(c, self)?;
                self.expect_kw("in")?;
                class = Some(self.power_class()?);
            }
        } else if self.is_kw("x") {
            let c = self.centred_x()?;
            agree(c, self)?;
            self.expect_kw("in")?;
            class = Some(self.power_class()?);
        } else if !self.is_sym(")") {
            return self.unexpected(&["`v`", "`x`", "`)`"]);
        }
        let (lambda, n, level) = class.unwrap_or((PAdic::from_i64(p, 1), 1, 0));
        Cell1D::new(lower, upper, centre.unwrap_or(PAdic::zero(p)), lambda, n, level)
    }

    /// `x3` as a zero-based index below `l`.
    fn var(&mut self, l: usize) -> Result<usize> {
        match self.peek().clone() {
            Tok::Ident(s) if s.len() > 1 && s.starts_with('x') && s[1..].bytes().all(|b| b.is_ascii_digit()) => {
                let i: usize = s[1..].parse().unwrap_or(0);
                if i == 0 || i > l {
                    return self.error(format!("`{s}` is not among x1..x{l}"), &[]);
                }
                self.advance();
                Ok(i - 1)
            }
            _ => self.unexpected(&["`x<i>`"]),
        }
    }

    fn is_var(&self) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s.len() > 1 && s.starts_with('x') && s[1..].bytes().all(|b| b.is_ascii_digit()))
    }

    /// `β * x1^e1 * …`, or a lone variable. Returns `(β, exps, lone)`.
    fn monomial(&mut self, l: usize) -> Result<(PAdic, Vec<i64>, Option<usize>)> {
        let p = self.prime()?;
        let mut exps = vec![0; l];
        if self.is_var() {
            let j = self.var(l)?;
            if !self.is_sym("*") && !self.is_sym("^") {
                return Ok((PAdic::from_i64(p, 1), exps, Some(j)));
            }
            exps[j] += if self.eat_sym("^") { self.small()? } else { 1 };
            while self.eat_sym("*") {
                let j = self.var(l)?;
                exps[j] += if self.eat_sym("^") { self.small()? } else { 1 };
            }
            return Ok((PAdic::from_i64(p, 1), exps, None));
        }
        let beta = self.value()?;
        while self.eat_sym("*") {
            let j = self.var(l)?;
            exps[j] += if self.eat_sym("^") { self.small()? } else { 1 };
        }
        Ok((beta, exps, None))
    }

    fn presented_clause(&mut self, l: usize, cell: &mut PresentedCell) -> Result<()> {
        if self.is_var() {
            let coord = self.var(l)?;
            self.expect_kw("in")?;
            let (gamma, n, level) = self.power_class()?;
            cell.cosets.push(Coset { coord, gamma, n, level });
            return Ok(());
        }
        self.expect_kw("v")?;
        self.expect_sym("(")?;
        let left = self.monomial(l)?;
        self.expect_sym(")")?;
        let cmp = self.cmp()?;
        self.expect_kw("v")?;
        self.expect_sym("(")?;
        let right = self.monomial(l)?;
        self.expect_sym(")")?;
        let (coord, side, (beta, exps, _)) = match (left.2, right.2) {
            (Some(j), None) => (j, Side::Upper, right),
            (None, Some(j)) => (j, Side::Lower, left),
            _ => return self.error("a bound compares one variable with a monomial", &[]),
        };
        cell.bounds.push(MonomialBound {
            coord,
            side,
            cmp,
            beta,
            exps,
        });
        Ok(())
    }

    /// `prod ('|' prod)*`; two or more operands form a union tagged 0, 1, ….
    pub fn descriptor(&mut self) -> Result<SetDescriptor> {
        self.descriptor_with(&mut |_: &str| None)
    }

    pub fn descriptor_with(&mut self, names: &mut dyn FnMut(&str) -> Option<SetDescriptor>) -> Result<SetDescriptor> {
        let mut ops = vec![self.product(names)?];
        while self.eat_sym("|") {
            ops.push(self.product(names)?);
        }
        Ok(if ops.len() == 1 {
            ops.pop().expect("one operand")
        } else {
            SetDescriptor::Tagged(ops.into_iter().enumerate().map(|(i, s)| (i as i64, s)).collect())
        })
    }

    fn product(&mut self, names: &mut dyn FnMut(&str) -> Option<SetDescriptor>) -> Result<SetDescriptor> {
        let mut acc = self.atom(names)?;
        while self.eat_sym("*") {
            let rhs = self.atom(names)?;
            acc = SetDescriptor::product(acc, rhs);
        }
        Ok(acc)
    }

    fn atom(&mut self, names: &mut dyn FnMut(&str) -> Option<SetDescriptor>) -> Result<SetDescriptor> {
        const STARTS: &[&str] = &[
            "`(`",
            "`cell`",
            "`box`",
            "`point`",
            "`space`",
            "`empty`",
            "`presented`",
            "`union`",
            "`tagged`",
            "`exclude`",
            "`image`",
            "set name",
        ];
        if self.eat_sym("(") {
            let d = self.descriptor_with(names)?;
            self.expect_sym(")")?;
            return Ok(d);
        }
        let word = match self.peek().clone() {
            Tok::Ident(s) => s,
            _ => return self.unexpected(STARTS),
        };
        let call = matches!(self.peek_at(1), Tok::Sym("("));
        if !call {
            self.advance();
            return names(&word).ok_or(Error::UnboundName(word));
        }
        self.advance();
        self.expect_sym("(")?;
        let d = match word.as_str() {
            "cell" => SetDescriptor::Cell(self.cell_body()?),
            "box" => {
                self.key("l")?;
                let l = self.small()?;
                self.expect_sym(",")?;
                self.key("k")?;
                SetDescriptor::LevelBox { l, k: self.small()? }
            }
            "point" => {
                let x = self.values_until(")")?;
                return Ok(SetDescriptor::Point(x));
            }
            "space" => SetDescriptor::Space(self.small()?),
            "empty" => SetDescriptor::Empty { arity: self.small()? },
            "presented" => {
                self.key("l")?;
                let l: usize = self.small()?;
                self.expect_sym(",")?;
                self.key("k")?;
                let mut cell = PresentedCell {
                    l,
                    k: self.small()?,
                    bounds: vec![],
                    cosets: vec![],
                };
                if self.eat_sym(":") {
                    loop {
                        self.presented_clause(l, &mut cell)?;
                        if !self.eat_sym(",") {
                            break;
                        }
                    }
                }
                SetDescriptor::Presented(cell)
            }
            "union" => {
                let mut parts = Vec::new();
                if !self.is_sym(")") {
                    loop {
                        parts.push(self.descriptor_with(names)?);
                        if !self.eat_sym(",") {
                            break;
                        }
                    }
                }
                SetDescriptor::Union(parts)
            }
            "tagged" => {
                let mut parts = Vec::new();
                loop {
                    let t: i64 = self.small()?;
                    self.expect_sym(":")?;
                    parts.push((t, self.descriptor_with(names)?));
                    if !self.eat_sym(",") {
                        break;
                    }
                }
                SetDescriptor::Tagged(parts)
            }
            "exclude" => {
                let base = self.descriptor_with(names)?;
                let mut points = Vec::new();
                while self.eat_sym(",") {
                    points.push(self.point()?);
                }
                SetDescriptor::Excluding {
                    base: Box::new(base),
                    points,
                }
            }
            "image" => SetDescriptor::Image(Box::new(self.pipeline_body()?)),
            _ => {
                return self.error(
                    format!("unknown set constructor `{word}`; polynomial conditions are written as cells"),
                    STARTS,
                )
            }
        };
        self.expect_sym(")")?;
        Ok(d)
    }

    /// `(e=2, beta=5, mu=[3])`.
    pub fn form(&mut self) -> Result<MonomialForm> {
        self.expect_sym("(")?;
        self.key("e")?;
        let e: u64 = self.small()?;
        self.expect_sym(",")?;
        self.key("beta")?;
        let beta = self.value()?;
        self.expect_sym(",")?;
        self.key("mu")?;
        let mu = self.int_list()?;
        self.expect_sym(")")?;
        if e == 0 {
            return self.error("e must be positive", &[]);
        }
        Ok(MonomialForm { e, beta, mu })
    }

    pub fn pipeline(&mut self) -> Result<IsoPipeline> {
        self.expect_kw("pipeline")?;
        self.expect_sym("(")?;
        let pl = self.pipeline_fields()?;
        self.expect_sym(")")?;
        Ok(pl)
    }

    fn pipeline_body(&mut self) -> Result<IsoPipeline> {
        self.pipeline()
    }

    fn pipeline_fields(&mut self) -> Result<IsoPipeline> {
        self.expect_kw("source")?;
        self.expect_sym(":")?;
        let source = self.descriptor()?;
        self.expect_sym(",")?;
        self.expect_kw("target")?;
        self.expect_sym(":")?;
        let target = if self.is_kw("image") && !matches!(self.peek_at(1), Tok::Sym("(")) {
            self.advance();
            None
        } else {
            Some(self.descriptor()?)
        };
        self.expect_sym(",")?;
        self.expect_kw("steps")?;
        self.expect_sym(":")?;
        let steps = self.steps()?;
        Ok(match target {
            Some(t) => IsoPipeline::new(source, t, steps),
            None => IsoPipeline::onto_image(source, steps),
        })
    }

    fn steps(&mut self) -> Result<Vec<IsoStep>> {
        self.expect_sym("[")?;
        let mut out = Vec::new();
        if self.eat_sym("]") {
            return Ok(out);
        }
        loop {
            out.push(self.step()?);
            if self.eat_sym("]") {
                return Ok(out);
            }
            self.expect_sym(",")?;
        }
    }

    pub fn step(&mut self) -> Result<IsoStep> {
        const STEPS: &[&str] = &[
            "`translate`",
            "`scale`",
            "`invert`",
            "`power`",
            "`twist`",
            "`interleave`",
            "`hotel`",
            "`pair_to_k`",
            "`insert`",
            "`permute`",
            "`coords`",
            "`cases`",
            "`inverse`",
        ];
        let word = match self.peek().clone() {
            Tok::Ident(s) => s,
            _ => return self.unexpected(STEPS),
        };
        self.advance();
        let bare = match word.as_str() {
            "invert" => Some(IsoStep::Invert),
            "interleave" => Some(IsoStep::ValuationInterleave),
            "hotel" => Some(IsoStep::HotelShift),
            "pair_to_k" => Some(IsoStep::PairToK),
            _ => None,
        };
        if let Some(s) = bare {
            return Ok(s);
        }
        self.expect_sym("(")?;
        let s = match word.as_str() {
            "translate" => IsoStep::Translate(self.value()?),
            "scale" => IsoStep::Scale(self.value()?),
            "power" => {
                self.key("gamma")?;
                let gamma = self.value()?;
                self.expect_sym(",")?;
                self.key("n")?;
                let n = self.small()?;
                self.expect_sym(",")?;
                self.key("k")?;
                IsoStep::PowerCoset {
                    gamma,
                    n,
                    k: self.small()?,
                }
            }
            "twist" => {
                self.key("coord")?;
                let coord = self.small()?;
                self.expect_sym(",")?;
                self.key("alpha")?;
                let alpha = self.value()?;
                self.expect_sym(",")?;
                self.key("exps")?;
                IsoStep::MonomialTwist {
                    coord,
                    alpha,
                    exps: self.int_list()?,
                }
            }
            "insert" => {
                self.key("pos")?;
                let pos = self.small()?;
                self.expect_sym(",")?;
                self.key("value")?;
                IsoStep::InsertConst {
                    pos,
                    value: self.value()?,
                }
            }
            "permute" => {
                let perm = self.int_list()?;
                if perm.iter().any(|&i| i < 0) {
                    return self.error("negative index in permutation", &[]);
                }
                IsoStep::Permute(perm.into_iter().map(|i| i as usize).collect())
            }
            "coords" => {
                let mut blocks = Vec::new();
                loop {
                    let w: usize = self.small()?;
                    self.expect_sym(":")?;
                    blocks.push((w, self.steps()?));
                    if !self.eat_sym(",") {
                        break;
                    }
                }
                IsoStep::CoordinateMap(blocks)
            }
            "cases" => {
                let mut branches = Vec::new();
                loop {
                    branches.push(self.pipeline()?);
                    if !self.eat_sym(",") {
                        break;
                    }
                }
                IsoStep::CaseSplit(branches)
            }
            "inverse" => IsoStep::Inverse(Box::new(self.step()?)),
            _ => return self.error(format!("unknown step `{word}`"), STEPS),
        };
        self.expect_sym(")")?;
        Ok(s)
    }

    pub fn finish(&mut self) -> Result<()> {
        if self.at_eof() {
            Ok(())
        } else {
            self.unexpected(&["end of input"])
        }
    }
}

pub fn parse_descriptor(src: &str, p: u32) -> Result<SetDescriptor> {
    let mut ps = Parser::new(src, Some(p))?;
    let d = ps.descriptor()?;
    ps.finish()?;
    Ok(d)
}

pub fn parse_point(src: &str, p: u32) -> Result<Point> {
    let mut ps = Parser::new(src, Some(p))?;
    let x = ps.point()?;
    ps.finish()?;
    Ok(x)
}

/// A pipeline file: `prime p;` followed by one pipeline.
pub fn parse_pipeline_file(src: &str, prime: Option<u32>) -> Result<(u32, IsoPipeline)> {
    let mut ps = Parser::new(src, prime)?;
    if ps.eat_kw("prime") {
        let p = ps.int()?;
        ps.set_prime(p.to_u64().unwrap_or(0))?;
        ps.expect_sym(";")?;
    }
    let pl = ps.pipeline()?;
    ps.eat_sym(";");
    ps.finish()?;
    Ok((ps.prime()?, pl))
}

pub fn pipeline_file(p: u32, pl: &IsoPipeline) -> String {
    format!("prime {p};\n{pl}\n")
}

fn write_centred(f: &mut fmt::Formatter<'_>, c: &PAdic) -> fmt::Result {
    if c.is_zero() {
        return write!(f, "x");
    }
    match c.to_rational() {
        Some(r) if r.is_negative() => write!(f, "x + {}", c.neg()),
        _ => write!(f, "x - {c}"),
    }
}

impl fmt::Display for Cell1D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "cell(")?;
        if self.lower.is_some() || self.upper.is_some() {
            if let Some((a, cmp)) = &self.lower {
                write!(f, "v({a}) {} ", cmp.symbol())?;
            }
            write!(f, "v(")?;
            write_centred(f, &self.c)?;
            write!(f, ")")?;
            if let Some((cmp, a)) = &self.upper {
                write!(f, " {} v({a})", cmp.symbol())?;
            }
            write!(f, ", ")?;
        }
        write_centred(f, &self.c)?;
        write!(f, " in {}*P_{}", self.lambda, self.n)?;
        if self.level > 0 {
            write!(f, " level {}", self.level)?;
        }
        write!(f, ")")
    }
}

fn monomial_text(beta: &PAdic, exps: &[i64]) -> String {
    let mut s = beta.to_string();
    for (i, &e) in exps.iter().enumerate() {
        match e {
            0 => {}
            1 => s.push_str(&format!(" * x{}", i + 1)),
            _ => s.push_str(&format!(" * x{}^{e}", i + 1)),
        }
    }
    s
}

impl fmt::Display for PresentedCell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "presented(l={}, k={}", self.l, self.k)?;
        let mut clauses = Vec::new();
        for b in &self.bounds {
            let m = monomial_text(&b.beta, &b.exps);
            clauses.push(match b.side {
                Side::Upper => format!("v(x{}) {} v({m})", b.coord + 1, b.cmp.symbol()),
                Side::Lower => format!("v({m}) {} v(x{})", b.cmp.symbol(), b.coord + 1),
            });
        }
        for c in &self.cosets {
            let mut s = format!("x{} in {}*P_{}", c.coord + 1, c.gamma, c.n);
            if c.level > 0 {
                s.push_str(&format!(" level {}", c.level));
            }
            clauses.push(s);
        }
        if !clauses.is_empty() {
            write!(f, ": {}", clauses.join(", "))?;
        }
        write!(f, ")")
    }
}

/// Tagged unions printed with `|` carry tags `0, 1, …`.
fn bar_form(s: &SetDescriptor) -> bool {
    matches!(s, SetDescriptor::Tagged(parts)
        if parts.len() >= 2 && parts.iter().enumerate().all(|(i, (t, _))| *t == i as i64))
}

fn point_text(x: &[PAdic]) -> String {
    let parts: Vec<String> = x.iter().map(|c| c.to_string()).collect();
    parts.join(", ")
}

impl fmt::Display for SetDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SetDescriptor::Empty { arity } => write!(f, "empty({arity})"),
            SetDescriptor::Point(x) => write!(f, "point({})", point_text(x)),
            SetDescriptor::Cell(c) => write!(f, "{c}"),
            SetDescriptor::LevelBox { l, k } => write!(f, "box(l={l}, k={k})"),
            SetDescriptor::Presented(c) => write!(f, "{c}"),
            SetDescriptor::Space(d) => write!(f, "space({d})"),
            SetDescriptor::Product(a, b) => {
                if bar_form(a) {
                    write!(f, "({a})")?;
                } else {
                    write!(f, "{a}")?;
                }
                write!(f, " * ")?;
                if bar_form(b) || matches!(**b, SetDescriptor::Product(..)) {
                    write!(f, "({b})")
                } else {
                    write!(f, "{b}")
                }
            }
            SetDescriptor::Union(parts) => {
                let parts: Vec<String> = parts.iter().map(|s| s.to_string()).collect();
                write!(f, "union({})", parts.join(", "))
            }
            SetDescriptor::Tagged(parts) if bar_form(self) => {
                let parts: Vec<String> = parts
                    .iter()
                    .map(|(_, s)| if bar_form(s) { format!("({s})") } else { s.to_string() })
                    .collect();
                write!(f, "{}", parts.join(" | "))
            }
            SetDescriptor::Tagged(parts) => {
                let parts: Vec<String> = parts.iter().map(|(t, s)| format!("{t}: {s}")).collect();
                write!(f, "tagged({})", parts.join(", "))
            }
            SetDescriptor::Excluding { base, points } => {
                write!(f, "exclude({base}")?;
                for x in points {
                    write!(f, ", ({})", point_text(x))?;
                }
                write!(f, ")")
            }
            SetDescriptor::Image(pl) => write!(f, "image({pl})"),
        }
    }
}

impl fmt::Display for MonomialForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mu: Vec<String> = self.mu.iter().map(|m| m.to_string()).collect();
        write!(f, "(e={}, beta={}, mu=[{}])", self.e, self.beta, mu.join(", "))
    }
}

fn ints(v: &[i64]) -> String {
    let s: Vec<String> = v.iter().map(|m| m.to_string()).collect();
    format!("[{}]", s.join(", "))
}

fn step_list(steps: &[IsoStep]) -> String {
    let s: Vec<String> = steps.iter().map(|s| s.to_string()).collect();
    format!("[{}]", s.join(", "))
}

impl fmt::Display for IsoStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IsoStep::Translate(c) => write!(f, "translate({c})"),
            IsoStep::Scale(a) => write!(f, "scale({a})"),
            IsoStep::Invert => write!(f, "invert"),
            IsoStep::PowerCoset { gamma, n, k } => write!(f, "power(gamma={gamma}, n={n}, k={k})"),
            IsoStep::MonomialTwist { coord, alpha, exps } => {
                write!(f, "twist(coord={coord}, alpha={alpha}, exps={})", ints(exps))
            }
            IsoStep::ValuationInterleave => write!(f, "interleave"),
            IsoStep::HotelShift => write!(f, "hotel"),
            IsoStep::PairToK => write!(f, "pair_to_k"),
            IsoStep::InsertConst { pos, value } => write!(f, "insert(pos={pos}, value={value})"),
            IsoStep::Permute(perm) => {
                let v: Vec<i64> = perm.iter().map(|&i| i as i64).collect();
                write!(f, "permute({})", ints(&v))
            }
            IsoStep::CoordinateMap(blocks) => {
                let b: Vec<String> = blocks.iter().map(|(w, s)| format!("{w}: {}", step_list(s))).collect();
                write!(f, "coords({})", b.join(", "))
            }
            IsoStep::CaseSplit(branches) => {
                let b: Vec<String> = branches.iter().map(|p| p.to_string()).collect();
                write!(f, "cases({})", b.join(", "))
            }
            IsoStep::Inverse(s) => write!(f, "inverse({s})"),
        }
    }
}

fn targets_own_image(pl: &IsoPipeline) -> bool {
    match &pl.target {
        SetDescriptor::Image(inner) => {
            inner.source == pl.source && inner.steps == pl.steps && inner.target == SetDescriptor::Space(0)
        }
        _ => false,
    }
}

impl fmt::Display for IsoPipeline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "pipeline(source: {}, target: ", self.source)?;
        if targets_own_image(self) {
            write!(f, "image")?;
        } else {
            write!(f, "{}", self.target)?;
        }
        write!(f, ", steps: {})", step_list(&self.steps))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atlas::k_iso_pipeline;
    use crate::padic::Context;

    fn round_trip(src: &str) -> SetDescriptor {
        let d = parse_descriptor(src, 5).unwrap();
        let again = parse_descriptor(&d.to_string(), 5).unwrap();
        assert_eq!(d, again, "{src} printed as {d}");
        d
    }

    #[test]
    fn cell_syntax() {
        let d = round_trip("cell(v(1) <= v(x) <= v(25), x in 1*P_2 level 1)");
        let SetDescriptor::Cell(c) = &d else { panic!() };
        assert_eq!((c.n, c.level), (2, 1));
        assert_eq!(d.to_string(), "cell(v(1) <= v(x) <= v(25), x in 1*P_2 level 1)");
        let d = round_trip("cell(v(1) <= v(x), x in 0*P_1)");
        let SetDescriptor::Cell(c) = d else { panic!() };
        assert!(c.is_singleton());
        round_trip("cell(v(x + 3) < v(1/5), x + 3 in 2*P_3)");
        round_trip("cell(x - 7 in 1*P_1)");
        round_trip("cell()");
    }

    #[test]
    fn composite_syntax() {
        let d = round_trip("box(l=1, k=1) * point(1/5) | space(1)");
        assert!(matches!(d, SetDescriptor::Tagged(ref t) if t.len() == 2));
        round_trip("(space(1) | space(1)) | point(3)");
        round_trip("box(l=1, k=1) * (box(l=1, k=2) * space(0))");
        round_trip("union(point(1), point(2)) * tagged(3: space(1), 5: point(0))");
        round_trip("exclude(space(2), (0, 0), (1, 1/5))");
        round_trip("presented(l=2, k=1: v(x2) <= v(5 * x1^2), v(1/5 * x1^-1) < v(x2), x1 in 3*P_2 level 1)");
        round_trip("empty(2)");
    }

    #[test]
    fn truncated_values() {
        let d = round_trip("point([1,2,3]@-1)");
        let SetDescriptor::Point(x) = d else { panic!() };
        assert_eq!(x[0].relative_precision(), Some(3));
    }

    #[test]
    fn errors_carry_positions() {
        let e = parse_descriptor("cell(v(1) <)", 5).unwrap_err();
        let Error::Parse {
            line, col, expected, ..
        } = e
        else {
            panic!("{e:?}")
        };
        assert_eq!((line, col), (1, 12));
        assert!(expected.contains(&"`v`".to_string()));
        assert!(matches!(
            parse_descriptor("X * box(l=1, k=1)", 5),
            Err(Error::UnboundName(_))
        ));
        let e = parse_descriptor("poly(x^2 - 2)", 5).unwrap_err();
        assert!(e.to_string().contains("cells"));
    }

    #[test]
    fn pipelines_round_trip() {
        let k = Context::with_default_precision(5).unwrap();
        let pl = k_iso_pipeline(&k);
        let text = pipeline_file(5, &pl);
        let (p, back) = parse_pipeline_file(&text, None).unwrap();
        assert_eq!(p, 5);
        assert_eq!(back, pl);
        assert!(text.contains("target: image"));
        let (_, g) = parse_pipeline_file(
            "prime 3; pipeline(source: space(2), target: space(2), steps: [coords(1: [scale(3)], 1: []), permute([1, 0]), twist(coord=0, alpha=1, exps=[0, -2]), inverse(power(gamma=1, n=2, k=2))])",
            None,
        )
        .unwrap();
        assert_eq!(parse_pipeline_file(&pipeline_file(3, &g), None).unwrap().1, g);
    }
}
