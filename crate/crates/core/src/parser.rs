//! Text format for mass-action networks.
//!
//! ```text
//! # comment
//! A + 2 B -> C : 1.5
//! C <-> 0 : 2.0, 0.5
//! X + -1 Y -> Z : 1e-3
//! ```
//!
//! One reaction per line: `complex ("->" | "<->") complex ":" rate ("," rate)?`.
//! A complex is `0` or terms joined by `+`; a term is an optional signed
//! decimal coefficient followed by a species name. `<->` takes one rate for
//! both directions or two rates (forward, backward). Complexes are compared
//! by exact decimal value, and species are numbered by first appearance.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt::Write as _;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::network::{MassActionSystem, ReactionNetwork};

/// An exact decimal `mantissa * 10^(-scale)`, normalized so that equal
/// values have equal representations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Decimal {
    mantissa: i128,
    scale: i32,
}

impl Decimal {
    pub const ZERO: Decimal = Decimal { mantissa: 0, scale: 0 };
    pub const ONE: Decimal = Decimal { mantissa: 1, scale: 0 };

    fn normalized(mut mantissa: i128, mut scale: i32) -> Decimal {
        if mantissa == 0 {
            return Decimal::ZERO;
        }
        while mantissa % 10 == 0 {
            mantissa /= 10;
            scale -= 1;
        }
        Decimal { mantissa, scale }
    }

    /// Parses `[+-]?digits[.digits]` (or `[+-]?.digits`).
    pub fn parse(text: &str) -> Option<Decimal> {
        let (negative, body) = match text.as_bytes().first()? {
            b'-' => (true, &text[1..]),
            b'+' => (false, &text[1..]),
            _ => (false, text),
        };
        let (int, frac) = body.split_once('.').unwrap_or((body, ""));
        if int.is_empty() && frac.is_empty() {
            return None;
        }
        if !int.bytes().chain(frac.bytes()).all(|b| b.is_ascii_digit()) {
            return None;
        }
        let digits = format!("{int}{frac}");
        let mut scale = frac.len() as i32;
        let trimmed = digits.trim_start_matches('0');
        let significant = trimmed.trim_end_matches('0');
        scale -= (trimmed.len() - significant.len()) as i32;
        if significant.is_empty() {
            return Some(Decimal::ZERO);
        }
        let mut mantissa: i128 = significant.parse().ok()?;
        if negative {
            mantissa = -mantissa;
        }
        Some(Decimal::normalized(mantissa, scale))
    }

    pub fn is_zero(self) -> bool {
        self.mantissa == 0
    }

    /// Exact sum, or `None` on overflow.
    pub fn checked_add(self, other: Decimal) -> Option<Decimal> {
        let scale = self.scale.max(other.scale);
        let lift = |d: Decimal| -> Option<i128> {
            let shift = u32::try_from(scale - d.scale).ok()?;
            d.mantissa.checked_mul(10i128.checked_pow(shift)?)
        };
        Some(Decimal::normalized(lift(self)?.checked_add(lift(other)?)?, scale))
    }

    pub fn to_f64(self) -> f64 {
        // the shortest text form parses to the nearest double
        self.to_string().parse().expect("decimal text is valid")
    }
}

impl std::fmt::Display for Decimal {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let sign = if self.mantissa < 0 { "-" } else { "" };
        let digits = self.mantissa.unsigned_abs().to_string();
        match self.scale.cmp(&0) {
            Ordering::Less | Ordering::Equal => {
                write!(f, "{sign}{digits}{}", "0".repeat((-self.scale) as usize))
            }
            Ordering::Greater => {
                let s = self.scale as usize;
                if digits.len() > s {
                    let (a, b) = digits.split_at(digits.len() - s);
                    write!(f, "{sign}{a}.{b}")
                } else {
                    write!(f, "{sign}0.{}{digits}", "0".repeat(s - digits.len()))
                }
            }
        }
    }
}

type Complex = Vec<(usize, Decimal)>;

struct Builder {
    species: Vec<String>,
    complexes: Vec<Complex>,
    reactions: Vec<(usize, usize)>,
    rates: Vec<f64>,
}

struct Line<'a> {
    number: usize,
    chars: Vec<(usize, char)>,
    pos: usize,
    text: &'a str,
}

fn is_name_start(c: char) -> bool {
    c.is_alphabetic() || c == '_'
}

fn is_name_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '\''
}

impl<'a> Line<'a> {
    fn new(number: usize, text: &'a str) -> Self {
        Line { number, chars: text.char_indices().collect(), pos: 0, text }
    }

    fn error(&self, message: impl Into<String>) -> Error {
        Error::Syntax { line: self.number, column: self.pos + 1, message: message.into() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.chars.len() && self.chars[self.pos].1.is_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).map(|&(_, c)| c)
    }

    fn at_end(&mut self) -> bool {
        self.skip_ws();
        self.pos >= self.chars.len()
    }

    fn eat(&mut self, token: &str) -> bool {
        self.skip_ws();
        let rest = &self.text[self.chars.get(self.pos).map_or(self.text.len(), |&(b, _)| b)..];
        if rest.starts_with(token) {
            self.pos += token.chars().count();
            true
        } else {
            false
        }
    }

    fn take_while(&mut self, f: impl Fn(char) -> bool) -> &'a str {
        let start = self.chars.get(self.pos).map_or(self.text.len(), |&(b, _)| b);
        while self.peek().is_some_and(&f) {
            self.pos += 1;
        }
        let end = self.chars.get(self.pos).map_or(self.text.len(), |&(b, _)| b);
        &self.text[start..end]
    }

    fn term(&mut self) -> Result<(Decimal, &'a str)> {
        self.skip_ws();
        let start = self.pos;
        let mut coefficient = Decimal::ONE;
        if self.peek().is_some_and(|c| c == '-' || c == '+' || c == '.' || c.is_ascii_digit()) {
            let text = self.take_while(|c| c == '-' || c == '+' || c == '.' || c.is_ascii_digit());
            coefficient = match text {
                "-" => Decimal { mantissa: -1, scale: 0 },
                "+" => Decimal::ONE,
                _ => match Decimal::parse(text) {
                    Some(d) => d,
                    None => {
                        self.pos = start;
                        return Err(self.error(format!("invalid coefficient `{text}`")));
                    }
                },
            };
            self.skip_ws();
        }
        if !self.peek().is_some_and(is_name_start) {
            return Err(self.error("expected a species name"));
        }
        let name = self.take_while(is_name_char);
        Ok((coefficient, name))
    }

    /// `0` or `term (+ term)*`, with the species of each term.
    fn complex(&mut self) -> Result<Vec<(Decimal, &'a str)>> {
        self.skip_ws();
        let start = self.pos;
        if self.peek() == Some('0') {
            self.pos += 1;
            self.skip_ws();
            if !self.peek().is_some_and(|c| is_name_start(c) || c == '.' || c.is_ascii_digit()) {
                return Ok(Vec::new());
            }
            self.pos = start;
        }
        let mut terms = vec![self.term()?];
        while self.eat("+") {
            terms.push(self.term()?);
        }
        Ok(terms)
    }

    fn rate(&mut self) -> Result<f64> {
        self.skip_ws();
        let start = self.pos;
        let text = self.take_while(|c| !c.is_whitespace() && c != ',');
        if text.is_empty() {
            return Err(self.error("expected a rate constant"));
        }
        match text.parse::<f64>() {
            Ok(k) if k > 0.0 && k.is_finite() => Ok(k),
            Ok(k) => Err(Error::NonPositiveRate(k)),
            Err(_) => {
                self.pos = start;
                Err(self.error(format!("invalid rate `{text}`")))
            }
        }
    }
}

impl Builder {
    fn intern_complex(&mut self, line: &Line, terms: Vec<(Decimal, &str)>) -> Result<usize> {
        let mut sums: BTreeMap<&str, Decimal> = BTreeMap::new();
        let mut order: Vec<&str> = Vec::new();
        for (coef, name) in terms {
            let entry = sums.entry(name).or_insert_with(|| {
                order.push(name);
                Decimal::ZERO
            });
            *entry = entry.checked_add(coef).ok_or_else(|| line.error(format!("coefficient of {name} overflows")))?;
        }
        let mut complex: Complex = Vec::new();
        for name in order {
            let coef = sums[name];
            if coef.is_zero() {
                continue;
            }
            let idx = match self.species.iter().position(|s| s == name) {
                Some(i) => i,
                None => {
                    self.species.push(name.to_string());
                    self.species.len() - 1
                }
            };
            complex.push((idx, coef));
        }
        complex.sort_by_key(|&(i, _)| i);
        Ok(match self.complexes.iter().position(|c| *c == complex) {
            Some(i) => i,
            None => {
                self.complexes.push(complex);
                self.complexes.len() - 1
            }
        })
    }

    fn add(&mut self, line: &Line, from: usize, to: usize, rate: f64) -> Result<()> {
        if from == to {
            return Err(Error::Syntax {
                line: line.number,
                column: 1,
                message: "reactant and product complexes are identical".into(),
            });
        }
        if self.reactions.contains(&(from, to)) {
            return Err(Error::DuplicateArc { from, to });
        }
        self.reactions.push((from, to));
        self.rates.push(rate);
        Ok(())
    }

    fn parse_line(&mut self, line: &mut Line) -> Result<()> {
        let lhs = line.complex()?;
        let reversible = if line.eat("<->") {
            true
        } else if line.eat("->") {
            false
        } else {
            return Err(line.error("expected `->` or `<->`"));
        };
        let rhs = line.complex()?;
        if !line.eat(":") {
            return Err(line.error("expected `:` before the rate constants"));
        }
        let forward = line.rate()?;
        let backward = if line.eat(",") { Some(line.rate()?) } else { None };
        if !line.at_end() {
            return Err(line.error("unexpected trailing input"));
        }
        if !reversible && backward.is_some() {
            return Err(line.error("`->` takes a single rate"));
        }
        let a = self.intern_complex(line, lhs)?;
        let b = self.intern_complex(line, rhs)?;
        self.add(line, a, b, forward)?;
        if reversible {
            self.add(line, b, a, backward.unwrap_or(forward))?;
        }
        Ok(())
    }
}

/// Parses a network file into a mass-action system.
pub fn parse_network(text: &str) -> Result<MassActionSystem> {
    let mut builder = Builder { species: Vec::new(), complexes: Vec::new(), reactions: Vec::new(), rates: Vec::new() };
    for (k, raw) in text.lines().enumerate() {
        let raw = raw.strip_suffix('\r').unwrap_or(raw);
        if raw.trim().is_empty() || raw.trim_start().starts_with('#') {
            continue;
        }
        let mut line = Line::new(k + 1, raw);
        builder.parse_line(&mut line)?;
    }
    if builder.reactions.is_empty() {
        return Err(Error::InvalidNetwork("no reactions".into()));
    }
    let n = builder.species.len();
    let m = builder.complexes.len();
    let mut y = DMatrix::zeros(n, m);
    for (j, complex) in builder.complexes.iter().enumerate() {
        for &(i, coef) in complex {
            y[(i, j)] = coef.to_f64();
        }
    }
    let net = ReactionNetwork::new(builder.species, y, builder.reactions)?;
    MassActionSystem::new(net, builder.rates)
}

fn write_complex(out: &mut String, net: &ReactionNetwork, c: usize) {
    let col = net.y().column(c);
    let mut first = true;
    for (i, &v) in col.iter().enumerate() {
        if v == 0.0 {
            continue;
        }
        if !first {
            out.push_str(" + ");
        }
        first = false;
        if v != 1.0 {
            let _ = write!(out, "{v} ");
        }
        out.push_str(&net.species()[i]);
    }
    if first {
        out.push('0');
    }
}

/// One `->` line per reaction, in stored order.
pub fn serialize(sys: &MassActionSystem) -> String {
    let net = sys.network();
    let mut out = String::new();
    for (&(i, j), &k) in net.reactions().iter().zip(sys.rates()) {
        write_complex(&mut out, net, i);
        out.push_str(" -> ");
        write_complex(&mut out, net, j);
        let _ = writeln!(out, " : {k:?}");
    }
    out
}
