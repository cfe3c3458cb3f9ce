//! Text form: `(3/2+1/2i)*s[1,2]·s*[2] + s[1] - 1`.
//!
//! A term is an optional coefficient (a bare rational or a parenthesized
//! Gaussian rational) followed by a product of atoms `s[..]`, `s*[..]` or
//! `1`, joined with `·` or `.`.

use num_bigint::BigInt;
use num_complex::Complex;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use super::{Coeff, CuntzElement};
use crate::error::{Error, Result};

pub fn print(a: &CuntzElement) -> String {
    if a.is_zero() {
        return "0".into();
    }
    let parts: Vec<String> = a
        .terms()
        .iter()
        .map(|((mu, nu), c)| {
            let mut atoms = Vec::new();
            if !mu.is_empty() {
                atoms.push(format!("s[{}]", join(mu)));
            }
            if !nu.is_empty() {
                atoms.push(format!("s*[{}]", join(nu)));
            }
            let word = atoms.join("·");
            match (c.is_one(), word.is_empty()) {
                (true, true) => "1".into(),
                (true, false) => word,
                (false, true) => format!("({})", print_coeff(c)),
                (false, false) => format!("({})*{word}", print_coeff(c)),
            }
        })
        .collect();
    parts.join(" + ")
}

fn join(w: &[u8]) -> String {
    w.iter().map(|l| l.to_string()).collect::<Vec<_>>().join(",")
}

fn print_coeff(c: &Coeff) -> String {
    match (c.re.is_zero(), c.im.is_zero()) {
        (_, true) => c.re.to_string(),
        (true, false) => format!("{}i", c.im),
        (false, false) => {
            let sign = if c.im.is_negative() { '-' } else { '+' };
            format!("{}{sign}{}i", c.re, c.im.abs())
        }
    }
}

/// Largest letter appearing inside brackets.
pub fn max_letter(s: &str) -> usize {
    let mut inside = false;
    let mut best = 0;
    let mut cur = 0usize;
    for ch in s.chars() {
        match ch {
            '[' => inside = true,
            ']' | ',' if inside => {
                best = best.max(cur);
                cur = 0;
                inside = ch != ']';
            }
            d if inside && d.is_ascii_digit() => cur = cur * 10 + d.to_digit(10).unwrap() as usize,
            _ => {}
        }
    }
    best
}

/// Parse over alphabet 1..=n.
pub fn parse(text: &str, n: usize) -> Result<CuntzElement> {
    let mut p = Parser { s: text.as_bytes(), pos: 0, n };
    let out = p.expr()?;
    p.ws();
    if p.pos != p.s.len() {
        return Err(p.err("trailing input"));
    }
    Ok(out)
}

struct Parser<'a> {
    s: &'a [u8],
    pos: usize,
    n: usize,
}

impl Parser<'_> {
    fn err(&self, msg: &str) -> Error {
        Error::Parse { pos: self.pos, msg: msg.into() }
    }

    fn ws(&mut self) {
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.ws();
        self.s.get(self.pos).copied()
    }

    fn eat(&mut self, tok: &str) -> bool {
        self.ws();
        if self.s[self.pos..].starts_with(tok.as_bytes()) {
            self.pos += tok.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: &str) -> Result<()> {
        if self.eat(tok) { Ok(()) } else { Err(self.err(&format!("expected `{tok}`"))) }
    }

    fn expr(&mut self) -> Result<CuntzElement> {
        let mut acc = CuntzElement::zero(self.n);
        let mut negate = self.eat("-");
        loop {
            let t = self.term()?;
            acc = if negate { &acc - &t } else { &acc + &t };
            if self.eat("+") {
                negate = false;
            } else if self.eat("-") {
                negate = true;
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<CuntzElement> {
        let c = match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let c = self.complex()?;
                self.expect(")")?;
                Some(c)
            }
            Some(d) if d.is_ascii_digit() && !self.bare_one() => Some(Complex::new(self.rational()?, BigRational::zero())),
            _ => None,
        };
        let has_word = c.is_none() || self.eat("*");
        let mut acc = CuntzElement::one(self.n);
        if has_word {
            acc = self.atom()?;
            while self.eat("·") || self.eat(".") {
                acc = &acc * &self.atom()?;
            }
        }
        Ok(match c {
            Some(c) => acc.scale(&c),
            None => acc,
        })
    }

    /// A lone `1` atom rather than a coefficient.
    fn bare_one(&self) -> bool {
        self.s[self.pos] == b'1' && !self.s.get(self.pos + 1).is_some_and(|b| b.is_ascii_digit() || *b == b'/' || *b == b'*')
    }

    fn atom(&mut self) -> Result<CuntzElement> {
        if self.eat("1") {
            return Ok(CuntzElement::one(self.n));
        }
        self.expect("s")?;
        let adj = self.eat("*");
        self.expect("[")?;
        let mut word = Vec::new();
        loop {
            let start = self.pos;
            let v = self.integer()?;
            let Some(letter) = u8::try_from(v).ok().filter(|&l| l >= 1 && l as usize <= self.n) else {
                self.pos = start;
                return Err(self.err(&format!("letter {v} outside 1..={}", self.n)));
            };
            word.push(letter);
            if !self.eat(",") {
                break;
            }
        }
        self.expect("]")?;
        Ok(if adj { CuntzElement::word(self.n, &[], &word) } else { CuntzElement::word(self.n, &word, &[]) })
    }

    fn integer(&mut self) -> Result<u64> {
        self.ws();
        let start = self.pos;
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        std::str::from_utf8(&self.s[start..self.pos]).unwrap().parse().map_err(|_| {
            self.pos = start;
            self.err("expected a number")
        })
    }

    fn rational(&mut self) -> Result<BigRational> {
        let num = self.integer()?;
        let den = if self.s.get(self.pos) == Some(&b'/') {
            self.pos += 1;
            let d = self.integer()?;
            if d == 0 {
                return Err(self.err("zero denominator"));
            }
            d
        } else {
            1
        };
        Ok(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    fn signed(&mut self) -> Result<(BigRational, bool)> {
        let neg = if self.eat("-") {
            true
        } else {
            self.eat("+");
            false
        };
        // `i` alone means 1·i
        let r = if self.peek() == Some(b'i') { BigRational::one() } else { self.rational()? };
        let imag = self.eat("i");
        Ok((if neg { -r } else { r }, imag))
    }

    fn complex(&mut self) -> Result<Coeff> {
        let mut c = Coeff::zero();
        loop {
            let (r, imag) = self.signed()?;
            if imag {
                c.im += r;
            } else {
                c.re += r;
            }
            if !matches!(self.peek(), Some(b'+' | b'-')) {
                return Ok(c);
            }
        }
    }
}
