use num_complex::Complex64;

use super::{Expr, ExprError, FlatKind, Var};

/// Parse an expression over `n` base/fiber variables.
///
/// Precedence: `^` binds tightest, then unary minus, then `*` `/`, then `+` `-`.
pub fn parse_expression(src: &str, n: usize) -> Result<Expr, ExprError> {
    let mut p = Parser { src: src.as_bytes(), pos: 0, n };
    p.skip_ws();
    if p.pos == p.src.len() {
        return Err(p.syntax("empty expression"));
    }
    let e = p.expr()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(p.syntax("unexpected trailing input"));
    }
    Ok(e)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    n: usize,
}

impl Parser<'_> {
    fn syntax(&self, msg: &str) -> ExprError {
        ExprError::Syntax { offset: self.pos, msg: msg.to_string() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> Result<(), ExprError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.syntax(&format!("expected `{}`", c as char)))
        }
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.term()?;
        loop {
            if self.eat(b'+') {
                lhs = lhs.add(&self.term()?);
            } else if self.eat(b'-') {
                lhs = lhs.sub(&self.term()?);
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat(b'*') {
                lhs = lhs.mul(&self.unary()?);
            } else if self.eat(b'/') {
                lhs = lhs.div(&self.unary()?);
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        if self.eat(b'-') {
            return Ok(self.unary()?.neg());
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let base = self.primary()?;
        if !self.eat(b'^') {
            return Ok(base);
        }
        let negative = self.eat(b'-');
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.syntax("expected integer exponent"));
        }
        if self.pos < self.src.len() && matches!(self.src[self.pos], b'.' | b'e' | b'E') {
            return Err(self.syntax("only integer powers are allowed"));
        }
        let digits = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        let k: i32 = digits.parse().map_err(|_| ExprError::Syntax {
            offset: start,
            msg: "exponent too large".into(),
        })?;
        Ok(base.powi(if negative { -k } else { k }))
    }

    fn number(&mut self) -> Result<Expr, ExprError> {
        let start = self.pos;
        let s = self.src;
        let digits = |p: &mut usize| {
            let b = *p;
            while *p < s.len() && s[*p].is_ascii_digit() {
                *p += 1;
            }
            *p > b
        };
        let mut p = self.pos;
        let int = digits(&mut p);
        let mut frac = false;
        if p < s.len() && s[p] == b'.' {
            p += 1;
            frac = digits(&mut p);
        }
        if !int && !frac {
            return Err(ExprError::Syntax { offset: start, msg: "malformed number".into() });
        }
        if p < s.len() && (s[p] == b'e' || s[p] == b'E') {
            let mut q = p + 1;
            if q < s.len() && (s[q] == b'+' || s[q] == b'-') {
                q += 1;
            }
            if digits(&mut q) {
                p = q;
            }
        }
        self.pos = p;
        let text = std::str::from_utf8(&s[start..p]).unwrap();
        let v: f64 = text
            .parse()
            .map_err(|_| ExprError::Syntax { offset: start, msg: "malformed number".into() })?;
        if !v.is_finite() {
            return Err(ExprError::Syntax { offset: start, msg: "number out of range".into() });
        }
        Ok(Expr::real(v))
    }

    fn args(&mut self, count: usize) -> Result<Vec<Expr>, ExprError> {
        self.expect(b'(')?;
        let mut out = Vec::with_capacity(count);
        for k in 0..count {
            if k > 0 {
                self.expect(b',')?;
            }
            out.push(self.expr()?);
        }
        self.expect(b')')?;
        Ok(out)
    }

    fn order_then_arg(&mut self) -> Result<(u32, Expr), ExprError> {
        self.expect(b'(')?;
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.syntax("expected derivative order"));
        }
        let k: u32 = std::str::from_utf8(&self.src[start..self.pos])
            .unwrap()
            .parse()
            .map_err(|_| ExprError::Syntax { offset: start, msg: "order too large".into() })?;
        self.expect(b',')?;
        let arg = self.expr()?;
        self.expect(b')')?;
        Ok((k, arg))
    }

    fn primary(&mut self) -> Result<Expr, ExprError> {
        let c = match self.peek() {
            Some(c) => c,
            None => return Err(self.syntax("unexpected end of input")),
        };
        if c == b'(' {
            self.pos += 1;
            let e = self.expr()?;
            self.expect(b')')?;
            return Ok(e);
        }
        if c.is_ascii_digit() || c == b'.' {
            return self.number();
        }
        if !(c.is_ascii_alphabetic() || c == b'_') {
            return Err(self.syntax(&format!("unexpected character `{}`", c as char)));
        }
        let start = self.pos;
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
        {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        match name {
            "i" => return Ok(Expr::constant(Complex64::i())),
            "normXiPrime" => {
                if self.n < 2 {
                    return Err(ExprError::IndexOutOfRange { name: name.into(), offset: start, n: self.n });
                }
                return Ok(Expr::norm_xi_prime());
            }
            "exp" => return Ok(self.args(1)?[0].exp()),
            "bump" => return Ok(self.args(1)?[0].bump()),
            "flatExp" => return Ok(Expr::flat_exp(&self.args(1)?[0])),
            "flatExp1" => return Ok(Expr::flat_exp1(&self.args(1)?[0])),
            "dflatExp" => {
                let (k, a) = self.order_then_arg()?;
                return Ok(Expr::flat(FlatKind::Square, k, &a));
            }
            "dflatExp1" => {
                let (k, a) = self.order_then_arg()?;
                return Ok(Expr::flat(FlatKind::Linear, k, &a));
            }
            "cutoff" => {
                let a = self.args(3)?;
                return Ok(Expr::cutoff(&a[0], &a[1], &a[2]));
            }
            _ => {}
        }
        let (prefix, ctor): (&str, fn(usize) -> Var) = if let Some(rest) = name.strip_prefix("xi") {
            if rest.bytes().all(|b| b.is_ascii_digit()) && !rest.is_empty() {
                ("xi", Var::Xi)
            } else {
                return Err(ExprError::UnknownIdentifier { name: name.into(), offset: start });
            }
        } else if let Some(rest) = name.strip_prefix('x') {
            if rest.bytes().all(|b| b.is_ascii_digit()) && !rest.is_empty() {
                ("x", Var::X)
            } else {
                return Err(ExprError::UnknownIdentifier { name: name.into(), offset: start });
            }
        } else {
            return Err(ExprError::UnknownIdentifier { name: name.into(), offset: start });
        };
        let index: usize = name[prefix.len()..].parse().unwrap_or(0);
        if index == 0 || index > self.n {
            return Err(ExprError::IndexOutOfRange { name: name.into(), offset: start, n: self.n });
        }
        Ok(Expr::var(ctor(index - 1)))
    }
}
