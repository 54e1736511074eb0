use std::fmt;

use num_complex::Complex64;

use super::{Expr, FlatKind, Node};

const ADD: u8 = 1;
const MUL: u8 = 2;
const NEG: u8 = 3;
const POW: u8 = 4;
const ATOM: u8 = 5;

fn real_text(v: f64) -> String {
    let s = format!("{v:?}");
    s.strip_suffix(".0").map(str::to_string).unwrap_or(s)
}

fn const_prec(c: Complex64) -> u8 {
    if c.im != 0.0 {
        ATOM
    } else if c.re < 0.0 || (c.re == 0.0 && c.re.is_sign_negative()) {
        NEG
    } else {
        ATOM
    }
}

fn const_text(c: Complex64) -> String {
    if c.im == 0.0 {
        return real_text(c.re);
    }
    let im = if c.im == 1.0 {
        "i".to_string()
    } else if c.im == -1.0 {
        "-i".to_string()
    } else {
        format!("{}*i", real_text(c.im))
    };
    if c.re == 0.0 {
        return format!("({im})");
    }
    match im.strip_prefix('-') {
        Some(pos) => format!("({} - {})", real_text(c.re), pos),
        None => format!("({} + {})", real_text(c.re), im),
    }
}

fn prec(e: &Expr) -> u8 {
    match e.node() {
        Node::Const(c) => const_prec(*c),
        Node::Add(..) | Node::Sub(..) => ADD,
        Node::Mul(..) | Node::Div(..) => MUL,
        Node::Neg(_) => NEG,
        Node::Pow(..) => POW,
        _ => ATOM,
    }
}

fn write_at(f: &mut fmt::Formatter<'_>, e: &Expr, min: u8) -> fmt::Result {
    if prec(e) < min {
        write!(f, "(")?;
        write_expr(f, e)?;
        write!(f, ")")
    } else {
        write_expr(f, e)
    }
}

fn write_expr(f: &mut fmt::Formatter<'_>, e: &Expr) -> fmt::Result {
    match e.node() {
        Node::Const(c) => write!(f, "{}", const_text(*c)),
        Node::Var(v) => write!(f, "{v}"),
        Node::NormXiPrime => write!(f, "normXiPrime"),
        Node::Neg(a) => {
            write!(f, "-")?;
            write_at(f, a, NEG)
        }
        Node::Add(a, b) => {
            write_at(f, a, ADD)?;
            write!(f, " + ")?;
            write_at(f, b, MUL)
        }
        Node::Sub(a, b) => {
            write_at(f, a, ADD)?;
            write!(f, " - ")?;
            write_at(f, b, MUL)
        }
        Node::Mul(a, b) => {
            write_at(f, a, MUL)?;
            write!(f, "*")?;
            write_at(f, b, POW)
        }
        Node::Div(a, b) => {
            write_at(f, a, MUL)?;
            write!(f, "/")?;
            write_at(f, b, POW)
        }
        Node::Pow(a, k) => {
            write_at(f, a, ATOM)?;
            write!(f, "^{k}")
        }
        Node::Exp(a) => write!(f, "exp({a})"),
        Node::Bump(a) => write!(f, "bump({a})"),
        Node::Flat { kind, order, arg } => match (kind, order) {
            (FlatKind::Square, 0) => write!(f, "flatExp({arg})"),
            (FlatKind::Linear, 0) => write!(f, "flatExp1({arg})"),
            (FlatKind::Square, k) => write!(f, "dflatExp({k}, {arg})"),
            (FlatKind::Linear, k) => write!(f, "dflatExp1({k}, {arg})"),
        },
        Node::Cutoff(t, a, b) => write!(f, "cutoff({t}, {a}, {b})"),
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_expr(f, self)
    }
}
