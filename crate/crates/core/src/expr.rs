//! Arithmetic expressions for family files: `+ - * / ^`, parentheses,
//! `sqrt(..)`, `pi` and named constants.

use std::collections::BTreeMap;

pub fn eval(src: &str, vars: &BTreeMap<String, f64>) -> Result<f64, String> {
    let mut p = Parser { s: src.as_bytes(), i: 0, vars };
    let v = p.expr()?;
    p.ws();
    if p.i != p.s.len() {
        return Err(format!("unexpected `{}` in `{src}`", &src[p.i..]));
    }
    Ok(v)
}

/// Evaluates named constant expressions; each may reference the others.
pub fn eval_constants(raw: &BTreeMap<String, String>) -> Result<BTreeMap<String, f64>, String> {
    let mut done = BTreeMap::new();
    let mut pending: Vec<(&String, &String)> = raw.iter().collect();
    while !pending.is_empty() {
        let before = pending.len();
        let mut last_err = String::new();
        pending.retain(|(k, v)| match eval(v, &done) {
            Ok(x) => {
                done.insert((*k).clone(), x);
                false
            }
            Err(e) => {
                last_err = format!("constant `{k}`: {e}");
                true
            }
        });
        if pending.len() == before {
            return Err(last_err);
        }
    }
    Ok(done)
}

struct Parser<'a> {
    s: &'a [u8],
    i: usize,
    vars: &'a BTreeMap<String, f64>,
}

impl Parser<'_> {
    fn ws(&mut self) {
        while self.i < self.s.len() && self.s[self.i].is_ascii_whitespace() {
            self.i += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.ws();
        self.s.get(self.i).copied()
    }

    fn expr(&mut self) -> Result<f64, String> {
        let mut v = self.term()?;
        while let Some(c @ (b'+' | b'-')) = self.peek() {
            self.i += 1;
            let r = self.term()?;
            v = if c == b'+' { v + r } else { v - r };
        }
        Ok(v)
    }

    fn term(&mut self) -> Result<f64, String> {
        let mut v = self.power()?;
        while let Some(c @ (b'*' | b'/')) = self.peek() {
            self.i += 1;
            let r = self.power()?;
            v = if c == b'*' { v * r } else { v / r };
        }
        Ok(v)
    }

    fn power(&mut self) -> Result<f64, String> {
        let base = self.unary()?;
        if self.peek() == Some(b'^') {
            self.i += 1;
            let e = self.power()?;
            return Ok(base.powf(e));
        }
        Ok(base)
    }

    fn unary(&mut self) -> Result<f64, String> {
        match self.peek() {
            Some(b'-') => {
                self.i += 1;
                Ok(-self.unary()?)
            }
            Some(b'+') => {
                self.i += 1;
                self.unary()
            }
            _ => self.primary(),
        }
    }

    fn primary(&mut self) -> Result<f64, String> {
        match self.peek() {
            Some(b'(') => {
                self.i += 1;
                let v = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err("missing `)`".into());
                }
                self.i += 1;
                Ok(v)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => {
                let start = self.i;
                while self.i < self.s.len() {
                    let c = self.s[self.i];
                    let exp_sign = (c == b'-' || c == b'+') && matches!(self.s[self.i - 1], b'e' | b'E');
                    if c.is_ascii_digit() || c == b'.' || c == b'e' || c == b'E' || exp_sign {
                        self.i += 1;
                    } else {
                        break;
                    }
                }
                let txt = std::str::from_utf8(&self.s[start..self.i]).unwrap();
                txt.parse::<f64>().map_err(|_| format!("bad number `{txt}`"))
            }
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => {
                let start = self.i;
                while self.i < self.s.len() && (self.s[self.i].is_ascii_alphanumeric() || self.s[self.i] == b'_') {
                    self.i += 1;
                }
                let name = std::str::from_utf8(&self.s[start..self.i]).unwrap();
                if self.peek() == Some(b'(') {
                    let arg = self.primary()?;
                    return match name {
                        "sqrt" => Ok(arg.sqrt()),
                        _ => Err(format!("unknown function `{name}`")),
                    };
                }
                if name == "pi" {
                    return Ok(std::f64::consts::PI);
                }
                self.vars.get(name).copied().ok_or_else(|| format!("unknown name `{name}`"))
            }
            Some(c) => Err(format!("unexpected `{}`", c as char)),
            None => Err("unexpected end of expression".into()),
        }
    }
}
