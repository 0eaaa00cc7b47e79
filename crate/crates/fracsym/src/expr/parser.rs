//! Recursive-descent parser for the expression grammar:
//!
//! ```text
//! expr   := term (('+'|'-') term)*
//! term   := factor (('*'|'/') factor)*
//! factor := '-' factor | power
//! power  := atom ('^' factor)?
//! atom   := number | ident | ident '(' expr ')' | '(' expr ')'
//! ```
//!
//! `^` is right-associative and unary minus binds looser than `^`, so
//! `-x^2` parses as `-(x^2)` while `x^-2` parses as `x^(-2)`. Positions in
//! errors are 1-based lines and 0-based columns.

use super::{Expr, ExprError, Func};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(NumLit),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    End,
}

#[derive(Debug, Clone, PartialEq)]
enum NumLit {
    Int(i64),
    Dec(f64),
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

fn err(line: usize, col: usize, message: impl Into<String>) -> ExprError {
    ExprError::Parse { line, col, message: message.into() }
}

fn tokenize(src: &str) -> Result<Vec<Spanned>, ExprError> {
    let mut out = Vec::new();
    let chars: Vec<char> = src.chars().collect();
    let mut i = 0;
    let mut line = 1;
    let mut col = 0;
    while i < chars.len() {
        let c = chars[i];
        let (tl, tc) = (line, col);
        let advance = |i: &mut usize, line: &mut usize, col: &mut usize| {
            if chars[*i] == '\n' {
                *line += 1;
                *col = 0;
            } else {
                *col += 1;
            }
            *i += 1;
        };
        match c {
            ' ' | '\t' | '\r' | '\n' => advance(&mut i, &mut line, &mut col),
            '+' | '-' | '*' | '/' | '^' | '(' | ')' => {
                let tok = match c {
                    '+' => Tok::Plus,
                    '-' => Tok::Minus,
                    '*' => Tok::Star,
                    '/' => Tok::Slash,
                    '^' => Tok::Caret,
                    '(' => Tok::LParen,
                    _ => Tok::RParen,
                };
                out.push(Spanned { tok, line: tl, col: tc });
                advance(&mut i, &mut line, &mut col);
            }
            '0'..='9' | '.' => {
                let start = i;
                let mut seen_dot = false;
                let mut seen_exp = false;
                while i < chars.len() {
                    let d = chars[i];
                    let take = match d {
                        '0'..='9' => true,
                        '.' if !seen_dot && !seen_exp => {
                            seen_dot = true;
                            true
                        }
                        'e' | 'E' if !seen_exp && i > start => {
                            seen_exp = true;
                            true
                        }
                        '+' | '-' if i > start && matches!(chars[i - 1], 'e' | 'E') => true,
                        _ => false,
                    };
                    if !take {
                        break;
                    }
                    advance(&mut i, &mut line, &mut col);
                }
                let text: String = chars[start..i].iter().collect();
                let lit = if seen_dot || seen_exp {
                    NumLit::Dec(
                        text.parse::<f64>()
                            .map_err(|_| err(tl, tc, format!("invalid number `{text}`")))?,
                    )
                } else {
                    NumLit::Int(
                        text.parse::<i64>()
                            .map_err(|_| err(tl, tc, format!("integer literal `{text}` out of range")))?,
                    )
                };
                out.push(Spanned { tok: Tok::Num(lit), line: tl, col: tc });
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    advance(&mut i, &mut line, &mut col);
                }
                let text: String = chars[start..i].iter().collect();
                out.push(Spanned { tok: Tok::Ident(text), line: tl, col: tc });
            }
            other => return Err(err(tl, tc, format!("unexpected character `{other}`"))),
        }
    }
    out.push(Spanned { tok: Tok::End, line, col });
    Ok(out)
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Spanned {
        &self.toks[self.pos]
    }

    fn bump(&mut self) -> Spanned {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), ExprError> {
        let t = self.peek().clone();
        if t.tok == tok {
            self.bump();
            Ok(())
        } else {
            Err(err(t.line, t.col, format!("expected {what}")))
        }
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut terms = vec![self.term()?];
        loop {
            match self.peek().tok {
                Tok::Plus => {
                    self.bump();
                    terms.push(self.term()?);
                }
                Tok::Minus => {
                    self.bump();
                    let t = self.term()?;
                    terms.push(Expr::neg(t));
                }
                _ => break,
            }
        }
        Ok(Expr::sum(terms))
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut factors = vec![self.factor()?];
        loop {
            match self.peek().tok {
                Tok::Star => {
                    self.bump();
                    factors.push(self.factor()?);
                }
                Tok::Slash => {
                    self.bump();
                    let f = self.factor()?;
                    factors.push(Expr::pow(f, Expr::int(-1)));
                }
                _ => break,
            }
        }
        Ok(Expr::product(factors))
    }

    fn factor(&mut self) -> Result<Expr, ExprError> {
        if self.peek().tok == Tok::Minus {
            self.bump();
            let inner = self.factor()?;
            return Ok(Expr::neg(inner));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let base = self.atom()?;
        if self.peek().tok == Tok::Caret {
            self.bump();
            let exp = self.factor()?;
            return Ok(Expr::pow(base, exp));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ExprError> {
        let t = self.bump();
        match t.tok {
            Tok::Num(NumLit::Int(n)) => Ok(Expr::int(n)),
            Tok::Num(NumLit::Dec(x)) => Ok(Expr::dec(x)),
            Tok::Ident(name) => {
                if self.peek().tok == Tok::LParen {
                    let func = Func::from_name(&name).ok_or_else(|| {
                        err(t.line, t.col, format!("unknown function `{name}`"))
                    })?;
                    self.bump();
                    let arg = self.expr()?;
                    self.expect(Tok::RParen, "`)`")?;
                    Ok(Expr::apply(func, arg))
                } else {
                    Ok(Expr::var(name))
                }
            }
            Tok::LParen => {
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            _ => Err(err(t.line, t.col, "expected a number, variable, function call or `(`")),
        }
    }
}

/// Parse `source` into a canonical [`Expr`].
pub fn parse(source: &str) -> Result<Expr, ExprError> {
    let toks = tokenize(source)?;
    let mut p = Parser { toks, pos: 0 };
    let e = p.expr()?;
    let t = p.peek().clone();
    if t.tok != Tok::End {
        return Err(err(t.line, t.col, "unexpected trailing input"));
    }
    Ok(e)
}
