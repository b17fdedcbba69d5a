use super::ast::*;
use super::lexer::{lex, Tok, Token};
use super::{ErrorKind, SequenceError};
use crate::engine::TransferDirection;

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

/// Parses a pulse program. See the crate README for the grammar.
pub fn parse_sequence(text: &str) -> Result<SequenceAst, SequenceError> {
    let lexed = lex(text)?;
    let mut p = Parser { tokens: lexed.tokens, pos: 0 };
    let statements = p.block(false)?;
    let name = lexed
        .comments
        .iter()
        .find_map(|c| c.strip_prefix("name:").map(|n| n.trim().to_string()));
    Ok(SequenceAst { statements, metadata: Metadata { name, comments: lexed.comments } })
}

const DIRECTIVES: &[&str] = &["pulse", "grad", "wait", "rfpulse", "transfer", "acquire", "let", "repeat"];

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn next(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn unexpected(&self, expected: &[&str]) -> SequenceError {
        let t = self.peek();
        SequenceError::new(ErrorKind::Syntax, t.span, format!("unexpected {}", t.tok.describe())).expecting(expected)
    }

    /// Statements until end of input, or until `}` when inside a block.
    fn block(&mut self, inner: bool) -> Result<Vec<Statement>, SequenceError> {
        let mut out = Vec::new();
        loop {
            match &self.peek().tok {
                Tok::Sep => {
                    self.next();
                }
                Tok::Eof if !inner => return Ok(out),
                Tok::RBrace if inner => {
                    self.next();
                    return Ok(out);
                }
                Tok::Ident(_) => {
                    out.push(self.statement()?);
                    match &self.peek().tok {
                        Tok::Sep => {
                            self.next();
                        }
                        Tok::Eof if !inner => {}
                        Tok::RBrace if inner => {}
                        _ => {
                            let mut exp = vec!["end of line", "`;`"];
                            if inner {
                                exp.push("`}`");
                            }
                            return Err(self.unexpected(&exp));
                        }
                    }
                }
                _ => {
                    let mut exp = DIRECTIVES.to_vec();
                    if inner {
                        exp.push("`}`");
                    }
                    return Err(self.unexpected(&exp));
                }
            }
        }
    }

    fn statement(&mut self) -> Result<Statement, SequenceError> {
        let head = self.next();
        let span = head.span;
        let Tok::Ident(word) = head.tok else { unreachable!("caller checked for an identifier") };
        let directive = match word.as_str() {
            "pulse" | "rfpulse" => {
                let angle = self.keyed("angle", Slot::Angle)?;
                let phase = self.keyed("phase", Slot::Phase)?;
                if word == "pulse" {
                    Directive::Pulse { angle, phase }
                } else {
                    Directive::RfPulse { angle, phase }
                }
            }
            "grad" => {
                let g = self.keyed("G", Slot::Gradient)?;
                let dur = self.keyed("dur", Slot::Duration)?;
                Directive::Grad { g, dur }
            }
            "wait" => Directive::Wait(self.arg(Slot::Duration)?),
            "transfer" => match &self.peek().tok {
                Tok::Ident(w) if w == "e2n" => {
                    self.next();
                    Directive::Transfer(TransferDirection::ElectronToNuclear)
                }
                Tok::Ident(w) if w == "n2e" => {
                    self.next();
                    Directive::Transfer(TransferDirection::NuclearToElectron)
                }
                _ => return Err(self.unexpected(&["e2n", "n2e"])),
            },
            "acquire" => {
                let dur_span = self.peek().span;
                let dur = self.arg(Slot::Duration)?;
                let dt_span = self.tokens.get(self.pos + 2).map(|t| t.span).unwrap_or(dur_span);
                let dt = self.keyed("dt", Slot::Duration)?;
                if let (Arg::Literal(Literal::Quantity(d)), Arg::Literal(Literal::Quantity(s))) = (&dur, &dt) {
                    let (d, s) = (d.to_si(), s.to_si());
                    if s <= 0.0 {
                        return Err(SequenceError::new(ErrorKind::Range, dt_span, "dt must be positive"));
                    }
                    if s > d {
                        return Err(SequenceError::new(
                            ErrorKind::Range,
                            dt_span,
                            "dt exceeds the acquisition duration",
                        ));
                    }
                }
                Directive::Acquire { dur, dt }
            }
            "let" => self.let_binding()?,
            "repeat" => self.repeat()?,
            _ => {
                return Err(SequenceError::new(ErrorKind::Syntax, span, format!("unknown directive `{word}`"))
                    .expecting(DIRECTIVES));
            }
        };
        Ok(Statement { directive, span })
    }

    fn keyed(&mut self, key: &str, slot: Slot) -> Result<Arg, SequenceError> {
        let expected = format!("`{key}=`");
        match &self.peek().tok {
            Tok::Ident(w) if w == key => {
                self.next();
            }
            _ => return Err(self.unexpected(&[&expected])),
        }
        if self.peek().tok != Tok::Eq {
            return Err(self.unexpected(&["`=`"]));
        }
        self.next();
        self.arg(slot)
    }

    fn arg(&mut self, slot: Slot) -> Result<Arg, SequenceError> {
        let t = self.peek().clone();
        match t.tok {
            Tok::Param(name) => {
                self.next();
                let index = self.index()?;
                Ok(Arg::Param { name, index })
            }
            Tok::Number { .. } | Tok::Phase(_) => {
                self.next();
                let lit = literal_of(t.tok);
                slot.check(&lit, t.span)?;
                Ok(Arg::Literal(lit))
            }
            _ => Err(self.unexpected(slot.expected())),
        }
    }

    fn index(&mut self) -> Result<Option<Index>, SequenceError> {
        if self.peek().tok != Tok::LBracket {
            return Ok(None);
        }
        self.next();
        let t = self.next();
        let idx = match t.tok {
            Tok::Ident(w) if w == "i" => Index::LoopVar,
            Tok::Number { text, unit: None } if text.bytes().all(|b| b.is_ascii_digit()) => {
                match text.parse() {
                    Ok(n) => Index::Fixed(n),
                    Err(_) => return Err(SequenceError::new(ErrorKind::Range, t.span, "index too large")),
                }
            }
            other => {
                return Err(SequenceError::new(ErrorKind::Syntax, t.span, format!("unexpected {}", other.describe()))
                    .expecting(&["i", "non-negative integer"]));
            }
        };
        if self.peek().tok != Tok::RBracket {
            return Err(self.unexpected(&["`]`"]));
        }
        self.next();
        Ok(Some(idx))
    }

    fn let_binding(&mut self) -> Result<Directive, SequenceError> {
        let name = match &self.peek().tok {
            Tok::Ident(n) if !is_reserved(n) => n.clone(),
            _ => return Err(self.unexpected(&["parameter name"])),
        };
        self.next();
        if self.peek().tok != Tok::Eq {
            return Err(self.unexpected(&["`=`"]));
        }
        self.next();
        let value = if self.peek().tok == Tok::LBracket {
            self.next();
            let mut items = vec![self.let_literal()?];
            loop {
                match self.peek().tok {
                    Tok::Comma => {
                        self.next();
                        items.push(self.let_literal()?);
                    }
                    Tok::RBracket => {
                        self.next();
                        break;
                    }
                    _ => return Err(self.unexpected(&["`,`", "`]`"])),
                }
            }
            LetValue::List(items)
        } else {
            LetValue::Scalar(self.let_literal()?)
        };
        Ok(Directive::Let { name, value })
    }

    fn let_literal(&mut self) -> Result<Literal, SequenceError> {
        match &self.peek().tok {
            Tok::Number { .. } | Tok::Phase(_) => Ok(literal_of(self.next().tok)),
            _ => Err(self.unexpected(&["number", "quantity", "phase"])),
        }
    }

    fn repeat(&mut self) -> Result<Directive, SequenceError> {
        let t = self.peek().clone();
        let count = match t.tok {
            Tok::Number { ref text, unit: None } if is_integer(text) => {
                self.next();
                match text.parse::<i64>() {
                    Ok(n) => Count::Literal(n),
                    Err(_) => return Err(SequenceError::new(ErrorKind::Range, t.span, "repeat count too large")),
                }
            }
            Tok::Param(ref name) => {
                self.next();
                Count::Param(name.clone())
            }
            _ => return Err(self.unexpected(&["integer", "parameter"])),
        };
        if self.peek().tok != Tok::LBrace {
            return Err(self.unexpected(&["`{`"]));
        }
        self.next();
        let body = self.block(true)?;
        Ok(Directive::Repeat { count, body })
    }
}

fn is_integer(text: &str) -> bool {
    let digits = text.strip_prefix(['+', '-']).unwrap_or(text);
    !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit())
}

fn is_reserved(name: &str) -> bool {
    DIRECTIVES.contains(&name) || name == "i"
}

fn literal_of(tok: Tok) -> Literal {
    match tok {
        Tok::Number { text, unit: Some(unit) } => Literal::Quantity(Quantity { text, unit }),
        Tok::Number { text, unit: None } => Literal::Number(text),
        Tok::Phase(p) => Literal::Phase(p),
        _ => unreachable!("only numbers and phases are literals"),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Slot {
    Angle,
    Phase,
    Gradient,
    Duration,
}

impl Slot {
    pub(crate) fn expected(&self) -> &'static [&'static str] {
        match self {
            Slot::Angle => &["angle (e.g. `0.5pi`, `90deg`, `1.2rad`)", "parameter"],
            Slot::Phase => &["`+x`", "`-x`", "`+y`", "`-y`", "phase in deg", "parameter"],
            Slot::Gradient => &["gradient (e.g. `30mT/m`, `0.03T/m`)", "parameter"],
            Slot::Duration => &["duration (e.g. `3us`, `10ns`, `1ms`)", "parameter"],
        }
    }

    /// Unit and range check of a literal in this slot.
    pub(crate) fn check(&self, lit: &Literal, span: Span) -> Result<(), SequenceError> {
        let unit_err = |msg: String| Err(SequenceError::new(ErrorKind::Unit, span, msg).expecting(self.expected()));
        match (self, lit) {
            (Slot::Phase, Literal::Phase(_)) => Ok(()),
            (Slot::Phase, Literal::Quantity(q)) if q.unit == Unit::Deg => Ok(()),
            (_, Literal::Phase(p)) => Err(SequenceError::new(
                ErrorKind::Syntax,
                span,
                format!("phase symbol `{}` not allowed here", p.as_str()),
            )
            .expecting(self.expected())),
            (_, Literal::Number(n)) => unit_err(format!("missing unit on `{n}`")),
            (Slot::Angle, Literal::Quantity(q)) if q.unit.kind() == UnitKind::Angle => Ok(()),
            (Slot::Gradient, Literal::Quantity(q)) if q.unit.kind() == UnitKind::Gradient => Ok(()),
            (Slot::Duration, Literal::Quantity(q)) if q.unit.kind() == UnitKind::Time => {
                if q.to_si() < 0.0 || q.text.starts_with('-') {
                    Err(SequenceError::new(ErrorKind::Range, span, format!("negative duration `{}{}`", q.text, q.unit.as_str())))
                } else {
                    Ok(())
                }
            }
            (_, Literal::Quantity(q)) => unit_err(format!("unit `{}` not allowed here", q.unit.as_str())),
        }
    }
}
