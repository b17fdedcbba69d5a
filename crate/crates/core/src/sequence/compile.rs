use std::collections::HashMap;

use super::ast::*;
use super::parser::Slot;
use super::{ErrorKind, SequenceError};
use crate::engine::SequenceEvent;

/// A value bound to a sequence parameter.
#[derive(Debug, Clone, PartialEq)]
pub enum ParamValue {
    Scalar(Literal),
    List(Vec<Literal>),
}

impl ParamValue {
    pub fn duration_s(seconds: f64) -> Self {
        ParamValue::Scalar(Literal::Quantity(Quantity::new(format!("{:e}", seconds), Unit::Us).rescaled(-6)))
    }

    pub fn gradient_t_per_m(g: f64) -> Self {
        ParamValue::Scalar(Literal::Quantity(Quantity::new(format!("{:e}", g), Unit::TeslaPerMetre)))
    }

    pub fn angle_rad(theta: f64) -> Self {
        ParamValue::Scalar(Literal::Quantity(Quantity::new(format!("{:e}", theta), Unit::Rad)))
    }

    pub fn phase(p: PhaseSymbol) -> Self {
        ParamValue::Scalar(Literal::Phase(p))
    }

    pub fn phases(ps: &[PhaseSymbol]) -> Self {
        ParamValue::List(ps.iter().map(|&p| Literal::Phase(p)).collect())
    }

    pub fn integer(n: i64) -> Self {
        ParamValue::Scalar(Literal::Number(n.to_string()))
    }
}

impl Quantity {
    /// Same physical value written with a decimal exponent shifted by
    /// `-shift`, e.g. seconds → microseconds with `shift = -6`.
    fn rescaled(mut self, shift: i32) -> Self {
        let (mantissa, exp) = match self.text.find(['e', 'E']) {
            Some(i) => (self.text[..i].to_string(), self.text[i + 1..].parse::<i32>().unwrap_or(0)),
            None => (self.text.clone(), 0),
        };
        self.text = format!("{mantissa}e{}", exp - shift);
        self
    }
}

pub type Params = HashMap<String, ParamValue>;

struct Compiler<'a> {
    params: &'a Params,
    scopes: Vec<HashMap<String, ParamValue>>,
    loop_index: Vec<usize>,
    events: Vec<SequenceEvent>,
}

/// Lowers an AST to engine events. Externally supplied `params` take
/// precedence over `let` bindings of the same name.
pub fn compile(ast: &SequenceAst, params: &Params) -> Result<Vec<SequenceEvent>, SequenceError> {
    let mut c = Compiler { params, scopes: vec![HashMap::new()], loop_index: Vec::new(), events: Vec::new() };
    c.block(&ast.statements)?;
    Ok(c.events)
}

impl Compiler<'_> {
    fn lookup(&self, name: &str) -> Option<&ParamValue> {
        self.params.get(name).or_else(|| self.scopes.iter().rev().find_map(|s| s.get(name)))
    }

    fn block(&mut self, stmts: &[Statement]) -> Result<(), SequenceError> {
        for s in stmts {
            self.statement(s)?;
        }
        Ok(())
    }

    fn statement(&mut self, s: &Statement) -> Result<(), SequenceError> {
        let span = s.span;
        match &s.directive {
            Directive::Pulse { angle, phase } => {
                let theta = self.value(angle, Slot::Angle, span)?;
                let phase = self.value(phase, Slot::Phase, span)?;
                self.events.push(SequenceEvent::MicrowavePulse { theta, phase });
            }
            Directive::RfPulse { angle, phase } => {
                let theta = self.value(angle, Slot::Angle, span)?;
                let phase = self.value(phase, Slot::Phase, span)?;
                self.events.push(SequenceEvent::RfPulse { theta, phase });
            }
            Directive::Grad { g, dur } => {
                let g = self.value(g, Slot::Gradient, span)?;
                let tau = self.value(dur, Slot::Duration, span)?;
                self.events.push(SequenceEvent::GradientPulse { g, tau });
            }
            Directive::Wait(d) => {
                let t = self.value(d, Slot::Duration, span)?;
                self.events.push(SequenceEvent::Delay { t });
            }
            Directive::Transfer(dir) => self.events.push(SequenceEvent::Transfer(*dir)),
            Directive::Acquire { dur, dt } => {
                let duration = self.value(dur, Slot::Duration, span)?;
                let dt = self.value(dt, Slot::Duration, span)?;
                if dt <= 0.0 {
                    return Err(SequenceError::new(ErrorKind::Range, span, "dt must be positive"));
                }
                if dt > duration {
                    return Err(SequenceError::new(ErrorKind::Range, span, "dt exceeds the acquisition duration"));
                }
                self.events.push(SequenceEvent::Acquire { duration, dt });
            }
            Directive::Let { name, value } => {
                let v = match value {
                    LetValue::Scalar(l) => ParamValue::Scalar(l.clone()),
                    LetValue::List(items) => ParamValue::List(items.clone()),
                };
                self.scopes.last_mut().expect("global scope").insert(name.clone(), v);
            }
            Directive::Repeat { count, body } => {
                let n = match count {
                    Count::Literal(n) => *n,
                    Count::Param(name) => match self.lookup(name) {
                        Some(ParamValue::Scalar(Literal::Number(t))) => t.parse::<i64>().map_err(|_| {
                            SequenceError::new(ErrorKind::Unit, span, format!("`${name}` is not an integer"))
                        })?,
                        Some(_) => {
                            return Err(SequenceError::new(
                                ErrorKind::Unit,
                                span,
                                format!("`${name}` is not an integer"),
                            ))
                        }
                        None => return Err(unbound(name, span)),
                    },
                };
                if n < 0 {
                    return Err(SequenceError::new(ErrorKind::RepeatCount, span, format!("repeat count {n} is negative")));
                }
                for i in 0..n as usize {
                    self.scopes.push(HashMap::new());
                    self.loop_index.push(i);
                    let r = self.block(body);
                    self.loop_index.pop();
                    self.scopes.pop();
                    r?;
                }
            }
        }
        Ok(())
    }

    fn value(&self, arg: &Arg, slot: Slot, span: Span) -> Result<f64, SequenceError> {
        let lit = match arg {
            Arg::Literal(l) => l.clone(),
            Arg::Param { name, index } => {
                let bound = self.lookup(name).ok_or_else(|| unbound(name, span))?;
                match (bound, index) {
                    (ParamValue::Scalar(l), None) => l.clone(),
                    (ParamValue::List(items), Some(idx)) => {
                        let i = match idx {
                            Index::Fixed(i) => *i,
                            Index::LoopVar => *self.loop_index.last().ok_or_else(|| {
                                SequenceError::new(ErrorKind::Index, span, "`i` used outside a repeat block")
                            })?,
                        };
                        items.get(i).cloned().ok_or_else(|| {
                            SequenceError::new(
                                ErrorKind::Index,
                                span,
                                format!("index {i} out of range for `${name}` of length {}", items.len()),
                            )
                        })?
                    }
                    (ParamValue::List(_), None) => {
                        return Err(SequenceError::new(ErrorKind::Index, span, format!("`${name}` is a list; index it")))
                    }
                    (ParamValue::Scalar(_), Some(_)) => {
                        return Err(SequenceError::new(ErrorKind::Index, span, format!("`${name}` is not a list")))
                    }
                }
            }
        };
        slot.check(&lit, span)?;
        Ok(match &lit {
            Literal::Phase(p) => p.radians(),
            Literal::Quantity(q) => q.to_si(),
            Literal::Number(_) => unreachable!("rejected by the slot check"),
        })
    }
}

fn unbound(name: &str, span: Span) -> SequenceError {
    SequenceError::new(ErrorKind::UnboundParameter, span, format!("parameter `${name}` is not bound"))
}
