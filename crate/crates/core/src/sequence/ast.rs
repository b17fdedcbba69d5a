use std::f64::consts::PI;

use crate::engine::TransferDirection;

/// 1-based source position of a statement or token.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Span {
    pub line: usize,
    pub col: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Unit {
    Pi,
    Rad,
    Deg,
    Ns,
    Us,
    Ms,
    MilliTeslaPerMetre,
    TeslaPerMetre,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnitKind {
    Angle,
    Time,
    Gradient,
}

impl Unit {
    pub fn parse(s: &str) -> Option<Unit> {
        Some(match s {
            "pi" => Unit::Pi,
            "rad" => Unit::Rad,
            "deg" => Unit::Deg,
            "ns" => Unit::Ns,
            "us" => Unit::Us,
            "ms" => Unit::Ms,
            "mT/m" => Unit::MilliTeslaPerMetre,
            "T/m" => Unit::TeslaPerMetre,
            _ => return None,
        })
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Unit::Pi => "pi",
            Unit::Rad => "rad",
            Unit::Deg => "deg",
            Unit::Ns => "ns",
            Unit::Us => "us",
            Unit::Ms => "ms",
            Unit::MilliTeslaPerMetre => "mT/m",
            Unit::TeslaPerMetre => "T/m",
        }
    }

    pub fn kind(&self) -> UnitKind {
        match self {
            Unit::Pi | Unit::Rad | Unit::Deg => UnitKind::Angle,
            Unit::Ns | Unit::Us | Unit::Ms => UnitKind::Time,
            Unit::MilliTeslaPerMetre | Unit::TeslaPerMetre => UnitKind::Gradient,
        }
    }

    fn decimal_exponent(&self) -> Option<i32> {
        match self {
            Unit::Ns => Some(-9),
            Unit::Us => Some(-6),
            Unit::Ms | Unit::MilliTeslaPerMetre => Some(-3),
            Unit::TeslaPerMetre | Unit::Rad => Some(0),
            Unit::Pi | Unit::Deg => None,
        }
    }
}

/// A number with its unit, keeping the literal text so that printing and
/// unit scaling are exact.
#[derive(Debug, Clone, PartialEq)]
pub struct Quantity {
    pub text: String,
    pub unit: Unit,
}

impl Quantity {
    pub fn new(text: impl Into<String>, unit: Unit) -> Self {
        Self { text: text.into(), unit }
    }

    /// The number as written.
    pub fn magnitude(&self) -> f64 {
        self.text.parse().unwrap_or(f64::NAN)
    }

    /// Value in SI (s, T/m, rad). Decimal prefixes are applied to the
    /// literal's exponent before rounding, so `1.3us` is exactly `1.3e-6`.
    pub fn to_si(&self) -> f64 {
        match self.unit.decimal_exponent() {
            Some(exp) => scale_decimal(&self.text, exp),
            None if self.unit == Unit::Pi => self.magnitude() * PI,
            None => self.magnitude() * PI / 180.0,
        }
    }
}

fn scale_decimal(text: &str, shift: i32) -> f64 {
    let (mantissa, exp) = match text.find(['e', 'E']) {
        Some(i) => (&text[..i], text[i + 1..].parse::<i32>().unwrap_or(0)),
        None => (text, 0),
    };
    format!("{mantissa}e{}", exp + shift).parse().unwrap_or(f64::NAN)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PhaseSymbol {
    PlusX,
    MinusX,
    PlusY,
    MinusY,
}

impl PhaseSymbol {
    pub fn radians(&self) -> f64 {
        match self {
            PhaseSymbol::PlusX => 0.0,
            PhaseSymbol::PlusY => 0.5 * PI,
            PhaseSymbol::MinusX => PI,
            PhaseSymbol::MinusY => 1.5 * PI,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            PhaseSymbol::PlusX => "+x",
            PhaseSymbol::MinusX => "-x",
            PhaseSymbol::PlusY => "+y",
            PhaseSymbol::MinusY => "-y",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "+x" => PhaseSymbol::PlusX,
            "-x" => PhaseSymbol::MinusX,
            "+y" => PhaseSymbol::PlusY,
            "-y" => PhaseSymbol::MinusY,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Literal {
    /// Bare number, e.g. a repeat count or list index.
    Number(String),
    Quantity(Quantity),
    Phase(PhaseSymbol),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Index {
    /// `i`: the innermost repeat counter, from 0.
    LoopVar,
    Fixed(usize),
}

/// A directive argument: a literal or a `$name` / `$name[i]` reference.
#[derive(Debug, Clone, PartialEq)]
pub enum Arg {
    Literal(Literal),
    Param { name: String, index: Option<Index> },
}

#[derive(Debug, Clone, PartialEq)]
pub enum LetValue {
    Scalar(Literal),
    List(Vec<Literal>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Count {
    Literal(i64),
    Param(String),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Directive {
    Pulse { angle: Arg, phase: Arg },
    Grad { g: Arg, dur: Arg },
    Wait(Arg),
    RfPulse { angle: Arg, phase: Arg },
    Transfer(TransferDirection),
    Acquire { dur: Arg, dt: Arg },
    Let { name: String, value: LetValue },
    Repeat { count: Count, body: Vec<Statement> },
}

/// A directive and where it starts in the source.
///
/// Equality compares directives only: two programs that differ just in
/// layout are structurally equal.
#[derive(Debug, Clone)]
pub struct Statement {
    pub directive: Directive,
    pub span: Span,
}

impl PartialEq for Statement {
    fn eq(&self, other: &Self) -> bool {
        self.directive == other.directive
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Metadata {
    /// From a `# name: <value>` comment.
    pub name: Option<String>,
    /// Comment texts in source order, without the leading `#`.
    pub comments: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SequenceAst {
    pub statements: Vec<Statement>,
    pub metadata: Metadata,
}
