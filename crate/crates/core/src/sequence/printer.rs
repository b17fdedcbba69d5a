use std::fmt::{self, Write};

use super::ast::*;
use crate::engine::TransferDirection;

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Number(n) => f.write_str(n),
            Literal::Quantity(q) => write!(f, "{}{}", q.text, q.unit.as_str()),
            Literal::Phase(p) => f.write_str(p.as_str()),
        }
    }
}

impl fmt::Display for Arg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Arg::Literal(l) => l.fmt(f),
            Arg::Param { name, index: None } => write!(f, "${name}"),
            Arg::Param { name, index: Some(Index::LoopVar) } => write!(f, "${name}[i]"),
            Arg::Param { name, index: Some(Index::Fixed(n)) } => write!(f, "${name}[{n}]"),
        }
    }
}

fn write_block(out: &mut String, stmts: &[Statement], indent: usize) {
    for s in stmts {
        let pad = "    ".repeat(indent);
        out.push_str(&pad);
        match &s.directive {
            Directive::Pulse { angle, phase } => {
                let _ = write!(out, "pulse angle={angle} phase={phase}");
            }
            Directive::RfPulse { angle, phase } => {
                let _ = write!(out, "rfpulse angle={angle} phase={phase}");
            }
            Directive::Grad { g, dur } => {
                let _ = write!(out, "grad G={g} dur={dur}");
            }
            Directive::Wait(d) => {
                let _ = write!(out, "wait {d}");
            }
            Directive::Transfer(TransferDirection::ElectronToNuclear) => out.push_str("transfer e2n"),
            Directive::Transfer(TransferDirection::NuclearToElectron) => out.push_str("transfer n2e"),
            Directive::Acquire { dur, dt } => {
                let _ = write!(out, "acquire {dur} dt={dt}");
            }
            Directive::Let { name, value: LetValue::Scalar(v) } => {
                let _ = write!(out, "let {name} = {v}");
            }
            Directive::Let { name, value: LetValue::List(items) } => {
                let list: Vec<String> = items.iter().map(|l| l.to_string()).collect();
                let _ = write!(out, "let {name} = [{}]", list.join(", "));
            }
            Directive::Repeat { count, body } => {
                match count {
                    Count::Literal(n) => {
                        let _ = writeln!(out, "repeat {n} {{");
                    }
                    Count::Param(p) => {
                        let _ = writeln!(out, "repeat ${p} {{");
                    }
                }
                write_block(out, body, indent + 1);
                out.push_str(&pad);
                out.push('}');
            }
        }
        out.push('\n');
    }
}

/// Canonical text form. Comments are emitted first; re-parsing the output
/// yields a structurally equal AST.
pub fn print_sequence(ast: &SequenceAst) -> String {
    let mut out = String::new();
    for c in &ast.metadata.comments {
        if c.is_empty() {
            out.push_str("#\n");
        } else {
            let _ = writeln!(out, "# {c}");
        }
    }
    write_block(&mut out, &ast.statements, 0);
    out
}

impl fmt::Display for SequenceAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_sequence(self))
    }
}
