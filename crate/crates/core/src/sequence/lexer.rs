use super::ast::{PhaseSymbol, Span, Unit};
use super::{ErrorKind, SequenceError};

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Ident(String),
    Number { text: String, unit: Option<Unit> },
    Phase(PhaseSymbol),
    Param(String),
    Eq,
    LBracket,
    RBracket,
    Comma,
    LBrace,
    RBrace,
    /// Newline or `;`.
    Sep,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Number { text, unit: Some(u) } => format!("`{text}{}`", u.as_str()),
            Tok::Number { text, unit: None } => format!("`{text}`"),
            Tok::Phase(p) => format!("`{}`", p.as_str()),
            Tok::Param(p) => format!("`${p}`"),
            Tok::Eq => "`=`".into(),
            Tok::LBracket => "`[`".into(),
            Tok::RBracket => "`]`".into(),
            Tok::Comma => "`,`".into(),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::Sep => "end of line".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

pub struct Lexed {
    pub tokens: Vec<Token>,
    pub comments: Vec<String>,
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

pub fn lex(src: &str) -> Result<Lexed, SequenceError> {
    let chars: Vec<char> = src.chars().collect();
    let mut tokens = Vec::new();
    let mut comments = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);

    macro_rules! push {
        ($tok:expr, $span:expr, $len:expr) => {{
            tokens.push(Token { tok: $tok, span: $span });
            i += $len;
            col += $len;
        }};
    }

    while i < chars.len() {
        let c = chars[i];
        let span = Span { line, col };
        match c {
            '\n' => {
                tokens.push(Token { tok: Tok::Sep, span });
                i += 1;
                line += 1;
                col = 1;
            }
            ' ' | '\t' | '\r' => {
                i += 1;
                col += 1;
            }
            '#' => {
                let start = i + 1;
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
                let text: String = chars[start..i].iter().collect();
                col += i - start + 1;
                comments.push(text.trim().to_string());
            }
            ';' => push!(Tok::Sep, span, 1),
            '=' => push!(Tok::Eq, span, 1),
            '[' => push!(Tok::LBracket, span, 1),
            ']' => push!(Tok::RBracket, span, 1),
            ',' => push!(Tok::Comma, span, 1),
            '{' => push!(Tok::LBrace, span, 1),
            '}' => push!(Tok::RBrace, span, 1),
            '$' => {
                let mut j = i + 1;
                if j >= chars.len() || !is_ident_start(chars[j]) {
                    return Err(SequenceError::new(ErrorKind::Syntax, span, "expected a parameter name after `$`")
                        .expecting(&["parameter name"]));
                }
                while j < chars.len() && is_ident_char(chars[j]) {
                    j += 1;
                }
                let name: String = chars[i + 1..j].iter().collect();
                let len = j - i;
                push!(Tok::Param(name), span, len);
            }
            '+' | '-' if i + 1 < chars.len()
                && matches!(chars[i + 1], 'x' | 'y')
                && !(i + 2 < chars.len() && is_ident_char(chars[i + 2])) =>
            {
                let s: String = chars[i..i + 2].iter().collect();
                push!(Tok::Phase(PhaseSymbol::parse(&s).expect("checked above")), span, 2);
            }
            c if c.is_ascii_digit() || matches!(c, '.' | '+' | '-') => {
                let (tok, len) = lex_number(&chars[i..], span)?;
                push!(tok, span, len);
            }
            c if is_ident_start(c) => {
                let mut j = i;
                while j < chars.len() && is_ident_char(chars[j]) {
                    j += 1;
                }
                let word: String = chars[i..j].iter().collect();
                let len = j - i;
                push!(Tok::Ident(word), span, len);
            }
            other => {
                return Err(SequenceError::new(ErrorKind::Syntax, span, format!("unexpected character {other:?}")));
            }
        }
    }
    tokens.push(Token { tok: Tok::Eof, span: Span { line, col } });
    Ok(Lexed { tokens, comments })
}

/// `[+-]? (digits ('.' digits*)? | '.' digits) ([eE] [+-]? digits)? unit?`
fn lex_number(s: &[char], span: Span) -> Result<(Tok, usize), SequenceError> {
    let mut j = 0;
    if matches!(s.first(), Some('+' | '-')) {
        j += 1;
    }
    let int_start = j;
    while j < s.len() && s[j].is_ascii_digit() {
        j += 1;
    }
    let mut digits = j - int_start;
    if j < s.len() && s[j] == '.' {
        j += 1;
        let frac_start = j;
        while j < s.len() && s[j].is_ascii_digit() {
            j += 1;
        }
        digits += j - frac_start;
    }
    if digits == 0 {
        return Err(SequenceError::new(ErrorKind::Syntax, span, "malformed number").expecting(&["number"]));
    }
    if j < s.len() && matches!(s[j], 'e' | 'E') {
        let mut k = j + 1;
        if k < s.len() && matches!(s[k], '+' | '-') {
            k += 1;
        }
        let exp_start = k;
        while k < s.len() && s[k].is_ascii_digit() {
            k += 1;
        }
        if k > exp_start {
            j = k;
        }
    }
    let text: String = s[..j].iter().collect();
    let unit_start = j;
    while j < s.len() && (s[j].is_ascii_alphabetic() || s[j] == '/') {
        j += 1;
    }
    let unit = if j > unit_start {
        let u: String = s[unit_start..j].iter().collect();
        match Unit::parse(&u) {
            Some(unit) => Some(unit),
            None => {
                let at = Span { line: span.line, col: span.col + unit_start };
                return Err(SequenceError::new(ErrorKind::Unit, at, format!("unknown unit `{u}`"))
                    .expecting(&["pi", "rad", "deg", "ns", "us", "ms", "mT/m", "T/m"]));
            }
        }
    } else {
        None
    };
    if j < s.len() && (s[j].is_ascii_digit() || s[j] == '.' || s[j] == '_') {
        let at = Span { line: span.line, col: span.col + j };
        return Err(SequenceError::new(ErrorKind::Syntax, at, "malformed number"));
    }
    Ok((Tok::Number { text, unit }, j))
}
