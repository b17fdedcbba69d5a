//! Reference recognizer for pulse programs, written independently of the
//! library parser: a hand lexer that classifies tokens, then regular
//! expressions over the token classes of each statement.

use std::sync::LazyLock;

use regex::Regex;

#[derive(Debug, Clone)]
enum Class {
    Word(String),
    /// Unitless number, with its integer class.
    Number(IntClass),
    /// Number with a unit: class tag and SI value.
    Quantity(&'static str, String, i32),
    Phase,
    Param,
    Punct(char),
    Sep,
}

#[derive(Debug, Clone, Copy)]
enum IntClass {
    Unsigned,
    Signed,
    NotInteger,
}

fn tag_of(c: &Class) -> String {
    match c {
        Class::Word(w) => w.clone(),
        Class::Number(IntClass::Unsigned) => "%U".into(),
        Class::Number(IntClass::Signed) => "%Z".into(),
        Class::Number(IntClass::NotInteger) => "%N".into(),
        Class::Quantity(t, text, _) => {
            if *t == "%T" && text.starts_with('-') {
                "%TN".into()
            } else {
                (*t).into()
            }
        }
        Class::Phase => "%P".into(),
        Class::Param => "$".into(),
        Class::Punct(p) => p.to_string(),
        Class::Sep => ";".into(),
    }
}

static NUMBER: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^[+-]?([0-9]+(\.[0-9]*)?|\.[0-9]+)([eE][+-]?[0-9]+)?").unwrap());

fn unit_class(u: &str) -> Option<(&'static str, i32)> {
    Some(match u {
        "pi" | "rad" => ("%A", 0),
        "deg" => ("%D", 0),
        "ns" => ("%T", -9),
        "us" => ("%T", -6),
        "ms" => ("%T", -3),
        "mT/m" => ("%G", -3),
        "T/m" => ("%G", 0),
        _ => return None,
    })
}

fn is_word_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

fn tokens(src: &str) -> Option<Vec<Class>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let rest: String = chars[i..].iter().collect();
        match c {
            '\n' | ';' => {
                out.push(Class::Sep);
                i += 1;
            }
            ' ' | '\t' | '\r' => i += 1,
            '#' => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
            }
            '=' | '[' | ']' | ',' | '{' | '}' => {
                out.push(Class::Punct(c));
                i += 1;
            }
            '$' => {
                let name: String = chars[i + 1..].iter().take_while(|&&c| is_word_char(c)).collect();
                if !name.chars().next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_') {
                    return None;
                }
                out.push(Class::Param);
                i += 1 + name.chars().count();
            }
            '+' | '-'
                if matches!(chars.get(i + 1), Some('x' | 'y'))
                    && !chars.get(i + 2).is_some_and(|&c| is_word_char(c)) =>
            {
                out.push(Class::Phase);
                i += 2;
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let w: String = chars[i..].iter().take_while(|&&c| is_word_char(c)).collect();
                i += w.chars().count();
                out.push(Class::Word(w));
            }
            _ => {
                let m = NUMBER.find(&rest)?;
                let text = m.as_str().to_string();
                let after: String = rest[m.end()..].chars().take_while(|&c| c.is_ascii_alphabetic() || c == '/').collect();
                let next = rest[m.end() + after.len()..].chars().next();
                if next.is_some_and(|c| c.is_ascii_digit() || c == '.' || c == '_') {
                    return None;
                }
                i += text.chars().count() + after.chars().count();
                if after.is_empty() {
                    let digits = text.strip_prefix(['+', '-']).unwrap_or(&text);
                    let integer = !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit());
                    let fits = text.parse::<i64>().is_ok();
                    out.push(Class::Number(match (integer && fits, digits.len() == text.len()) {
                        (true, true) => IntClass::Unsigned,
                        (true, false) => IntClass::Signed,
                        _ => IntClass::NotInteger,
                    }));
                } else {
                    let (tag, exp) = unit_class(&after)?;
                    out.push(Class::Quantity(tag, text, exp));
                }
            }
        }
    }
    Some(out)
}

const PARAM: &str = r"\$( \[ (i|%U) \])?";
const RESERVED: &[&str] = &["pulse", "grad", "wait", "rfpulse", "transfer", "acquire", "let", "repeat", "i"];

static DIRECTIVE: LazyLock<Regex> = LazyLock::new(|| {
    let angle = format!("(%A|%D|{PARAM})");
    let phase = format!("(%P|%D|{PARAM})");
    let grad = format!("(%G|{PARAM})");
    let dur = format!("(%T|{PARAM})");
    let lit = "(%U|%Z|%N|%T|%TN|%A|%D|%G|%P)";
    let alts = [
        format!("(pulse|rfpulse) angle = {angle} phase = {phase}"),
        format!("grad G = {grad} dur = {dur}"),
        format!("wait {dur}"),
        "transfer (e2n|n2e)".to_string(),
        format!("acquire {dur} dt = {dur}"),
        format!(r"let (?P<name>[A-Za-z_][A-Za-z0-9_]*) = ({lit}|\[ {lit}( , {lit})* \])"),
    ];
    Regex::new(&format!("^({})$", alts.join("|"))).unwrap()
});

static REPEAT_HEAD: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^repeat (%U|%Z|\$)$").unwrap());

fn si(text: &str, exp: i32) -> f64 {
    let (m, e) = match text.find(['e', 'E']) {
        Some(i) => (&text[..i], text[i + 1..].parse::<i32>().unwrap()),
        None => (text, 0),
    };
    format!("{m}e{}", e + exp).parse().unwrap()
}

fn statement_ok(stmt: &[Class]) -> bool {
    let tags: Vec<String> = stmt.iter().map(tag_of).collect();
    let joined = tags.join(" ");
    let Some(caps) = DIRECTIVE.captures(&joined) else { return false };
    if let Some(name) = caps.name("name") {
        if RESERVED.contains(&name.as_str()) {
            return false;
        }
    }
    if let [Class::Word(w), Class::Quantity("%T", d, de), Class::Word(_), Class::Punct('='), Class::Quantity("%T", s, se)] =
        stmt
    {
        if w == "acquire" {
            let (d, s) = (si(d, *de), si(s, *se));
            return s > 0.0 && s <= d;
        }
    }
    true
}

/// Whether `src` is a well-formed program.
pub fn accepts(src: &str) -> bool {
    let Some(toks) = tokens(src) else { return false };
    let mut depth = 0usize;
    let mut current: Vec<Class> = Vec::new();
    let mut after_close = false;
    for t in toks.into_iter().chain(std::iter::once(Class::Sep)) {
        let delimiter = matches!(t, Class::Sep | Class::Punct('{') | Class::Punct('}'));
        if !delimiter {
            current.push(t);
            continue;
        }
        if after_close && (!current.is_empty() || matches!(t, Class::Punct('{'))) {
            return false;
        }
        after_close = false;
        let tags = current.iter().map(tag_of).collect::<Vec<_>>().join(" ");
        match t {
            Class::Punct('{') => {
                if !REPEAT_HEAD.is_match(&tags) {
                    return false;
                }
                depth += 1;
            }
            _ => {
                if !current.is_empty() && (REPEAT_HEAD.is_match(&tags) || !statement_ok(&current)) {
                    return false;
                }
                if matches!(t, Class::Punct('}')) {
                    if depth == 0 {
                        return false;
                    }
                    depth -= 1;
                    after_close = true;
                }
            }
        }
        current.clear();
    }
    depth == 0
}
