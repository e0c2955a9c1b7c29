use super::ast::Pos;
use super::FrontendError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Int(i64),
    Module,
    EndModule,
    Init,
    True,
    False,
    Mod,
    Lightning,
    LBracket,
    RBracket,
    LParen,
    RParen,
    Semi,
    Colon,
    DotDot,
    Arrow,
    Assign,
    Amp,
    Bar,
    Bang,
    Iff,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Plus,
    Minus,
    Star,
    Slash,
    Empty,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Int(n) => format!("integer `{n}`"),
            Tok::Eof => "end of input".to_string(),
            other => format!("`{}`", other.symbol()),
        }
    }

    fn symbol(&self) -> &'static str {
        match self {
            Tok::Module => "module",
            Tok::EndModule => "endmodule",
            Tok::Init => "init",
            Tok::True => "true",
            Tok::False => "false",
            Tok::Mod => "mod",
            Tok::Lightning => "lightning",
            Tok::LBracket => "[",
            Tok::RBracket => "]",
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::Semi => ";",
            Tok::Colon => ":",
            Tok::DotDot => "..",
            Tok::Arrow => "->",
            Tok::Assign => ":=",
            Tok::Amp => "&",
            Tok::Bar => "|",
            Tok::Bang => "!",
            Tok::Iff => "<=>",
            Tok::Eq => "=",
            Tok::Ne => "!=",
            Tok::Lt => "<",
            Tok::Le => "<=",
            Tok::Gt => ">",
            Tok::Ge => ">=",
            Tok::Plus => "+",
            Tok::Minus => "-",
            Tok::Star => "*",
            Tok::Slash => "/",
            Tok::Empty => "∅",
            Tok::Ident(_) | Tok::Int(_) | Tok::Eof => "",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Token {
    pub tok: Tok,
    pub pos: Pos,
}

pub fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

pub fn is_ident_continue(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

pub fn is_keyword(s: &str) -> bool {
    matches!(
        s,
        "module" | "endmodule" | "init" | "true" | "false" | "mod" | "lightning"
    )
}

pub fn tokenize(src: &str) -> Result<Vec<Token>, FrontendError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    let mut line = 1u32;
    let mut col = 1u32;

    macro_rules! advance {
        ($n:expr) => {{
            for _ in 0..$n {
                if chars[i] == '\n' {
                    line += 1;
                    col = 1;
                } else {
                    col += 1;
                }
                i += 1;
            }
        }};
    }

    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, col };
        let next = chars.get(i + 1).copied();
        if c.is_whitespace() {
            advance!(1);
            continue;
        }
        if c == '/' && next == Some('/') {
            while i < chars.len() && chars[i] != '\n' {
                advance!(1);
            }
            continue;
        }
        if is_ident_start(c) {
            let start = i;
            while i < chars.len() && is_ident_continue(chars[i]) {
                advance!(1);
            }
            let word: String = chars[start..i].iter().collect();
            let tok = match word.as_str() {
                "module" => Tok::Module,
                "endmodule" => Tok::EndModule,
                "init" => Tok::Init,
                "true" => Tok::True,
                "false" => Tok::False,
                "mod" => Tok::Mod,
                "lightning" => Tok::Lightning,
                _ => Tok::Ident(word),
            };
            out.push(Token { tok, pos });
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                advance!(1);
            }
            let text: String = chars[start..i].iter().collect();
            let n = text.parse::<i64>().map_err(|_| FrontendError::Syntax {
                pos,
                expected: "integer literal within 64-bit range".into(),
                found: text.clone(),
            })?;
            out.push(Token {
                tok: Tok::Int(n),
                pos,
            });
            continue;
        }
        let (tok, len) = match (c, next) {
            (':', Some('=')) => (Tok::Assign, 2),
            ('\'', Some('=')) => (Tok::Assign, 2),
            ('.', Some('.')) => (Tok::DotDot, 2),
            ('-', Some('>')) => (Tok::Arrow, 2),
            ('!', Some('=')) => (Tok::Ne, 2),
            ('<', Some('=')) if chars.get(i + 2) == Some(&'>') => (Tok::Iff, 3),
            ('<', Some('=')) => (Tok::Le, 2),
            ('>', Some('=')) => (Tok::Ge, 2),
            ('&', Some('&')) => (Tok::Amp, 2),
            ('|', Some('|')) => (Tok::Bar, 2),
            ('=', Some('=')) => (Tok::Eq, 2),
            ('[', _) => (Tok::LBracket, 1),
            (']', _) => (Tok::RBracket, 1),
            ('(', _) => (Tok::LParen, 1),
            (')', _) => (Tok::RParen, 1),
            (';', _) => (Tok::Semi, 1),
            (':', _) => (Tok::Colon, 1),
            ('&', _) | ('∧', _) => (Tok::Amp, 1),
            ('|', _) | ('∨', _) => (Tok::Bar, 1),
            ('!', _) | ('¬', _) => (Tok::Bang, 1),
            ('⟺', _) | ('⇔', _) => (Tok::Iff, 1),
            ('=', _) => (Tok::Eq, 1),
            ('≠', _) => (Tok::Ne, 1),
            ('<', _) => (Tok::Lt, 1),
            ('≤', _) => (Tok::Le, 1),
            ('>', _) => (Tok::Gt, 1),
            ('≥', _) => (Tok::Ge, 1),
            ('+', _) => (Tok::Plus, 1),
            ('-', _) => (Tok::Minus, 1),
            ('*', _) | ('·', _) => (Tok::Star, 1),
            ('/', _) => (Tok::Slash, 1),
            ('∅', _) => (Tok::Empty, 1),
            ('⚡', _) => (Tok::Lightning, 1),
            _ => {
                return Err(FrontendError::Syntax {
                    pos,
                    expected: "a token".into(),
                    found: format!("character `{c}`"),
                })
            }
        };
        advance!(len);
        out.push(Token { tok, pos });
    }
    out.push(Token {
        tok: Tok::Eof,
        pos: Pos { line, col },
    });
    Ok(out)
}
