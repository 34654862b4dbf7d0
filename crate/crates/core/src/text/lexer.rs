use crate::ir::SourceSpan;

#[derive(Clone, Debug, PartialEq)]
pub enum Tok {
    /// Bare identifier, may contain `.` (e.g. `neura.add`, `bb1`, `i64`).
    Ident(String),
    /// `%name`
    Value(String),
    /// `@name`
    Symbol(String),
    Number(String),
    Str(String),
    Punct(char),
    Arrow,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("'{}'", s),
            Tok::Value(s) => format!("'%{}'", s),
            Tok::Symbol(s) => format!("'@{}'", s),
            Tok::Number(s) => format!("number {}", s),
            Tok::Str(s) => format!("string {:?}", s),
            Tok::Punct(c) => format!("'{}'", c),
            Tok::Arrow => "'->'".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Token {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
    /// First token on its source line.
    pub line_start: bool,
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '.' || c == '$'
}

pub fn tokenize(src: &str) -> Result<Vec<Token>, (SourceSpan, String)> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let mut line_start = true;
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            line_start = true;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let (start_line, start_col) = (line, col);
        let advance = |n: usize, i: &mut usize, col: &mut usize| {
            *i += n;
            *col += n;
        };
        let tok = if c == '%' || c == '@' {
            let mut j = i + 1;
            while j < chars.len() && is_ident_char(chars[j]) {
                j += 1;
            }
            if j == i + 1 {
                return Err((span(start_line, start_col), format!("expected a name after '{}'", c)));
            }
            let name: String = chars[i + 1..j].iter().collect();
            advance(j - i, &mut i, &mut col);
            if c == '%' {
                Tok::Value(name)
            } else {
                Tok::Symbol(name)
            }
        } else if c == '-' && chars.get(i + 1) == Some(&'>') {
            advance(2, &mut i, &mut col);
            Tok::Arrow
        } else if c.is_ascii_digit() || (c == '-' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            let mut j = i + 1;
            while j < chars.len() {
                let d = chars[j];
                let exp_sign = (d == '-' || d == '+') && matches!(chars[j - 1], 'e' | 'E');
                if d.is_ascii_digit() || d == '.' || d == 'e' || d == 'E' || exp_sign {
                    j += 1;
                } else {
                    break;
                }
            }
            let text: String = chars[i..j].iter().collect();
            advance(j - i, &mut i, &mut col);
            Tok::Number(text)
        } else if c == '"' {
            let mut j = i + 1;
            let mut s = String::new();
            loop {
                match chars.get(j) {
                    None | Some('\n') => {
                        return Err((span(start_line, start_col), "unterminated string".into()))
                    }
                    Some('"') => break,
                    Some('\\') => {
                        match chars.get(j + 1) {
                            Some('n') => s.push('\n'),
                            Some(&e) => s.push(e),
                            None => {}
                        }
                        j += 2;
                    }
                    Some(&ch) => {
                        s.push(ch);
                        j += 1;
                    }
                }
            }
            advance(j + 1 - i, &mut i, &mut col);
            Tok::Str(s)
        } else if is_ident_char(c) {
            let mut j = i;
            while j < chars.len() && is_ident_char(chars[j]) {
                j += 1;
            }
            let text: String = chars[i..j].iter().collect();
            advance(j - i, &mut i, &mut col);
            Tok::Ident(text)
        } else if "(){}<>,:=!-".contains(c) {
            advance(1, &mut i, &mut col);
            Tok::Punct(c)
        } else {
            return Err((span(start_line, start_col), format!("unexpected character {:?}", c)));
        };
        out.push(Token { tok, line: start_line, col: start_col, line_start });
        line_start = false;
    }
    out.push(Token { tok: Tok::Eof, line, col, line_start: true });
    Ok(out)
}

fn span(line: usize, col: usize) -> SourceSpan {
    SourceSpan { file: None, line, col }
}
