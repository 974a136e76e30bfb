//! Line-oriented sectioned text: `[section]` headers, one record per line,
//! whitespace-separated `key=value` pairs, `#` comments. Values may be
//! double-quoted to carry spaces.

use crate::error::{Error, Result};

pub const SECTIONS: &[&str] = &[
    "components",
    "properties",
    "nodes",
    "streams",
    "scenario",
    "plan",
    "schedule",
    "expected",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Pair {
    pub key: String,
    pub value: String,
    pub column: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub line: usize,
    pub pairs: Vec<Pair>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Section {
    pub name: String,
    pub line: usize,
    pub records: Vec<Record>,
}

pub fn lex(text: &str) -> Result<Vec<Section>> {
    let mut sections: Vec<Section> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let raw = raw.strip_suffix('\r').unwrap_or(raw);
        let tokens = tokenize(raw, line)?;
        if tokens.is_empty() {
            continue;
        }
        if let Some((col, first)) = tokens.first() {
            if first.starts_with('[') {
                if tokens.len() != 1 || !first.ends_with(']') {
                    return Err(syntax(line, *col, "malformed section header"));
                }
                let name = &first[1..first.len() - 1];
                if !SECTIONS.contains(&name) {
                    return Err(syntax(line, *col, format!("unknown section `{name}`")));
                }
                if sections.iter().any(|s| s.name == name) {
                    return Err(syntax(line, *col, format!("section `{name}` repeated")));
                }
                sections.push(Section {
                    name: name.to_string(),
                    line,
                    records: Vec::new(),
                });
                continue;
            }
        }
        let section = sections
            .last_mut()
            .ok_or_else(|| syntax(line, tokens[0].0, "record outside of any section"))?;
        let mut pairs: Vec<Pair> = Vec::with_capacity(tokens.len());
        for (col, tok) in tokens {
            let Some((key, value)) = tok.split_once('=') else {
                return Err(syntax(
                    line,
                    col,
                    format!("expected key=value, found `{tok}`"),
                ));
            };
            if key.is_empty()
                || !key
                    .chars()
                    .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.')
            {
                return Err(syntax(line, col, format!("invalid key `{key}`")));
            }
            if pairs.iter().any(|p| p.key == key) {
                return Err(syntax(line, col, format!("duplicate key `{key}`")));
            }
            let value = unquote(value);
            pairs.push(Pair {
                key: key.to_string(),
                value,
                column: col,
            });
        }
        section.records.push(Record { line, pairs });
    }
    Ok(sections)
}

fn unquote(v: &str) -> String {
    if v.len() >= 2 && v.starts_with('"') && v.ends_with('"') {
        v[1..v.len() - 1].to_string()
    } else {
        v.to_string()
    }
}

/// Splits a line into (1-based column, token) pairs, honoring quotes and
/// stripping comments.
fn tokenize(raw: &str, line: usize) -> Result<Vec<(usize, String)>> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut start = 0usize;
    let mut quoted = false;
    let mut quote_col = 0;
    for (i, ch) in raw.char_indices() {
        let col = raw[..i].chars().count() + 1;
        if quoted {
            cur.push(ch);
            if ch == '"' {
                quoted = false;
            }
            continue;
        }
        match ch {
            '#' => break,
            '"' => {
                if cur.is_empty() {
                    start = col;
                }
                quoted = true;
                quote_col = col;
                cur.push(ch);
            }
            c if c.is_whitespace() => {
                if !cur.is_empty() {
                    out.push((start, std::mem::take(&mut cur)));
                }
            }
            c => {
                if cur.is_empty() {
                    start = col;
                }
                cur.push(c);
            }
        }
    }
    if quoted {
        return Err(syntax(line, quote_col, "unterminated quote"));
    }
    if !cur.is_empty() {
        out.push((start, cur));
    }
    Ok(out)
}

pub fn syntax(line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Syntax {
        line,
        column,
        message: message.into(),
    }
}

impl Record {
    pub fn get(&self, key: &str) -> Option<&Pair> {
        self.pairs.iter().find(|p| p.key == key)
    }

    pub fn str(&self, key: &str) -> Option<&str> {
        self.get(key).map(|p| p.value.as_str())
    }

    pub fn require(&self, key: &str) -> Result<&Pair> {
        self.get(key)
            .ok_or_else(|| syntax(self.line, 1, format!("missing key `{key}`")))
    }

    pub fn f64(&self, key: &str) -> Result<Option<f64>> {
        self.get(key).map(|p| p.number()).transpose()
    }

    pub fn list(&self, key: &str) -> Result<Option<Vec<f64>>> {
        self.get(key).map(|p| p.numbers()).transpose()
    }

    pub fn flag(&self, key: &str) -> Result<bool> {
        match self.get(key) {
            None => Ok(false),
            Some(p) => match p.value.as_str() {
                "true" => Ok(true),
                "false" => Ok(false),
                other => Err(p.error(format!("expected true/false, found `{other}`"))),
            },
        }
    }

    /// Fails on keys outside `allowed`.
    pub fn only(&self, allowed: &[&str]) -> Result<()> {
        for p in &self.pairs {
            if !allowed.contains(&p.key.as_str()) {
                return Err(p.error(format!("unknown key `{}`", p.key)));
            }
        }
        Ok(())
    }
}

impl Pair {
    pub fn error(&self, message: impl Into<String>) -> Error {
        Error::Syntax {
            line: 0,
            column: self.column,
            message: message.into(),
        }
    }

    pub fn number(&self) -> Result<f64> {
        parse_number(&self.value)
            .ok_or_else(|| self.error(format!("invalid number `{}`", self.value)))
    }

    pub fn numbers(&self) -> Result<Vec<f64>> {
        if self.value.is_empty() {
            return Ok(Vec::new());
        }
        self.value
            .split(',')
            .map(|s| {
                parse_number(s.trim()).ok_or_else(|| self.error(format!("invalid number `{s}`")))
            })
            .collect()
    }

    pub fn ids(&self) -> Vec<String> {
        if self.value.is_empty() {
            return Vec::new();
        }
        self.value
            .split(',')
            .map(|s| s.trim().to_string())
            .collect()
    }

    /// `;`-separated rows of comma-separated numbers.
    pub fn matrix(&self) -> Result<Vec<Vec<f64>>> {
        self.value
            .split(';')
            .map(|row| {
                row.split(',')
                    .map(|s| {
                        parse_number(s.trim())
                            .ok_or_else(|| self.error(format!("invalid number `{s}`")))
                    })
                    .collect()
            })
            .collect()
    }

    /// `name:value` entries separated by commas.
    pub fn named(&self) -> Result<Vec<(String, f64)>> {
        named_entries(&self.value).map_err(|m| self.error(m))
    }
}

pub fn named_entries(text: &str) -> std::result::Result<Vec<(String, f64)>, String> {
    if text.is_empty() {
        return Ok(Vec::new());
    }
    text.split(',')
        .map(|entry| {
            let (name, v) = entry
                .split_once(':')
                .ok_or_else(|| format!("expected name:value, found `{entry}`"))?;
            let v = parse_number(v.trim()).ok_or_else(|| format!("invalid number `{v}`"))?;
            Ok((name.trim().to_string(), v))
        })
        .collect()
}

pub fn parse_number(s: &str) -> Option<f64> {
    match s {
        "inf" | "+inf" => Some(f64::INFINITY),
        "-inf" => Some(f64::NEG_INFINITY),
        _ => s.parse::<f64>().ok().filter(|v| v.is_finite()),
    }
}

/// Attaches the record's line number to a syntax error raised by a pair.
pub fn at_line(line: usize) -> impl Fn(Error) -> Error {
    move |e| match e {
        Error::Syntax {
            line: 0,
            column,
            message,
        } => Error::Syntax {
            line,
            column,
            message,
        },
        other => other,
    }
}
