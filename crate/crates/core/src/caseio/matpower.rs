//! Reader for the numeric-matrix subset of MATPOWER case files.
//!
//! Recognized statements are `mpc.baseMVA = <num>;` and bracketed numeric
//! matrices assigned to `mpc.bus`, `mpc.gen` and `mpc.branch`. Any other
//! `mpc.<field>` assignment is skipped and reported as a warning. No
//! MATLAB expressions are evaluated.

use std::collections::BTreeMap;

use super::{CaseError, ParsedCase};
use crate::netmodel::{Branch, Bus, BusKind, Generator, Network};

const BUS_COLS: usize = 13;
const GEN_COLS: usize = 10;
const BRANCH_COLS: usize = 11;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Num(f64),
    Str,
    Eq,
    LBracket,
    RBracket,
    Semi,
    Comma,
    Newline,
    Other(char),
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(text: &str) -> Result<Vec<Token>, CaseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);
    while i < chars.len() {
        let c = chars[i];
        let (start_line, start_col) = (line, col);
        let push = |out: &mut Vec<Token>, tok: Tok| {
            out.push(Token {
                tok,
                line: start_line,
                col: start_col,
            })
        };
        match c {
            '\n' => {
                push(&mut out, Tok::Newline);
                i += 1;
                line += 1;
                col = 1;
                continue;
            }
            '%' => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
                continue;
            }
            c if c.is_whitespace() => {}
            '=' => push(&mut out, Tok::Eq),
            '[' => push(&mut out, Tok::LBracket),
            ']' => push(&mut out, Tok::RBracket),
            ';' => push(&mut out, Tok::Semi),
            ',' => push(&mut out, Tok::Comma),
            '\'' | '"' => {
                let quote = c;
                let mut j = i + 1;
                while j < chars.len() && chars[j] != quote && chars[j] != '\n' {
                    j += 1;
                }
                if j >= chars.len() || chars[j] != quote {
                    return Err(CaseError::Syntax {
                        line,
                        col,
                        message: "unterminated string".into(),
                    });
                }
                push(&mut out, Tok::Str);
                col += j - i + 1;
                i = j + 1;
                continue;
            }
            c if starts_number(&chars, i) => {
                let mut j = i;
                if c == '-' || c == '+' {
                    j += 1;
                }
                if chars[j..].starts_with(&['I', 'n', 'f']) {
                    j += 3;
                } else {
                    while j < chars.len() && chars[j].is_ascii_digit() {
                        j += 1;
                    }
                    if j < chars.len() && chars[j] == '.' {
                        j += 1;
                        while j < chars.len() && chars[j].is_ascii_digit() {
                            j += 1;
                        }
                    }
                    if j < chars.len() && (chars[j] == 'e' || chars[j] == 'E') {
                        let mut k = j + 1;
                        if k < chars.len() && (chars[k] == '+' || chars[k] == '-') {
                            k += 1;
                        }
                        if k < chars.len() && chars[k].is_ascii_digit() {
                            while k < chars.len() && chars[k].is_ascii_digit() {
                                k += 1;
                            }
                            j = k;
                        }
                    }
                }
                let s: String = chars[i..j].iter().collect();
                let v = s.parse::<f64>().map_err(|_| CaseError::Syntax {
                    line,
                    col,
                    message: format!("malformed number `{s}`"),
                })?;
                push(&mut out, Tok::Num(v));
                col += j - i;
                i = j;
                continue;
            }
            c if c.is_alphabetic() || c == '_' => {
                let mut j = i;
                while j < chars.len() && (chars[j].is_alphanumeric() || chars[j] == '_' || chars[j] == '.') {
                    j += 1;
                }
                push(&mut out, Tok::Ident(chars[i..j].iter().collect()));
                col += j - i;
                i = j;
                continue;
            }
            other => push(&mut out, Tok::Other(other)),
        }
        i += 1;
        col += 1;
    }
    Ok(out)
}

fn starts_number(chars: &[char], i: usize) -> bool {
    let digit_at = |k: usize| chars.get(k).is_some_and(|c| c.is_ascii_digit());
    let unsigned_at = |k: usize| {
        digit_at(k)
            || (chars.get(k) == Some(&'.') && digit_at(k + 1))
            || chars[k.min(chars.len())..].starts_with(&['I', 'n', 'f'])
    };
    match chars[i] {
        '-' | '+' => unsigned_at(i + 1),
        '.' => digit_at(i + 1),
        c => c.is_ascii_digit(),
    }
}

/// A numeric matrix with the source line of each row.
#[derive(Debug, Clone)]
struct Table {
    rows: Vec<Vec<f64>>,
    lines: Vec<usize>,
}

enum Value {
    Scalar(f64),
    Matrix(Table),
    Other,
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.toks.get(self.pos)
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.toks.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn eof_error(&self, message: &str) -> CaseError {
        let (line, col) = self.toks.last().map_or((1, 1), |t| (t.line, t.col + 1));
        CaseError::Syntax {
            line,
            col,
            message: message.into(),
        }
    }

    fn skip_line(&mut self) {
        while let Some(t) = self.next() {
            if t.tok == Tok::Newline {
                break;
            }
        }
    }

    /// Parses the right-hand side of an assignment. `strict` requires
    /// matrix cells to be numbers.
    fn value(&mut self, field: &str, strict: bool) -> Result<Value, CaseError> {
        let t = self
            .next()
            .ok_or_else(|| self.eof_error("expected a value after `=`"))?;
        match t.tok {
            Tok::Num(v) => Ok(Value::Scalar(v)),
            Tok::Str => Ok(Value::Other),
            Tok::LBracket => self.matrix(field, strict, &t),
            _ if !strict => {
                // Unsupported expression in a field we ignore anyway.
                while let Some(t) = self.peek() {
                    if matches!(t.tok, Tok::Newline | Tok::Semi) {
                        break;
                    }
                    self.pos += 1;
                }
                Ok(Value::Other)
            }
            other => Err(CaseError::Syntax {
                line: t.line,
                col: t.col,
                message: format!("expected a number or matrix for `{field}`, found {other:?}"),
            }),
        }
    }

    fn matrix(&mut self, field: &str, strict: bool, open: &Token) -> Result<Value, CaseError> {
        let mut rows = Vec::new();
        let mut lines = Vec::new();
        let mut current: Vec<f64> = Vec::new();
        let mut current_line = open.line;
        loop {
            let t = self.next().ok_or_else(|| CaseError::Syntax {
                line: open.line,
                col: open.col,
                message: format!("unterminated matrix for `{field}`"),
            })?;
            match t.tok {
                Tok::RBracket => {
                    if !current.is_empty() {
                        rows.push(std::mem::take(&mut current));
                        lines.push(current_line);
                    }
                    break;
                }
                Tok::Semi | Tok::Newline => {
                    if !current.is_empty() {
                        rows.push(std::mem::take(&mut current));
                        lines.push(current_line);
                    }
                }
                Tok::Comma => {}
                Tok::Num(v) => {
                    if current.is_empty() {
                        current_line = t.line;
                    }
                    current.push(v);
                }
                _ if !strict => {}
                other => {
                    return Err(CaseError::NonNumeric {
                        table: field.to_string(),
                        line: t.line,
                        col: t.col,
                        found: describe(&other),
                    })
                }
            }
        }
        Ok(Value::Matrix(Table { rows, lines }))
    }
}

fn describe(tok: &Tok) -> String {
    match tok {
        Tok::Ident(s) => format!("`{s}`"),
        Tok::Num(v) => v.to_string(),
        Tok::Str => "string".into(),
        Tok::Eq => "`=`".into(),
        Tok::LBracket => "`[`".into(),
        Tok::RBracket => "`]`".into(),
        Tok::Semi => "`;`".into(),
        Tok::Comma => "`,`".into(),
        Tok::Newline => "end of line".into(),
        Tok::Other(c) => format!("`{c}`"),
    }
}

const REQUIRED: [&str; 4] = ["bus", "gen", "branch", "baseMVA"];

pub fn parse_matpower_case(text: &str) -> Result<Network, CaseError> {
    parse_matpower_case_detailed(text).map(|p| p.network)
}

/// Like [`parse_matpower_case`], also returning the warnings collected
/// along the way (skipped fields, generator/bus-type mismatches).
pub fn parse_matpower_case_detailed(text: &str) -> Result<ParsedCase, CaseError> {
    if text.trim().is_empty() {
        return Err(CaseError::EmptyInput);
    }
    let mut parser = Parser {
        toks: lex(text)?,
        pos: 0,
    };
    let mut warnings = Vec::new();
    let mut scalars: BTreeMap<String, f64> = BTreeMap::new();
    let mut tables: BTreeMap<String, Table> = BTreeMap::new();

    while let Some(t) = parser.next() {
        match &t.tok {
            Tok::Newline | Tok::Semi | Tok::Comma => {}
            Tok::Ident(word) if word == "function" => parser.skip_line(),
            Tok::Ident(name) if name.starts_with("mpc.") => {
                let field = &name[4..];
                match parser.next() {
                    Some(Token { tok: Tok::Eq, .. }) => {}
                    Some(other) => {
                        return Err(CaseError::Syntax {
                            line: other.line,
                            col: other.col,
                            message: format!("expected `=` after `{name}`"),
                        })
                    }
                    None => return Err(parser.eof_error("expected `=`")),
                }
                let known = REQUIRED.contains(&field);
                match (parser.value(field, known)?, field) {
                    (Value::Scalar(v), "baseMVA") => {
                        scalars.insert(field.to_string(), v);
                    }
                    (Value::Matrix(m), "bus" | "gen" | "branch") => {
                        tables.insert(field.to_string(), m);
                    }
                    (_, "baseMVA") => {
                        return Err(CaseError::Syntax {
                            line: t.line,
                            col: t.col,
                            message: "`mpc.baseMVA` must be a number".into(),
                        })
                    }
                    (_, "bus" | "gen" | "branch") => {
                        return Err(CaseError::Syntax {
                            line: t.line,
                            col: t.col,
                            message: format!("`mpc.{field}` must be a matrix"),
                        })
                    }
                    // standard fields with no bearing on the Q-V model
                    (_, "version" | "gencost" | "areas" | "bus_name" | "gentype" | "genfuel") => {}
                    _ => warnings.push(format!("line {}: skipped unsupported field `{name}`", t.line)),
                }
            }
            other => {
                return Err(CaseError::Syntax {
                    line: t.line,
                    col: t.col,
                    message: format!("unexpected {}", describe(other)),
                })
            }
        }
    }

    for name in REQUIRED {
        if !tables.contains_key(name) && !scalars.contains_key(name) {
            return Err(CaseError::MissingTable(name.to_string()));
        }
    }
    let base_mva = scalars["baseMVA"];
    let bus = checked(&tables["bus"], "bus", BUS_COLS)?;
    let gen = checked(&tables["gen"], "gen", GEN_COLS)?;
    let branch = checked(&tables["branch"], "branch", BRANCH_COLS)?;

    let network = build_network(base_mva, bus, gen, branch, &mut warnings)?;
    Ok(ParsedCase { network, warnings })
}

fn checked<'a>(t: &'a Table, name: &str, min_cols: usize) -> Result<&'a Table, CaseError> {
    if let Some(first) = t.rows.first() {
        let width = first.len();
        for (row, line) in t.rows.iter().zip(&t.lines) {
            if row.len() != width {
                return Err(CaseError::RowArity {
                    table: name.to_string(),
                    line: *line,
                    expected: width,
                    found: row.len(),
                });
            }
        }
        if width < min_cols {
            return Err(CaseError::TooFewColumns {
                table: name.to_string(),
                expected: min_cols,
                found: width,
            });
        }
    }
    Ok(t)
}

fn as_id(v: f64, table: &str, line: usize) -> Result<usize, CaseError> {
    if v >= 1.0 && v.fract() == 0.0 && v < 1e9 {
        Ok(v as usize)
    } else {
        Err(CaseError::InvalidValue {
            table: table.to_string(),
            line,
            message: format!("`{v}` is not a positive integer bus number"),
        })
    }
}

fn build_network(
    base_mva: f64,
    bus: &Table,
    gen: &Table,
    branch: &Table,
    warnings: &mut Vec<String>,
) -> Result<Network, CaseError> {
    let mut generators = Vec::with_capacity(gen.rows.len());
    for (row, &line) in gen.rows.iter().zip(&gen.lines) {
        generators.push(Generator {
            bus: as_id(row[0], "gen", line)?,
            p_gen: row[1],
            v_setpoint: row[5],
            in_service: row[7] != 0.0,
        });
    }

    let mut buses = Vec::with_capacity(bus.rows.len());
    for (row, &line) in bus.rows.iter().zip(&bus.lines) {
        let id = as_id(row[0], "bus", line)?;
        let kind = match row[1] {
            1.0 => BusKind::Pq,
            2.0 => BusKind::Pv,
            3.0 => BusKind::Slack,
            t => {
                return Err(CaseError::InvalidValue {
                    table: "bus".into(),
                    line,
                    message: format!("bus {id}: unsupported bus type {t}"),
                })
            }
        };
        let host = generators.iter().find(|g| g.bus == id && g.in_service);
        let v_setpoint = match (kind.is_voltage_controlled(), host) {
            (true, Some(g)) => g.v_setpoint,
            (true, None) => {
                warnings.push(format!(
                    "bus {id} is voltage-controlled but hosts no in-service generator"
                ));
                row[7]
            }
            (false, _) => row[7],
        };
        buses.push(Bus {
            id,
            kind,
            p_load: row[2],
            q_load: row[3],
            g_shunt: row[4],
            b_shunt: row[5],
            v_setpoint,
            v_min: row[12],
            v_max: row[11],
        });
    }

    for g in generators.iter_mut().filter(|g| g.in_service) {
        if let Some(b) = buses.iter().find(|b| b.id == g.bus) {
            if b.kind == BusKind::Pq {
                warnings.push(format!("generator at bus {} ignored: bus type is PQ", g.bus));
                g.in_service = false;
            }
        }
    }

    let mut branches = Vec::with_capacity(branch.rows.len());
    for (row, &line) in branch.rows.iter().zip(&branch.lines) {
        branches.push(Branch {
            from_bus: as_id(row[0], "branch", line)?,
            to_bus: as_id(row[1], "branch", line)?,
            r: row[2],
            x: row[3],
            b_charging: row[4],
            tap: if row[8] == 0.0 { 1.0 } else { row[8] },
            shift: row[9],
            in_service: row[10] != 0.0,
        });
    }

    Ok(Network {
        base_mva,
        buses,
        branches,
        generators,
    })
}
