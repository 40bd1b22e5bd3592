//! CPLEX-LP text format: writer, reader and a solver-neutral problem type.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::mip::{BatchModel, Sense};

/// Lines are wrapped before this many characters.
const LINE_WIDTH: usize = 200;

#[derive(Debug, Clone, PartialEq)]
pub struct LpRow {
    pub name: String,
    pub terms: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

/// A linear (mixed-integer) program with named columns.
#[derive(Debug, Clone, PartialEq)]
pub struct LpProblem {
    pub minimize: bool,
    pub names: Vec<String>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub integer: Vec<bool>,
    pub objective: Vec<(usize, f64)>,
    pub rows: Vec<LpRow>,
}

#[derive(Debug, thiserror::Error)]
pub enum LpError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("cannot write {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl LpProblem {
    pub fn from_model(model: &BatchModel<'_>) -> Self {
        let names: Vec<String> = model.vars().iter().map(|v| v.name()).collect();
        let lower = model.bounds().iter().map(|b| b.lb as f64).collect();
        let upper = model.bounds().iter().map(|b| b.ub.map_or(f64::INFINITY, |u| u as f64)).collect();
        let integer = model.vars().iter().map(|v| v.is_binary()).collect();
        let objective = model.objective().into_iter().map(|(v, c)| (v, c as f64)).collect();
        let rows = model
            .constraints()
            .into_iter()
            .map(|c| LpRow {
                name: c.name,
                terms: c.terms.into_iter().filter(|&(_, a)| a != 0).map(|(v, a)| (v, a as f64)).collect(),
                sense: c.sense,
                rhs: c.rhs as f64,
            })
            .collect();
        LpProblem { minimize: true, names, lower, upper, integer, objective, rows }
    }

    pub fn num_vars(&self) -> usize {
        self.names.len()
    }

    pub fn index_of(&self) -> HashMap<&str, usize> {
        self.names.iter().enumerate().map(|(n, s)| (s.as_str(), n)).collect()
    }
}

fn num(v: f64) -> String {
    if v == v.trunc() && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v}")
    }
}

struct Wrapper<'o> {
    out: &'o mut String,
    line: usize,
}

impl Wrapper<'_> {
    fn push(&mut self, tok: &str) {
        if self.line + tok.len() + 1 > LINE_WIDTH {
            self.out.push_str("\n   ");
            self.line = 3;
        }
        self.out.push(' ');
        self.out.push_str(tok);
        self.line += tok.len() + 1;
    }
}

fn write_expr(w: &mut Wrapper<'_>, p: &LpProblem, terms: &[(usize, f64)]) {
    if terms.is_empty() {
        // LP syntax needs at least one term
        w.push(&format!("0 {}", p.names.first().map_or("x", String::as_str)));
        return;
    }
    for (n, &(v, a)) in terms.iter().enumerate() {
        let sign = if a < 0.0 { "-" } else { "+" };
        let mag = a.abs();
        let body = if mag == 1.0 { p.names[v].clone() } else { format!("{} {}", num(mag), p.names[v]) };
        if n == 0 && sign == "+" {
            w.push(&body);
        } else {
            w.push(&format!("{sign} {body}"));
        }
    }
}

/// Renders `p` in CPLEX-LP syntax.
pub fn write_lp(p: &LpProblem) -> String {
    let mut out = String::new();
    out.push_str(if p.minimize { "Minimize\n" } else { "Maximize\n" });
    {
        let mut w = Wrapper { out: &mut out, line: 0 };
        w.push("obj:");
        write_expr(&mut w, p, &p.objective);
    }
    out.push_str("\nSubject To\n");
    for row in &p.rows {
        let mut w = Wrapper { out: &mut out, line: 0 };
        w.push(&format!("{}:", row.name));
        write_expr(&mut w, p, &row.terms);
        w.push(row.sense.symbol());
        w.push(&num(row.rhs));
        out.push('\n');
    }
    out.push_str("Bounds\n");
    for n in 0..p.num_vars() {
        let (lo, hi) = (p.lower[n], p.upper[n]);
        let name = &p.names[n];
        let default = if p.integer[n] { lo == 0.0 && hi == 1.0 } else { lo == 0.0 && hi.is_infinite() };
        if default {
            continue;
        }
        if lo == hi {
            let _ = writeln!(out, " {name} = {}", num(lo));
        } else if hi.is_infinite() {
            let _ = writeln!(out, " {name} >= {}", num(lo));
        } else {
            let _ = writeln!(out, " {} <= {name} <= {}", num(lo), num(hi));
        }
    }
    let (bins, gens): (Vec<usize>, Vec<usize>) = (0..p.num_vars())
        .filter(|&n| p.integer[n])
        .partition(|&n| p.lower[n] >= 0.0 && p.upper[n] <= 1.0);
    for (title, set) in [("Binaries", bins), ("Generals", gens)] {
        if set.is_empty() {
            continue;
        }
        out.push_str(title);
        out.push('\n');
        let mut w = Wrapper { out: &mut out, line: 0 };
        for n in set {
            w.push(&p.names[n]);
        }
        out.push('\n');
    }
    out.push_str("End\n");
    out
}

/// Writes the model as an LP file.
pub fn export_model(model: &BatchModel<'_>, path: &Path) -> Result<(), LpError> {
    std::fs::write(path, write_lp(&LpProblem::from_model(model)))
        .map_err(|source| LpError::Io { path: path.display().to_string(), source })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Section {
    Objective,
    Constraints,
    Bounds,
    Binaries,
    Generals,
    End,
}

fn section_of(line: &str) -> Option<(Section, Option<bool>)> {
    let l = line.trim().to_ascii_lowercase();
    Some(match l.as_str() {
        "minimize" | "minimum" | "min" => (Section::Objective, Some(true)),
        "maximize" | "maximum" | "max" => (Section::Objective, Some(false)),
        "subject to" | "such that" | "st" | "s.t." => (Section::Constraints, None),
        "bounds" | "bound" => (Section::Bounds, None),
        "binaries" | "binary" | "bin" => (Section::Binaries, None),
        "generals" | "general" | "gen" | "integers" => (Section::Generals, None),
        "end" => (Section::End, None),
        _ => return None,
    })
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Name(String),
    Plus,
    Minus,
    Colon,
    Cmp(Sense),
}

fn tokenize(text: &str, line: usize) -> Result<Vec<(Tok, usize)>, LpError> {
    let mut out = Vec::new();
    let b = text.as_bytes();
    let mut i = 0;
    while i < b.len() {
        let c = b[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c == '+' {
            out.push((Tok::Plus, line));
            i += 1;
        } else if c == '-' {
            out.push((Tok::Minus, line));
            i += 1;
        } else if c == ':' {
            out.push((Tok::Colon, line));
            i += 1;
        } else if c == '<' || c == '>' || c == '=' {
            let mut j = i + 1;
            while j < b.len() && (b[j] == b'=' || b[j] == b'<' || b[j] == b'>') {
                j += 1;
            }
            let sense = match (c, &text[i..j]) {
                (_, "=<") | ('<', _) => Sense::Le,
                (_, "=>") | ('>', _) => Sense::Ge,
                _ => Sense::Eq,
            };
            out.push((Tok::Cmp(sense), line));
            i = j;
        } else if c.is_ascii_digit() || c == '.' {
            let mut j = i;
            while j < b.len() {
                let d = b[j] as char;
                let exp_sign = (d == '+' || d == '-') && j > i && (b[j - 1] == b'e' || b[j - 1] == b'E');
                if d.is_ascii_digit() || d == '.' || d == 'e' || d == 'E' || exp_sign {
                    j += 1;
                } else {
                    break;
                }
            }
            let v: f64 = text[i..j]
                .parse()
                .map_err(|_| LpError::Syntax { line, message: format!("bad number `{}`", &text[i..j]) })?;
            out.push((Tok::Num(v), line));
            i = j;
        } else {
            let mut j = i;
            while j < b.len() {
                let d = b[j] as char;
                if d.is_ascii_whitespace() || matches!(d, '+' | '-' | ':' | '<' | '>' | '=') {
                    break;
                }
                j += 1;
            }
            let word = &text[i..j];
            match word.to_ascii_lowercase().as_str() {
                "inf" | "infinity" => out.push((Tok::Num(f64::INFINITY), line)),
                _ => out.push((Tok::Name(word.to_string()), line)),
            }
            i = j;
        }
    }
    Ok(out)
}

struct Builder {
    p: LpProblem,
    index: HashMap<String, usize>,
}

impl Builder {
    fn var(&mut self, name: &str) -> usize {
        if let Some(&n) = self.index.get(name) {
            return n;
        }
        let n = self.p.names.len();
        self.p.names.push(name.to_string());
        self.p.lower.push(0.0);
        self.p.upper.push(f64::INFINITY);
        self.p.integer.push(false);
        self.index.insert(name.to_string(), n);
        n
    }
}

/// Parses an expression `[+-] [coef] name ...` starting at `*pos`; stops
/// at a comparison or the end of the tokens.
fn parse_expr(b: &mut Builder, toks: &[(Tok, usize)], pos: &mut usize) -> Result<Vec<(usize, f64)>, LpError> {
    let mut terms = Vec::new();
    let mut sign = 1.0;
    let mut coef: Option<f64> = None;
    while let Some((tok, line)) = toks.get(*pos) {
        match tok {
            Tok::Plus => sign = 1.0,
            Tok::Minus => sign = -sign,
            Tok::Num(v) => coef = Some(coef.unwrap_or(1.0) * v),
            Tok::Name(n) => {
                let v = b.var(n);
                terms.push((v, sign * coef.unwrap_or(1.0)));
                sign = 1.0;
                coef = None;
            }
            Tok::Cmp(_) => break,
            Tok::Colon => return Err(LpError::Syntax { line: *line, message: "unexpected `:`".into() }),
        }
        *pos += 1;
    }
    if coef.is_some() {
        let line = toks.get(pos.saturating_sub(1)).map_or(0, |t| t.1);
        return Err(LpError::Syntax { line, message: "constant terms are not supported".into() });
    }
    Ok(terms)
}

fn merge(terms: Vec<(usize, f64)>) -> Vec<(usize, f64)> {
    let mut out: Vec<(usize, f64)> = Vec::with_capacity(terms.len());
    for (v, a) in terms {
        match out.iter_mut().find(|t| t.0 == v) {
            Some(t) => t.1 += a,
            None => out.push((v, a)),
        }
    }
    out.retain(|t| t.1 != 0.0);
    out
}

fn signed_num(toks: &[(Tok, usize)], pos: &mut usize, line: usize) -> Result<f64, LpError> {
    let mut sign = 1.0;
    loop {
        match toks.get(*pos) {
            Some((Tok::Minus, _)) => sign = -sign,
            Some((Tok::Plus, _)) => {}
            Some((Tok::Num(v), _)) => {
                *pos += 1;
                return Ok(sign * v);
            }
            _ => return Err(LpError::Syntax { line, message: "expected a number".into() }),
        }
        *pos += 1;
    }
}

/// Parses CPLEX-LP text. Unknown variables are created on first use.
pub fn parse_lp(text: &str) -> Result<LpProblem, LpError> {
    let mut b = Builder {
        p: LpProblem {
            minimize: true,
            names: Vec::new(),
            lower: Vec::new(),
            upper: Vec::new(),
            integer: Vec::new(),
            objective: Vec::new(),
            rows: Vec::new(),
        },
        index: HashMap::new(),
    };
    let mut section: Option<Section> = None;
    let mut chunks: Vec<(Section, Vec<(Tok, usize)>, Vec<(usize, String)>)> = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let content = raw.split('\\').next().unwrap_or("");
        if content.trim().is_empty() {
            continue;
        }
        if let Some((s, dir)) = section_of(content) {
            if let Some(min) = dir {
                b.p.minimize = min;
            }
            section = Some(s);
            chunks.push((s, Vec::new(), Vec::new()));
            continue;
        }
        let Some(s) = section else {
            return Err(LpError::Syntax { line, message: "text before the objective section".into() });
        };
        if s == Section::End {
            return Err(LpError::Syntax { line, message: "text after End".into() });
        }
        let chunk = chunks.last_mut().expect("section opened");
        chunk.1.extend(tokenize(content, line)?);
        chunk.2.push((line, content.to_string()));
    }
    if section != Some(Section::End) {
        return Err(LpError::Syntax { line: text.lines().count(), message: "missing End".into() });
    }

    for (s, toks, lines) in chunks {
        match s {
            Section::Objective => {
                let mut pos = 0;
                if let (Some((Tok::Name(_), _)), Some((Tok::Colon, _))) = (toks.first(), toks.get(1)) {
                    pos = 2;
                }
                let terms = parse_expr(&mut b, &toks, &mut pos)?;
                if let Some((_, line)) = toks.get(pos) {
                    return Err(LpError::Syntax { line: *line, message: "comparison in objective".into() });
                }
                b.p.objective = merge(terms);
            }
            Section::Constraints => {
                let mut pos = 0;
                while pos < toks.len() {
                    let line = toks[pos].1;
                    let name = match (&toks[pos].0, toks.get(pos + 1)) {
                        (Tok::Name(n), Some((Tok::Colon, _))) => {
                            pos += 2;
                            n.clone()
                        }
                        _ => format!("R{}", b.p.rows.len() + 1),
                    };
                    let terms = parse_expr(&mut b, &toks, &mut pos)?;
                    let sense = match toks.get(pos) {
                        Some((Tok::Cmp(s), _)) => *s,
                        _ => return Err(LpError::Syntax { line, message: format!("constraint `{name}` has no comparison") }),
                    };
                    pos += 1;
                    let rhs = signed_num(&toks, &mut pos, line)?;
                    b.p.rows.push(LpRow { name, terms: merge(terms), sense, rhs });
                }
            }
            Section::Bounds => {
                for (line, content) in lines {
                    parse_bound(&mut b, &content, line)?;
                }
            }
            Section::Binaries | Section::Generals => {
                for (tok, line) in toks {
                    let Tok::Name(n) = tok else {
                        return Err(LpError::Syntax { line, message: "expected a variable name".into() });
                    };
                    let v = b.var(&n);
                    b.p.integer[v] = true;
                    if s == Section::Binaries {
                        b.p.lower[v] = b.p.lower[v].max(0.0);
                        b.p.upper[v] = b.p.upper[v].min(1.0);
                    }
                }
            }
            Section::End => {}
        }
    }
    Ok(b.p)
}

fn parse_bound(b: &mut Builder, content: &str, line: usize) -> Result<(), LpError> {
    let err = |m: &str| LpError::Syntax { line, message: m.to_string() };
    let toks = tokenize(content, line)?;
    if let [(Tok::Name(n), _), (Tok::Name(kw), _)] = toks.as_slice() {
        if kw.eq_ignore_ascii_case("free") {
            let v = b.var(n);
            b.p.lower[v] = f64::NEG_INFINITY;
            b.p.upper[v] = f64::INFINITY;
            return Ok(());
        }
    }
    // split on comparisons: a [cmp b [cmp c]]
    let mut parts: Vec<Vec<(Tok, usize)>> = vec![Vec::new()];
    let mut cmps = Vec::new();
    for t in toks {
        if let Tok::Cmp(s) = t.0 {
            cmps.push(s);
            parts.push(Vec::new());
        } else {
            parts.last_mut().expect("nonempty").push(t);
        }
    }
    let value = |p: &[(Tok, usize)]| -> Option<f64> {
        let mut pos = 0;
        let v = signed_num(p, &mut pos, line).ok()?;
        (pos == p.len()).then_some(v)
    };
    let name = |p: &[(Tok, usize)]| match p {
        [(Tok::Name(n), _)] => Some(n.clone()),
        _ => None,
    };
    match (parts.as_slice(), cmps.as_slice()) {
        ([a, c], [s]) => {
            let (n, v, s) = match (name(a), value(c), name(c), value(a)) {
                (Some(n), Some(v), _, _) => (n, v, *s),
                (_, _, Some(n), Some(v)) => (n, v, flip(*s)),
                _ => return Err(err("expected `name <op> value`")),
            };
            let var = b.var(&n);
            match s {
                Sense::Eq => {
                    b.p.lower[var] = v;
                    b.p.upper[var] = v;
                }
                Sense::Le => b.p.upper[var] = v,
                Sense::Ge => b.p.lower[var] = v,
            }
        }
        ([lo, mid, hi], [Sense::Le, Sense::Le]) => {
            let (Some(l), Some(n), Some(h)) = (value(lo), name(mid), value(hi)) else {
                return Err(err("expected `low <= name <= high`"));
            };
            let var = b.var(&n);
            b.p.lower[var] = l;
            b.p.upper[var] = h;
        }
        _ => return Err(err("unrecognised bound")),
    }
    Ok(())
}

fn flip(s: Sense) -> Sense {
    match s {
        Sense::Le => Sense::Ge,
        Sense::Ge => Sense::Le,
        Sense::Eq => Sense::Eq,
    }
}
