//! The `deprec-mdp/1` text format.
//!
//! One directive per line; blank lines and lines starting with `#` are
//! ignored. Names are whitespace-free tokens.
//!
//! ```text
//! format deprec-mdp/1
//! title Used car dealership
//! provenance rho1=1/2 rho2=1/4
//! states s_d s_1 t_1 s_2 t_2
//! actions s_d a_1 a_2
//! actions s_1 go
//! transition s_1 go s_1 1/2
//! transition s_1 go t_1 1/2
//! reward t_1 go 5
//! ```
//!
//! `format` must come first and `states` before anything that names a state.
//! Every state needs exactly one `actions` line and every state-action pair
//! at least one `transition`. Omitted rewards are zero. Numbers are decimals
//! or exact fractions `p/q`.

use std::collections::HashMap;
use std::fmt::{self, Write as _};

use deprec_core::mdp::{Violation, ROW_SUM_TOLERANCE};
use deprec_core::Mdp;

pub const FORMAT_VERSION: &str = "deprec-mdp/1";

/// Rows whose sum is off by more than this (but within the validation
/// tolerance) are rescaled on parse.
const RENORMALIZE_THRESHOLD: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DiagnosticKind {
    Syntax,
    Version,
    Validation,
}

/// A parse failure anchored at a 1-based line and column.
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("line {line}, column {column}: {message}")]
pub struct Diagnostic {
    pub line: usize,
    pub column: usize,
    pub kind: DiagnosticKind,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MdpDocument {
    pub title: Option<String>,
    pub provenance: Option<String>,
    pub mdp: Mdp,
}

impl MdpDocument {
    pub fn new(mdp: Mdp) -> Self {
        Self {
            title: None,
            provenance: None,
            mdp,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Pos {
    line: usize,
    column: usize,
}

struct Token<'a> {
    text: &'a str,
    pos: Pos,
}

fn tokens(line: &str, line_no: usize) -> Vec<Token<'_>> {
    let mut out = Vec::new();
    let mut start: Option<(usize, usize)> = None;
    let mut column = 0;
    for (byte, ch) in line.char_indices() {
        column += 1;
        if ch.is_whitespace() {
            if let Some((b, c)) = start.take() {
                out.push(Token {
                    text: &line[b..byte],
                    pos: Pos { line: line_no, column: c },
                });
            }
        } else if start.is_none() {
            start = Some((byte, column));
        }
    }
    if let Some((b, c)) = start {
        out.push(Token {
            text: &line[b..],
            pos: Pos { line: line_no, column: c },
        });
    }
    out
}

fn syntax(pos: Pos, message: impl Into<String>) -> Diagnostic {
    Diagnostic {
        line: pos.line,
        column: pos.column,
        kind: DiagnosticKind::Syntax,
        message: message.into(),
    }
}

/// Parses a finite decimal or an exact fraction `p/q`.
pub fn parse_number(text: &str) -> Result<f64, String> {
    let value = match text.split_once('/') {
        Some((p, q)) => {
            let p: f64 = p.parse().map_err(|_| format!("invalid numerator in '{text}'"))?;
            let q: f64 = q.parse().map_err(|_| format!("invalid denominator in '{text}'"))?;
            if q == 0.0 {
                return Err(format!("zero denominator in '{text}'"));
            }
            p / q
        }
        None => text.parse().map_err(|_| format!("invalid number '{text}'"))?,
    };
    if !value.is_finite() {
        return Err(format!("number '{text}' is not finite"));
    }
    Ok(value)
}

#[derive(Default)]
struct Builder {
    title: Option<String>,
    provenance: Option<String>,
    states: Option<(Vec<String>, Pos)>,
    state_index: HashMap<String, usize>,
    actions: Vec<Option<(Vec<String>, Pos)>>,
    transitions: HashMap<(usize, usize), Vec<(usize, f64, Pos)>>,
    rewards: HashMap<(usize, usize), (f64, Pos)>,
}

impl Builder {
    fn state(&self, tok: &Token) -> Result<usize, Diagnostic> {
        if self.states.is_none() {
            return Err(syntax(tok.pos, "'states' must be declared before it is referenced"));
        }
        self.state_index
            .get(tok.text)
            .copied()
            .ok_or_else(|| syntax(tok.pos, format!("unknown state '{}'", tok.text)))
    }

    fn action(&self, state: usize, tok: &Token) -> Result<usize, Diagnostic> {
        let Some((names, _)) = &self.actions[state] else {
            return Err(syntax(tok.pos, "the state's 'actions' line must precede its use"));
        };
        names
            .iter()
            .position(|a| a == tok.text)
            .ok_or_else(|| syntax(tok.pos, format!("unknown action '{}'", tok.text)))
    }
}

fn expect_args(keyword: &Token, args: &[Token], n: usize) -> Result<(), Diagnostic> {
    if args.len() != n {
        let pos = args.get(n).map_or(keyword.pos, |t| t.pos);
        return Err(syntax(
            pos,
            format!("'{}' takes {n} arguments, found {}", keyword.text, args.len()),
        ));
    }
    Ok(())
}

fn check_unique(names: &[Token], what: &str) -> Result<(), Diagnostic> {
    for (i, t) in names.iter().enumerate() {
        if names[..i].iter().any(|u| u.text == t.text) {
            return Err(syntax(t.pos, format!("duplicate {what} '{}'", t.text)));
        }
    }
    Ok(())
}

fn rest_of_line<'a>(line: &'a str, keyword: &Token) -> &'a str {
    let skip: usize = line.chars().take(keyword.pos.column - 1).map(char::len_utf8).sum();
    line[skip + keyword.text.len()..].trim()
}

/// Parses a document, keeping its metadata.
pub fn parse_document(text: &str) -> Result<MdpDocument, Diagnostic> {
    let mut b = Builder::default();
    let mut seen_format = false;
    let mut last = Pos { line: 1, column: 1 };
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let toks = tokens(line, line_no);
        let Some((keyword, args)) = toks.split_first() else {
            continue;
        };
        last = Pos { line: line_no, column: 1 };
        if keyword.text.starts_with('#') {
            continue;
        }
        if !seen_format {
            if keyword.text != "format" {
                return Err(syntax(keyword.pos, format!("expected 'format {FORMAT_VERSION}' first")));
            }
            expect_args(keyword, args, 1)?;
            if args[0].text != FORMAT_VERSION {
                return Err(Diagnostic {
                    line: args[0].pos.line,
                    column: args[0].pos.column,
                    kind: DiagnosticKind::Version,
                    message: format!("unsupported format '{}', expected '{FORMAT_VERSION}'", args[0].text),
                });
            }
            seen_format = true;
            continue;
        }
        match keyword.text {
            "format" => return Err(syntax(keyword.pos, "duplicate 'format' line")),
            "title" | "provenance" => {
                let slot = if keyword.text == "title" { &mut b.title } else { &mut b.provenance };
                if slot.is_some() {
                    return Err(syntax(keyword.pos, format!("duplicate '{}' line", keyword.text)));
                }
                *slot = Some(rest_of_line(line, keyword).to_string());
            }
            "states" => {
                if b.states.is_some() {
                    return Err(syntax(keyword.pos, "duplicate 'states' line"));
                }
                check_unique(args, "state")?;
                if let Some(t) = args.iter().find(|t| t.text.starts_with('#')) {
                    return Err(syntax(t.pos, "names may not start with '#'"));
                }
                let names: Vec<String> = args.iter().map(|t| t.text.to_string()).collect();
                b.state_index = names.iter().enumerate().map(|(i, n)| (n.clone(), i)).collect();
                b.actions = vec![None; names.len()];
                b.states = Some((names, keyword.pos));
            }
            "actions" => {
                let Some(state_tok) = args.first() else {
                    return Err(syntax(keyword.pos, "'actions' needs a state name"));
                };
                let s = b.state(state_tok)?;
                if b.actions[s].is_some() {
                    return Err(syntax(state_tok.pos, format!("duplicate 'actions' line for '{}'", state_tok.text)));
                }
                check_unique(&args[1..], "action")?;
                if let Some(t) = args[1..].iter().find(|t| t.text.starts_with('#')) {
                    return Err(syntax(t.pos, "names may not start with '#'"));
                }
                b.actions[s] = Some((args[1..].iter().map(|t| t.text.to_string()).collect(), keyword.pos));
            }
            "transition" => {
                expect_args(keyword, args, 4)?;
                let s = b.state(&args[0])?;
                let a = b.action(s, &args[1])?;
                let t = b.state(&args[2])?;
                let p = parse_number(args[3].text).map_err(|m| syntax(args[3].pos, m))?;
                let row = b.transitions.entry((s, a)).or_default();
                if row.iter().any(|(u, _, _)| *u == t) {
                    return Err(syntax(args[2].pos, "duplicate transition entry"));
                }
                row.push((t, p, keyword.pos));
            }
            "reward" => {
                expect_args(keyword, args, 3)?;
                let s = b.state(&args[0])?;
                let a = b.action(s, &args[1])?;
                let r = parse_number(args[2].text).map_err(|m| syntax(args[2].pos, m))?;
                if b.rewards.insert((s, a), (r, keyword.pos)).is_some() {
                    return Err(syntax(keyword.pos, "duplicate reward entry"));
                }
            }
            other => return Err(syntax(keyword.pos, format!("unknown directive '{other}'"))),
        }
    }
    if !seen_format {
        return Err(syntax(last, format!("missing 'format {FORMAT_VERSION}' line")));
    }
    build(b, last)
}

fn build(b: Builder, end: Pos) -> Result<MdpDocument, Diagnostic> {
    let Some((states, states_pos)) = b.states else {
        return Err(syntax(end, "missing 'states' line"));
    };
    let n = states.len();
    let mut actions = Vec::with_capacity(n);
    let mut actions_pos = Vec::with_capacity(n);
    for (s, entry) in b.actions.into_iter().enumerate() {
        match entry {
            Some((names, pos)) => {
                actions.push(names);
                actions_pos.push(pos);
            }
            None => return Err(syntax(states_pos, format!("state '{}' has no 'actions' line", states[s]))),
        }
    }
    let mut transition = Vec::with_capacity(n);
    let mut reward = Vec::with_capacity(n);
    let mut first_entry: HashMap<(usize, usize), Pos> = HashMap::new();
    for s in 0..n {
        let mut rows = Vec::with_capacity(actions[s].len());
        let mut rs = Vec::with_capacity(actions[s].len());
        for a in 0..actions[s].len() {
            let Some(entries) = b.transitions.get(&(s, a)) else {
                return Err(syntax(
                    actions_pos[s],
                    format!("no transition entries for ({}, {})", states[s], actions[s][a]),
                ));
            };
            first_entry.insert((s, a), entries[0].2);
            let mut row = vec![0.0; n];
            for &(t, p, _) in entries {
                row[t] = p;
            }
            let sum: f64 = row.iter().sum();
            let off = (sum - 1.0).abs();
            if off > RENORMALIZE_THRESHOLD && off <= ROW_SUM_TOLERANCE && row.iter().all(|&p| p >= 0.0) {
                row.iter_mut().for_each(|p| *p /= sum);
            }
            rows.push(row);
            rs.push(b.rewards.get(&(s, a)).map_or(0.0, |(r, _)| *r));
        }
        transition.push(rows);
        reward.push(rs);
    }
    let mdp = Mdp::new(states, actions, transition, reward).map_err(|e| syntax(end, e.to_string()))?;
    if let Some(v) = mdp.validate().into_iter().next() {
        let pos = match &v {
            Violation::NoStates => states_pos,
            Violation::EmptyActionSet { state } => actions_pos[*state],
            Violation::NonFiniteReward { state, action } => b
                .rewards
                .get(&(*state, *action))
                .map_or(actions_pos[*state], |(_, p)| *p),
            other => {
                let pair = other.pair().expect("row violations name a pair");
                first_entry[&pair]
            }
        };
        return Err(Diagnostic {
            line: pos.line,
            column: pos.column,
            kind: DiagnosticKind::Validation,
            message: describe(&mdp, &v),
        });
    }
    Ok(MdpDocument {
        title: b.title,
        provenance: b.provenance,
        mdp,
    })
}

/// A violation phrased with state and action names.
pub fn describe(mdp: &Mdp, v: &Violation) -> String {
    let pair = |s: usize, a: usize| format!("({}, {})", mdp.state_name(s), mdp.action_name(s, a));
    match *v {
        Violation::NoStates => "no-states: the document declares no states".into(),
        Violation::EmptyActionSet { state } => {
            format!("empty-action-set: state '{}' has no actions", mdp.state_name(state))
        }
        Violation::RowSum { state, action, sum } => {
            format!("row-sum: transitions of {} sum to {sum}, expected 1", pair(state, action))
        }
        Violation::NegativeProbability {
            state,
            action,
            next,
            value,
        } => format!(
            "negative-probability: {} -> {} has probability {value}",
            pair(state, action),
            mdp.state_name(next)
        ),
        Violation::ProbabilityAboveOne {
            state,
            action,
            next,
            value,
        } => format!(
            "probability-above-one: {} -> {} has probability {value}",
            pair(state, action),
            mdp.state_name(next)
        ),
        Violation::NonFiniteProbability { state, action, next } => format!(
            "non-finite-probability: {} -> {}",
            pair(state, action),
            mdp.state_name(next)
        ),
        Violation::NonFiniteReward { state, action } => {
            format!("non-finite-reward: {}", pair(state, action))
        }
    }
}

/// Parses a document and keeps only the model.
pub fn parse_mdp(text: &str) -> Result<Mdp, Diagnostic> {
    parse_document(text).map(|d| d.mdp)
}

struct Num(f64);

impl fmt::Display for Num {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // shortest representation that parses back to the same value
        if self.0 == 0.0 {
            f.write_str("0")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

/// Canonical text: directives in fixed order, zero probabilities and zero
/// rewards omitted.
pub fn serialize_document(doc: &MdpDocument) -> String {
    let m = &doc.mdp;
    let mut out = String::new();
    writeln!(out, "format {FORMAT_VERSION}").unwrap();
    if let Some(t) = &doc.title {
        writeln!(out, "title {t}").unwrap();
    }
    if let Some(p) = &doc.provenance {
        writeln!(out, "provenance {p}").unwrap();
    }
    write!(out, "states").unwrap();
    for name in m.state_names() {
        write!(out, " {name}").unwrap();
    }
    out.push('\n');
    for s in 0..m.n_states() {
        write!(out, "actions {}", m.state_name(s)).unwrap();
        for a in m.action_names(s) {
            write!(out, " {a}").unwrap();
        }
        out.push('\n');
    }
    for s in 0..m.n_states() {
        for a in 0..m.n_actions(s) {
            for (t, &p) in m.row(s, a).iter().enumerate() {
                if p != 0.0 {
                    writeln!(
                        out,
                        "transition {} {} {} {}",
                        m.state_name(s),
                        m.action_name(s, a),
                        m.state_name(t),
                        Num(p)
                    )
                    .unwrap();
                }
            }
        }
    }
    for s in 0..m.n_states() {
        for a in 0..m.n_actions(s) {
            let r = m.reward(s, a);
            if r != 0.0 {
                writeln!(out, "reward {} {} {}", m.state_name(s), m.action_name(s, a), Num(r)).unwrap();
            }
        }
    }
    out
}

pub fn serialize_mdp(mdp: &Mdp) -> String {
    serialize_document(&MdpDocument::new(mdp.clone()))
}
