//! Deterministic grammar for editing commands.
//!
//! A command is split into clauses at sentence punctuation and at the
//! connectives `and`, `additionally`, `also`, `then` when the next word opens
//! a new clause. Each clause maps to exactly one [`EditConfig`].

pub mod attributes;
pub mod lexicon;
pub mod reference;
pub mod wire;

use alloc::borrow::ToOwned;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use num_traits::Float;
use serde_json::{json, Value};
use thiserror::Error;

use crate::assets::color_by_name;
use crate::scene::{EditAction, EditConfig};
use lexicon::Out;

pub use attributes::extract_motion_attributes;
pub use reference::{parse_reference, resolve_reference, Reference};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DslError {
    #[error("command is empty")]
    Empty,
    #[error("unexpected character '{ch}' at byte {pos}")]
    UnexpectedChar { ch: char, pos: usize },
    #[error("unrecognized clause \"{clause}\" (nearest rule: {nearest_rule})")]
    UnknownClause { clause: String, nearest_rule: String },
    #[error("unknown word '{word}' in clause \"{clause}\" ({rule})")]
    UnknownWord { word: String, clause: String, rule: String },
    #[error("incomplete clause \"{clause}\" ({rule}): expected {expected}")]
    Incomplete { clause: String, rule: String, expected: String },
    #[error("ambiguous {what}: '{first}' conflicts with '{second}'")]
    Ambiguous { what: String, first: String, second: String },
    #[error("cannot resolve \"{expr}\"; candidates: [{}]", candidates.join(", "))]
    UnresolvedReference { expr: String, candidates: Vec<String> },
    #[error("expected an {expected} config, got {got:?}")]
    WrongAction { expected: &'static str, got: EditAction },
    #[error("malformed parameter '{0}'")]
    BadParameter(String),
}

/// Lexical token.
#[derive(Clone, Debug, PartialEq)]
pub enum Tok {
    Word(String),
    Number(f64),
    Punct(char),
}

impl Tok {
    fn word(&self) -> Option<&str> {
        match self {
            Tok::Word(w) => Some(w),
            _ => None,
        }
    }

    fn text(&self) -> String {
        match self {
            Tok::Word(w) => w.clone(),
            Tok::Number(n) => format!("{n}"),
            Tok::Punct(c) => c.to_string(),
        }
    }
}

/// Lowercases and splits `text` into words, numbers and punctuation.
pub fn tokenize(text: &str) -> Result<Vec<Tok>, DslError> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let (pos, c) = chars[i];
        if c.is_whitespace() || matches!(c, '"' | '\'' | '(' | ')' | '\u{201c}' | '\u{201d}' | '\u{2019}') {
            i += 1;
        } else if c.is_ascii_digit() {
            let start = i;
            while i < chars.len()
                && (chars[i].1.is_ascii_digit()
                    || (chars[i].1 == '.' && i + 1 < chars.len() && chars[i + 1].1.is_ascii_digit()))
            {
                i += 1;
            }
            let s: String = chars[start..i].iter().map(|(_, c)| *c).collect();
            toks.push(Tok::Number(s.parse().map_err(|_| DslError::UnexpectedChar { ch: c, pos })?));
        } else if c.is_alphabetic() {
            let start = i;
            while i < chars.len()
                && (chars[i].1.is_alphabetic()
                    || (matches!(chars[i].1, '-' | '/' | '\'')
                        && i + 1 < chars.len()
                        && chars[i + 1].1.is_alphabetic()))
            {
                i += 1;
            }
            let s: String = chars[start..i].iter().map(|(_, c)| *c).collect();
            toks.push(Tok::Word(s.to_lowercase()));
        } else if matches!(c, '.' | '!' | '?' | ';' | ',' | ':') {
            toks.push(Tok::Punct(c));
            i += 1;
        } else {
            return Err(DslError::UnexpectedChar { ch: c, pos });
        }
    }
    Ok(toks)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ClauseKind {
    Delete,
    Add,
    View,
    Ego,
    Revise,
    Abstract,
}

impl ClauseKind {
    pub fn rule(self) -> &'static str {
        match self {
            ClauseKind::Delete => "delete_clause",
            ClauseKind::Add => "add_clause",
            ClauseKind::View => "view_clause",
            ClauseKind::Ego => "ego_clause",
            ClauseKind::Revise => "revise_clause",
            ClauseKind::Abstract => "abstract_clause",
        }
    }
}

/// One clause of a command.
#[derive(Clone, Debug, PartialEq)]
pub struct Clause {
    pub tokens: Vec<Tok>,
}

impl Clause {
    pub fn text(&self) -> String {
        let mut s = String::new();
        for t in &self.tokens {
            if !s.is_empty() && !matches!(t, Tok::Punct(',')) {
                s.push(' ');
            }
            s.push_str(&t.text());
        }
        s
    }
}

fn is_in(w: &str, set: &[&str]) -> bool {
    set.contains(&w)
}

/// Kind of clause opened by `toks`, if any.
pub fn clause_kind(toks: &[Tok]) -> Option<ClauseKind> {
    let w: Vec<&str> = toks.iter().take(4).map(|t| t.word().unwrap_or("")).collect();
    let at = |i: usize| w.get(i).copied().unwrap_or("");
    let first = at(0);
    let view_noun = |s: &str| matches!(s, "view" | "camera" | "viewpoint");
    if first == "ego" || (first == "the" && at(1) == "ego") || (matches!(first, "let" | "make") && at(1) == "the" && at(2) == "ego") {
        return Some(ClauseKind::Ego);
    }
    if view_noun(first) || (matches!(first, "the" | "our") && view_noun(at(1))) {
        return Some(ClauseKind::View);
    }
    if is_in(first, lexicon::DELETE_VERBS) || (first == "get" && at(1) == "rid" && at(2) == "of") {
        return Some(ClauseKind::Delete);
    }
    if is_in(first, lexicon::ADD_VERBS) {
        return Some(ClauseKind::Add);
    }
    if is_in(first, lexicon::VIEW_VERBS) && (matches!(at(1), "the" | "our") && view_noun(at(2)) || view_noun(at(1))) {
        return Some(ClauseKind::View);
    }
    if first == "make" {
        return Some(if at(1) == "the" { ClauseKind::Revise } else { ClauseKind::Abstract });
    }
    if is_in(first, lexicon::ABSTRACT_VERBS) {
        return Some(ClauseKind::Abstract);
    }
    if is_in(first, lexicon::REVISE_VERBS) {
        return Some(ClauseKind::Revise);
    }
    None
}

fn strip_leading(toks: &[Tok]) -> &[Tok] {
    let mut i = 0;
    while i < toks.len() {
        match &toks[i] {
            Tok::Punct(',') | Tok::Punct(':') => i += 1,
            Tok::Word(w) if is_in(w, lexicon::LEADING_FILLERS) && clause_kind(&toks[i + 1..]).is_some() => i += 1,
            Tok::Word(w) if is_in(w, lexicon::LEADING_FILLERS) && matches!(toks.get(i + 1), Some(Tok::Punct(','))) => {
                i += 1
            }
            _ => break,
        }
    }
    &toks[i..]
}

/// Splits a command into clauses.
pub fn split_clauses(text: &str) -> Result<Vec<Clause>, DslError> {
    let toks = tokenize(text)?;
    let mut clauses = Vec::new();
    for sentence in toks.split(|t| matches!(t, Tok::Punct('.' | '!' | '?' | ';'))) {
        let mut start = 0;
        let mut i = 0;
        while i < sentence.len() {
            let is_connective = sentence[i].word().is_some_and(|w| is_in(w, lexicon::CONNECTIVES));
            if is_connective && i > start {
                let mut j = i + 1;
                while matches!(sentence.get(j), Some(Tok::Punct(','))) {
                    j += 1;
                }
                if clause_kind(&sentence[j..]).is_some() {
                    push_clause(&mut clauses, &sentence[start..i]);
                    start = i;
                }
            }
            i += 1;
        }
        push_clause(&mut clauses, &sentence[start..]);
    }
    if clauses.is_empty() {
        return Err(DslError::Empty);
    }
    Ok(clauses)
}

fn push_clause(out: &mut Vec<Clause>, toks: &[Tok]) {
    let mut toks = strip_leading(toks);
    while let Some(Tok::Punct(',')) = toks.last() {
        toks = &toks[..toks.len() - 1];
    }
    if !toks.is_empty() {
        out.push(Clause { tokens: toks.to_vec() });
    }
}

/// Parses a full command into one config per clause.
pub fn parse_command(text: &str, round: u32) -> Result<Vec<EditConfig>, DslError> {
    if text.trim().is_empty() {
        return Err(DslError::Empty);
    }
    split_clauses(text)?.iter().map(|c| parse_clause(c, round)).collect()
}

fn nearest_rule(clause: &Clause) -> String {
    let first = clause.tokens.iter().find_map(Tok::word).unwrap_or("");
    let tables: [(&str, &[&str]); 5] = [
        ("delete_clause", lexicon::DELETE_VERBS),
        ("add_clause", lexicon::ADD_VERBS),
        ("view_clause", lexicon::VIEW_VERBS),
        ("revise_clause", lexicon::REVISE_VERBS),
        ("abstract_clause", lexicon::ABSTRACT_VERBS),
    ];
    let mut best = ("add_clause", "add", usize::MAX);
    for (rule, verbs) in tables {
        for v in verbs {
            let d = lexicon::edit_distance(first, v);
            if d < best.2 {
                best = (rule, v, d);
            }
        }
    }
    format!("{} (starts with '{}')", best.0, best.1)
}

pub fn parse_clause(clause: &Clause, round: u32) -> Result<EditConfig, DslError> {
    let kind = clause_kind(&clause.tokens)
        .ok_or_else(|| DslError::UnknownClause { clause: clause.text(), nearest_rule: nearest_rule(clause) })?;
    let p = ClauseParser { clause, kind };
    match kind {
        ClauseKind::Delete => p.delete(round),
        ClauseKind::Add => p.add(round),
        ClauseKind::View => p.view(round),
        ClauseKind::Ego => p.ego(round),
        ClauseKind::Revise => p.revise(round),
        ClauseKind::Abstract => p.abstract_(round),
    }
}

/// Modifiers, colors and references gathered from an add/revise body.
#[derive(Default)]
struct Body {
    modifiers: Vec<&'static str>,
    color: Option<String>,
    vehicle_type: Option<&'static str>,
    generic_noun: bool,
    distance: Option<(f64, f64)>,
    speed: Option<f64>,
    duration: Option<f64>,
    relation: Option<&'static str>,
    target: Option<String>,
}

struct ClauseParser<'a> {
    clause: &'a Clause,
    kind: ClauseKind,
}

impl ClauseParser<'_> {
    fn unknown(&self, t: &Tok) -> DslError {
        DslError::UnknownWord { word: t.text(), clause: self.clause.text(), rule: self.kind.rule().to_string() }
    }

    fn incomplete(&self, expected: &str) -> DslError {
        DslError::Incomplete { clause: self.clause.text(), rule: self.kind.rule().to_string(), expected: expected.to_string() }
    }

    fn words_from(&self, i: usize) -> Vec<&str> {
        self.clause.tokens[i..].iter().map(|t| t.word().unwrap_or("")).collect()
    }

    fn set_once<T: PartialEq + Clone + ToString>(slot: &mut Option<T>, v: T, what: &str) -> Result<(), DslError> {
        match slot {
            Some(old) if *old != v => Err(DslError::Ambiguous {
                what: what.to_string(),
                first: old.to_string(),
                second: v.to_string(),
            }),
            _ => {
                *slot = Some(v);
                Ok(())
            }
        }
    }

    /// Index just past the verb phrase.
    fn after_verb(&self) -> usize {
        let w = self.words_from(0);
        match (w.first().copied(), w.get(1).copied()) {
            (Some("get"), Some("rid")) => 3,
            _ => 1,
        }
    }

    /// Parses `[the] [added|new] [color] type` starting at `i`.
    fn reference_at(&self, i: usize) -> Option<(String, usize)> {
        let toks = &self.clause.tokens[i..];
        parse_reference(toks).map(|(r, n)| (r.canonical(), n))
    }

    fn body(&self, mut i: usize, body: &mut Body) -> Result<(), DslError> {
        let toks = &self.clause.tokens;
        while i < toks.len() {
            let rest = &toks[i..];
            if let Some((out, m)) = lexicon::longest_match(lexicon::MOTION_PATTERNS, rest) {
                i += m.len;
                match out {
                    Out::Mod(name) => {
                        if !body.modifiers.contains(&name) {
                            body.modifiers.push(name);
                        }
                    }
                    Out::DistRange => {
                        let (a, b) = (m.numbers[0], m.numbers[1]);
                        Self::set_once(&mut body.distance.map(Pair), Pair((a.min(b), a.max(b))), "distance")?;
                        body.distance = Some((a.min(b), a.max(b)));
                    }
                    Out::DistAround => {
                        let n = m.numbers[0];
                        body.distance = Some(((n - lexicon::AROUND_TOLERANCE).max(0.0), n + lexicon::AROUND_TOLERANCE));
                    }
                    Out::DistWithin => body.distance = Some((0.0, m.numbers[0])),
                    Out::SpeedMps => body.speed = Some(m.numbers[0]),
                    Out::SpeedKmh => body.speed = Some(m.numbers[0] / 3.6),
                    Out::Duration => body.duration = Some(m.numbers[0]),
                    Out::Rel(rel) => {
                        let (target, n) = self.reference_at(i).ok_or_else(|| self.incomplete("a vehicle reference after the relation"))?;
                        Self::set_once(&mut body.relation, rel, "relation")?;
                        body.target = Some(target);
                        i += n;
                    }
                    Out::Skip => {}
                }
                continue;
            }
            let t = &toks[i];
            let w = match t {
                Tok::Word(w) => w.as_str(),
                Tok::Punct(',') => {
                    i += 1;
                    continue;
                }
                _ => return Err(self.unknown(t)),
            };
            if let Some((ty, n)) = lexicon::canonical_type(&self.words_from(i)) {
                Self::set_once(&mut body.vehicle_type, ty, "vehicle type")?;
                i += n;
            } else if color_by_name(w).is_some() {
                Self::set_once(&mut body.color, w.to_string(), "color")?;
                i += 1;
            } else if is_in(w, lexicon::GENERIC_VEHICLES) {
                body.generic_noun = true;
                i += 1;
            } else if is_in(w, lexicon::MOTION_FILLERS) {
                i += 1;
            } else {
                return Err(self.unknown(t));
            }
        }
        Ok(())
    }

    fn motion_params(mut cfg: EditConfig, body: &Body) -> EditConfig {
        if let Some(t) = body.vehicle_type {
            cfg = cfg.with("type", t);
        }
        if let Some(c) = &body.color {
            cfg = cfg.with("color", c.as_str());
        }
        if !body.modifiers.is_empty() {
            cfg = cfg.with("modifiers", body.modifiers.iter().map(|m| Value::from(*m)).collect::<Vec<_>>());
        }
        if let Some((a, b)) = body.distance {
            cfg = cfg.with("distance", json!([a, b]));
        }
        if let Some(s) = body.speed {
            cfg = cfg.with("speed_mps", s);
        }
        if let Some(d) = body.duration {
            cfg = cfg.with("duration_s", d);
        }
        if let Some(r) = body.relation {
            cfg = cfg.with("relation", r);
        }
        if let Some(t) = &body.target {
            cfg = cfg.with_target(t);
        }
        cfg
    }

    fn add(&self, round: u32) -> Result<EditConfig, DslError> {
        let mut i = self.after_verb();
        let toks = &self.clause.tokens;
        let mut count = 1u32;
        match toks.get(i) {
            Some(Tok::Number(n)) if *n >= 1.0 && n.fract() == 0.0 => {
                count = *n as u32;
                i += 1;
            }
            Some(Tok::Word(w)) => {
                if let Some((_, n)) = lexicon::NUMBER_WORDS.iter().find(|(k, _)| k == w) {
                    count = *n;
                    i += 1;
                }
            }
            _ => {}
        }
        let mut body = Body::default();
        self.body(i, &mut body)?;
        if body.vehicle_type.is_none() && !body.generic_noun {
            return Err(self.incomplete("a vehicle noun such as 'car' or 'Porsche'"));
        }
        let mut cfg = Self::motion_params(EditConfig::new(EditAction::Add, round), &body);
        if count > 1 {
            cfg = cfg.with("count", count);
        }
        Ok(cfg)
    }

    fn revise(&self, round: u32) -> Result<EditConfig, DslError> {
        let mut i = self.after_verb();
        let w = self.words_from(i);
        if w.len() >= 3 && w[0] == "the" && w[1] == "color" && w[2] == "of" {
            i += 3;
        }
        let (target, n) = self.reference_at(i).ok_or_else(|| self.incomplete("a vehicle reference such as 'the added car'"))?;
        i += n;
        let mut body = Body::default();
        self.body(i, &mut body)?;
        if body.vehicle_type.is_some() || body.target.is_some() {
            return Err(self.incomplete("a single vehicle reference"));
        }
        if body.modifiers.is_empty() && body.color.is_none() && body.speed.is_none() && body.distance.is_none() && body.duration.is_none() {
            return Err(self.incomplete("a change such as a color or motion"));
        }
        Ok(Self::motion_params(EditConfig::new(EditAction::Revise, round), &body).with_target(&target))
    }

    fn delete(&self, round: u32) -> Result<EditConfig, DslError> {
        let toks = &self.clause.tokens;
        let mut i = self.after_verb();
        let mut scope = "one";
        let w = self.words_from(i);
        match w.first().copied() {
            Some("all" | "every" | "each") => {
                scope = "all";
                i += 1;
                while matches!(self.words_from(i).first().copied(), Some("of" | "the")) {
                    i += 1;
                }
            }
            _ => {}
        }
        if scope == "one" {
            if let Some((r, n)) = parse_reference(&toks[i..]) {
                if r.added {
                    i += n;
                    self.delete_tail(i)?;
                    return Ok(EditConfig::new(EditAction::Delete, round).with("scope", "one").with_target(&r.canonical()));
                }
            }
        }
        let mut ty: Option<&'static str> = None;
        let mut color: Option<String> = None;
        let mut noun = false;
        while i < toks.len() {
            let t = &toks[i];
            let Some(w) = t.word() else {
                if matches!(t, Tok::Punct(',')) {
                    i += 1;
                    continue;
                }
                return Err(self.unknown(t));
            };
            if let Some((c, n)) = lexicon::canonical_type(&self.words_from(i)) {
                Self::set_once(&mut ty, c, "vehicle type")?;
                noun = true;
                i += n;
            } else if color_by_name(w).is_some() {
                Self::set_once(&mut color, w.to_string(), "color")?;
                i += 1;
            } else if is_in(w, lexicon::GENERIC_VEHICLES) {
                noun = true;
                i += 1;
            } else if matches!(w, "the" | "a" | "an" | "that" | "in" | "from" | "scene" | "image" | "of" | "this" | "there") {
                i += 1;
            } else {
                return Err(self.unknown(t));
            }
        }
        if !noun {
            return Err(self.incomplete("a vehicle noun such as 'cars'"));
        }
        let mut cfg = EditConfig::new(EditAction::Delete, round).with("scope", scope);
        if let Some(t) = ty {
            cfg = cfg.with("type", t);
        }
        if let Some(c) = color {
            cfg = cfg.with("color", c);
        }
        Ok(cfg)
    }

    fn delete_tail(&self, mut i: usize) -> Result<(), DslError> {
        let toks = &self.clause.tokens;
        while i < toks.len() {
            match toks[i].word() {
                Some("in" | "from" | "the" | "scene") => i += 1,
                _ if matches!(toks[i], Tok::Punct(',')) => i += 1,
                _ => return Err(self.unknown(&toks[i])),
            }
        }
        Ok(())
    }

    fn view(&self, round: u32) -> Result<EditConfig, DslError> {
        let toks = &self.clause.tokens;
        let verb = self
            .words_from(0)
            .into_iter()
            .find(|w| lexicon::VIEW_VERBS.iter().any(|v| w.starts_with(v)))
            .unwrap_or("move");
        let mut acc: Vec<(&'static str, f64)> = Vec::new();
        let mut add = |key: &'static str, v: f64| match acc.iter_mut().find(|(k, _)| *k == key) {
            Some(e) => e.1 += v,
            None => acc.push((key, v)),
        };
        let mut i = 0;
        while i < toks.len() {
            if let Some((Out::Mod(code), m)) = lexicon::longest_match(lexicon::VIEW_PATTERNS, &toks[i..]) {
                i += m.len;
                let n = m.numbers[0];
                let (key, sign) = match code {
                    "verb_m" => match verb {
                        v if v.starts_with("raise") => ("up_m", 1.0),
                        v if v.starts_with("lower") => ("up_m", -1.0),
                        _ => return Err(self.incomplete("a direction such as 'ahead' or 'up'")),
                    },
                    "verb_deg" => return Err(self.incomplete("a rotation direction such as 'left'")),
                    _ => {
                        let (k, s) = code.split_at(code.len() - 1);
                        (k, if s == "+" { 1.0 } else { -1.0 })
                    }
                };
                let key = match (key, verb) {
                    ("yaw_deg", v) if v.starts_with("roll") => "roll_deg",
                    _ => key,
                };
                let key: &'static str = match key {
                    "forward_m" => "forward_m",
                    "left_m" => "left_m",
                    "up_m" => "up_m",
                    "yaw_deg" => "yaw_deg",
                    "pitch_deg" => "pitch_deg",
                    _ => "roll_deg",
                };
                add(key, sign * n);
                continue;
            }
            match &toks[i] {
                Tok::Word(w) if is_in(w, lexicon::VIEW_FILLERS) => i += 1,
                Tok::Punct(',') => i += 1,
                t => return Err(self.unknown(t)),
            }
        }
        if acc.is_empty() {
            return Err(self.incomplete("a displacement such as '5 meters ahead'"));
        }
        let mut cfg = EditConfig::new(EditAction::ViewChange, round);
        for (k, v) in acc {
            cfg = cfg.with(k, v);
        }
        Ok(cfg)
    }

    fn ego(&self, round: u32) -> Result<EditConfig, DslError> {
        let toks = &self.clause.tokens;
        let mut motion: Option<&'static str> = None;
        let mut speed: Option<f64> = None;
        let mut i = 0;
        while i < toks.len() {
            if let Some((out, m)) = lexicon::longest_match(lexicon::EGO_PATTERNS, &toks[i..]) {
                i += m.len;
                match out {
                    Out::Mod(name) => match lexicon::speed_for(name) {
                        Some(v) => Self::set_once(&mut speed.map(Num), Num(v), "speed").map(|_| speed = Some(v))?,
                        None => Self::set_once(&mut motion, name, "ego motion")?,
                    },
                    Out::SpeedMps => speed = Some(m.numbers[0]),
                    Out::SpeedKmh => speed = Some(m.numbers[0] / 3.6),
                    _ => {}
                }
                continue;
            }
            match &toks[i] {
                Tok::Word(w) if is_in(w, lexicon::EGO_FILLERS) => i += 1,
                Tok::Punct(',') => i += 1,
                t => return Err(self.unknown(t)),
            }
        }
        let motion = match (motion, speed) {
            (Some(m), _) => m,
            (None, Some(_)) => "straight",
            (None, None) => return Err(self.incomplete("an ego motion such as 'drives ahead'")),
        };
        let mut cfg = EditConfig::new(EditAction::ViewChange, round).with("ego_motion", motion);
        if motion != "park" {
            cfg = cfg.with("speed_mps", speed.unwrap_or(lexicon::SPEED_NORMAL));
        }
        Ok(cfg)
    }

    fn abstract_(&self, round: u32) -> Result<EditConfig, DslError> {
        let mut words: Vec<String> = self.clause.tokens[1..].iter().map(Tok::text).collect();
        if words.first().is_some_and(|w| matches!(w.as_str(), "a" | "an" | "some" | "the")) {
            words.remove(0);
        }
        if words.is_empty() {
            return Err(self.incomplete("a scenario such as 'a traffic jam'"));
        }
        Ok(EditConfig::new(EditAction::AbstractExpand, round).with("phrase", words.join(" ").to_owned()))
    }
}

#[derive(Clone, Copy, PartialEq)]
struct Pair((f64, f64));

impl core::fmt::Display for Pair {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "{}-{} m", self.0 .0, self.0 .1)
    }
}

#[derive(Clone, Copy, PartialEq)]
struct Num(f64);

impl core::fmt::Display for Num {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "{} m/s", self.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MIXED: &str = "Remove all cars in the scene and add a Porsche driving the wrong way toward me fast. \
        Additionally, add a police car also driving the wrong way and chasing behind the Porsche. \
        The view should be moved 5 meters ahead and 0.5 meters above.";

    #[test]
    fn mixed_command_decomposes_into_four() {
        let cfgs = parse_command(MIXED, 0).unwrap();
        assert_eq!(cfgs.len(), 4);
        assert_eq!(cfgs[0], EditConfig::new(EditAction::Delete, 0).with("scope", "all"));
        assert_eq!(
            cfgs[1],
            EditConfig::new(EditAction::Add, 0)
                .with("type", "Porsche")
                .with("modifiers", json!(["wrong way", "toward me", "fast"]))
        );
        assert_eq!(
            cfgs[2],
            EditConfig::new(EditAction::Add, 0)
                .with("type", "police car")
                .with("modifiers", json!(["wrong way", "chasing"]))
                .with("relation", "behind")
                .with_target("the Porsche")
        );
        assert_eq!(cfgs[3], EditConfig::new(EditAction::ViewChange, 0).with("forward_m", 5.0).with("up_m", 0.5));
    }

    #[test]
    fn abstract_and_delete() {
        let c = parse_command("Create a traffic jam.", 2).unwrap();
        assert_eq!(c, [EditConfig::new(EditAction::AbstractExpand, 2).with("phrase", "traffic jam")]);
        let c = parse_command("Delete the red car.", 0).unwrap();
        assert_eq!(c, [EditConfig::new(EditAction::Delete, 0).with("scope", "one").with("color", "red")]);
    }

    #[test]
    fn unknown_clause_names_rule() {
        match parse_command("Remvoe the car.", 0) {
            Err(DslError::UnknownClause { nearest_rule, .. }) => assert!(nearest_rule.starts_with("delete_clause")),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_command("Add a car flying sideways.", 0), Err(DslError::UnknownWord { .. })));
    }

    #[test]
    fn connective_without_verb_does_not_split() {
        let c = split_clauses("Add a car between 20 and 30 meters away.").unwrap();
        assert_eq!(c.len(), 1);
    }
}
