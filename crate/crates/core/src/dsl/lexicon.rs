//! Word tables and the phrase matcher used by the clause grammars.

use alloc::string::String;
use alloc::vec::Vec;

use super::Tok;

pub const SPEED_FAST: f64 = 12.0;
pub const SPEED_NORMAL: f64 = 8.0;
pub const SPEED_SLOW: f64 = 4.0;
pub const CLOSE_RANGE: (f64, f64) = (5.0, 20.0);
pub const FAR_RANGE: (f64, f64) = (40.0, 80.0);
/// Half-width of the range produced by "N meters away".
pub const AROUND_TOLERANCE: f64 = 5.0;

pub const DELETE_VERBS: &[&str] = &["remove", "delete", "erase", "clear", "eliminate"];
pub const ADD_VERBS: &[&str] = &["add", "insert", "put", "place", "spawn", "introduce"];
pub const VIEW_VERBS: &[&str] = &["move", "shift", "raise", "lower", "rotate", "turn", "pan", "tilt", "roll"];
pub const REVISE_VERBS: &[&str] = &["modify", "change", "make", "let", "have", "recolor", "paint", "revise", "set"];
pub const ABSTRACT_VERBS: &[&str] = &["create", "cause", "simulate", "generate", "make"];
pub const CONNECTIVES: &[&str] = &["and", "additionally", "also", "then"];
pub const LEADING_FILLERS: &[&str] =
    &["and", "additionally", "also", "then", "please", "now", "next", "finally", "lastly", "first", "afterwards"];

/// Canonical vehicle types by phrase; longest phrases first.
pub const VEHICLE_TYPES: &[(&str, &str)] = &[
    ("police cars", "police car"),
    ("police car", "police car"),
    ("police vehicle", "police car"),
    ("mini cooper", "Mini"),
    ("porsches", "Porsche"),
    ("porsche", "Porsche"),
    ("minis", "Mini"),
    ("mini", "Mini"),
    ("chevrolets", "Chevrolet"),
    ("chevrolet", "Chevrolet"),
    ("chevy", "Chevrolet"),
    ("sedans", "sedan"),
    ("sedan", "sedan"),
    ("suvs", "SUV"),
    ("suv", "SUV"),
    ("trucks", "truck"),
    ("truck", "truck"),
];

/// Nouns that name a vehicle without constraining its type.
pub const GENERIC_VEHICLES: &[&str] = &["car", "cars", "vehicle", "vehicles", "automobile", "automobiles", "one"];

pub const NUMBER_WORDS: &[(&str, u32)] = &[
    ("a", 1),
    ("an", 1),
    ("one", 1),
    ("another", 1),
    ("two", 2),
    ("three", 3),
    ("four", 4),
    ("five", 5),
    ("six", 6),
    ("seven", 7),
    ("eight", 8),
    ("nine", 9),
    ("ten", 10),
];

pub fn canonical_type(words: &[&str]) -> Option<(&'static str, usize)> {
    VEHICLE_TYPES.iter().find_map(|(phrase, canon)| {
        let n = phrase.split(' ').count();
        (words.len() >= n && phrase.split(' ').zip(words).all(|(a, b)| a == *b)).then_some((*canon, n))
    })
}

pub fn speed_for(modifier: &str) -> Option<f64> {
    match modifier {
        "fast" => Some(SPEED_FAST),
        "normal speed" => Some(SPEED_NORMAL),
        "slow" => Some(SPEED_SLOW),
        _ => None,
    }
}

/// What a matched phrase contributes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Out {
    /// Canonical modifier phrase.
    Mod(&'static str),
    /// `[lo, hi]` from two captured numbers.
    DistRange,
    /// `[n − 5, n + 5]` from one captured number.
    DistAround,
    /// `[0, n]`.
    DistWithin,
    SpeedMps,
    SpeedKmh,
    Duration,
    /// Relation keyword; a reference expression must follow.
    Rel(&'static str),
    Skip,
}

/// Pattern syntax: space-separated elements; `#` is a number, `a|b` are
/// alternatives, a leading `?` makes an element optional.
pub const MOTION_PATTERNS: &[(&str, Out)] = &[
    ("?in # to # meters|meter|metres|m ?away", Out::DistRange),
    ("?in between # and # meters|meter|metres|m ?away", Out::DistRange),
    ("# meters|meter|metres|m away|ahead|out", Out::DistAround),
    ("at ?a ?distance ?of # meters|meter|metres|m", Out::DistAround),
    ("within # meters|meter|metres|m", Out::DistWithin),
    ("?at # m/s|mps", Out::SpeedMps),
    ("?at # meters|meter|metres per second", Out::SpeedMps),
    ("?at # km/h|kph|kmh", Out::SpeedKmh),
    ("for # seconds|second|s|sec|secs", Out::Duration),
    ("?in ?the wrong way|direction", Out::Mod("wrong way")),
    ("wrong-way", Out::Mod("wrong way")),
    ("against ?the traffic", Out::Mod("wrong way")),
    ("toward|towards me|us", Out::Mod("toward me")),
    ("toward|towards the ego ?vehicle|car", Out::Mod("toward me")),
    ("oncoming", Out::Mod("toward me")),
    ("away from me|us", Out::Mod("away from me")),
    ("away from the ego ?vehicle|car", Out::Mod("away from me")),
    ("in the same direction ?as ?me|us", Out::Mod("away from me")),
    ("fast|quickly|rapidly|faster|speeding", Out::Mod("fast")),
    ("at ?a high speed", Out::Mod("fast")),
    ("slow|slowly|slower", Out::Mod("slow")),
    ("at ?a low speed", Out::Mod("slow")),
    ("at ?a normal|moderate speed", Out::Mod("normal speed")),
    ("normally", Out::Mod("normal speed")),
    ("?go|goes|going|drive|drives|driving|move|moves|moving straight|ahead|forward|forwards|straightforward", Out::Mod("straight")),
    ("?to turn|turns|turning left", Out::Mod("turn left")),
    ("?to make ?a left turn", Out::Mod("turn left")),
    ("?to turn|turns|turning right", Out::Mod("turn right")),
    ("?to make ?a right turn", Out::Mod("turn right")),
    ("?to park|parked|parking|stopped|stationary", Out::Mod("park")),
    ("?to stop", Out::Mod("park")),
    ("standing still", Out::Mod("park")),
    ("?to back up", Out::Mod("backward")),
    ("backward|backwards|reversing", Out::Mod("backward")),
    ("in reverse", Out::Mod("backward")),
    ("close|nearby|near", Out::Mod("close")),
    ("close by", Out::Mod("close")),
    ("far|distant", Out::Mod("far")),
    ("far away", Out::Mod("far")),
    ("in the distance", Out::Mod("far")),
    ("following", Out::Rel("behind")),
    ("behind", Out::Rel("behind")),
    ("in front of", Out::Rel("front")),
    ("ahead of", Out::Rel("front")),
    ("?to|at ?the front of", Out::Rel("front")),
    ("?to|at ?the back|rear of", Out::Rel("behind")),
    ("?to|on ?the left ?side of", Out::Rel("left")),
    ("?to|on ?the right ?side of", Out::Rel("right")),
    ("next to", Out::Rel("left")),
    ("?in|at|to ?the front", Out::Mod("front")),
    ("in|at|to ?the front of me|us", Out::Mod("front")),
    ("?in|at|on|to ?the left front|front-left", Out::Mod("left front")),
    ("?in|at|on|to ?the front left", Out::Mod("left front")),
    ("?in|at|on|to ?the right front|front-right", Out::Mod("right front")),
    ("?in|at|on|to ?the front right", Out::Mod("right front")),
    ("?on|to ?the left ?side", Out::Mod("left")),
    ("?on|to ?the left ?side of me|us", Out::Mod("left")),
    ("?on|to ?the right ?side", Out::Mod("right")),
    ("?on|to ?the right ?side of me|us", Out::Mod("right")),
    ("behind me|us", Out::Mod("back")),
    ("?at|in|to ?the back|rear", Out::Mod("back")),
    ("?at|in|to ?the back|rear of me|us", Out::Mod("back")),
    ("chasing|chases|chase|pursuing", Out::Mod("chasing")),
];

pub const MOTION_FILLERS: &[&str] = &[
    "that", "which", "who", "is", "are", "it", "its", "driving", "moving", "going", "heading", "traveling",
    "travelling", "drive", "move", "go", "drives", "moves", "goes", "runs", "running", "cruising", "and", "also", "too", "the", "scene",
    "in", "into", "to", "on", "at", "a", "an", "with", "should", "be", "lane", "road", "street", "please", "so",
    "then", "",
];

/// Direction words for view translation; sign applies to the named axis.
pub const VIEW_PATTERNS: &[(&str, Out)] = &[
    ("# meters|meter|metres|m ahead|forward|forwards|further", Out::Mod("forward_m+")),
    ("ahead|forward|forwards by # meters|meter|metres|m", Out::Mod("forward_m+")),
    ("# meters|meter|metres|m back|backward|backwards|behind", Out::Mod("forward_m-")),
    ("back|backward|backwards by # meters|meter|metres|m", Out::Mod("forward_m-")),
    ("# meters|meter|metres|m ?to ?the left", Out::Mod("left_m+")),
    ("?to ?the left by # meters|meter|metres|m", Out::Mod("left_m+")),
    ("# meters|meter|metres|m ?to ?the right", Out::Mod("left_m-")),
    ("?to ?the right by # meters|meter|metres|m", Out::Mod("left_m-")),
    ("# meters|meter|metres|m above|up|upward|upwards|higher", Out::Mod("up_m+")),
    ("up|upward|upwards by # meters|meter|metres|m", Out::Mod("up_m+")),
    ("# meters|meter|metres|m below|down|downward|downwards|lower", Out::Mod("up_m-")),
    ("down|downward|downwards by # meters|meter|metres|m", Out::Mod("up_m-")),
    ("# degrees|degree|deg ?to ?the left", Out::Mod("yaw_deg+")),
    ("# degrees|degree|deg ?to ?the right", Out::Mod("yaw_deg-")),
    ("# degrees|degree|deg up|upward|upwards", Out::Mod("pitch_deg-")),
    ("# degrees|degree|deg down|downward|downwards", Out::Mod("pitch_deg+")),
    ("by # meters|meter|metres|m", Out::Mod("verb_m")),
    ("by # degrees|degree|deg", Out::Mod("verb_deg")),
];

pub const VIEW_FILLERS: &[&str] = &[
    "the", "view", "camera", "viewpoint", "should", "be", "is", "moved", "move", "shifted", "shift", "raised",
    "raise", "lowered", "lower", "rotated", "rotate", "turned", "turn", "panned", "pan", "tilted", "tilt", "rolled",
    "roll", "and", "to", "please", "a", "it", "then", "also", "our", "",
];

pub const EGO_PATTERNS: &[(&str, Out)] = &[
    ("?drives|moves|goes|drive|move|go|driving|moving|going|keeps|keep straight|ahead|forward|forwards", Out::Mod("straight")),
    ("drives|moves|goes|drive|move|go|driving|moving|going backward|backwards", Out::Mod("backward")),
    ("backs|back up", Out::Mod("backward")),
    ("reverses|reverse|reversing", Out::Mod("backward")),
    ("stops|stop|stays|stay|parks|park|parked|stationary", Out::Mod("park")),
    ("stands|stand ?still", Out::Mod("park")),
    ("?remains|remain|stays|stay still|put", Out::Mod("park")),
    ("fast|quickly|rapidly", Out::Mod("fast")),
    ("at ?a high speed", Out::Mod("fast")),
    ("slow|slowly", Out::Mod("slow")),
    ("at ?a low speed", Out::Mod("slow")),
    ("at ?a normal|moderate speed", Out::Mod("normal speed")),
    ("?at # m/s|mps", Out::SpeedMps),
    ("?at # km/h|kph|kmh", Out::SpeedKmh),
];

pub const EGO_FILLERS: &[&str] =
    &["ego", "vehicle", "car", "the", "our", "my", "should", "is", "and", "let", "make", "to", "please", "then", "also", ""];

/// One match: length in tokens and captured numbers.
#[derive(Clone, Debug, PartialEq)]
pub struct Match {
    pub len: usize,
    pub numbers: Vec<f64>,
}

fn match_pattern(pattern: &str, toks: &[Tok]) -> Option<Match> {
    let mut pos = 0;
    let mut numbers = Vec::new();
    for elem in pattern.split(' ') {
        let (optional, elem) = match elem.strip_prefix('?') {
            Some(e) => (true, e),
            None => (false, elem),
        };
        let hit = match toks.get(pos) {
            Some(Tok::Number(n)) if elem == "#" => {
                numbers.push(*n);
                true
            }
            Some(Tok::Word(w)) if elem != "#" => elem.split('|').any(|alt| alt == w),
            _ => false,
        };
        if hit {
            pos += 1;
        } else if !optional {
            return None;
        }
    }
    (pos > 0).then_some(Match { len: pos, numbers })
}

/// Longest pattern matching at the start of `toks`; ties go to the earlier
/// table entry.
pub fn longest_match(table: &[(&'static str, Out)], toks: &[Tok]) -> Option<(Out, Match)> {
    let mut best: Option<(Out, Match)> = None;
    for (pat, out) in table {
        if let Some(m) = match_pattern(pat, toks) {
            if best.as_ref().map_or(true, |(_, b)| m.len > b.len) {
                best = Some((*out, m));
            }
        }
    }
    best
}

/// Levenshtein distance, for naming the nearest grammar rule.
pub fn edit_distance(a: &str, b: &str) -> usize {
    let b: Vec<char> = b.chars().collect();
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    for (i, ca) in a.chars().enumerate() {
        let mut cur = Vec::with_capacity(b.len() + 1);
        cur.push(i + 1);
        for (j, cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != *cb);
            cur.push(sub.min(prev[j + 1] + 1).min(cur[j] + 1));
        }
        prev = cur;
    }
    prev[b.len()]
}

pub fn join(words: &[&str]) -> String {
    words.join(" ")
}
