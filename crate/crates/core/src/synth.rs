//! Seeded generator of keystroke-level sessions over the Python-like subset.
//! Sessions type statements with typos, paste and duplicate code, toggle
//! comments, delete, move and rename. Used for benchmarks and corpora.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::session::{EditEvent, EditKind, Session};

const NAMES: [&str; 12] = [
    "a", "b", "x", "y", "total", "count", "value", "items", "name", "result", "step", "acc",
];

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    /// Stop starting new operations once this many events exist.
    pub target_events: usize,
    /// Chance that a typed character is preceded by a wrong one that is
    /// immediately deleted.
    pub typo_rate: f64,
    /// Relative operation weights: type a statement, paste a new one,
    /// duplicate an existing line, comment a line out, type a comment,
    /// delete a comment, delete a statement, move a statement, rename.
    pub weights: [u32; 9],
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            target_events: 400,
            typo_rate: 0.04,
            weights: [20, 2, 2, 2, 1, 1, 2, 1, 2],
        }
    }
}

fn pick<'a, R: Rng>(rng: &mut R, xs: &[&'a str]) -> &'a str {
    xs.choose(rng).unwrap()
}

fn expr<R: Rng>(rng: &mut R) -> String {
    match rng.gen_range(0..6) {
        0 => rng.gen_range(0..100).to_string(),
        1 => pick(rng, &NAMES).to_string(),
        2 => format!("{} + {}", pick(rng, &NAMES), rng.gen_range(1..10)),
        3 => format!("{} * {}", pick(rng, &NAMES), pick(rng, &NAMES)),
        4 => format!("len({})", pick(rng, &NAMES)),
        _ => format!("'{}'", pick(rng, &NAMES)),
    }
}

/// One simple statement, no newline.
pub fn simple_statement<R: Rng>(rng: &mut R) -> String {
    match rng.gen_range(0..4) {
        0 | 1 => format!("{} = {}", pick(rng, &NAMES), expr(rng)),
        2 => format!("print({})", expr(rng)),
        _ => format!("{} = {}({}, {})", pick(rng, &NAMES), pick(rng, &["max", "min", "add"]), expr(rng), pick(rng, &NAMES)),
    }
}

/// A simple or compound top-level statement, no trailing newline.
pub fn statement<R: Rng>(rng: &mut R) -> String {
    let body = |rng: &mut R| format!("    {}", simple_statement(rng));
    match rng.gen_range(0..8) {
        0 => format!("for {} in range({}):\n{}", pick(rng, &["i", "j", "k"]), rng.gen_range(1..20), body(rng)),
        1 => format!("while {} < {}:\n{}", pick(rng, &NAMES), rng.gen_range(1..20), body(rng)),
        2 => format!("if {} > {}:\n{}", pick(rng, &NAMES), rng.gen_range(0..9), body(rng)),
        3 => format!("if {} == {}:\n{}\nelse:\n{}", pick(rng, &NAMES), rng.gen_range(0..9), body(rng), body(rng)),
        4 => format!(
            "def {}({}, {}):\n{}\n    return {}",
            pick(rng, &["f", "g", "helper", "update"]),
            pick(rng, &["p", "q"]),
            pick(rng, &["r", "s"]),
            body(rng),
            pick(rng, &NAMES)
        ),
        _ => simple_statement(rng),
    }
}

/// A whole program of `n` top-level statements, newline terminated.
pub fn program<R: Rng>(rng: &mut R, n: usize) -> String {
    (0..n).map(|_| statement(rng) + "\n").collect()
}

struct Gen {
    rng: ChaCha8Rng,
    text: Vec<char>,
    events: Vec<EditEvent>,
    /// Positions of '#' characters inserted to comment code out.
    commented: Vec<usize>,
}

impl Gen {
    fn push(&mut self, kind: EditKind, index: usize, s: &str) {
        let order = self.events.len() as i64 + 1;
        let n = s.chars().count();
        match kind {
            EditKind::Insert => {
                self.text.splice(index..index, s.chars());
                for p in &mut self.commented {
                    if index <= *p {
                        *p += n;
                    }
                }
                self.events.push(EditEvent::insert(order, index, s));
            }
            EditKind::Delete => {
                self.text.drain(index..index + n);
                for p in &mut self.commented {
                    if index + n <= *p {
                        *p -= n;
                    }
                }
                self.events.push(EditEvent::delete(order, index, s));
            }
        }
    }

    fn insert(&mut self, index: usize, s: &str) {
        self.push(EditKind::Insert, index, s);
    }

    fn delete(&mut self, index: usize, len: usize) {
        let s: String = self.text[index..index + len].iter().collect();
        self.push(EditKind::Delete, index, &s);
    }

    /// Types `s` at `at` one key at a time, with occasional typos.
    fn type_text(&mut self, at: usize, s: &str, typo_rate: f64) {
        for (k, c) in s.chars().enumerate() {
            if c.is_alphanumeric() && self.rng.gen_bool(typo_rate) {
                let wrong = (b'a' + self.rng.gen_range(0..26)) as char;
                self.insert(at + k, &wrong.to_string());
                self.delete(at + k, 1);
            }
            self.insert(at + k, &c.to_string());
        }
    }

    fn lines(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        let mut start = 0;
        for (i, &c) in self.text.iter().enumerate() {
            if c == '\n' {
                out.push((start, i));
                start = i + 1;
            }
        }
        out
    }

    fn line(&self, (s, e): (usize, usize)) -> String {
        self.text[s..e].iter().collect()
    }

    /// Line starts where a new top-level statement may go, plus the end.
    fn boundaries(&self) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .lines()
            .into_iter()
            .filter(|&r| {
                let l = self.line(r);
                l.starts_with(|c: char| !c.is_whitespace()) && !l.starts_with("else") && !l.starts_with("elif")
            })
            .map(|(s, _)| s)
            .collect();
        out.push(self.text.len());
        out
    }

    /// Top-level simple statements: column 0, not a header, not a comment.
    fn simple_lines(&self) -> Vec<(usize, usize)> {
        let lines = self.lines();
        lines
            .iter()
            .enumerate()
            .filter(|(k, &r)| {
                let l = self.line(r);
                let next_indented = lines
                    .get(k + 1)
                    .is_some_and(|&n| self.line(n).starts_with(' '));
                l.starts_with(|c: char| c.is_alphabetic())
                    && !l.ends_with(':')
                    && !next_indented
                    && !l.starts_with("return")
                    && !l.starts_with("pass")
            })
            .map(|(_, &r)| r)
            .collect()
    }

    fn boundary(&mut self) -> usize {
        let b = self.boundaries();
        // Mostly append, sometimes insert in the middle.
        if self.rng.gen_bool(0.7) {
            *b.last().unwrap()
        } else {
            *b.choose(&mut self.rng).unwrap()
        }
    }

    fn type_statement(&mut self, typo_rate: f64) {
        let s = statement(&mut self.rng);
        let at = self.boundary();
        self.insert(at, "\n");
        self.type_text(at, &s, typo_rate);
    }

    fn paste_new(&mut self) {
        let s = format!("{} = {}\n", pick(&mut self.rng, &NAMES), self.rng.gen_range(1000..100000));
        let at = self.boundary();
        self.insert(at, &s);
    }

    fn duplicate(&mut self) -> bool {
        let Some(&r) = self.simple_lines().choose(&mut self.rng) else { return false };
        let s = self.line(r) + "\n";
        let at = self.boundary();
        self.insert(at, &s);
        true
    }

    fn comment_out(&mut self) -> bool {
        let Some(&(s, _)) = self.simple_lines().choose(&mut self.rng) else { return false };
        self.insert(s, "#");
        self.commented.push(s);
        true
    }

    fn uncomment(&mut self) {
        if let Some(p) = self.commented.pop() {
            self.delete(p, 1);
        }
    }

    fn type_comment(&mut self, typo_rate: f64) {
        let s = format!("# note {}", pick(&mut self.rng, &NAMES));
        let at = self.boundary();
        self.insert(at, "\n");
        self.type_text(at, &s, typo_rate);
    }

    fn delete_comment(&mut self) -> bool {
        let notes: Vec<(usize, usize)> = self
            .lines()
            .into_iter()
            .filter(|&r| self.line(r).starts_with("# note"))
            .collect();
        let Some(&(s, e)) = notes.choose(&mut self.rng) else { return false };
        self.delete(s, e + 1 - s);
        true
    }

    fn delete_statement(&mut self) -> bool {
        let Some(&(s, e)) = self.simple_lines().choose(&mut self.rng) else { return false };
        if self.rng.gen_bool(0.5) {
            self.delete(s, e + 1 - s);
        } else {
            for i in (s..e).rev() {
                self.delete(i, 1);
            }
            self.delete(s, 1);
        }
        true
    }

    fn move_statement(&mut self) -> bool {
        let candidates: Vec<(usize, usize)> = self
            .simple_lines()
            .into_iter()
            .filter(|&(s, e)| e - s >= 10)
            .collect();
        let Some(&(s, e)) = candidates.choose(&mut self.rng) else { return false };
        let line = self.line((s, e)) + "\n";
        self.delete(s, e + 1 - s);
        let targets: Vec<usize> = self.boundaries().into_iter().filter(|&b| b != s).collect();
        match targets.choose(&mut self.rng) {
            Some(&at) => self.insert(at, &line),
            None => self.insert(s, &line),
        }
        true
    }

    fn rename(&mut self) -> bool {
        let targets: Vec<usize> = self
            .simple_lines()
            .into_iter()
            .filter_map(|r| {
                let l = self.line(r);
                let name_len = l.find(" = ")?;
                Some(r.0 + l[..name_len].chars().count())
            })
            .collect();
        let Some(&at) = targets.choose(&mut self.rng) else { return false };
        let c = (b'a' + self.rng.gen_range(0..26)) as char;
        self.insert(at, &c.to_string());
        true
    }
}

/// One session. The same seed and config always give the same events.
pub fn synth_session(seed: u64, subject: &str, file: &str, cfg: &SynthConfig) -> Session {
    let mut g = Gen {
        rng: ChaCha8Rng::seed_from_u64(seed),
        text: Vec::new(),
        events: Vec::new(),
        commented: Vec::new(),
    };
    let total: u32 = cfg.weights.iter().sum();
    while g.events.len() < cfg.target_events {
        if !g.commented.is_empty() && g.rng.gen_bool(0.3) {
            g.uncomment();
            continue;
        }
        let mut roll = g.rng.gen_range(0..total.max(1));
        let mut op = 0;
        while op < 8 && roll >= cfg.weights[op] {
            roll -= cfg.weights[op];
            op += 1;
        }
        let done = match op {
            0 => {
                g.type_statement(cfg.typo_rate);
                true
            }
            1 => {
                g.paste_new();
                true
            }
            2 => g.duplicate(),
            3 => g.comment_out(),
            4 => {
                g.type_comment(cfg.typo_rate);
                true
            }
            5 => g.delete_comment(),
            6 => g.delete_statement(),
            7 => g.move_statement(),
            _ => g.rename(),
        };
        if !done {
            g.type_statement(cfg.typo_rate);
        }
    }
    while !g.commented.is_empty() {
        g.uncomment();
    }
    let mut events = g.events;
    for e in &mut events {
        e.subject_id = subject.to_string();
        e.file_id = file.to_string();
    }
    Session::new(subject, file, events)
}

/// `n` sessions from one corpus seed, keyed `s000`, `s001`, ...
pub fn synth_corpus(seed: u64, n: usize, cfg: &SynthConfig) -> Vec<Session> {
    (0..n)
        .map(|i| {
            let s = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(i as u64);
            synth_session(s, &format!("s{i:03}"), "main.py", cfg)
        })
        .collect()
}
