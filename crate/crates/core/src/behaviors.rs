//! Detectors for pasting, commenting, moving and renaming behaviors.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::analysis::{SessionAnalysis, Touch};
use crate::correspondence::CharRange;
use crate::session::{EditKind, Session, StarterCode};
use crate::tracking::NodeRef;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BehaviorKind {
    Duplication,
    ExteriorPaste,
    Commenting,
    DeletingComment,
    CommentingOut,
    Uncommenting,
    Moving,
    Renaming,
}

impl BehaviorKind {
    pub const ALL: [BehaviorKind; 8] = [
        BehaviorKind::Duplication,
        BehaviorKind::ExteriorPaste,
        BehaviorKind::Commenting,
        BehaviorKind::DeletingComment,
        BehaviorKind::CommentingOut,
        BehaviorKind::Uncommenting,
        BehaviorKind::Moving,
        BehaviorKind::Renaming,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BehaviorKind::Duplication => "Duplication",
            BehaviorKind::ExteriorPaste => "ExteriorPaste",
            BehaviorKind::Commenting => "Commenting",
            BehaviorKind::DeletingComment => "DeletingComment",
            BehaviorKind::CommentingOut => "CommentingOut",
            BehaviorKind::Uncommenting => "Uncommenting",
            BehaviorKind::Moving => "Moving",
            BehaviorKind::Renaming => "Renaming",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BehaviorEvent {
    pub kind: BehaviorKind,
    pub state: usize,
    pub span: CharRange,
    pub detail: serde_json::Value,
    pub heuristic_flags: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BehaviorConfig {
    /// Inserts at least this long count as pastes.
    pub paste_min: usize,
    /// Share of a paste that must appear contiguously in the starter code
    /// for the paste to be ignored.
    pub starter_share: f64,
    pub rename_gap: usize,
    pub moving_window: usize,
    pub moving_min_len: usize,
}

impl Default for BehaviorConfig {
    fn default() -> Self {
        BehaviorConfig {
            paste_min: 2,
            starter_share: 0.8,
            rename_gap: 20,
            moving_window: 50,
            moving_min_len: 10,
        }
    }
}

/// Collapses whitespace runs to one space and trims the ends.
pub fn normalize_ws(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn longest_common_substring(a: &[char], b: &[char]) -> usize {
    let mut best = 0;
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for &x in a {
        for (j, &y) in b.iter().enumerate() {
            cur[j + 1] = if x == y { prev[j] + 1 } else { 0 };
            best = best.max(cur[j + 1]);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    best
}

fn span_of(index: usize, text: &str) -> CharRange {
    CharRange::new(index, index + text.chars().count())
}

/// Delete-then-reinsert pairs. Returns the events and the states of the
/// inserts they consumed.
pub fn detect_moving(session: &Session, window: usize, min_len: usize) -> (Vec<BehaviorEvent>, HashSet<usize>) {
    let events = &session.events;
    let mut out = Vec::new();
    let mut consumed = HashSet::new();
    for (d, del) in events.iter().enumerate() {
        if del.kind != EditKind::Delete {
            continue;
        }
        let norm = normalize_ws(&del.text);
        if norm.chars().count() < min_len {
            continue;
        }
        // Where the cut sits as later edits shift the text around.
        let mut p = del.index;
        for k in d + 1..events.len().min(d + 1 + window) {
            let ev = &events[k];
            if ev.kind == EditKind::Insert && !consumed.contains(&k) && normalize_ws(&ev.text) == norm {
                if ev.index != p {
                    consumed.insert(k);
                    out.push(BehaviorEvent {
                        kind: BehaviorKind::Moving,
                        state: k,
                        span: span_of(ev.index, &ev.text),
                        detail: json!({ "from_state": d, "from_span": span_of(del.index, &del.text) }),
                        heuristic_flags: Vec::new(),
                    });
                }
                break;
            }
            let len = ev.len();
            match ev.kind {
                EditKind::Insert if ev.index < p => p += len,
                EditKind::Delete if ev.index + len <= p => p -= len,
                EditKind::Delete if ev.index < p => p = ev.index,
                _ => {}
            }
        }
    }
    (out, consumed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PasteClass {
    Duplication,
    ExteriorPaste,
    StarterSuppressed,
    MovingConsumed,
}

/// Every paste candidate with its classification.
pub fn classify_pastes(
    session: &Session,
    texts: &[Vec<char>],
    starter: Option<&StarterCode>,
    consumed: &HashSet<usize>,
    cfg: &BehaviorConfig,
) -> Vec<(usize, PasteClass)> {
    let starter_norm: Option<Vec<char>> = starter.map(|s| normalize_ws(&s.text).chars().collect());
    let mut normalized: Vec<Option<String>> = vec![None; texts.len()];
    let mut out = Vec::new();
    for (t, ev) in session.events.iter().enumerate() {
        if ev.kind != EditKind::Insert || ev.len() < cfg.paste_min.max(2) {
            continue;
        }
        let norm = normalize_ws(&ev.text);
        if norm.is_empty() {
            continue;
        }
        if consumed.contains(&t) {
            out.push((t, PasteClass::MovingConsumed));
            continue;
        }
        let mut dup = false;
        for u in (0..t).rev() {
            let n = normalized[u].get_or_insert_with(|| normalize_ws(&texts[u].iter().collect::<String>()));
            if n.contains(&norm) {
                dup = true;
                break;
            }
        }
        let class = if dup {
            PasteClass::Duplication
        } else {
            let chars: Vec<char> = norm.chars().collect();
            let from_starter = starter_norm.as_ref().is_some_and(|s| {
                longest_common_substring(&chars, s) as f64 >= cfg.starter_share * chars.len() as f64
            });
            if from_starter {
                PasteClass::StarterSuppressed
            } else {
                PasteClass::ExteriorPaste
            }
        };
        out.push((t, class));
    }
    out
}

pub fn detect_pastes(
    session: &Session,
    texts: &[Vec<char>],
    consumed: &HashSet<usize>,
    cfg: &BehaviorConfig,
) -> Vec<BehaviorEvent> {
    let starter = session.starter_candidate(cfg.paste_min);
    classify_pastes(session, texts, starter.as_ref(), consumed, cfg)
        .into_iter()
        .filter_map(|(t, class)| {
            let kind = match class {
                PasteClass::Duplication => BehaviorKind::Duplication,
                PasteClass::ExteriorPaste => BehaviorKind::ExteriorPaste,
                _ => return None,
            };
            let ev = &session.events[t];
            let mut flags = Vec::new();
            if kind == BehaviorKind::ExteriorPaste && starter.as_ref().is_some_and(|s| s.heuristic) {
                flags.push("heuristic-starter".to_string());
            }
            Some(BehaviorEvent {
                kind,
                state: t,
                span: span_of(ev.index, &ev.text),
                detail: json!({ "length": ev.len() }),
                heuristic_flags: flags,
            })
        })
        .collect()
}

pub fn detect_comment_ops(a: &SessionAnalysis) -> Vec<BehaviorEvent> {
    let mut out = Vec::new();
    let lineages = |nodes: &mut dyn Iterator<Item = NodeRef>| -> Vec<u32> {
        let mut ids: Vec<u32> = nodes.filter_map(|n| a.tracking.lineage_id(n)).collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    };

    // New comments that do not swallow existing code.
    for t in 0..a.num_states() {
        let spans = &a.spans[t];
        let arr = a.correspondences.arrays()[t].values();
        for c in spans.comments() {
            let prev = |j: usize| (t > 0 && arr[j] >= 0).then(|| arr[j] as usize);
            let existed = prev(c.start).is_some_and(|p| {
                let ps = &a.spans[t - 1];
                ps.comment_containing(p).is_some_and(|pc| pc.start == p)
            });
            if existed {
                continue;
            }
            let swallows_code = (c.start..c.end).any(|j| prev(j).is_some_and(|p| a.spans[t - 1].is_code(p)));
            if !swallows_code {
                out.push(BehaviorEvent {
                    kind: BehaviorKind::Commenting,
                    state: t,
                    span: *c,
                    detail: json!({}),
                    heuristic_flags: Vec::new(),
                });
            }
        }
    }

    for c in &a.comment_outs {
        out.push(BehaviorEvent {
            kind: BehaviorKind::CommentingOut,
            state: c.state,
            span: c.span,
            detail: json!({ "lineages": lineages(&mut c.nodes.iter().copied()) }),
            heuristic_flags: Vec::new(),
        });
    }

    let mut restored: BTreeMap<usize, Vec<NodeRef>> = BTreeMap::new();
    for l in a.tracking.links().filter(|l| l.via_comment) {
        restored.entry(l.child.state).or_default().push(l.child);
    }
    for (t, nodes) in restored {
        let tree = a.tree(t).unwrap();
        let lo = nodes.iter().map(|n| tree.node(n.node as usize).range.start).min().unwrap();
        let hi = nodes.iter().map(|n| tree.node(n.node as usize).range.end).max().unwrap();
        out.push(BehaviorEvent {
            kind: BehaviorKind::Uncommenting,
            state: t,
            span: CharRange::new(lo, hi),
            detail: json!({ "lineages": lineages(&mut nodes.iter().copied()) }),
            heuristic_flags: Vec::new(),
        });
    }

    for (t, ev) in a.session.events.iter().enumerate() {
        if ev.kind != EditKind::Delete || t == 0 {
            continue;
        }
        let gone = CharRange::new(ev.index, ev.index + ev.len());
        for c in a.spans[t - 1].comments() {
            if gone.contains_range(c) {
                out.push(BehaviorEvent {
                    kind: BehaviorKind::DeletingComment,
                    state: t,
                    span: CharRange::new(ev.index, ev.index),
                    detail: json!({ "text": a.text(t - 1, *c) }),
                    heuristic_flags: Vec::new(),
                });
            }
        }
    }
    out
}

/// Identifier lexeme changes after at least `gap` edits on other code since
/// the identifier was last touched.
pub fn detect_renaming(a: &SessionAnalysis, gap: usize) -> Vec<BehaviorEvent> {
    let labels = a.grammar.labels();
    let touches = a.touches();
    // Number of code edits up to and including each state.
    let mut count_at = Vec::with_capacity(touches.len());
    let mut n = 0usize;
    for t in &touches {
        if !matches!(t, Touch::Skipped) {
            n += 1;
        }
        count_at.push(n);
    }
    let mut last_touch: HashMap<u32, usize> = HashMap::new();
    let mut out = Vec::new();
    for (t, touch) in touches.iter().enumerate() {
        let Touch::Node { lineage, .. } = *touch else { continue };
        let lin = &a.tracking.lineages()[lineage as usize];
        let last = *last_touch
            .get(&lineage)
            .unwrap_or(&count_at[lin.first_state()]);
        let now = count_at[t];
        last_touch.insert(lineage, now);
        let Some(cur) = lin.at(t) else { continue };
        if !labels.is_identifier(a.label(cur)) {
            continue;
        }
        let Some(before) = lin.instances.iter().rev().find(|r| r.state < t) else {
            continue;
        };
        let (old, new) = (a.node_text(*before), a.node_text(cur));
        if old != new && now - last - 1 >= gap {
            out.push(BehaviorEvent {
                kind: BehaviorKind::Renaming,
                state: t,
                span: a.tree(t).unwrap().node(cur.node as usize).range,
                detail: json!({ "lineage": lineage, "old": old, "new": new }),
                heuristic_flags: Vec::new(),
            });
        }
    }
    out
}

/// All detectors, ordered by state then kind.
pub fn detect_all(a: &SessionAnalysis, cfg: &BehaviorConfig) -> Vec<BehaviorEvent> {
    let (mut out, consumed) = detect_moving(&a.session, cfg.moving_window, cfg.moving_min_len);
    out.extend(detect_pastes(&a.session, &a.texts, &consumed, cfg));
    out.extend(detect_comment_ops(a));
    out.extend(detect_renaming(a, cfg.rename_gap));
    out.sort_by(|x, y| (x.state, x.kind, x.span.start).cmp(&(y.state, y.kind, y.span.start)));
    out
}

pub fn count_by_kind(events: &[BehaviorEvent]) -> BTreeMap<BehaviorKind, usize> {
    let mut m: BTreeMap<BehaviorKind, usize> = BehaviorKind::ALL.iter().map(|k| (*k, 0)).collect();
    for e in events {
        *m.get_mut(&e.kind).unwrap() += 1;
    }
    m
}

/// One file's behavior counts and size.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FileBehaviors {
    pub num_events: usize,
    pub counts: BTreeMap<BehaviorKind, usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub group: String,
    pub kind: BehaviorKind,
    pub files: usize,
    pub fraction_with_any: Option<f64>,
    pub median: Option<f64>,
}

fn median(v: &mut [usize]) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_unstable();
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[m] as f64
    } else {
        (v[m - 1] + v[m]) as f64 / 2.0
    })
}

/// Per kind and size group: the share of files with at least one event and
/// the median count (files without events count as zero).
pub fn behavior_summary(files: &[FileBehaviors], size_split: usize) -> Vec<SummaryRow> {
    let groups: [(String, Box<dyn Fn(&FileBehaviors) -> bool>); 3] = [
        ("all".to_string(), Box::new(|_| true)),
        (format!("<{size_split}"), Box::new(move |f| f.num_events < size_split)),
        (format!("{size_split}+"), Box::new(move |f| f.num_events >= size_split)),
    ];
    let mut rows = Vec::new();
    for (name, pred) in &groups {
        let members: Vec<&FileBehaviors> = files.iter().filter(|f| pred(f)).collect();
        for kind in BehaviorKind::ALL {
            let mut counts: Vec<usize> = members
                .iter()
                .map(|f| f.counts.get(&kind).copied().unwrap_or(0))
                .collect();
            let with_any = counts.iter().filter(|&&c| c > 0).count();
            rows.push(SummaryRow {
                group: name.clone(),
                kind,
                files: members.len(),
                fraction_with_any: (!members.is_empty()).then(|| with_any as f64 / members.len() as f64),
                median: median(&mut counts),
            });
        }
    }
    rows
}
