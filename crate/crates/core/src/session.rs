//! Keystroke log ingestion and snapshot replay.
//!
//! Logs follow a small subset of ProgSnap2: one row per `File.Edit` event,
//! with code-point offsets into the file as it stood before the edit.

use std::collections::BTreeMap;
use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::error::{EditError, IngestError};

/// Columns every log must carry, in the order we write them.
pub const COLUMNS: [&str; 10] = [
    "EventID",
    "Order",
    "SubjectID",
    "CodeStateSection",
    "EventType",
    "SourceLocation",
    "EditType",
    "InsertText",
    "DeleteText",
    "ClientTimestamp",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EditKind {
    Insert,
    Delete,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EditEvent {
    pub event_id: String,
    pub order: i64,
    pub subject_id: String,
    pub file_id: String,
    pub kind: EditKind,
    /// Code-point offset into the previous snapshot.
    pub index: usize,
    /// Inserted text for inserts, removed text for deletes.
    pub text: String,
    pub timestamp: Option<String>,
    /// 1-based line in the source log, when the event came from one.
    #[serde(skip)]
    pub row: Option<usize>,
}

impl EditEvent {
    pub fn insert(order: i64, index: usize, text: impl Into<String>) -> Self {
        Self::new(order, EditKind::Insert, index, text.into())
    }

    pub fn delete(order: i64, index: usize, text: impl Into<String>) -> Self {
        Self::new(order, EditKind::Delete, index, text.into())
    }

    fn new(order: i64, kind: EditKind, index: usize, text: String) -> Self {
        EditEvent {
            event_id: format!("e{order}"),
            order,
            subject_id: String::new(),
            file_id: String::new(),
            kind,
            index,
            text,
            timestamp: None,
            row: None,
        }
    }

    /// Length of `text` in code points.
    pub fn len(&self) -> usize {
        self.text.chars().count()
    }

    pub fn is_empty(&self) -> bool {
        self.text.is_empty()
    }

    /// Signed change in snapshot length caused by this event.
    pub fn delta(&self) -> isize {
        match self.kind {
            EditKind::Insert => self.len() as isize,
            EditKind::Delete => -(self.len() as isize),
        }
    }
}

/// The code at one state, as code points.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Snapshot {
    pub state_index: usize,
    pub text: Vec<char>,
}

impl Snapshot {
    pub fn empty() -> Self {
        Snapshot {
            state_index: 0,
            text: Vec::new(),
        }
    }

    pub fn from_str(state_index: usize, s: &str) -> Self {
        Snapshot {
            state_index,
            text: s.chars().collect(),
        }
    }

    pub fn content(&self) -> String {
        self.text.iter().collect()
    }

    pub fn len(&self) -> usize {
        self.text.len()
    }

    pub fn is_empty(&self) -> bool {
        self.text.is_empty()
    }
}

/// Applies `event` to `snapshot`, returning the successor state.
pub fn apply_edit(snapshot: &Snapshot, event: &EditEvent) -> Result<Snapshot, EditError> {
    let mut text = snapshot.text.clone();
    apply_in_place(&mut text, event)?;
    Ok(Snapshot {
        state_index: snapshot.state_index + 1,
        text,
    })
}

pub(crate) fn apply_in_place(text: &mut Vec<char>, event: &EditEvent) -> Result<(), EditError> {
    let chars: Vec<char> = event.text.chars().collect();
    match event.kind {
        EditKind::Insert => {
            if event.index > text.len() {
                return Err(EditError::OutOfBounds {
                    index: event.index,
                    len: chars.len(),
                    snapshot_len: text.len(),
                });
            }
            text.splice(event.index..event.index, chars);
        }
        EditKind::Delete => {
            let end = event.index + chars.len();
            if end > text.len() {
                return Err(EditError::OutOfBounds {
                    index: event.index,
                    len: chars.len(),
                    snapshot_len: text.len(),
                });
            }
            if text[event.index..end] != chars[..] {
                return Err(EditError::DeleteMismatch {
                    expected: event.text.clone(),
                    found: text[event.index..end].iter().collect(),
                });
            }
            text.drain(event.index..end);
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StarterCode {
    pub text: String,
    /// True when the starter was guessed from an early paste rather than supplied.
    pub heuristic: bool,
}

/// All edits to one file by one subject.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Session {
    pub subject_id: String,
    pub file_id: String,
    pub events: Vec<EditEvent>,
    pub starter_code: Option<String>,
}

impl Session {
    pub fn new(subject_id: impl Into<String>, file_id: impl Into<String>, events: Vec<EditEvent>) -> Self {
        Session {
            subject_id: subject_id.into(),
            file_id: file_id.into(),
            events,
            starter_code: None,
        }
    }

    pub fn with_starter_code(mut self, starter: impl Into<String>) -> Self {
        self.starter_code = Some(starter.into());
        self
    }

    /// Stable identifier used for report file names.
    pub fn key(&self) -> String {
        format!("{}__{}", self.subject_id, self.file_id)
    }

    pub fn num_events(&self) -> usize {
        self.events.len()
    }

    /// Replays every event from the empty file. State `t` is the snapshot
    /// after event `t`.
    pub fn snapshots(&self) -> Result<Vec<Snapshot>, IngestError> {
        let mut out = Vec::with_capacity(self.events.len());
        let mut text: Vec<char> = Vec::new();
        for (t, ev) in self.events.iter().enumerate() {
            apply_in_place(&mut text, ev).map_err(|e| edit_to_ingest(e, ev.row.unwrap_or(t + 1)))?;
            out.push(Snapshot {
                state_index: t,
                text: text.clone(),
            });
        }
        Ok(out)
    }

    pub fn final_snapshot(&self) -> Result<Snapshot, IngestError> {
        let mut text: Vec<char> = Vec::new();
        for (t, ev) in self.events.iter().enumerate() {
            apply_in_place(&mut text, ev).map_err(|e| edit_to_ingest(e, ev.row.unwrap_or(t + 1)))?;
        }
        Ok(Snapshot {
            state_index: self.events.len().saturating_sub(1),
            text,
        })
    }

    /// The starter code used for paste suppression: the supplied one, or the
    /// first paste-sized insert among the first five events.
    pub fn starter_candidate(&self, paste_min: usize) -> Option<StarterCode> {
        if let Some(text) = &self.starter_code {
            return Some(StarterCode {
                text: text.clone(),
                heuristic: false,
            });
        }
        self.events
            .iter()
            .take(5)
            .find(|e| e.kind == EditKind::Insert && e.len() >= paste_min.max(2))
            .map(|e| StarterCode {
                text: e.text.clone(),
                heuristic: true,
            })
    }
}

fn edit_to_ingest(e: EditError, row: usize) -> IngestError {
    match e {
        EditError::DeleteMismatch { expected, found } => IngestError::DeleteMismatch { row, expected, found },
        other => IngestError::Edit { row, source: other },
    }
}

/// Reads a ProgSnap2-subset CSV log and groups it into sessions, one per
/// (subject, file), sorted by those keys.
pub fn ingest_log<R: Read>(source: R) -> Result<Vec<Session>, IngestError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(source);
    let headers = reader.headers()?.clone();
    let mut col = [0usize; COLUMNS.len()];
    for (slot, name) in col.iter_mut().zip(COLUMNS) {
        *slot = headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| IngestError::MalformedRow {
                row: 1,
                reason: format!("missing column {name}"),
            })?;
    }

    let mut groups: BTreeMap<(String, String), Vec<EditEvent>> = BTreeMap::new();
    for record in reader.records() {
        let record = record?;
        let row = record.position().map(|p| p.line() as usize).unwrap_or(0);
        let field = |i: usize| record.get(col[i]).unwrap_or("");
        let malformed = |reason: String| IngestError::MalformedRow { row, reason };

        if field(4) != "File.Edit" {
            return Err(malformed(format!("unsupported EventType {:?}", field(4))));
        }
        let order: i64 = field(1)
            .trim()
            .parse()
            .map_err(|_| malformed(format!("bad Order {:?}", field(1))))?;
        let index: usize = field(5)
            .trim()
            .parse()
            .map_err(|_| malformed(format!("bad SourceLocation {:?}", field(5))))?;
        let (insert, delete) = (field(7), field(8));
        let (kind, text) = match field(6) {
            "Insert" if !insert.is_empty() && delete.is_empty() => (EditKind::Insert, insert),
            "Delete" if !delete.is_empty() && insert.is_empty() => (EditKind::Delete, delete),
            "Insert" | "Delete" => {
                return Err(malformed(
                    "exactly one of InsertText/DeleteText must be non-empty and match EditType".into(),
                ))
            }
            other => return Err(malformed(format!("unsupported EditType {other:?}"))),
        };
        let timestamp = Some(field(9).trim()).filter(|s| !s.is_empty()).map(str::to_string);
        let ev = EditEvent {
            event_id: field(0).to_string(),
            order,
            subject_id: field(2).to_string(),
            file_id: field(3).to_string(),
            kind,
            index,
            text: text.to_string(),
            timestamp,
            row: Some(row),
        };
        groups
            .entry((ev.subject_id.clone(), ev.file_id.clone()))
            .or_default()
            .push(ev);
    }

    let mut sessions = Vec::with_capacity(groups.len());
    for ((subject, file), mut events) in groups {
        events.sort_by_key(|e| e.order);
        for pair in events.windows(2) {
            if pair[0].order == pair[1].order {
                return Err(IngestError::NonMonotonicOrder {
                    row: pair[1].row.unwrap_or(0),
                    order: pair[1].order,
                    file_id: file.clone(),
                });
            }
        }
        let session = Session::new(subject, file, events);
        // Validates every edit against the replayed text.
        session.final_snapshot()?;
        sessions.push(session);
    }
    Ok(sessions)
}

/// Writes sessions back out in the log format accepted by [`ingest_log`].
pub fn write_log<W: std::io::Write>(sessions: &[Session], sink: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(COLUMNS)?;
    for s in sessions {
        for e in &s.events {
            let (edit, ins, del) = match e.kind {
                EditKind::Insert => ("Insert", e.text.as_str(), ""),
                EditKind::Delete => ("Delete", "", e.text.as_str()),
            };
            w.write_record([
                e.event_id.as_str(),
                &e.order.to_string(),
                s.subject_id.as_str(),
                s.file_id.as_str(),
                "File.Edit",
                &e.index.to_string(),
                edit,
                ins,
                del,
                e.timestamp.as_deref().unwrap_or(""),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Why a session was dropped from analysis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "kebab-case")]
pub enum ExclusionReason {
    TooFewEvents { events: usize, min_events: usize },
    LowTreeCoverage { coverage: f64, min_tree_coverage: f64 },
}

impl ExclusionReason {
    pub fn code(&self) -> &'static str {
        match self {
            ExclusionReason::TooFewEvents { .. } => "too-few-events",
            ExclusionReason::LowTreeCoverage { .. } => "low-tree-coverage",
        }
    }
}

/// Anything the session filter can judge.
pub trait Filterable {
    fn event_count(&self) -> usize;
    /// Fraction of states with a tree; `None` before bridging has run.
    fn tree_coverage(&self) -> Option<f64> {
        None
    }
}

impl Filterable for Session {
    fn event_count(&self) -> usize {
        self.events.len()
    }
}

#[derive(Debug, Clone)]
pub struct Excluded<T> {
    pub item: T,
    pub reason: ExclusionReason,
}

/// Splits `items` into kept and excluded. Sessions with at least
/// `min_events` events are kept; when `min_tree_coverage` is given, items
/// reporting a coverage below it are excluded too.
pub fn filter_sessions<T: Filterable>(
    items: Vec<T>,
    min_events: usize,
    min_tree_coverage: Option<f64>,
) -> (Vec<T>, Vec<Excluded<T>>) {
    let mut kept = Vec::new();
    let mut excluded = Vec::new();
    for item in items {
        let events = item.event_count();
        if events < min_events {
            excluded.push(Excluded {
                item,
                reason: ExclusionReason::TooFewEvents { events, min_events },
            });
            continue;
        }
        if let (Some(min), Some(coverage)) = (min_tree_coverage, item.tree_coverage()) {
            if coverage < min {
                excluded.push(Excluded {
                    item,
                    reason: ExclusionReason::LowTreeCoverage {
                        coverage,
                        min_tree_coverage: min,
                    },
                });
                continue;
            }
        }
        kept.push(item);
    }
    (kept, excluded)
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str =
        "EventID,Order,SubjectID,CodeStateSection,EventType,SourceLocation,EditType,InsertText,DeleteText,ClientTimestamp\n";

    fn contents(s: &Session) -> Vec<String> {
        s.snapshots().unwrap().iter().map(Snapshot::content).collect()
    }

    #[test]
    fn two_inserts_replay() {
        let csv = format!(
            "{HEADER}1,1,s1,a.py,File.Edit,0,Insert,ab,,\n2,2,s1,a.py,File.Edit,1,Insert,c,,\n"
        );
        let sessions = ingest_log(csv.as_bytes()).unwrap();
        assert_eq!(sessions.len(), 1);
        assert_eq!(contents(&sessions[0]), ["ab", "acb"]);
    }

    #[test]
    fn delete_after_inserts() {
        let csv = format!(
            "{HEADER}1,1,s1,a.py,File.Edit,0,Insert,ab,,\n2,2,s1,a.py,File.Edit,1,Insert,c,,\n3,3,s1,a.py,File.Edit,1,Delete,,c,\n"
        );
        let s = &ingest_log(csv.as_bytes()).unwrap()[0];
        assert_eq!(s.final_snapshot().unwrap().content(), "ab");
        let csv = format!(
            "{HEADER}1,1,s1,a.py,File.Edit,0,Insert,ab,,\n2,2,s1,a.py,File.Edit,1,Insert,c,,\n3,3,s1,a.py,File.Edit,2,Delete,,b,\n"
        );
        let s = &ingest_log(csv.as_bytes()).unwrap()[0];
        assert_eq!(s.final_snapshot().unwrap().content(), "ac");
    }

    #[test]
    fn delete_mismatch_names_row() {
        let csv = format!("{HEADER}1,1,s1,a.py,File.Edit,0,Insert,ab,,\n2,2,s1,a.py,File.Edit,0,Delete,,b,\n");
        match ingest_log(csv.as_bytes()) {
            Err(IngestError::DeleteMismatch { row, expected, found }) => {
                assert_eq!(row, 3);
                assert_eq!(expected, "b");
                assert_eq!(found, "a");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn duplicate_order_rejected() {
        let csv = format!("{HEADER}1,1,s1,a.py,File.Edit,0,Insert,a,,\n2,1,s1,a.py,File.Edit,0,Insert,b,,\n");
        assert!(matches!(
            ingest_log(csv.as_bytes()),
            Err(IngestError::NonMonotonicOrder { order: 1, .. })
        ));
    }

    #[test]
    fn out_of_order_rows_are_sorted() {
        let csv = format!("{HEADER}2,2,s1,a.py,File.Edit,1,Insert,b,,\n1,1,s1,a.py,File.Edit,0,Insert,a,,\n");
        let s = &ingest_log(csv.as_bytes()).unwrap()[0];
        assert_eq!(s.final_snapshot().unwrap().content(), "ab");
    }

    #[test]
    fn malformed_rows() {
        let missing = "EventID,Order\n1,1\n";
        assert!(matches!(ingest_log(missing.as_bytes()), Err(IngestError::MalformedRow { row: 1, .. })));
        let bad_index = format!("{HEADER}1,1,s1,a.py,File.Edit,x,Insert,a,,\n");
        assert!(matches!(ingest_log(bad_index.as_bytes()), Err(IngestError::MalformedRow { row: 2, .. })));
        let both = format!("{HEADER}1,1,s1,a.py,File.Edit,0,Insert,a,b,\n");
        assert!(matches!(ingest_log(both.as_bytes()), Err(IngestError::MalformedRow { .. })));
        let compile = format!("{HEADER}1,1,s1,a.py,Compile,0,Insert,a,,\n");
        assert!(matches!(ingest_log(compile.as_bytes()), Err(IngestError::MalformedRow { .. })));
    }

    #[test]
    fn quoted_fields_and_code_points() {
        let csv = format!(
            "{HEADER}1,1,s1,a.py,File.Edit,0,Insert,\"print(\"\"é,\"\")\n\",,\n2,2,s1,a.py,File.Edit,9,Insert,x,,2024-01-01T00:00:00Z\n"
        );
        let s = &ingest_log(csv.as_bytes()).unwrap()[0];
        assert_eq!(s.final_snapshot().unwrap().content(), "print(\"é,x\")\n");
        assert_eq!(s.events[1].timestamp.as_deref(), Some("2024-01-01T00:00:00Z"));
    }

    #[test]
    fn groups_by_subject_and_file() {
        let csv = format!(
            "{HEADER}1,1,s2,a.py,File.Edit,0,Insert,a,,\n2,2,s1,b.py,File.Edit,0,Insert,b,,\n3,3,s1,a.py,File.Edit,0,Insert,c,,\n"
        );
        let keys: Vec<String> = ingest_log(csv.as_bytes()).unwrap().iter().map(Session::key).collect();
        assert_eq!(keys, ["s1__a.py", "s1__b.py", "s2__a.py"]);
    }

    #[test]
    fn apply_edit_examples() {
        let s = Snapshot::from_str(0, "abcd");
        assert_eq!(apply_edit(&s, &EditEvent::insert(1, 2, "xy")).unwrap().content(), "abxycd");
        assert_eq!(s.content(), "abcd");
        let s = Snapshot::from_str(0, "abcde");
        assert_eq!(apply_edit(&s, &EditEvent::delete(1, 1, "bc")).unwrap().content(), "ade");
        assert_eq!(apply_edit(&Snapshot::empty(), &EditEvent::insert(1, 0, "z")).unwrap().content(), "z");
        assert!(matches!(
            apply_edit(&Snapshot::empty(), &EditEvent::insert(1, 1, "z")),
            Err(EditError::OutOfBounds { .. })
        ));
        assert!(matches!(
            apply_edit(&Snapshot::from_str(0, "ab"), &EditEvent::delete(1, 1, "bc")),
            Err(EditError::OutOfBounds { .. })
        ));
    }

    #[test]
    fn write_then_ingest_preserves_snapshots() {
        let s = Session::new(
            "u",
            "f.py",
            vec![
                EditEvent::insert(1, 0, "a,\"b\"\n"),
                EditEvent::insert(2, 1, "é"),
                EditEvent::delete(3, 0, "aé"),
            ],
        );
        let mut buf = Vec::new();
        write_log(std::slice::from_ref(&s), &mut buf).unwrap();
        let back = ingest_log(buf.as_slice()).unwrap();
        assert_eq!(contents(&back[0]), contents(&s));
    }

    struct Fake(usize, Option<f64>);
    impl Filterable for Fake {
        fn event_count(&self) -> usize {
            self.0
        }
        fn tree_coverage(&self) -> Option<f64> {
            self.1
        }
    }

    #[test]
    fn filter_thresholds() {
        let (kept, excluded) = filter_sessions(vec![Fake(250, None)], 300, Some(0.8));
        assert!(kept.is_empty());
        assert_eq!(excluded[0].reason.code(), "too-few-events");

        let (kept, excluded) = filter_sessions(vec![Fake(400, Some(0.79))], 300, Some(0.8));
        assert!(kept.is_empty());
        assert_eq!(excluded[0].reason.code(), "low-tree-coverage");

        let (kept, excluded) = filter_sessions(vec![Fake(300, Some(1.0))], 300, Some(0.8));
        assert_eq!(kept.len(), 1);
        assert!(excluded.is_empty());

        let (kept, _) = filter_sessions(vec![Fake(0, None)], 0, None);
        assert_eq!(kept.len(), 1);
    }

    #[test]
    fn heuristic_starter() {
        let s = Session::new(
            "u",
            "f",
            vec![EditEvent::insert(1, 0, "p"), EditEvent::insert(2, 1, "rint('hi')\n")],
        );
        let starter = s.starter_candidate(2).unwrap();
        assert!(starter.heuristic);
        assert_eq!(starter.text, "rint('hi')\n");
        let provided = s.clone().with_starter_code("x = 1");
        assert!(!provided.starter_candidate(2).unwrap().heuristic);
    }
}
