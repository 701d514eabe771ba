//! The per-session pipeline: replay, parse, track, bridge, track again.

use std::sync::Arc;

use crate::bridging::{bridge_session, coverage_stats, BridgeInput, BridgeOutcome, CoverageStats};
use crate::correspondence::{CharRange, Correspondences};
use crate::error::AnalysisError;
use crate::grammar::{GrammarAdapter, SpanMap, Tree, TreeKind, TreeVersion};
use crate::session::{EditKind, Session};
use crate::tracking::{track_all, NodeRef, TrackInput, Tracking};

/// Nodes of the tree at `state − 1` whose code went into a comment at `state`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommentOut {
    pub state: usize,
    pub nodes: Vec<NodeRef>,
    /// Hull of the commented characters at `state`.
    pub span: CharRange,
}

/// What one edit touched, as seen by the jump and renaming measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Touch {
    /// Only whitespace or comment text changed.
    Skipped,
    /// Code changed but no tree covers it.
    Untracked,
    Node {
        /// The touched leaf: at the edit's state for inserts, at the state
        /// before for deletes.
        leaf: NodeRef,
        lineage: u32,
        /// The leaf (or its nearest surviving ancestor) in the edit's tree.
        current: Option<NodeRef>,
    },
}

pub struct SessionAnalysis {
    pub session: Session,
    pub grammar: Arc<dyn GrammarAdapter>,
    pub texts: Vec<Vec<char>>,
    pub spans: Vec<SpanMap>,
    pub correspondences: Correspondences,
    pub versions: Vec<TreeVersion>,
    pub bridge_outcomes: Vec<BridgeOutcome>,
    pub coverage: CoverageStats,
    pub tracking: Tracking,
    pub comment_outs: Vec<CommentOut>,
}

pub fn analyze_session(session: &Session, grammar: Arc<dyn GrammarAdapter>) -> Result<SessionAnalysis, AnalysisError> {
    let texts: Vec<Vec<char>> = session.snapshots()?.into_iter().map(|s| s.text).collect();
    let correspondences = Correspondences::from_events(&session.events)?;
    let spans: Vec<SpanMap> = texts.iter().map(|t| grammar.scan_spans(t)).collect();
    let parsed = texts
        .iter()
        .map(|t| grammar.parse(t))
        .collect::<Result<Vec<Option<Tree>>, _>>()?;

    let parsed_refs: Vec<Option<&Tree>> = parsed.iter().map(|t| t.as_ref()).collect();
    let parsed_links = track_all(TrackInput {
        trees: &parsed_refs,
        spans: &spans,
        correspondences: &correspondences,
    })?;
    let mut bridged = bridge_session(&BridgeInput {
        texts: &texts,
        spans: &spans,
        parsed: &parsed,
        correspondences: &correspondences,
        parsed_links: &parsed_links,
    });
    drop(parsed_refs);
    drop(parsed_links);

    let versions: Vec<TreeVersion> = parsed
        .into_iter()
        .enumerate()
        .map(|(t, p)| match p {
            Some(tree) => TreeVersion::parsed(t, tree),
            None => match bridged.trees.remove(&t) {
                Some(b) => TreeVersion::bridging(t, b.tree),
                None => TreeVersion::absent(t),
            },
        })
        .collect();
    let kinds: Vec<TreeKind> = versions.iter().map(|v| v.kind).collect();
    let coverage = coverage_stats(&kinds, &bridged.outcomes);
    let refs: Vec<Option<&Tree>> = versions.iter().map(|v| v.tree.as_ref()).collect();
    let tracking = track_all(TrackInput {
        trees: &refs,
        spans: &spans,
        correspondences: &correspondences,
    })?;
    let comment_outs = find_comment_outs(&refs, &spans, &correspondences);
    drop(refs);
    Ok(SessionAnalysis {
        session: session.clone(),
        grammar,
        texts,
        spans,
        correspondences,
        versions,
        bridge_outcomes: bridged.outcomes,
        coverage,
        tracking,
        comment_outs,
    })
}

/// States where code characters of the previous tree survive only inside
/// comments: every node whose surviving code characters all sit in a
/// comment is reported.
fn find_comment_outs(trees: &[Option<&Tree>], spans: &[SpanMap], corr: &Correspondences) -> Vec<CommentOut> {
    let mut out = Vec::new();
    for t in 1..trees.len() {
        let Some(prev) = trees[t - 1] else { continue };
        let arr = corr.arrays()[t].values();
        let prev_len = spans[t - 1].len();
        // Previous position -> current position.
        let mut fwd = vec![-1i64; prev_len];
        let mut newly_commented = false;
        for (j, &p) in arr.iter().enumerate() {
            if p >= 0 && (p as usize) < prev_len {
                fwd[p as usize] = j as i64;
                if spans[t].is_comment(j) && spans[t - 1].is_code(p as usize) {
                    newly_commented = true;
                }
            }
        }
        if !newly_commented {
            continue;
        }
        let mut nodes = Vec::new();
        let mut hull: Option<(usize, usize)> = None;
        for (id, node) in prev.nodes().iter().enumerate().skip(1) {
            let r = node.range;
            let mut any = false;
            let mut all = true;
            for p in r.start..r.end {
                if !spans[t - 1].is_code(p) {
                    continue;
                }
                let q = fwd[p];
                if q < 0 {
                    continue;
                }
                if spans[t].is_comment(q as usize) {
                    any = true;
                } else {
                    all = false;
                    break;
                }
            }
            if any && all {
                nodes.push(NodeRef::new(t - 1, id));
                if node.is_leaf() {
                    for p in r.start..r.end {
                        let q = fwd[p];
                        if q >= 0 {
                            let q = q as usize;
                            hull = Some(hull.map_or((q, q + 1), |(a, b)| (a.min(q), b.max(q + 1))));
                        }
                    }
                }
            }
        }
        if let (false, Some((a, b))) = (nodes.is_empty(), hull) {
            out.push(CommentOut {
                state: t,
                nodes,
                span: CharRange::new(a, b),
            });
        }
    }
    out
}

impl SessionAnalysis {
    pub fn num_states(&self) -> usize {
        self.texts.len()
    }

    pub fn tree(&self, state: usize) -> Option<&Tree> {
        self.versions.get(state)?.tree.as_ref()
    }

    pub fn text(&self, state: usize, range: CharRange) -> String {
        self.texts[state][range.start..range.end].iter().collect()
    }

    pub fn node_text(&self, r: NodeRef) -> String {
        let range = self.tree(r.state).expect("node in a tree").node(r.node as usize).range;
        self.text(r.state, range)
    }

    pub fn label(&self, r: NodeRef) -> &'static str {
        self.tree(r.state).expect("node in a tree").node(r.node as usize).label
    }

    /// The last state that has a tree.
    pub fn final_tree_state(&self) -> Option<usize> {
        (0..self.num_states()).rev().find(|&t| self.tree(t).is_some())
    }

    pub fn states_with_trees(&self) -> usize {
        self.versions.iter().filter(|v| v.tree.is_some()).count()
    }

    /// `r`, or its nearest ancestor, as an instance in the tree at `state`.
    pub fn image_at(&self, r: NodeRef, state: usize) -> Option<NodeRef> {
        let tree = self.tree(r.state)?;
        std::iter::once(r.node as usize)
            .chain(tree.ancestors(r.node as usize))
            .find_map(|id| self.tracking.lineage(NodeRef::new(r.state, id))?.at(state))
    }

    /// One entry per event.
    pub fn touches(&self) -> Vec<Touch> {
        let events = &self.session.events;
        let mut out = Vec::with_capacity(events.len());
        for (t, ev) in events.iter().enumerate() {
            let touch = match ev.kind {
                EditKind::Insert => {
                    let spans = &self.spans[t];
                    match (ev.index..ev.index + ev.len()).find(|&j| spans.is_code(j)) {
                        None => Touch::Skipped,
                        Some(j) => match self.tree(t).and_then(|tr| tr.leaf_at(j)) {
                            None => Touch::Untracked,
                            Some(leaf) => {
                                let leaf = NodeRef::new(t, leaf);
                                Touch::Node {
                                    leaf,
                                    lineage: self.tracking.lineage_id(leaf).unwrap(),
                                    current: Some(leaf),
                                }
                            }
                        },
                    }
                }
                EditKind::Delete => {
                    let prev_spans = (t > 0).then(|| &self.spans[t - 1]);
                    let first = prev_spans.and_then(|s| (ev.index..ev.index + ev.len()).find(|&j| s.is_code(j)));
                    match first {
                        None => Touch::Skipped,
                        Some(j) => match self.tree(t - 1).and_then(|tr| tr.leaf_at(j)) {
                            None => Touch::Untracked,
                            Some(leaf) => {
                                let leaf = NodeRef::new(t - 1, leaf);
                                Touch::Node {
                                    leaf,
                                    lineage: self.tracking.lineage_id(leaf).unwrap(),
                                    current: self.image_at(leaf, t),
                                }
                            }
                        },
                    }
                }
            };
            out.push(touch);
        }
        out
    }
}
