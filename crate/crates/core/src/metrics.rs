//! Process measures over lineages and trees.

use serde::Serialize;

use crate::analysis::{SessionAnalysis, Touch};
use crate::grammar::{Construct, Tree, TreeKind};
use crate::tracking::{Lineage, NodeRef};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeletionStats {
    pub num_nodes: usize,
    pub num_deleted: usize,
    /// Absent when there are no nodes in scope.
    pub rate: Option<f64>,
}

impl DeletionStats {
    pub fn new(num_nodes: usize, num_deleted: usize) -> Self {
        DeletionStats {
            num_nodes,
            num_deleted,
            rate: (num_nodes > 0).then(|| num_deleted as f64 / num_nodes as f64),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scope {
    Program,
    /// Lineages with an instance inside the body of the construct.
    Inside(Construct),
    Outside(Construct),
    /// Lineages with an instance strictly below an instance of this lineage.
    Subtree(u32),
}

/// Per lineage: whether some instance sits under a body node that itself
/// has an ancestor of the construct. One top-down pass per tree.
fn inside_flags(a: &SessionAnalysis, c: Construct) -> Vec<bool> {
    let labels = a.grammar.labels();
    let set = labels.construct(c);
    let mut flags = vec![false; a.tracking.lineages().len()];
    for t in 0..a.num_states() {
        let Some(tree) = a.tree(t) else { continue };
        // (has construct ancestor, inside)
        let mut st: Vec<(bool, bool)> = vec![(false, false); tree.len()];
        for (id, node) in tree.nodes().iter().enumerate() {
            if let Some(p) = node.parent {
                let p = p as usize;
                let pl = tree.node(p).label;
                let (pc, pin) = st[p];
                st[id] = (pc || set.contains(&pl), pin || (pc && labels.is_body(pl)));
            }
            if st[id].1 {
                if let Some(l) = a.tracking.lineage_id(NodeRef::new(t, id)) {
                    flags[l as usize] = true;
                }
            }
        }
    }
    flags
}

fn subtree_flags(a: &SessionAnalysis, root: u32) -> Vec<bool> {
    let mut flags = vec![false; a.tracking.lineages().len()];
    for t in 0..a.num_states() {
        let Some(tree) = a.tree(t) else { continue };
        let mut below = vec![false; tree.len()];
        for (id, node) in tree.nodes().iter().enumerate() {
            if let Some(p) = node.parent {
                let p = p as usize;
                below[id] = below[p] || a.tracking.lineage_id(NodeRef::new(t, p)) == Some(root);
            }
            if below[id] {
                if let Some(l) = a.tracking.lineage_id(NodeRef::new(t, id)) {
                    flags[l as usize] = true;
                }
            }
        }
    }
    flags
}

fn scope_flags(a: &SessionAnalysis, scope: Scope) -> Vec<bool> {
    match scope {
        Scope::Program => vec![true; a.tracking.lineages().len()],
        Scope::Inside(c) => inside_flags(a, c),
        Scope::Outside(c) => inside_flags(a, c).into_iter().map(|f| !f).collect(),
        Scope::Subtree(root) => subtree_flags(a, root),
    }
}

fn rate_where(a: &SessionAnalysis, keep: impl Fn(usize) -> bool) -> DeletionStats {
    let mut nodes = 0;
    let mut deleted = 0;
    for (i, lin) in a.tracking.lineages().iter().enumerate() {
        if keep(i) {
            nodes += 1;
            deleted += usize::from(is_deleted(a, lin));
        }
    }
    DeletionStats::new(nodes, deleted)
}

/// A lineage counts as deleted when the last tree of the session holds no
/// instance of it.
pub fn is_deleted(a: &SessionAnalysis, lin: &Lineage) -> bool {
    match a.final_tree_state() {
        Some(f) => lin.last_state() != f,
        None => false,
    }
}

pub fn node_deletion_rate(a: &SessionAnalysis, scope: Scope) -> DeletionStats {
    let flags = scope_flags(a, scope);
    rate_where(a, |i| flags[i])
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstructDeletion {
    pub construct: Construct,
    pub inside: DeletionStats,
    pub outside: DeletionStats,
}

pub fn deletion_by_construct(a: &SessionAnalysis) -> Vec<ConstructDeletion> {
    Construct::ALL
        .iter()
        .map(|&c| {
            let flags = inside_flags(a, c);
            ConstructDeletion {
                construct: c,
                inside: rate_where(a, |i| flags[i]),
                outside: rate_where(a, |i| !flags[i]),
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LifetimeRecord {
    pub lineage_id: u32,
    pub lifetime_fraction: f64,
}

pub fn node_lifetimes(a: &SessionAnalysis) -> Vec<LifetimeRecord> {
    let total = a.states_with_trees().max(1) as f64;
    a.tracking
        .lineages()
        .iter()
        .map(|l| LifetimeRecord {
            lineage_id: l.lineage_id,
            lifetime_fraction: l.instances.len() as f64 / total,
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct JumpRecord {
    pub edit_state: usize,
    /// Path length to the previously edited leaf; absent when either end has
    /// no place in the current tree.
    pub distance: Option<usize>,
    pub skipped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContextSwitches {
    pub threshold: usize,
    pub frequency: Option<f64>,
    pub jumps: Vec<JumpRecord>,
}

/// |{d ≥ threshold}| / |{d ≥ 1}| over measured distances.
pub fn switch_frequency(jumps: &[JumpRecord], threshold: usize) -> Option<f64> {
    let moved = jumps.iter().filter_map(|j| j.distance).filter(|&d| d >= 1).count();
    if moved == 0 {
        return None;
    }
    let far = jumps
        .iter()
        .filter_map(|j| j.distance)
        .filter(|&d| d >= threshold.max(1))
        .count();
    Some(far as f64 / moved as f64)
}

pub fn jump_records(a: &SessionAnalysis) -> Vec<JumpRecord> {
    let mut out = Vec::new();
    let mut prev: Option<NodeRef> = None;
    for (t, touch) in a.touches().into_iter().enumerate() {
        match touch {
            Touch::Skipped => out.push(JumpRecord {
                edit_state: t,
                distance: None,
                skipped: true,
            }),
            Touch::Untracked => out.push(JumpRecord {
                edit_state: t,
                distance: None,
                skipped: false,
            }),
            Touch::Node { leaf, current, .. } => {
                let distance = match (current, prev) {
                    (Some(cur), Some(p)) => a
                        .image_at(p, t)
                        .map(|img| a.tree(t).unwrap().path_length(cur.node as usize, img.node as usize)),
                    _ => None,
                };
                out.push(JumpRecord {
                    edit_state: t,
                    distance,
                    skipped: false,
                });
                prev = Some(leaf);
            }
        }
    }
    out
}

pub fn context_switch_frequency(a: &SessionAnalysis, threshold: usize) -> ContextSwitches {
    let jumps = jump_records(a);
    ContextSwitches {
        threshold,
        frequency: switch_frequency(&jumps, threshold),
        jumps,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TreeSizePoint {
    pub state: usize,
    /// Absent where no tree exists.
    pub node_count: Option<usize>,
    pub kind: TreeKind,
}

pub fn tree_size_series(a: &SessionAnalysis) -> Vec<TreeSizePoint> {
    a.versions
        .iter()
        .map(|v| TreeSizePoint {
            state: v.state_index,
            node_count: v.tree.as_ref().map(Tree::len),
            kind: v.kind,
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CommentRestoration {
    pub commented: usize,
    pub restored: usize,
    pub commented_fraction: Option<f64>,
    pub restored_fraction: Option<f64>,
}

/// Lineages whose code was commented out at some point, and how many of
/// those reappear as code afterwards.
pub fn comment_restoration_stats(a: &SessionAnalysis) -> CommentRestoration {
    let mut commented_at: Vec<Option<usize>> = vec![None; a.tracking.lineages().len()];
    for c in &a.comment_outs {
        for &n in &c.nodes {
            if let Some(id) = a.tracking.lineage_id(n) {
                commented_at[id as usize].get_or_insert(c.state);
            }
        }
    }
    let mut commented = 0;
    let mut restored = 0;
    for (lin, at) in a.tracking.lineages().iter().zip(&commented_at) {
        if let Some(s) = at {
            commented += 1;
            restored += usize::from(lin.last_state() >= *s);
        }
    }
    let total = a.tracking.lineages().len();
    CommentRestoration {
        commented,
        restored,
        commented_fraction: (total > 0).then(|| commented as f64 / total as f64),
        restored_fraction: (commented > 0).then(|| restored as f64 / commented as f64),
    }
}
