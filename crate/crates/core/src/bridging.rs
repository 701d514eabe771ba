//! Bridging parse trees for unparseable states, built from the previous
//! tree and the next parseable tree.

use std::collections::{BTreeMap, HashMap};

use serde::Serialize;

use crate::correspondence::{CharRange, Correspondences};
use crate::grammar::{Built, NodeKind, NodeUid, ParseNode, SpanMap, Tree, TreeKind, TRANSIENT_LABEL};
use crate::tracking::{NodeRef, Tracking};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BridgeFailure {
    /// The first state is unparseable, so there is no tree to copy.
    NoPredecessor,
    OverlappingSubtree,
    AncestorWithoutAnchor,
    RangeInconsistency,
    /// An earlier state of the same unparseable stretch failed.
    Chained,
}

impl BridgeFailure {
    pub fn code(self) -> &'static str {
        match self {
            BridgeFailure::NoPredecessor => "no-predecessor",
            BridgeFailure::OverlappingSubtree => "overlapping-subtree",
            BridgeFailure::AncestorWithoutAnchor => "ancestor-without-anchor",
            BridgeFailure::RangeInconsistency => "range-inconsistency",
            BridgeFailure::Chained => "chained",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "status", content = "reason", rename_all = "lowercase")]
pub enum BridgeStatus {
    Built,
    Failed(BridgeFailure),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BridgeOutcome {
    pub state_index: usize,
    pub status: BridgeStatus,
    pub diagnostics: Vec<String>,
}

/// A bridging tree plus, for every node in preorder, the parsed-tree node
/// it was copied from (`None` for transient nodes).
#[derive(Debug, Clone)]
pub struct BridgeTree {
    pub tree: Tree,
    pub origins: Vec<Option<NodeRef>>,
}

/// Everything bridging reads for one session.
pub struct BridgeInput<'a> {
    pub texts: &'a [Vec<char>],
    pub spans: &'a [SpanMap],
    /// Parsed trees by state; `None` where the grammar rejected the text.
    pub parsed: &'a [Option<Tree>],
    pub correspondences: &'a Correspondences,
    /// Links among parsed trees only.
    pub parsed_links: &'a Tracking,
}

#[derive(Debug, Clone, Default)]
pub struct BridgeRun {
    /// One entry per unparseable state.
    pub outcomes: Vec<BridgeOutcome>,
    pub trees: BTreeMap<usize, BridgeTree>,
}

/// Context for one bridging step.
struct Step<'a> {
    t: usize,
    len: usize,
    spans: &'a SpanMap,
    /// State t−1 position → state t position.
    from_prev: Vec<i32>,
    next: Option<NextTree<'a>>,
}

struct NextTree<'a> {
    state: usize,
    tree: &'a Tree,
    /// State t position → next parsed position.
    forward: Vec<i32>,
    /// Next parsed position → state t position.
    backward: Vec<i32>,
}

struct BNode {
    label: &'static str,
    kind: NodeKind,
    parent: Option<usize>,
    children: Vec<usize>,
    /// Leaves only: owned positions at state t, ascending.
    chars: Vec<usize>,
    origin: Option<NodeRef>,
}

struct Build {
    nodes: Vec<BNode>,
    owner: Vec<Option<usize>>,
    by_origin: HashMap<NodeRef, usize>,
}

impl Build {
    fn push(&mut self, node: BNode) -> usize {
        let id = self.nodes.len();
        if let Some(o) = node.origin {
            self.by_origin.insert(o, id);
        }
        for &c in &node.chars {
            self.owner[c] = Some(id);
        }
        self.nodes.push(node);
        id
    }

    fn start(&self, id: usize) -> Option<usize> {
        let n = &self.nodes[id];
        if n.kind.is_leaf() {
            return n.chars.first().copied();
        }
        n.children.iter().find_map(|&c| self.start(c))
    }

    fn hull(&self, id: usize) -> Option<(usize, usize)> {
        let n = &self.nodes[id];
        if n.kind.is_leaf() {
            return Some((*n.chars.first()?, *n.chars.last()? + 1));
        }
        let lo = n.children.iter().find_map(|&c| self.hull(c))?.0;
        let hi = n.children.iter().rev().find_map(|&c| self.hull(c))?.1;
        Some((lo, hi))
    }

    fn attach(&mut self, parent: usize, child: usize) {
        let start = self.start(child);
        let pos = self.nodes[parent]
            .children
            .iter()
            .position(|&c| match (self.start(c), start) {
                (Some(a), Some(b)) => a > b,
                _ => false,
            })
            .unwrap_or(self.nodes[parent].children.len());
        self.nodes[parent].children.insert(pos, child);
        self.nodes[child].parent = Some(parent);
    }

    fn host_of(&self, id: usize) -> usize {
        if self.nodes[id].kind.is_leaf() {
            self.nodes[id].parent.unwrap_or(0)
        } else {
            id
        }
    }

    /// Deepest internal node whose hull contains `range`.
    fn deepest_container(&self, range: (usize, usize)) -> usize {
        let mut cur = 0;
        loop {
            let next = self.nodes[cur].children.iter().copied().find(|&c| {
                !self.nodes[c].kind.is_leaf()
                    && self.hull(c).is_some_and(|(a, b)| a <= range.0 && range.1 <= b)
            });
            match next {
                Some(c) => cur = c,
                None => return cur,
            }
        }
    }

    fn finish(&self, len: usize) -> (Built, Vec<Option<NodeRef>>) {
        let mut origins = Vec::new();
        let root = self.nodes[0].children.iter().filter_map(|&c| self.finish_node(c)).collect::<Vec<_>>();
        let built = Built {
            label: self.nodes[0].label,
            range: CharRange::new(0, len),
            kind: NodeKind::Internal,
            children: root,
        };
        // Origins follow the same preorder as the flattened tree.
        fn collect(b: &Build, id: usize, out: &mut Vec<Option<NodeRef>>) -> bool {
            let n = &b.nodes[id];
            if n.kind.is_leaf() {
                if n.chars.is_empty() {
                    return false;
                }
                out.push(n.origin);
                return true;
            }
            let mark = out.len();
            out.push(n.origin);
            let mut any = false;
            for &c in &n.children {
                any |= collect(b, c, out);
            }
            if !any && id != 0 {
                out.truncate(mark);
            }
            any || id == 0
        }
        collect(self, 0, &mut origins);
        (built, origins)
    }

    fn finish_node(&self, id: usize) -> Option<Built> {
        let n = &self.nodes[id];
        if n.kind.is_leaf() {
            let (a, b) = (*n.chars.first()?, *n.chars.last()? + 1);
            return Some(Built {
                label: n.label,
                range: CharRange::new(a, b),
                kind: n.kind,
                children: Vec::new(),
            });
        }
        let children: Vec<Built> = n.children.iter().filter_map(|&c| self.finish_node(c)).collect();
        if children.is_empty() {
            return None;
        }
        Some(Built::internal(n.label, children))
    }
}

fn invert(backward: &[i32], len: usize) -> Vec<i32> {
    let mut fwd = vec![-1; len];
    for (i, &p) in backward.iter().enumerate() {
        // The end sentinel maps past the last character.
        if p >= 0 && (p as usize) < len {
            fwd[p as usize] = i as i32;
        }
    }
    fwd
}

/// Builds the tree for unparseable state `step.t` from the tree at t−1.
fn build_step(
    step: &Step<'_>,
    prev: &Tree,
    prev_origins: &[Option<NodeRef>],
    links: &Tracking,
    diagnostics: &mut Vec<String>,
) -> Result<BridgeTree, BridgeFailure> {
    let t = step.t;
    let spans = step.spans;
    let mut b = Build {
        nodes: Vec::with_capacity(prev.len() + 8),
        owner: vec![None; step.len],
        by_origin: HashMap::new(),
    };

    // Copy of the previous tree in state-t coordinates, minus characters
    // that are gone or no longer code.
    let mut ids = vec![0usize; prev.len()];
    for (i, n) in prev.nodes().iter().enumerate() {
        let chars = if n.is_leaf() {
            (n.range.start..n.range.end)
                .filter_map(|p| {
                    let q = *step.from_prev.get(p)?;
                    (q >= 0 && spans.is_code(q as usize)).then_some(q as usize)
                })
                .collect()
        } else {
            Vec::new()
        };
        let id = b.push(BNode {
            label: n.label,
            kind: n.kind,
            parent: n.parent.map(|p| ids[p as usize]),
            children: Vec::new(),
            chars,
            origin: prev_origins[i],
        });
        ids[i] = id;
        if let Some(p) = n.parent {
            b.nodes[ids[p as usize]].children.push(id);
        }
    }

    // Characters new at t (or no longer owned) that are code.
    let uncovered = |b: &Build, j: usize| spans.is_code(j) && b.owner[j].is_none();

    if let Some(next) = &step.next {
        for j in 0..step.len {
            if !uncovered(&b, j) {
                continue;
            }
            let fj = next.forward[j];
            if fj < 0 {
                continue;
            }
            let Some(leaf) = next.tree.leaf_at(fj as usize) else {
                continue;
            };
            insert_corresponding(&mut b, step, next, leaf, links, diagnostics)?;
        }
    }

    // Remaining new characters inside an existing leaf's extent join that
    // leaf; the rest become transient leaves.
    for id in 0..b.nodes.len() {
        if !b.nodes[id].kind.is_leaf() || b.nodes[id].chars.is_empty() {
            continue;
        }
        let (lo, hi) = (b.nodes[id].chars[0], *b.nodes[id].chars.last().unwrap());
        let extra: Vec<usize> = (lo + 1..hi).filter(|&j| uncovered(&b, j)).collect();
        if !extra.is_empty() {
            for &j in &extra {
                b.owner[j] = Some(id);
            }
            b.nodes[id].chars.extend(extra);
            b.nodes[id].chars.sort_unstable();
        }
    }
    let mut runs: Vec<(usize, usize)> = Vec::new();
    for j in 0..step.len {
        if uncovered(&b, j) {
            match runs.last_mut() {
                Some(r) if r.1 == j => r.1 = j + 1,
                _ => runs.push((j, j + 1)),
            }
        }
    }
    if !runs.is_empty() {
        let starts: Vec<Option<usize>> = (0..b.nodes.len()).map(|id| b.start(id)).collect();
        let depth = |b: &Build, mut id: usize| {
            let mut d = 0;
            while let Some(p) = b.nodes[id].parent {
                id = p;
                d += 1;
            }
            d
        };
        for (j0, j1) in runs {
            let p = (1..starts.len())
                .filter_map(|id| starts[id].filter(|&s| s >= j0).map(|s| (s, depth(&b, id), id)))
                .min()
                .map(|(_, _, id)| id);
            let leaf = b.push(BNode {
                label: TRANSIENT_LABEL,
                kind: NodeKind::Transient,
                parent: None,
                children: Vec::new(),
                chars: (j0..j1).collect(),
                origin: None,
            });
            match p {
                Some(p) => {
                    let parent = b.nodes[p].parent.unwrap_or(0);
                    let pos = b.nodes[parent].children.iter().position(|&c| c == p).unwrap();
                    b.nodes[parent].children.insert(pos, leaf);
                    b.nodes[leaf].parent = Some(parent);
                }
                None => {
                    b.nodes[0].children.push(leaf);
                    b.nodes[leaf].parent = Some(0);
                }
            }
        }
    }

    let (built, origins) = b.finish(step.len);
    let tree = Tree::from_built(built);
    debug_assert_eq!(tree.len(), origins.len());
    if let Err(msg) = tree.check_structure() {
        diagnostics.push(format!("state {t}: {msg}"));
        return Err(if msg.contains("overlaps") {
            BridgeFailure::OverlappingSubtree
        } else {
            BridgeFailure::RangeInconsistency
        });
    }
    Ok(BridgeTree { tree, origins })
}

/// Inserts the part of a next-tree subtree that already exists at t.
fn insert_corresponding(
    b: &mut Build,
    step: &Step<'_>,
    next: &NextTree<'_>,
    leaf: usize,
    links: &Tracking,
    diagnostics: &mut Vec<String>,
) -> Result<(), BridgeFailure> {
    let ns = next.state;
    let nref = |id: usize| NodeRef::new(ns, id);
    let tree = next.tree;
    // Highest ancestor reachable through nodes that start new lineages.
    let anchored = |id: usize| links.continues_lineage(nref(id));
    let mut top = leaf;
    while let Some(p) = tree.node(top).parent {
        let p = p as usize;
        if anchored(top) || anchored(p) {
            break;
        }
        top = p;
    }
    let top_has_parent = anchored(top);

    // Pick the host before claiming characters.
    let by_origin = |b: &Build, r: NodeRef| b.by_origin.get(&r).copied();
    let replacing = |b: &Build, anchor: NodeRef| -> Option<usize> {
        by_origin(b, anchor).or_else(|| {
            // A node from the next tree that already stands in for `anchor`.
            b.by_origin
                .iter()
                .filter(|(o, _)| o.state == ns && links.parent_of(**o).is_some_and(|l| l.parent == anchor))
                .map(|(_, &id)| id)
                .min()
        })
    };
    let host = if let Some(existing) = by_origin(b, nref(top)) {
        Some(b.nodes[existing].parent.unwrap_or(0))
    } else if top_has_parent {
        let q = links.parent_of(nref(top)).unwrap().parent;
        replacing(b, q).map(|r| b.host_of(r))
    } else {
        let Some(parent) = tree.node(top).parent else {
            return Err(BridgeFailure::AncestorWithoutAnchor);
        };
        let parent = parent as usize;
        match by_origin(b, nref(parent)) {
            Some(r) => Some(b.host_of(r)),
            None => {
                let Some(pl) = links.parent_of(nref(parent)) else {
                    return Err(BridgeFailure::AncestorWithoutAnchor);
                };
                replacing(b, pl.parent).map(|r| b.host_of(r))
            }
        }
    };

    // Project the subtree onto characters that exist and are code at t.
    let project = |id: usize| -> Vec<usize> {
        let r = tree.node(id).range;
        (r.start..r.end)
            .filter_map(|p| {
                let q = next.backward[p];
                (q >= 0 && step.spans.is_code(q as usize)).then_some(q as usize)
            })
            .collect()
    };
    let lo = top;
    let hi = tree.node(top).subtree_end as usize;
    let mut claimed = Vec::new();
    for id in lo..hi {
        if tree.node(id).is_leaf() {
            claimed.extend(project(id));
        }
    }
    if claimed.is_empty() {
        diagnostics.push(format!("state {}: projected subtree is empty", step.t));
        return Ok(());
    }
    claimed.sort_unstable();
    let host = match host {
        Some(h) => h,
        None => {
            let h = b.deepest_container((claimed[0], claimed[claimed.len() - 1] + 1));
            diagnostics.push(format!(
                "state {}: no anchor for {} from state {ns}; hosted under the smallest enclosing node",
                step.t,
                tree.node(top).label
            ));
            h
        }
    };
    for &c in &claimed {
        if let Some(owner) = b.owner[c].take() {
            b.nodes[owner].chars.retain(|&x| x != c);
        }
    }

    let mut map = HashMap::new();
    for id in lo..hi {
        let n = tree.node(id);
        let chars = if n.is_leaf() { project(id) } else { Vec::new() };
        let new = b.push(BNode {
            label: n.label,
            kind: n.kind,
            parent: None,
            children: Vec::new(),
            chars,
            origin: Some(nref(id)),
        });
        map.insert(id, new);
        if id != lo {
            let p = map[&(n.parent.unwrap() as usize)];
            b.nodes[p].children.push(new);
            b.nodes[new].parent = Some(p);
        }
    }
    // Characters of other leaves stranded inside the inserted extent (typed
    // at t but gone by the next tree) join the inserted leaf to their left.
    let inserted: Vec<usize> = (lo..hi)
        .filter(|id| tree.node(*id).is_leaf())
        .map(|id| map[&id])
        .filter(|&id| !b.nodes[id].chars.is_empty())
        .collect();
    let (h0, h1) = (claimed[0], claimed[claimed.len() - 1]);
    for y in h0 + 1..h1 {
        let Some(o) = b.owner[y] else { continue };
        if inserted.contains(&o) {
            continue;
        }
        let target = inserted
            .iter()
            .copied()
            .filter(|&id| b.nodes[id].chars[0] < y)
            .max_by_key(|&id| b.nodes[id].chars[0])
            .expect("the extent starts with an inserted character");
        b.nodes[o].chars.retain(|&x| x != y);
        let chars = &mut b.nodes[target].chars;
        let at = chars.partition_point(|&x| x < y);
        chars.insert(at, y);
        b.owner[y] = Some(target);
    }
    b.attach(host, map[&lo]);
    Ok(())
}

/// Builds bridging trees for every unparseable state of a session.
pub fn bridge_session(input: &BridgeInput<'_>) -> BridgeRun {
    let n = input.texts.len();
    let corr = input.correspondences;
    let mut run = BridgeRun::default();
    let mut t = 0;
    while t < n {
        if input.parsed[t].is_some() {
            t += 1;
            continue;
        }
        // Unparseable stretch [t, end).
        let end = (t..n).find(|&u| input.parsed[u].is_some()).unwrap_or(n);
        let next_state = (end < n).then_some(end);
        // Backward maps from the next parsed state to each stretch state.
        let mut backward: Vec<Vec<i32>> = vec![Vec::new(); end - t];
        if let Some(ns) = next_state {
            let mut pos: Vec<i32> = (0..input.texts[ns].len() as i32).collect();
            for u in (t..ns).rev() {
                let a = corr.arrays()[u + 1].values();
                for p in pos.iter_mut() {
                    if *p >= 0 {
                        *p = a[*p as usize];
                    }
                }
                backward[u - t] = pos.clone();
            }
        }
        let mut failed = false;
        for u in t..end {
            let mut diagnostics = Vec::new();
            let status = if u == 0 {
                failed = true;
                BridgeStatus::Failed(BridgeFailure::NoPredecessor)
            } else if failed {
                BridgeStatus::Failed(BridgeFailure::Chained)
            } else {
                let from_prev = invert(corr.arrays()[u].values(), input.texts[u - 1].len());
                let next = next_state.map(|ns| NextTree {
                    state: ns,
                    tree: input.parsed[ns].as_ref().unwrap(),
                    forward: invert(&backward[u - t], input.texts[u].len()),
                    backward: std::mem::take(&mut backward[u - t]),
                });
                let step = Step {
                    t: u,
                    len: input.texts[u].len(),
                    spans: &input.spans[u],
                    from_prev,
                    next,
                };
                let parsed_origins;
                let (prev, origins): (&Tree, &[Option<NodeRef>]) = match &input.parsed[u - 1] {
                    Some(p) => {
                        parsed_origins = (0..p.len()).map(|i| Some(NodeRef::new(u - 1, i))).collect::<Vec<_>>();
                        (p, &parsed_origins)
                    }
                    None => {
                        let bt = &run.trees[&(u - 1)];
                        (&bt.tree, &bt.origins)
                    }
                };
                match build_step(&step, prev, origins, input.parsed_links, &mut diagnostics) {
                    Ok(bt) => {
                        run.trees.insert(u, bt);
                        BridgeStatus::Built
                    }
                    Err(f) => {
                        failed = true;
                        BridgeStatus::Failed(f)
                    }
                }
            };
            run.outcomes.push(BridgeOutcome {
                state_index: u,
                status,
                diagnostics,
            });
        }
        t = end;
    }
    run
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageStats {
    pub parseable_fraction: f64,
    pub bridged_fraction: f64,
    pub tree_fraction: f64,
    /// Failure counts keyed by reason code.
    pub failure_breakdown: BTreeMap<String, usize>,
    /// Built bridges over attempted ones, chained failures excluded.
    pub single_step_success: Option<f64>,
}

pub fn coverage_stats(kinds: &[TreeKind], outcomes: &[BridgeOutcome]) -> CoverageStats {
    let n = kinds.len().max(1) as f64;
    let parsed = kinds.iter().filter(|k| **k == TreeKind::Parsed).count() as f64;
    let bridged = kinds.iter().filter(|k| **k == TreeKind::Bridging).count() as f64;
    let mut failure_breakdown = BTreeMap::new();
    let mut attempted = 0usize;
    let mut built = 0usize;
    for o in outcomes {
        match o.status {
            BridgeStatus::Built => {
                attempted += 1;
                built += 1;
            }
            BridgeStatus::Failed(f) => {
                if !matches!(f, BridgeFailure::Chained) {
                    attempted += 1;
                }
                *failure_breakdown.entry(f.code().to_string()).or_insert(0) += 1;
            }
        }
    }
    if kinds.is_empty() {
        return CoverageStats {
            parseable_fraction: 0.0,
            bridged_fraction: 0.0,
            tree_fraction: 0.0,
            failure_breakdown,
            single_step_success: None,
        };
    }
    CoverageStats {
        parseable_fraction: parsed / n,
        bridged_fraction: bridged / n,
        tree_fraction: (parsed + bridged) / n,
        failure_breakdown,
        single_step_success: (attempted > 0).then(|| built as f64 / attempted as f64),
    }
}

/// Removes the characters of `subtree` for which `surviving` is false.
/// Ranges stay in the original coordinate space minus the removed
/// positions; nodes left empty are dropped.
pub fn prune_subtree(subtree: &ParseNode, surviving: impl Fn(usize) -> bool) -> Option<ParseNode> {
    let r = subtree.range;
    let pruned: Vec<usize> = (r.start..r.end).filter(|&i| !surviving(i)).collect();
    let shift = |x: usize| x - pruned.partition_point(|&i| i < x);
    fn walk(n: &ParseNode, pruned: &[usize], shift: &dyn Fn(usize) -> usize) -> Option<ParseNode> {
        let range = CharRange::new(shift(n.range.start), shift(n.range.end));
        if range.is_empty() {
            return None;
        }
        let children: Vec<ParseNode> = n.children.iter().filter_map(|c| walk(c, pruned, shift)).collect();
        if !n.is_leaf && !n.children.is_empty() && children.is_empty() {
            return None;
        }
        let leaf_text = if n.is_leaf && !n.leaf_text.is_empty() {
            n.leaf_text
                .chars()
                .enumerate()
                .filter(|(k, _)| pruned.binary_search(&(n.range.start + k)).is_err())
                .map(|(_, c)| c)
                .collect()
        } else {
            n.leaf_text.clone()
        };
        Some(ParseNode {
            node_uid: n.node_uid,
            type_label: n.type_label.clone(),
            range,
            children,
            is_leaf: n.is_leaf,
            leaf_text,
            is_transient: n.is_transient,
        })
    }
    walk(subtree, &pruned, &shift)
}

/// Uid of a bridging-tree node; same scheme as parsed trees.
pub fn bridge_uid(state: usize, index: usize) -> NodeUid {
    NodeUid::new(state, index)
}
