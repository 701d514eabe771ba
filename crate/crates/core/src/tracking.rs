//! Temporal parents for parse-tree nodes, found by chaining each node's
//! characters backward until some earlier tree contains them.


use serde::Serialize;

use crate::correspondence::{CharRange, Correspondences};
use crate::error::{CorrespondenceError, TrackingError};
use crate::grammar::{NodeUid, SpanMap, Tree};

/// A node instance: a tree's state plus the node's preorder index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct NodeRef {
    pub state: usize,
    pub node: u32,
}

impl NodeRef {
    pub fn new(state: usize, node: usize) -> Self {
        NodeRef {
            state,
            node: node as u32,
        }
    }

    pub fn uid(self) -> NodeUid {
        NodeUid::new(self.state, self.node as usize)
    }

    pub fn from_uid(uid: NodeUid) -> Self {
        NodeRef::new(uid.state(), uid.index())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TemporalLink {
    pub child: NodeRef,
    pub parent: NodeRef,
    pub gap: usize,
    /// The search passed a state where the node's characters sat in a comment.
    pub via_comment: bool,
}

/// Outcome of the backward search for one node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParentSearch {
    Found(TemporalLink),
    /// Every character of the node is new since the last tree.
    NoCorrespondence,
    /// Characters survive but no earlier tree holds them as code.
    NotFound,
}

impl ParentSearch {
    pub fn link(&self) -> Option<TemporalLink> {
        match self {
            ParentSearch::Found(l) => Some(*l),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Lineage {
    pub lineage_id: u32,
    pub instances: Vec<NodeRef>,
}

impl Lineage {
    pub fn first_state(&self) -> usize {
        self.instances[0].state
    }

    pub fn last_state(&self) -> usize {
        self.instances[self.instances.len() - 1].state
    }

    pub fn first(&self) -> NodeRef {
        self.instances[0]
    }

    pub fn last(&self) -> NodeRef {
        self.instances[self.instances.len() - 1]
    }

    /// The instance at `state`, if the lineage has one there.
    pub fn at(&self, state: usize) -> Option<NodeRef> {
        self.instances
            .binary_search_by_key(&state, |r| r.state)
            .ok()
            .map(|i| self.instances[i])
    }
}

/// Trees and character data for one session, indexed by state.
#[derive(Clone, Copy)]
pub struct TrackInput<'a> {
    pub trees: &'a [Option<&'a Tree>],
    pub spans: &'a [SpanMap],
    pub correspondences: &'a Correspondences,
}

/// Code characters of a tree in preorder leaf order; node `id` owns
/// `chars[lo[id]..hi[id]]`. A childless internal node owns its own range.
struct LeafChars {
    chars: Vec<usize>,
    lo: Vec<usize>,
    hi: Vec<usize>,
}

impl LeafChars {
    fn new(tree: &Tree) -> Self {
        let n = tree.len();
        let mut chars = Vec::new();
        let mut lo = vec![0; n];
        for (id, node) in tree.nodes().iter().enumerate() {
            lo[id] = chars.len();
            if node.is_leaf() || node.children.is_empty() {
                chars.extend(node.range.start..node.range.end);
            }
        }
        let hi = tree
            .nodes()
            .iter()
            .map(|node| {
                let end = node.subtree_end as usize;
                if end < n {
                    lo[end]
                } else {
                    chars.len()
                }
            })
            .collect();
        LeafChars { chars, lo, hi }
    }
}

fn nearest_tree_before(trees: &[Option<&Tree>], t: usize) -> Option<usize> {
    (0..t).rev().find(|&u| trees[u].is_some())
}

/// Hull of the positions in `pos` that are code at the earlier state.
enum Landing {
    Dead,
    NotCode { comment: bool },
    Code(CharRange),
}

fn landing(pos: &[i64], spans: &SpanMap) -> Landing {
    let mut alive = false;
    let mut comment = false;
    let mut hull: Option<(usize, usize)> = None;
    for &p in pos {
        if p < 0 {
            continue;
        }
        alive = true;
        let p = p as usize;
        if spans.is_code(p) {
            hull = Some(match hull {
                None => (p, p + 1),
                Some((a, _)) => (a, p + 1),
            });
        } else if spans.is_comment(p) {
            comment = true;
        }
    }
    match (alive, hull) {
        (false, _) => Landing::Dead,
        (true, None) => Landing::NotCode { comment },
        (true, Some((a, b))) => Landing::Code(CharRange::new(a, b)),
    }
}

/// Backward search for every node of the tree at `t`. The root links to the
/// root of the nearest earlier tree.
pub fn link_state(input: TrackInput<'_>, t: usize) -> Result<Vec<ParentSearch>, CorrespondenceError> {
    let Some(tree) = input.trees[t] else {
        return Ok(Vec::new());
    };
    let n = tree.len();
    let mut out = vec![ParentSearch::NotFound; n];
    match nearest_tree_before(input.trees, t) {
        Some(u) => {
            out[0] = ParentSearch::Found(TemporalLink {
                child: NodeRef::new(t, 0),
                parent: NodeRef::new(u, 0),
                gap: t - u,
                via_comment: false,
            })
        }
        None => out[0] = ParentSearch::NoCorrespondence,
    }
    if n == 1 || t == 0 {
        if t == 0 {
            out.iter_mut().for_each(|o| *o = ParentSearch::NoCorrespondence);
        }
        return Ok(out);
    }
    let lc = LeafChars::new(tree);
    let mut pos: Vec<i64> = lc.chars.iter().map(|&c| c as i64).collect();
    let mut via = vec![false; n];
    let mut pending: Vec<usize> = (1..n).collect();
    for u in (0..t).rev() {
        let arr = input.correspondences.array(u + 1)?;
        for p in pos.iter_mut() {
            if *p >= 0 {
                *p = arr.get(*p as usize).map_or(-1, |x| x as i64);
            }
        }
        let Some(tu) = input.trees[u] else {
            // Dead characters stay dead, so fully dead nodes can stop now.
            pending.retain(|&id| {
                if pos[lc.lo[id]..lc.hi[id]].iter().all(|&p| p < 0) {
                    out[id] = ParentSearch::NoCorrespondence;
                    false
                } else {
                    true
                }
            });
            if pending.is_empty() {
                break;
            }
            continue;
        };
        let spans = &input.spans[u];
        pending.retain(|&id| match landing(&pos[lc.lo[id]..lc.hi[id]], spans) {
            Landing::Dead => {
                out[id] = ParentSearch::NoCorrespondence;
                false
            }
            Landing::NotCode { comment } => {
                via[id] |= comment;
                true
            }
            Landing::Code(range) => match tu.matching_container(range, tree.node(id).is_leaf(), tree.node(id).label) {
                Some(m) => {
                    out[id] = ParentSearch::Found(TemporalLink {
                        child: NodeRef::new(t, id),
                        parent: NodeRef::new(u, m),
                        gap: t - u,
                        via_comment: via[id],
                    });
                    false
                }
                None => true,
            },
        });
        if pending.is_empty() {
            break;
        }
    }
    Ok(out)
}

/// Temporal parent of a single node.
pub fn find_temporal_parent(input: TrackInput<'_>, node: NodeRef) -> Result<ParentSearch, TrackingError> {
    let unknown = || TrackingError::UnknownNode {
        state: node.state,
        uid: node.uid().0,
    };
    let tree = input.trees.get(node.state).copied().flatten().ok_or_else(unknown)?;
    if node.node as usize >= tree.len() {
        return Err(unknown());
    }
    let all = link_state(input, node.state).map_err(|_| unknown())?;
    Ok(all[node.node as usize])
}

/// All temporal links and the lineages they induce.
#[derive(Debug, Clone, Default)]
pub struct Tracking {
    searches: Vec<Vec<ParentSearch>>,
    lineage_ids: Vec<Vec<u32>>,
    lineages: Vec<Lineage>,
}

impl Tracking {
    pub fn parent_of(&self, node: NodeRef) -> Option<TemporalLink> {
        self.search(node).and_then(|s| s.link())
    }

    pub fn search(&self, node: NodeRef) -> Option<ParentSearch> {
        self.searches.get(node.state)?.get(node.node as usize).copied()
    }

    pub fn has_parent(&self, node: NodeRef) -> bool {
        self.parent_of(node).is_some()
    }

    /// True when the node carries on its temporal parent's lineage rather
    /// than starting a new one.
    pub fn continues_lineage(&self, node: NodeRef) -> bool {
        self.lineage(node).is_some_and(|l| l.first() != node)
    }

    /// Links in (child state, child preorder) order.
    pub fn links(&self) -> impl Iterator<Item = TemporalLink> + '_ {
        self.searches.iter().flat_map(|s| s.iter().filter_map(|x| x.link()))
    }

    pub fn lineages(&self) -> &[Lineage] {
        &self.lineages
    }

    pub fn lineage_id(&self, node: NodeRef) -> Option<u32> {
        self.lineage_ids.get(node.state)?.get(node.node as usize).copied()
    }

    pub fn lineage(&self, node: NodeRef) -> Option<&Lineage> {
        self.lineage_id(node).map(|id| &self.lineages[id as usize])
    }

    pub fn lineage_of(&self, state: usize, uid: NodeUid) -> Result<&Lineage, TrackingError> {
        let r = NodeRef::from_uid(uid);
        if r.state != state {
            return Err(TrackingError::UnknownNode { state, uid: uid.0 });
        }
        self.lineage(r).ok_or(TrackingError::UnknownNode { state, uid: uid.0 })
    }
}

/// Runs the backward search over every tree and groups instances into
/// lineages. When several nodes link to the same parent, one primary child
/// continues the parent's lineage and the rest start new ones.
pub fn track_all(input: TrackInput<'_>) -> Result<Tracking, CorrespondenceError> {
    let states = input.trees.len();
    let mut searches = Vec::with_capacity(states);
    for t in 0..states {
        searches.push(link_state(input, t)?);
    }

    let node = |r: NodeRef| input.trees[r.state].unwrap().node(r.node as usize);
    // Indexed by parent state and node.
    let mut primary: Vec<Vec<Option<NodeRef>>> = searches.iter().map(|s| vec![None; s.len()]).collect();
    for s in &searches {
        for link in s.iter().filter_map(|x| x.link()) {
            let p = node(link.parent);
            let key = |c: NodeRef| {
                let n = node(c);
                (
                    c.state,
                    n.label != p.label,
                    n.is_leaf() != p.is_leaf(),
                    std::cmp::Reverse(n.range.len()),
                    c.node,
                )
            };
            let slot = &mut primary[link.parent.state][link.parent.node as usize];
            match slot {
                Some(cur) if key(*cur) <= key(link.child) => {}
                _ => *slot = Some(link.child),
            }
        }
    }

    let mut lineage_ids: Vec<Vec<u32>> = Vec::with_capacity(states);
    let mut lineages: Vec<Lineage> = Vec::new();
    for (t, s) in searches.iter().enumerate() {
        let mut ids = Vec::with_capacity(s.len());
        for (id, search) in s.iter().enumerate() {
            let me = NodeRef::new(t, id);
            let inherited = search
                .link()
                .filter(|l| primary[l.parent.state][l.parent.node as usize] == Some(me))
                .map(|l| lineage_ids[l.parent.state][l.parent.node as usize]);
            let lid = match inherited {
                Some(lid) => {
                    lineages[lid as usize].instances.push(me);
                    lid
                }
                None => {
                    let lid = lineages.len() as u32;
                    lineages.push(Lineage {
                        lineage_id: lid,
                        instances: vec![me],
                    });
                    lid
                }
            };
            ids.push(lid);
        }
        lineage_ids.push(ids);
    }
    Ok(Tracking {
        searches,
        lineage_ids,
        lineages,
    })
}
