use serde::{Deserialize, Serialize};

use crate::correspondence::CharRange;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NodeKind {
    Internal,
    Leaf,
    /// Placeholder leaf for characters typed and removed inside an
    /// unparseable stretch.
    Transient,
}

impl NodeKind {
    pub fn is_leaf(self) -> bool {
        !matches!(self, NodeKind::Internal)
    }
}

/// Session-unique node id: state in the high 32 bits, preorder position in
/// the low 32 bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeUid(pub u64);

impl NodeUid {
    pub fn new(state: usize, index: usize) -> Self {
        NodeUid(((state as u64) << 32) | index as u64)
    }

    pub fn state(self) -> usize {
        (self.0 >> 32) as usize
    }

    pub fn index(self) -> usize {
        (self.0 & 0xffff_ffff) as usize
    }
}

impl std::fmt::Display for NodeUid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Node {
    pub label: &'static str,
    pub range: CharRange,
    pub kind: NodeKind,
    pub parent: Option<u32>,
    pub children: Vec<u32>,
    pub depth: u32,
    /// Preorder index one past the last descendant.
    pub subtree_end: u32,
}

impl Node {
    pub fn is_leaf(&self) -> bool {
        self.kind.is_leaf()
    }
}

/// Owned tree used while building; flattened into a [`Tree`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Built {
    pub label: &'static str,
    pub range: CharRange,
    pub kind: NodeKind,
    pub children: Vec<Built>,
}

impl Built {
    pub fn leaf(label: &'static str, range: CharRange) -> Self {
        Built {
            label,
            range,
            kind: NodeKind::Leaf,
            children: Vec::new(),
        }
    }

    /// Internal node spanning its children.
    pub fn internal(label: &'static str, children: Vec<Built>) -> Self {
        let start = children.first().map_or(0, |c| c.range.start);
        let end = children.last().map_or(start, |c| c.range.end);
        Built {
            label,
            range: CharRange::new(start, end),
            kind: NodeKind::Internal,
            children,
        }
    }
}

/// A parse tree stored in preorder; index 0 is the root.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    pub fn from_built(root: Built) -> Self {
        let mut nodes = Vec::new();
        fn walk(b: Built, parent: Option<u32>, depth: u32, nodes: &mut Vec<Node>) -> u32 {
            let id = nodes.len() as u32;
            nodes.push(Node {
                label: b.label,
                range: b.range,
                kind: b.kind,
                parent,
                children: Vec::with_capacity(b.children.len()),
                depth,
                subtree_end: 0,
            });
            for c in b.children {
                let cid = walk(c, Some(id), depth + 1, nodes);
                nodes[id as usize].children.push(cid);
            }
            nodes[id as usize].subtree_end = nodes.len() as u32;
            id
        }
        walk(root, None, 0, &mut nodes);
        Tree { nodes }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn root(&self) -> &Node {
        &self.nodes[0]
    }

    pub fn node(&self, id: usize) -> &Node {
        &self.nodes[id]
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn leaves(&self) -> impl Iterator<Item = usize> + '_ {
        self.nodes.iter().enumerate().filter(|(_, n)| n.is_leaf()).map(|(i, _)| i)
    }

    pub fn is_ancestor(&self, ancestor: usize, node: usize) -> bool {
        ancestor <= node && node < self.nodes[ancestor].subtree_end as usize
    }

    /// Ancestors of `id`, nearest first, excluding `id`.
    pub fn ancestors(&self, id: usize) -> impl Iterator<Item = usize> + '_ {
        std::iter::successors(self.nodes[id].parent.map(|p| p as usize), move |&p| {
            self.nodes[p].parent.map(|q| q as usize)
        })
    }

    /// The leaf whose range contains `index`. Descent skips subtrees whose
    /// range does not contain it.
    pub fn leaf_at(&self, index: usize) -> Option<usize> {
        let mut cur = 0usize;
        if !self.nodes[0].range.contains(index) {
            return None;
        }
        loop {
            let n = &self.nodes[cur];
            if n.is_leaf() {
                return Some(cur);
            }
            let next = self.child_containing(cur, |r| r.contains(index))?;
            cur = next;
        }
    }

    fn child_containing(&self, id: usize, pred: impl Fn(&CharRange) -> bool) -> Option<usize> {
        let children = &self.nodes[id].children;
        // Children are disjoint and sorted; the first candidate is the one
        // whose end passes the probe.
        children.iter().map(|&c| c as usize).find(|&c| pred(&self.nodes[c].range))
    }

    /// Deepest node whose range contains `range`, descending only into
    /// children that contain it.
    pub fn deepest_container(&self, range: CharRange) -> Option<usize> {
        if !self.nodes[0].range.contains_range(&range) {
            return None;
        }
        let mut cur = 0usize;
        while let Some(next) = self.child_containing(cur, |r| r.contains_range(&range)) {
            cur = next;
        }
        Some(cur)
    }

    /// Smallest node containing `range`. Among a unary chain of equal
    /// ranges, prefers the lowest node whose leaf/internal class matches
    /// `want_leaf`, else the lowest.
    pub fn smallest_container(&self, range: CharRange, want_leaf: bool) -> Option<usize> {
        let deepest = self.deepest_container(range)?;
        if self.nodes[deepest].is_leaf() == want_leaf {
            return Some(deepest);
        }
        let r = self.nodes[deepest].range;
        let mut cur = deepest;
        while let Some(p) = self.nodes[cur].parent {
            let p = p as usize;
            if self.nodes[p].range != r {
                break;
            }
            if self.nodes[p].is_leaf() == want_leaf {
                return Some(p);
            }
            cur = p;
        }
        Some(deepest)
    }

    /// Like [`Tree::smallest_container`], but within the unary chain of
    /// equal ranges a node labelled `label` wins first.
    pub fn matching_container(&self, range: CharRange, want_leaf: bool, label: &str) -> Option<usize> {
        let deepest = self.deepest_container(range)?;
        let r = self.nodes[deepest].range;
        let mut cur = deepest;
        loop {
            if self.nodes[cur].label == label {
                return Some(cur);
            }
            match self.nodes[cur].parent {
                Some(p) if self.nodes[p as usize].range == r => cur = p as usize,
                _ => break,
            }
        }
        self.smallest_container(range, want_leaf)
    }

    /// Number of edges on the path between two nodes.
    pub fn path_length(&self, a: usize, b: usize) -> usize {
        let (mut x, mut y) = (a, b);
        let mut steps = 0;
        while self.nodes[x].depth > self.nodes[y].depth {
            x = self.nodes[x].parent.unwrap() as usize;
            steps += 1;
        }
        while self.nodes[y].depth > self.nodes[x].depth {
            y = self.nodes[y].parent.unwrap() as usize;
            steps += 1;
        }
        while x != y {
            x = self.nodes[x].parent.unwrap() as usize;
            y = self.nodes[y].parent.unwrap() as usize;
            steps += 2;
        }
        steps
    }

    /// Characters covered by leaves, as a per-position mask.
    pub fn leaf_mask(&self, len: usize) -> Vec<bool> {
        let mut mask = vec![false; len];
        for id in self.leaves() {
            let r = self.nodes[id].range;
            for m in &mut mask[r.start.min(len)..r.end.min(len)] {
                *m = true;
            }
        }
        mask
    }

    /// Checks containment and ordering of every node; returns a description
    /// of the first violation.
    pub fn check_structure(&self) -> Result<(), String> {
        for (i, n) in self.nodes.iter().enumerate() {
            if n.range.start > n.range.end {
                return Err(format!("node {i} has inverted range {}", n.range));
            }
            if n.is_leaf() && !n.children.is_empty() {
                return Err(format!("leaf {i} has children"));
            }
            if n.is_leaf() && n.range.is_empty() {
                return Err(format!("leaf {i} is empty"));
            }
            let mut prev_end = n.range.start;
            for &c in &n.children {
                let cr = self.nodes[c as usize].range;
                if !n.range.contains_range(&cr) {
                    return Err(format!("node {i} {} does not contain child {c} {}", n.range, cr));
                }
                if cr.start < prev_end {
                    return Err(format!("child {c} {} overlaps or precedes its older sibling", cr));
                }
                if self.nodes[c as usize].parent != Some(i as u32) {
                    return Err(format!("child {c} has the wrong parent"));
                }
                prev_end = cr.end;
            }
        }
        Ok(())
    }

    pub fn to_built(&self) -> Built {
        self.built_at(0)
    }

    pub fn built_at(&self, id: usize) -> Built {
        let n = &self.nodes[id];
        Built {
            label: n.label,
            range: n.range,
            kind: n.kind,
            children: n.children.iter().map(|&c| self.built_at(c as usize)).collect(),
        }
    }

    pub fn to_parse_node(&self, state: usize, text: &[char]) -> ParseNode {
        self.subtree_to_parse_node(0, state, Some(text))
    }

    pub fn subtree_to_parse_node(&self, id: usize, state: usize, text: Option<&[char]>) -> ParseNode {
        let n = &self.nodes[id];
        let leaf_text = match (n.is_leaf(), text) {
            (true, Some(t)) => t[n.range.start.min(t.len())..n.range.end.min(t.len())].iter().collect(),
            _ => String::new(),
        };
        ParseNode {
            node_uid: NodeUid::new(state, id),
            type_label: n.label.to_string(),
            range: n.range,
            children: n
                .children
                .iter()
                .map(|&c| self.subtree_to_parse_node(c as usize, state, text))
                .collect(),
            is_leaf: n.is_leaf(),
            leaf_text,
            is_transient: n.kind == NodeKind::Transient,
        }
    }

    /// Tree dump: `{uid,type,start,end,children}` plus `"transient": true`
    /// on transient nodes.
    pub fn to_json(&self, state: usize) -> serde_json::Value {
        self.node_json(0, state)
    }

    fn node_json(&self, id: usize, state: usize) -> serde_json::Value {
        let n = &self.nodes[id];
        let mut obj = serde_json::Map::new();
        obj.insert("uid".into(), NodeUid::new(state, id).0.into());
        obj.insert("type".into(), n.label.into());
        obj.insert("start".into(), n.range.start.into());
        obj.insert("end".into(), n.range.end.into());
        if n.kind == NodeKind::Transient {
            obj.insert("transient".into(), true.into());
        }
        obj.insert(
            "children".into(),
            n.children.iter().map(|&c| self.node_json(c as usize, state)).collect(),
        );
        serde_json::Value::Object(obj)
    }
}

/// Owned, self-describing view of a node and its subtree.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseNode {
    pub node_uid: NodeUid,
    pub type_label: String,
    pub range: CharRange,
    pub children: Vec<ParseNode>,
    pub is_leaf: bool,
    pub leaf_text: String,
    pub is_transient: bool,
}

impl ParseNode {
    pub fn count(&self) -> usize {
        1 + self.children.iter().map(ParseNode::count).sum::<usize>()
    }

    /// Leaves in left-to-right order.
    pub fn leaves(&self) -> Vec<&ParseNode> {
        let mut out = Vec::new();
        fn walk<'a>(n: &'a ParseNode, out: &mut Vec<&'a ParseNode>) {
            if n.is_leaf {
                out.push(n);
            }
            for c in &n.children {
                walk(c, out);
            }
        }
        walk(self, &mut out);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(a: usize, b: usize) -> CharRange {
        CharRange::new(a, b)
    }

    // module[0,9) -> { call[0,4) -> {id[0,1), args[1,4) -> {"("[1,2) id[2,3) ")"[3,4)}}, id[8,9) }
    fn sample() -> Tree {
        Tree::from_built(Built {
            label: "module",
            range: r(0, 9),
            kind: NodeKind::Internal,
            children: vec![
                Built::internal(
                    "call",
                    vec![
                        Built::leaf("identifier", r(0, 1)),
                        Built::internal(
                            "arguments",
                            vec![
                                Built::leaf("(", r(1, 2)),
                                Built::leaf("identifier", r(2, 3)),
                                Built::leaf(")", r(3, 4)),
                            ],
                        ),
                    ],
                ),
                Built::leaf("identifier", r(8, 9)),
            ],
        })
    }

    #[test]
    fn preorder_layout() {
        let t = sample();
        assert_eq!(t.len(), 8);
        assert_eq!(t.node(1).label, "call");
        assert_eq!(t.node(1).subtree_end, 7);
        assert!(t.is_ancestor(1, 5));
        assert!(!t.is_ancestor(1, 7));
        assert_eq!(t.ancestors(5).collect::<Vec<_>>(), vec![3, 1, 0]);
        t.check_structure().unwrap();
    }

    #[test]
    fn leaf_at_and_containers() {
        let t = sample();
        assert_eq!(t.leaf_at(2), Some(5));
        assert_eq!(t.leaf_at(5), None);
        assert_eq!(t.leaf_at(9), None);
        assert_eq!(t.smallest_container(r(2, 3), true), Some(5));
        assert_eq!(t.smallest_container(r(1, 3), true), Some(3));
        assert_eq!(t.smallest_container(r(0, 9), false), Some(0));
        assert_eq!(t.smallest_container(r(0, 10), false), None);
    }

    #[test]
    fn unary_chain_prefers_matching_class() {
        let t = Tree::from_built(Built {
            label: "module",
            range: r(0, 3),
            kind: NodeKind::Internal,
            children: vec![Built::internal("statement", vec![Built::leaf("identifier", r(0, 3))])],
        });
        assert_eq!(t.smallest_container(r(0, 3), true), Some(2));
        // module and statement share the range; the lower internal wins.
        assert_eq!(t.smallest_container(r(0, 3), false), Some(1));
        assert_eq!(t.matching_container(r(0, 3), false, "module"), Some(0));
    }

    #[test]
    fn path_lengths_match_bfs() {
        let t = sample();
        let n = t.len();
        // Undirected adjacency BFS as the reference.
        let mut adj = vec![Vec::new(); n];
        for (i, node) in t.nodes().iter().enumerate() {
            if let Some(p) = node.parent {
                adj[i].push(p as usize);
                adj[p as usize].push(i);
            }
        }
        for a in 0..n {
            let mut dist = vec![usize::MAX; n];
            dist[a] = 0;
            let mut q = std::collections::VecDeque::from([a]);
            while let Some(x) = q.pop_front() {
                for &y in &adj[x] {
                    if dist[y] == usize::MAX {
                        dist[y] = dist[x] + 1;
                        q.push_back(y);
                    }
                }
            }
            for b in 0..n {
                assert_eq!(t.path_length(a, b), dist[b], "{a}->{b}");
            }
        }
    }

    #[test]
    fn structure_violations_detected() {
        let bad = Tree::from_built(Built {
            label: "module",
            range: r(0, 4),
            kind: NodeKind::Internal,
            children: vec![Built::leaf("a", r(0, 3)), Built::leaf("b", r(2, 4))],
        });
        assert!(bad.check_structure().is_err());
    }

    #[test]
    fn json_dump_shape() {
        let t = sample();
        let j = t.to_json(2);
        assert_eq!(j["type"], "module");
        assert_eq!(j["uid"], NodeUid::new(2, 0).0);
        assert_eq!(j["children"][0]["children"][1]["start"], 1);
        assert!(j.get("transient").is_none());
    }
}
