//! Character-UID replay oracle and generators shared by integration tests.
#![allow(dead_code)]

use std::collections::HashMap;

use ptchron::grammar::{Built, Tree};
use ptchron::{CharRange, EditEvent, EditKind, ParseNode};
use rand::Rng;

/// Every character tagged with a unique id at insertion.
pub struct UidReplay {
    /// Per state, the uid of each character.
    pub states: Vec<Vec<u64>>,
    /// Per state, uid -> position.
    index: Vec<HashMap<u64, usize>>,
}

pub fn uid(event: usize, offset: usize) -> u64 {
    ((event as u64) << 24) | offset as u64
}

impl UidReplay {
    pub fn new(events: &[EditEvent]) -> Self {
        let mut cur: Vec<u64> = Vec::new();
        let mut states = Vec::with_capacity(events.len());
        for (t, e) in events.iter().enumerate() {
            match e.kind {
                EditKind::Insert => {
                    let n = e.len();
                    cur.splice(e.index..e.index, (0..n).map(|k| uid(t, k)));
                }
                EditKind::Delete => {
                    cur.drain(e.index..e.index + e.len());
                }
            }
            states.push(cur.clone());
        }
        let index = states
            .iter()
            .map(|s| s.iter().enumerate().map(|(i, &u)| (u, i)).collect())
            .collect();
        UidReplay { states, index }
    }

    pub fn position(&self, state: usize, uid: u64) -> Option<usize> {
        self.index[state].get(&uid).copied()
    }

    /// Hull at `to` of the characters of `range` (at `from`) that survive.
    /// An empty range follows the first surviving character at or after it,
    /// or the end of the file.
    pub fn chain(&self, range: CharRange, from: usize, to: usize) -> Option<CharRange> {
        let src = &self.states[from];
        if range.is_empty() {
            let p = src[range.start..]
                .iter()
                .find_map(|&u| self.position(to, u))
                .unwrap_or(self.states[to].len());
            return Some(CharRange::new(p, p));
        }
        let alive: Vec<usize> = src[range.start..range.end]
            .iter()
            .filter_map(|&u| self.position(to, u))
            .collect();
        Some(CharRange::new(*alive.first()?, alive.last()? + 1))
    }
}

/// Mixed insert/delete script over a small alphabet.
pub fn random_script<R: Rng>(rng: &mut R, len: usize, alphabet: &[char]) -> Vec<EditEvent> {
    let mut size = 0usize;
    let mut text: Vec<char> = Vec::new();
    let mut out = Vec::with_capacity(len);
    for k in 0..len {
        let order = k as i64 + 1;
        if size > 0 && rng.gen_bool(0.4) {
            let i = rng.gen_range(0..size);
            let n = rng.gen_range(1..=(size - i).min(4));
            let s: String = text.drain(i..i + n).collect();
            size -= n;
            out.push(EditEvent::delete(order, i, s));
        } else {
            let i = rng.gen_range(0..=size);
            let n = rng.gen_range(1..=3);
            let s: Vec<char> = (0..n).map(|_| alphabet[rng.gen_range(0..alphabet.len())]).collect();
            text.splice(i..i, s.iter().copied());
            size += n;
            out.push(EditEvent::insert(order, i, s.into_iter().collect::<String>()));
        }
    }
    out
}

/// Random tree over `[0, n)`: leaves are one or two characters wide with
/// occasional gaps between them.
pub fn random_tree<R: Rng>(rng: &mut R, max_leaves: usize) -> Tree {
    let mut pos = 0;
    let mut leaves = Vec::new();
    for _ in 0..rng.gen_range(1..=max_leaves) {
        pos += rng.gen_range(0..2);
        let w = rng.gen_range(1..3);
        leaves.push(Built::leaf("leaf", CharRange::new(pos, pos + w)));
        pos += w;
    }
    // Group runs of neighbours until one root remains.
    let mut level: Vec<Built> = leaves;
    while level.len() > 1 {
        let mut next = Vec::new();
        let mut it = level.into_iter().peekable();
        while it.peek().is_some() {
            let k = rng.gen_range(1..=3);
            let group: Vec<Built> = it.by_ref().take(k).collect();
            next.push(Built::internal("inner", group));
        }
        level = next;
    }
    let root = level.pop().unwrap();
    Tree::from_built(Built::internal("module", vec![root]))
}

/// All-pairs distances by breadth-first search over parent/child edges.
pub fn bfs_distances(tree: &Tree) -> Vec<Vec<usize>> {
    let n = tree.len();
    let mut adj = vec![Vec::new(); n];
    for (id, node) in tree.nodes().iter().enumerate() {
        if let Some(p) = node.parent {
            adj[id].push(p as usize);
            adj[p as usize].push(id);
        }
    }
    (0..n)
        .map(|s| {
            let mut d = vec![usize::MAX; n];
            d[s] = 0;
            let mut q = std::collections::VecDeque::from([s]);
            while let Some(x) = q.pop_front() {
                for &y in &adj[x] {
                    if d[y] == usize::MAX {
                        d[y] = d[x] + 1;
                        q.push_back(y);
                    }
                }
            }
            d
        })
        .collect()
}

/// Pruning one index at a time, right to left: nodes holding the index lose
/// one from the end, nodes wholly to its right slide left by one.
pub fn prune_stepwise(n: &ParseNode, pruned_desc: &[usize]) -> Option<ParseNode> {
    let mut range = n.range;
    for &i in pruned_desc {
        if range.start <= i && i < range.end {
            range.end -= 1;
        } else if range.start > i {
            range.start -= 1;
            range.end -= 1;
        }
    }
    if range.is_empty() {
        return None;
    }
    let children: Vec<ParseNode> = n.children.iter().filter_map(|c| prune_stepwise(c, pruned_desc)).collect();
    if !n.is_leaf && !n.children.is_empty() && children.is_empty() {
        return None;
    }
    Some(ParseNode { range, children, ..n.clone() })
}

pub fn strip_text(n: &ParseNode) -> ParseNode {
    ParseNode {
        leaf_text: String::new(),
        children: n.children.iter().map(strip_text).collect(),
        ..n.clone()
    }
}

/// Builds an edit log while keeping the current text.
#[derive(Default)]
pub struct Script {
    pub events: Vec<EditEvent>,
    pub text: Vec<char>,
}

impl Script {
    pub fn len(&self) -> usize {
        self.text.len()
    }

    fn order(&self) -> i64 {
        self.events.len() as i64 + 1
    }

    /// One insert event.
    pub fn paste(&mut self, at: usize, s: &str) -> &mut Self {
        self.text.splice(at..at, s.chars());
        self.events.push(EditEvent::insert(self.order(), at, s));
        self
    }

    /// One insert per character, left to right.
    pub fn type_at(&mut self, at: usize, s: &str) -> &mut Self {
        for (k, c) in s.chars().enumerate() {
            self.paste(at + k, &c.to_string());
        }
        self
    }

    pub fn type_end(&mut self, s: &str) -> &mut Self {
        self.type_at(self.len(), s)
    }

    /// One delete event.
    pub fn cut(&mut self, at: usize, n: usize) -> &mut Self {
        let s: String = self.text.drain(at..at + n).collect();
        self.events.push(EditEvent::delete(self.order(), at, s));
        self
    }

    /// `n` single-character deletes ending at `at + n`, last character first.
    pub fn backspace(&mut self, at: usize, n: usize) -> &mut Self {
        for k in (at..at + n).rev() {
            self.cut(k, 1);
        }
        self
    }

    pub fn find(&self, needle: &str) -> usize {
        let hay: String = self.text.iter().collect();
        let b = hay.find(needle).unwrap_or_else(|| panic!("{needle:?} not in {hay:?}"));
        hay[..b].chars().count()
    }
}
