//! Parse trees with character ranges, and the adapters that produce them.

mod mini;
#[cfg(feature = "python")]
mod python;
mod spans;
mod tree;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use mini::MiniGrammar;
#[cfg(feature = "python")]
pub use python::PythonGrammar;
pub use spans::{scan_python_family, SpanMap};
pub use tree::{Built, Node, NodeKind, NodeUid, ParseNode, Tree};

use crate::error::GrammarError;
use crate::session::Snapshot;

/// Label used for placeholder nodes of bridging trees.
pub const TRANSIENT_LABEL: &str = "transient";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Construct {
    If,
    Loop,
    Function,
}

impl Construct {
    pub const ALL: [Construct; 3] = [Construct::If, Construct::Loop, Construct::Function];

    pub fn name(self) -> &'static str {
        match self {
            Construct::If => "if",
            Construct::Loop => "loop",
            Construct::Function => "function",
        }
    }
}

/// Node-type inventories a grammar declares for metrics and detectors.
#[derive(Debug, Clone)]
pub struct GrammarLabels {
    pub identifier: Vec<&'static str>,
    /// Suite/body nodes of compound statements.
    pub body: Vec<&'static str>,
    pub if_statement: Vec<&'static str>,
    pub loop_statement: Vec<&'static str>,
    pub function_definition: Vec<&'static str>,
}

impl GrammarLabels {
    pub fn python_family() -> Self {
        GrammarLabels {
            identifier: vec!["identifier"],
            body: vec!["block"],
            if_statement: vec!["if_statement"],
            loop_statement: vec!["for_statement", "while_statement"],
            function_definition: vec!["function_definition"],
        }
    }

    pub fn construct(&self, c: Construct) -> &[&'static str] {
        match c {
            Construct::If => &self.if_statement,
            Construct::Loop => &self.loop_statement,
            Construct::Function => &self.function_definition,
        }
    }

    pub fn is_identifier(&self, label: &str) -> bool {
        self.identifier.iter().any(|l| *l == label)
    }

    pub fn is_body(&self, label: &str) -> bool {
        self.body.iter().any(|l| *l == label)
    }
}

/// A grammar that turns text into a parse tree whose leaves cover every
/// character outside whitespace and comments.
pub trait GrammarAdapter: Send + Sync {
    fn name(&self) -> &'static str;

    /// `Ok(None)` when the text has any syntax error.
    fn parse(&self, text: &[char]) -> Result<Option<Tree>, GrammarError>;

    /// Comment and whitespace spans; total over arbitrary text.
    fn scan_spans(&self, text: &[char]) -> SpanMap;

    fn labels(&self) -> &GrammarLabels;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TreeKind {
    Parsed,
    Bridging,
    Absent,
}

/// The tree (if any) for one state.
#[derive(Debug, Clone)]
pub struct TreeVersion {
    pub state_index: usize,
    pub kind: TreeKind,
    pub tree: Option<Tree>,
}

impl TreeVersion {
    pub fn parsed(state_index: usize, tree: Tree) -> Self {
        TreeVersion {
            state_index,
            kind: TreeKind::Parsed,
            tree: Some(tree),
        }
    }

    pub fn bridging(state_index: usize, tree: Tree) -> Self {
        TreeVersion {
            state_index,
            kind: TreeKind::Bridging,
            tree: Some(tree),
        }
    }

    pub fn absent(state_index: usize) -> Self {
        TreeVersion {
            state_index,
            kind: TreeKind::Absent,
            tree: None,
        }
    }

    pub fn root_node(&self, text: &[char]) -> Option<ParseNode> {
        self.tree.as_ref().map(|t| t.to_parse_node(self.state_index, text))
    }
}

/// Parses one snapshot. Unparseable text yields an `Absent` version to be
/// bridged later.
pub fn parse_snapshot(snapshot: &Snapshot, grammar: &dyn GrammarAdapter) -> Result<TreeVersion, GrammarError> {
    Ok(match grammar.parse(&snapshot.text)? {
        Some(tree) => TreeVersion::parsed(snapshot.state_index, tree),
        None => TreeVersion::absent(snapshot.state_index),
    })
}

/// The leaf whose range contains `index`, if any.
pub fn leaf_at(tree: &TreeVersion, index: usize) -> Option<ParseNode> {
    let t = tree.tree.as_ref()?;
    let id = t.leaf_at(index)?;
    Some(t.subtree_to_parse_node(id, tree.state_index, None))
}

pub fn scan_spans(text: &str, grammar: &dyn GrammarAdapter) -> SpanMap {
    let chars: Vec<char> = text.chars().collect();
    grammar.scan_spans(&chars)
}

/// Names accepted by `--grammar`.
pub fn grammar_names() -> &'static [&'static str] {
    &["mini", "python"]
}

pub fn grammar_by_name(name: &str) -> Result<Arc<dyn GrammarAdapter>, GrammarError> {
    match name {
        "mini" => Ok(Arc::new(MiniGrammar::new())),
        #[cfg(feature = "python")]
        "python" => Ok(Arc::new(PythonGrammar::new())),
        other => Err(GrammarError::Unknown(other.to_string())),
    }
}
