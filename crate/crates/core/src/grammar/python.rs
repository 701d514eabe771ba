//! Full Python via tree-sitter.

use std::cell::RefCell;
use std::collections::HashSet;
use std::sync::{Mutex, OnceLock};

use tree_sitter::{Node as TsNode, Parser};

use super::spans::{scan_python_family, SpanMap};
use super::tree::{Built, NodeKind, Tree};
use super::{GrammarAdapter, GrammarLabels};
use crate::correspondence::CharRange;
use crate::error::GrammarError;

thread_local! {
    static PARSER: RefCell<Option<Parser>> = const { RefCell::new(None) };
}

/// Node types kept whole as a single leaf.
const ATOMIC: [&str; 2] = ["string", "concatenated_string"];
const SKIPPED: [&str; 2] = ["comment", "line_continuation"];

pub struct PythonGrammar {
    labels: GrammarLabels,
}

impl PythonGrammar {
    pub fn new() -> Self {
        PythonGrammar {
            labels: GrammarLabels::python_family(),
        }
    }
}

impl Default for PythonGrammar {
    fn default() -> Self {
        Self::new()
    }
}

/// Node kinds form a small closed set, so leaking each distinct one once is
/// bounded.
fn intern(kind: &str) -> &'static str {
    static LABELS: OnceLock<Mutex<HashSet<&'static str>>> = OnceLock::new();
    let mut set = LABELS.get_or_init(Default::default).lock().unwrap_or_else(|e| e.into_inner());
    if let Some(l) = set.get(kind) {
        return l;
    }
    let l: &'static str = Box::leak(kind.to_string().into_boxed_str());
    set.insert(l);
    l
}

fn convert(node: TsNode<'_>, byte_to_char: &[usize]) -> Option<Built> {
    let kind = intern(node.kind());
    if SKIPPED.contains(&kind) || node.start_byte() == node.end_byte() {
        return None;
    }
    let range = CharRange::new(byte_to_char[node.start_byte()], byte_to_char[node.end_byte()]);
    if node.child_count() == 0 || ATOMIC.contains(&kind) {
        return Some(Built::leaf(kind, range));
    }
    let mut cursor = node.walk();
    let children: Vec<Built> = node
        .children(&mut cursor)
        .filter_map(|c| convert(c, byte_to_char))
        .collect();
    if children.is_empty() {
        return Some(Built::leaf(kind, range));
    }
    Some(Built::internal(kind, children))
}

impl GrammarAdapter for PythonGrammar {
    fn name(&self) -> &'static str {
        "python"
    }

    fn parse(&self, text: &[char]) -> Result<Option<Tree>, GrammarError> {
        let source: String = text.iter().collect();
        let internal = |message: String| GrammarError::Internal {
            adapter: "python".into(),
            message,
        };
        let parsed = PARSER.with(|cell| {
            let mut slot = cell.borrow_mut();
            if slot.is_none() {
                let mut p = Parser::new();
                p.set_language(&tree_sitter_python::LANGUAGE.into())
                    .map_err(|e| internal(e.to_string()))?;
                *slot = Some(p);
            }
            Ok::<_, GrammarError>(slot.as_mut().unwrap().parse(&source, None))
        })?;
        let Some(ts) = parsed else {
            return Err(internal("parser returned no tree".into()));
        };
        let root = ts.root_node();
        if root.has_error() {
            return Ok(None);
        }
        let mut byte_to_char = vec![0usize; source.len() + 1];
        let mut ci = 0;
        for (bi, ch) in source.char_indices() {
            for slot in &mut byte_to_char[bi..bi + ch.len_utf8()] {
                *slot = ci;
            }
            ci += 1;
        }
        byte_to_char[source.len()] = ci;
        let mut cursor = root.walk();
        let children: Vec<Built> = root
            .children(&mut cursor)
            .filter_map(|c| convert(c, &byte_to_char))
            .collect();
        Ok(Some(Tree::from_built(Built {
            label: intern(root.kind()),
            range: CharRange::new(0, text.len()),
            kind: NodeKind::Internal,
            children,
        })))
    }

    fn scan_spans(&self, text: &[char]) -> SpanMap {
        scan_python_family(text, true)
    }

    fn labels(&self) -> &GrammarLabels {
        &self.labels
    }
}
