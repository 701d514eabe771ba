//! A small indentation-sensitive Python subset, parsed by hand. Useful when
//! the tree-sitter adapter is compiled out and as a fully deterministic
//! reference grammar for tests.

use super::spans::{is_space, scan_python_family, SpanMap};
use super::tree::{Built, NodeKind, Tree};
use super::{GrammarAdapter, GrammarLabels};
use crate::correspondence::CharRange;
use crate::error::GrammarError;

const KEYWORDS: [&str; 9] = ["if", "elif", "else", "for", "in", "while", "def", "return", "pass"];
const OPERATORS: [&str; 17] = [
    "==", "!=", "<=", ">=", "=", "+", "-", "*", "/", "%", "<", ">", "(", ")", ",", ":", ".",
];

const NEWLINE: &str = "NEWLINE";
const INDENT: &str = "INDENT";
const DEDENT: &str = "DEDENT";
const END: &str = "END";

#[derive(Debug, Clone, Copy)]
struct Tok {
    label: &'static str,
    range: CharRange,
}

impl Tok {
    fn virt(label: &'static str, at: usize) -> Self {
        Tok {
            label,
            range: CharRange::new(at, at),
        }
    }

    fn is_real(&self) -> bool {
        !matches!(self.label, NEWLINE | INDENT | DEDENT | END)
    }
}

fn indent_width(c: char, col: usize) -> usize {
    match c {
        '\t' => (col / 8 + 1) * 8,
        '\x0c' => 0,
        _ => col + 1,
    }
}

fn lex(text: &[char]) -> Option<Vec<Tok>> {
    let n = text.len();
    let mut toks: Vec<Tok> = Vec::new();
    let mut indents = vec![0usize];
    let mut depth = 0usize;
    let mut line_start = true;
    let mut i = 0;
    loop {
        if line_start && depth == 0 {
            let mut j = i;
            let mut col = 0;
            while j < n && matches!(text[j], ' ' | '\t' | '\x0c') {
                col = indent_width(text[j], col);
                j += 1;
            }
            if j == n {
                break;
            }
            if matches!(text[j], '\n' | '\r' | '#') {
                while j < n && text[j] != '\n' {
                    j += 1;
                }
                i = j + 1;
                if i >= n {
                    break;
                }
                continue;
            }
            let top = *indents.last().unwrap();
            if col > top {
                indents.push(col);
                toks.push(Tok::virt(INDENT, j));
            } else {
                while col < *indents.last().unwrap() {
                    indents.pop();
                    toks.push(Tok::virt(DEDENT, j));
                }
                if col != *indents.last().unwrap() {
                    return None;
                }
            }
            i = j;
            line_start = false;
        }
        if i >= n {
            break;
        }
        let c = text[i];
        if c == '\n' || c == '\r' {
            if depth == 0 {
                toks.push(Tok::virt(NEWLINE, i));
                line_start = true;
            }
            i += 1;
        } else if is_space(c) {
            i += 1;
        } else if c == '#' {
            while i < n && text[i] != '\n' && text[i] != '\r' {
                i += 1;
            }
        } else if c.is_alphabetic() || c == '_' {
            let s = i;
            while i < n && (text[i].is_alphanumeric() || text[i] == '_') {
                i += 1;
            }
            let word: String = text[s..i].iter().collect();
            let label = KEYWORDS.iter().find(|k| **k == word).copied().unwrap_or("identifier");
            toks.push(Tok {
                label,
                range: CharRange::new(s, i),
            });
        } else if c.is_ascii_digit() {
            let s = i;
            while i < n && text[i].is_ascii_digit() {
                i += 1;
            }
            if i + 1 < n && text[i] == '.' && text[i + 1].is_ascii_digit() {
                i += 1;
                while i < n && text[i].is_ascii_digit() {
                    i += 1;
                }
            }
            if i < n && (text[i].is_alphabetic() || text[i] == '_') {
                return None;
            }
            toks.push(Tok {
                label: "number",
                range: CharRange::new(s, i),
            });
        } else if c == '\'' || c == '"' {
            let s = i;
            i += 1;
            loop {
                match text.get(i) {
                    None | Some('\n') | Some('\r') => return None,
                    Some('\\') => i += 2,
                    Some(&ch) if ch == c => {
                        i += 1;
                        break;
                    }
                    Some(_) => i += 1,
                }
            }
            if i > n {
                return None;
            }
            toks.push(Tok {
                label: "string",
                range: CharRange::new(s, i),
            });
        } else {
            let op = OPERATORS.iter().find(|op| {
                let oc: Vec<char> = op.chars().collect();
                text[i..].starts_with(&oc)
            })?;
            // "." only appears inside numbers in this subset.
            if *op == "." {
                return None;
            }
            match *op {
                "(" => depth += 1,
                ")" => depth = depth.checked_sub(1)?,
                _ => {}
            }
            let len = op.chars().count();
            toks.push(Tok {
                label: op,
                range: CharRange::new(i, i + len),
            });
            i += len;
        }
    }
    if depth != 0 {
        return None;
    }
    if toks.last().is_some_and(|t| t.is_real() || t.label == DEDENT || t.label == INDENT) {
        toks.push(Tok::virt(NEWLINE, n));
    }
    while indents.len() > 1 {
        indents.pop();
        toks.push(Tok::virt(DEDENT, n));
    }
    toks.push(Tok::virt(END, n));
    Some(toks)
}

struct Parser {
    toks: Vec<Tok>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &'static str {
        self.toks[self.pos].label
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos];
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn leaf(&mut self) -> Built {
        let t = self.bump();
        Built::leaf(t.label, t.range)
    }

    fn expect(&mut self, label: &str) -> Option<Tok> {
        (self.peek() == label).then(|| self.bump())
    }

    fn expect_leaf(&mut self, label: &str) -> Option<Built> {
        self.expect(label).map(|t| Built::leaf(t.label, t.range))
    }

    fn module(&mut self, len: usize) -> Option<Built> {
        let mut children = Vec::new();
        while self.peek() != END {
            children.push(self.statement()?);
        }
        Some(Built {
            label: "module",
            range: CharRange::new(0, len),
            kind: NodeKind::Internal,
            children,
        })
    }

    fn statement(&mut self) -> Option<Built> {
        match self.peek() {
            "if" => self.if_statement(),
            "for" => self.for_statement(),
            "while" => self.while_statement(),
            "def" => self.function_definition(),
            _ => {
                let s = self.simple()?;
                self.expect(NEWLINE)?;
                Some(s)
            }
        }
    }

    fn simple(&mut self) -> Option<Built> {
        match self.peek() {
            "pass" => Some(self.leaf()),
            "return" => {
                let mut children = vec![self.leaf()];
                if self.peek() != NEWLINE {
                    children.push(self.expression()?);
                }
                Some(Built::internal("return_statement", children))
            }
            _ => {
                let lhs = self.expression()?;
                if self.peek() == "=" {
                    if lhs.label != "identifier" {
                        return None;
                    }
                    let eq = self.leaf();
                    let rhs = self.expression()?;
                    Some(Built::internal("assignment", vec![lhs, eq, rhs]))
                } else {
                    Some(lhs)
                }
            }
        }
    }

    fn suite(&mut self) -> Option<Built> {
        if self.peek() == NEWLINE {
            self.bump();
            self.expect(INDENT)?;
            let mut stmts = Vec::new();
            while self.peek() != DEDENT {
                if self.peek() == END {
                    return None;
                }
                stmts.push(self.statement()?);
            }
            self.bump();
            Some(Built::internal("block", stmts))
        } else {
            let s = self.simple()?;
            self.expect(NEWLINE)?;
            Some(Built::internal("block", vec![s]))
        }
    }

    fn if_statement(&mut self) -> Option<Built> {
        let mut children = vec![self.leaf(), self.expression()?, self.expect_leaf(":")?, self.suite()?];
        while self.peek() == "elif" {
            let clause = vec![self.leaf(), self.expression()?, self.expect_leaf(":")?, self.suite()?];
            children.push(Built::internal("elif_clause", clause));
        }
        if self.peek() == "else" {
            let clause = vec![self.leaf(), self.expect_leaf(":")?, self.suite()?];
            children.push(Built::internal("else_clause", clause));
        }
        Some(Built::internal("if_statement", children))
    }

    fn for_statement(&mut self) -> Option<Built> {
        let children = vec![
            self.leaf(),
            self.expect_leaf("identifier")?,
            self.expect_leaf("in")?,
            self.expression()?,
            self.expect_leaf(":")?,
            self.suite()?,
        ];
        Some(Built::internal("for_statement", children))
    }

    fn while_statement(&mut self) -> Option<Built> {
        let children = vec![self.leaf(), self.expression()?, self.expect_leaf(":")?, self.suite()?];
        Some(Built::internal("while_statement", children))
    }

    fn function_definition(&mut self) -> Option<Built> {
        let kw = self.leaf();
        let name = self.expect_leaf("identifier")?;
        let mut params = vec![self.expect_leaf("(")?];
        while self.peek() != ")" {
            params.push(self.expect_leaf("identifier")?);
            if self.peek() == "," {
                params.push(self.leaf());
            } else {
                break;
            }
        }
        params.push(self.expect_leaf(")")?);
        let children = vec![
            kw,
            name,
            Built::internal("parameters", params),
            self.expect_leaf(":")?,
            self.suite()?,
        ];
        Some(Built::internal("function_definition", children))
    }

    fn expression(&mut self) -> Option<Built> {
        let first = self.additive()?;
        if !matches!(self.peek(), "==" | "!=" | "<" | ">" | "<=" | ">=") {
            return Some(first);
        }
        let mut children = vec![first];
        while matches!(self.peek(), "==" | "!=" | "<" | ">" | "<=" | ">=") {
            children.push(self.leaf());
            children.push(self.additive()?);
        }
        Some(Built::internal("comparison_operator", children))
    }

    fn additive(&mut self) -> Option<Built> {
        let mut left = self.multiplicative()?;
        while matches!(self.peek(), "+" | "-") {
            let op = self.leaf();
            let right = self.multiplicative()?;
            left = Built::internal("binary_operator", vec![left, op, right]);
        }
        Some(left)
    }

    fn multiplicative(&mut self) -> Option<Built> {
        let mut left = self.unary()?;
        while matches!(self.peek(), "*" | "/" | "%") {
            let op = self.leaf();
            let right = self.unary()?;
            left = Built::internal("binary_operator", vec![left, op, right]);
        }
        Some(left)
    }

    fn unary(&mut self) -> Option<Built> {
        if matches!(self.peek(), "-" | "+") {
            let op = self.leaf();
            let operand = self.unary()?;
            return Some(Built::internal("unary_operator", vec![op, operand]));
        }
        self.postfix()
    }

    fn postfix(&mut self) -> Option<Built> {
        let mut node = self.atom()?;
        while self.peek() == "(" {
            let mut args = vec![self.leaf()];
            while self.peek() != ")" {
                args.push(self.expression()?);
                if self.peek() == "," {
                    args.push(self.leaf());
                } else {
                    break;
                }
            }
            args.push(self.expect_leaf(")")?);
            node = Built::internal("call", vec![node, Built::internal("arguments", args)]);
        }
        Some(node)
    }

    fn atom(&mut self) -> Option<Built> {
        match self.peek() {
            "identifier" | "number" | "string" => Some(self.leaf()),
            "(" => {
                let open = self.leaf();
                let inner = self.expression()?;
                let close = self.expect_leaf(")")?;
                Some(Built::internal("parenthesized_expression", vec![open, inner, close]))
            }
            _ => None,
        }
    }
}

/// Parses the subset: assignments, expressions, `if`/`elif`/`else`, `for`,
/// `while`, `def`, `return` and `pass`.
pub struct MiniGrammar {
    labels: GrammarLabels,
}

impl MiniGrammar {
    pub fn new() -> Self {
        MiniGrammar {
            labels: GrammarLabels::python_family(),
        }
    }

    pub fn parse_text(&self, text: &[char]) -> Option<Tree> {
        let toks = lex(text)?;
        let mut p = Parser { toks, pos: 0 };
        let root = p.module(text.len())?;
        Some(Tree::from_built(root))
    }
}

impl Default for MiniGrammar {
    fn default() -> Self {
        Self::new()
    }
}

impl GrammarAdapter for MiniGrammar {
    fn name(&self) -> &'static str {
        "mini"
    }

    fn parse(&self, text: &[char]) -> Result<Option<Tree>, GrammarError> {
        Ok(self.parse_text(text))
    }

    fn scan_spans(&self, text: &[char]) -> SpanMap {
        scan_python_family(text, false)
    }

    fn labels(&self) -> &GrammarLabels {
        &self.labels
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Option<Tree> {
        MiniGrammar::new().parse_text(&s.chars().collect::<Vec<_>>())
    }

    fn shape(t: &Tree) -> Vec<(usize, &'static str, usize, usize)> {
        t.nodes()
            .iter()
            .map(|n| (n.depth as usize, n.label, n.range.start, n.range.end))
            .collect()
    }

    #[test]
    fn assignment_golden() {
        let t = parse("x=1").unwrap();
        assert_eq!(
            shape(&t),
            vec![
                (0, "module", 0, 3),
                (1, "assignment", 0, 3),
                (2, "identifier", 0, 1),
                (2, "=", 1, 2),
                (2, "number", 2, 3),
            ]
        );
    }

    #[test]
    fn empty_and_blank_programs() {
        assert_eq!(parse("").unwrap().len(), 1);
        let t = parse("\n  \n# only a comment\n").unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t.root().range, CharRange::new(0, 21));
    }

    #[test]
    fn syntax_errors() {
        for bad in ["x=", "if x:\n", "(", "'abc", "x = 1 +", "def f(:\n  pass", "  x = 1", "x = 1\n  y = 2", "1x", "a.b"] {
            assert!(parse(bad).is_none(), "{bad:?} should not parse");
        }
    }

    #[test]
    fn call_with_string() {
        let t = parse("print(counts, \"abc\")").unwrap();
        let labels: Vec<_> = t.nodes().iter().map(|n| n.label).collect();
        assert_eq!(
            labels,
            vec!["module", "call", "identifier", "arguments", "(", "identifier", ",", "string", ")"]
        );
        assert_eq!(t.node(7).range, CharRange::new(14, 19));
    }

    #[test]
    fn compound_statements() {
        let src = "def f(a, b):\n    if a < b:\n        return a\n    elif a == b: pass\n    else:\n        return -b\nfor i in f(1, 2):\n    while i:\n        i = i - 1\n";
        let t = parse(src).unwrap();
        t.check_structure().unwrap();
        let labels: Vec<_> = t.nodes().iter().map(|n| n.label).collect();
        for l in [
            "function_definition",
            "parameters",
            "if_statement",
            "elif_clause",
            "else_clause",
            "for_statement",
            "while_statement",
            "return_statement",
            "unary_operator",
            "comparison_operator",
            "binary_operator",
            "pass",
        ] {
            assert!(labels.contains(&l), "missing {l}");
        }
        // Every non-space, non-comment char lies in exactly one leaf.
        let spans = scan_python_family(&src.chars().collect::<Vec<_>>(), false);
        let mask = t.leaf_mask(src.chars().count());
        for (i, covered) in mask.iter().enumerate() {
            assert_eq!(*covered, spans.is_code(i), "offset {i}");
        }
    }

    #[test]
    fn newlines_inside_parentheses() {
        let t = parse("f(1,\n  2)\n").unwrap();
        assert_eq!(t.node(1).label, "call");
    }

    #[test]
    fn pass_is_a_leaf() {
        let t = parse("pa").unwrap();
        assert_eq!(t.node(1).label, "identifier");
        let t = parse("pass").unwrap();
        assert_eq!(t.node(1).label, "pass");
        assert!(t.node(1).is_leaf());
    }
}
