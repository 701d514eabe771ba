use serde::Serialize;

use crate::correspondence::CharRange;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CharClass {
    Code,
    Whitespace,
    Comment,
}

/// Per-character classification of a snapshot into code, whitespace and
/// comment text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpanMap {
    classes: Vec<CharClass>,
    comments: Vec<CharRange>,
}

impl SpanMap {
    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn class(&self, index: usize) -> Option<CharClass> {
        self.classes.get(index).copied()
    }

    pub fn is_code(&self, index: usize) -> bool {
        self.class(index) == Some(CharClass::Code)
    }

    pub fn is_comment(&self, index: usize) -> bool {
        self.class(index) == Some(CharClass::Comment)
    }

    pub fn is_whitespace(&self, index: usize) -> bool {
        self.class(index) == Some(CharClass::Whitespace)
    }

    pub fn classes(&self) -> &[CharClass] {
        &self.classes
    }

    /// Comment spans, each from `#` to just before the line break.
    pub fn comments(&self) -> &[CharRange] {
        &self.comments
    }

    pub fn comment_containing(&self, index: usize) -> Option<CharRange> {
        let i = self.comments.partition_point(|c| c.end <= index);
        self.comments.get(i).copied().filter(|c| c.contains(index))
    }

    pub fn code_count(&self) -> usize {
        self.classes.iter().filter(|c| **c == CharClass::Code).count()
    }
}

pub(crate) fn is_space(c: char) -> bool {
    matches!(c, ' ' | '\t' | '\n' | '\r' | '\x0c')
}

/// Scans `#` comments and whitespace while skipping over string literals.
/// With `python` set, triple-quoted strings, string prefixes and
/// backslash line continuations are recognised too. Unterminated
/// single-line strings stop at the line break.
pub fn scan_python_family(text: &[char], python: bool) -> SpanMap {
    let n = text.len();
    let mut classes = vec![CharClass::Code; n];
    let mut comments = Vec::new();
    let mut i = 0;
    while i < n {
        let c = text[i];
        if is_space(c) {
            classes[i] = CharClass::Whitespace;
            i += 1;
        } else if c == '#' {
            let start = i;
            while i < n && text[i] != '\n' && text[i] != '\r' {
                classes[i] = CharClass::Comment;
                i += 1;
            }
            comments.push(CharRange::new(start, i));
        } else if python && c == '\\' && matches!(text.get(i + 1), Some('\n')) {
            classes[i] = CharClass::Whitespace;
            classes[i + 1] = CharClass::Whitespace;
            i += 2;
        } else if c == '\'' || c == '"' {
            i = skip_string(text, i, python);
        } else if python && (c.is_ascii_alphabetic() || c == '_') {
            // Identifier, possibly a string prefix such as rb or f.
            let start = i;
            while i < n && (text[i].is_alphanumeric() || text[i] == '_') {
                i += 1;
            }
            let word = i - start;
            if word <= 2
                && i < n
                && (text[i] == '\'' || text[i] == '"')
                && text[start..i]
                    .iter()
                    .all(|ch| matches!(ch.to_ascii_lowercase(), 'r' | 'b' | 'u' | 'f'))
            {
                i = skip_string(text, i, python);
            }
        } else {
            i += 1;
        }
    }
    SpanMap { classes, comments }
}

fn skip_string(text: &[char], start: usize, python: bool) -> usize {
    let n = text.len();
    let q = text[start];
    if python && start + 2 < n && text[start + 1] == q && text[start + 2] == q {
        let mut i = start + 3;
        while i < n {
            if text[i] == '\\' {
                i += 2;
                continue;
            }
            if i + 2 < n && text[i] == q && text[i + 1] == q && text[i + 2] == q {
                return i + 3;
            }
            i += 1;
        }
        return n;
    }
    let mut i = start + 1;
    while i < n {
        match text[i] {
            '\\' if i + 1 < n && text[i + 1] != '\n' => i += 2,
            '\n' | '\r' => return i,
            ch if ch == q => return i + 1,
            _ => i += 1,
        }
    }
    n
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chars(s: &str) -> Vec<char> {
        s.chars().collect()
    }

    #[test]
    fn comments_and_whitespace() {
        let m = scan_python_family(&chars("x = 1 # hi\ny"), false);
        assert_eq!(m.comments(), &[CharRange::new(6, 10)]);
        assert!(m.is_code(0));
        assert!(m.is_whitespace(1));
        assert!(m.is_comment(8));
        assert!(m.is_whitespace(10));
        assert!(m.is_code(11));
        assert_eq!(m.comment_containing(7), Some(CharRange::new(6, 10)));
        assert_eq!(m.comment_containing(11), None);
    }

    #[test]
    fn hash_inside_string_is_code() {
        let m = scan_python_family(&chars("s = '#x' # c"), false);
        assert!(m.is_code(5));
        assert_eq!(m.comments(), &[CharRange::new(9, 12)]);
        // Whitespace inside the string belongs to the literal.
        let m = scan_python_family(&chars("'a b'"), false);
        assert!(m.is_code(2));
    }

    #[test]
    fn unterminated_string_stops_at_newline() {
        let m = scan_python_family(&chars("'abc\n# c"), false);
        assert!(m.is_whitespace(4));
        assert_eq!(m.comments(), &[CharRange::new(5, 8)]);
    }

    #[test]
    fn python_triple_quotes_and_prefixes() {
        let m = scan_python_family(&chars("'''a\n#b'''#c"), true);
        assert!(m.is_code(4));
        assert!(m.is_code(5));
        assert_eq!(m.comments(), &[CharRange::new(10, 12)]);
        let m = scan_python_family(&chars("rb'#' #z"), true);
        assert_eq!(m.comments(), &[CharRange::new(6, 8)]);
        let m = scan_python_family(&chars("x \\\n y"), true);
        assert!(m.is_whitespace(2));
    }
}
