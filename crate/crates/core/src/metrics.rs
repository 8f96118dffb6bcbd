//! Static size metrics for block-structured model text.
//!
//! Two measures are taken from the raw file content: the physical line
//! count (LOC) and the number of `Block` sections at any nesting depth
//! (BC), including blocks hidden inside subsystems and masks.
//!
//! The accepted text format is a minimal `.mdl`-like grammar:
//!
//! ```text
//! Model {
//!   Name "demo"
//!   System {
//!     Block {
//!       BlockType Gain
//!     }
//!   }
//! }
//! ```
//!
//! `Name {` opens a section, `}` closes it and any other non-blank text
//! inside a section is an attribute. Several openers and closers may share
//! one line. Braces inside double-quoted strings are ordinary characters.

use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Section name counted by [`count_blocks`].
pub const BLOCK_SECTION: &str = "Block";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SizeMeasurement {
    pub loc: u64,
    pub block_count: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Section {
    pub name: String,
    pub attributes: Vec<String>,
    pub children: Vec<Section>,
}

impl Section {
    pub fn new(name: impl Into<String>) -> Self {
        Section {
            name: name.into(),
            attributes: Vec::new(),
            children: Vec::new(),
        }
    }

    pub fn with_attribute(mut self, attr: impl Into<String>) -> Self {
        self.attributes.push(attr.into());
        self
    }

    pub fn with_child(mut self, child: Section) -> Self {
        self.children.push(child);
        self
    }

    pub fn depth(&self) -> usize {
        1 + self.children.iter().map(Section::depth).max().unwrap_or(0)
    }

    fn write_indented(&self, out: &mut String, indent: usize) {
        let pad = "  ".repeat(indent);
        let _ = writeln!(out, "{pad}{} {{", self.name);
        for attr in &self.attributes {
            let _ = writeln!(out, "{pad}  {attr}");
        }
        for child in &self.children {
            child.write_indented(out, indent + 1);
        }
        let _ = writeln!(out, "{pad}}}");
    }
}

/// Parsed model file: the forest of top-level sections.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ModelDocument {
    pub sections: Vec<Section>,
}

impl ModelDocument {
    /// Canonical text form; parses back to an equal document.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for section in &self.sections {
            section.write_indented(&mut out, 0);
        }
        out
    }

    pub fn depth(&self) -> usize {
        self.sections.iter().map(Section::depth).max().unwrap_or(0)
    }
}

impl fmt::Display for ModelDocument {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

/// Physical line count. A trailing line without a terminator counts as a
/// line; blank lines count; nothing is stripped.
pub fn count_loc(content: &str) -> u64 {
    let newlines = content.bytes().filter(|&b| b == b'\n').count() as u64;
    let unterminated = !content.is_empty() && !content.ends_with('\n');
    newlines + u64::from(unterminated)
}

/// Number of sections named `Block` at any depth.
pub fn count_blocks(doc: &ModelDocument) -> u64 {
    fn walk(section: &Section) -> u64 {
        u64::from(section.name == BLOCK_SECTION) + section.children.iter().map(walk).sum::<u64>()
    }
    doc.sections.iter().map(walk).sum()
}

pub fn measure(content: &str) -> Result<SizeMeasurement> {
    let doc = parse_model(content)?;
    Ok(SizeMeasurement {
        loc: count_loc(content),
        block_count: count_blocks(&doc),
    })
}

enum Piece<'a> {
    Open(&'a str),
    Close,
    Text(&'a str),
}

/// Splits one line into openers, closers and attribute text. Returns the
/// pieces with their 0-based byte column.
fn scan_line(line: &str) -> Vec<(usize, Piece<'_>)> {
    let bytes = line.as_bytes();
    let mut pieces = Vec::new();
    let mut start = 0;
    let mut in_quote = false;
    let mut i = 0;
    while i < bytes.len() {
        match bytes[i] {
            b'\\' if in_quote => i += 1,
            b'"' => in_quote = !in_quote,
            b'{' if !in_quote => {
                pieces.push((start, Piece::Open(&line[start..i])));
                start = i + 1;
            }
            b'}' if !in_quote => {
                if !line[start..i].trim().is_empty() {
                    pieces.push((start, Piece::Text(&line[start..i])));
                }
                pieces.push((i, Piece::Close));
                start = i + 1;
            }
            _ => {}
        }
        i += 1;
    }
    if start < line.len() && !line[start..].trim().is_empty() {
        pieces.push((start, Piece::Text(&line[start..])));
    }
    pieces
}

/// Parses model text into its section tree.
///
/// Fails on a `{` without a preceding single-token name, on a `}` without
/// an open section, on text outside any section and on sections left open
/// at the end of input. Positions in errors are 1-based.
pub fn parse_model(content: &str) -> Result<ModelDocument> {
    let mut roots: Vec<Section> = Vec::new();
    // open sections with the (line, column) of their opener
    let mut stack: Vec<(Section, usize, usize)> = Vec::new();

    for (line_idx, raw) in content.split('\n').enumerate() {
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        let line_no = line_idx + 1;
        for (col, piece) in scan_line(line) {
            match piece {
                Piece::Open(head) => {
                    let name = head.trim();
                    let column = col + (head.len() - head.trim_start().len()) + 1;
                    if name.is_empty() {
                        return Err(Error::Parse {
                            line: line_no,
                            column: col + head.len() + 1,
                            message: "missing section name before '{'".into(),
                        });
                    }
                    if name.contains(char::is_whitespace) || name.contains('"') {
                        return Err(Error::Parse {
                            line: line_no,
                            column,
                            message: format!("section name must be a single token, got {name:?}"),
                        });
                    }
                    stack.push((Section::new(name), line_no, column));
                }
                Piece::Close => {
                    let Some((done, _, _)) = stack.pop() else {
                        return Err(Error::Parse {
                            line: line_no,
                            column: col + 1,
                            message: "unbalanced '}'".into(),
                        });
                    };
                    match stack.last_mut() {
                        Some((parent, _, _)) => parent.children.push(done),
                        None => roots.push(done),
                    }
                }
                Piece::Text(text) => {
                    let Some((current, _, _)) = stack.last_mut() else {
                        return Err(Error::Parse {
                            line: line_no,
                            column: col + (text.len() - text.trim_start().len()) + 1,
                            message: "attribute outside of any section".into(),
                        });
                    };
                    current.attributes.push(text.trim().to_string());
                }
            }
        }
    }

    if let Some((open, line, column)) = stack.pop() {
        return Err(Error::Parse {
            line,
            column,
            message: format!("section {:?} is never closed", open.name),
        });
    }
    Ok(ModelDocument { sections: roots })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn loc_counts_physical_lines() {
        assert_eq!(count_loc(""), 0);
        assert_eq!(count_loc("a\nb\nc\n"), 3);
        assert_eq!(count_loc("a\nb\nc"), 3);
        assert_eq!(count_loc("\n\n"), 2);
        assert_eq!(count_loc("a\r\nb\r\n"), 2);
        // lone CR is line content
        assert_eq!(count_loc("a\rb\n"), 1);
    }

    #[test]
    fn loc_appending_a_line_adds_one() {
        for s in ["", "x\n", "a\nb\n", "\n"] {
            let appended = if s.is_empty() { "x".to_string() } else { format!("{s}x") };
            assert_eq!(count_loc(&appended), count_loc(s) + 1, "{s:?}");
        }
    }

    #[test]
    fn parses_single_root() {
        let doc = parse_model("Model {\n}\n").unwrap();
        assert_eq!(doc.sections.len(), 1);
        assert_eq!(doc.sections[0].name, "Model");
        assert!(doc.sections[0].children.is_empty());
    }

    #[test]
    fn parses_inline_nesting() {
        let doc = parse_model("Model { System { Block { } Block { } } }").unwrap();
        assert_eq!(doc.depth(), 3);
        let system = &doc.sections[0].children[0];
        assert_eq!(system.name, "System");
        assert_eq!(system.children.len(), 2);
        assert!(system.children.iter().all(|b| b.name == "Block" && b.children.is_empty()));
    }

    #[test]
    fn counts_nested_blocks() {
        let doc = parse_model("System{ Block{} System{ Block{} Block{} } }").unwrap();
        assert_eq!(count_blocks(&doc), 3);
        let none = parse_model("Model {\n  Name \"x\"\n}\n").unwrap();
        assert_eq!(count_blocks(&none), 0);
    }

    #[test]
    fn attributes_are_kept_verbatim() {
        let text = "Model {\n  Name \"a { b }\"\n  Position [1, 2, 3]\n  Block {\n  BlockType Gain\n }\n}\n";
        let doc = parse_model(text).unwrap();
        let model = &doc.sections[0];
        assert_eq!(model.attributes, vec!["Name \"a { b }\"", "Position [1, 2, 3]"]);
        assert_eq!(model.children[0].attributes, vec!["BlockType Gain"]);
    }

    #[test]
    fn empty_input_is_an_empty_document() {
        let doc = parse_model("").unwrap();
        assert!(doc.sections.is_empty());
        assert_eq!(measure("").unwrap(), SizeMeasurement::default());
    }

    #[test]
    fn reports_unbalanced_close() {
        match parse_model("Model {\n}\n}\n") {
            Err(Error::Parse { line, column, .. }) => assert_eq!((line, column), (3, 1)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn reports_unclosed_section_at_its_opener() {
        match parse_model("Model {\n  System {\n  }\n") {
            Err(Error::Parse { line, column, message }) => {
                assert_eq!((line, column), (1, 1));
                assert!(message.contains("Model"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn reports_missing_name() {
        match parse_model("Model {\n   {\n }\n}") {
            Err(Error::Parse { line, column, .. }) => assert_eq!((line, column), (2, 4)),
            other => panic!("unexpected {other:?}"),
        }
        assert!(parse_model("Two words {\n}\n").is_err());
        assert!(parse_model("stray\n").is_err());
    }

    #[test]
    fn crlf_input_parses_like_lf() {
        let lf = parse_model("Model {\n  A 1\n}\n").unwrap();
        let crlf = parse_model("Model {\r\n  A 1\r\n}\r\n").unwrap();
        assert_eq!(lf, crlf);
    }
}
