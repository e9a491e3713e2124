//! Line lexer and block-structure reader shared by the graph, ontology and
//! rule formats.
//!
//! Every format is line oriented. A line is split into bare tokens and
//! double-quoted strings; `#` starts a comment outside of strings. Lines that
//! end in `{` open a block which a lone `}` closes.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

impl ParseError {
    pub fn new(line: usize, col: usize, message: impl Into<String>) -> ParseError {
        ParseError { line, col, message: message.into() }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.col, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub text: String,
    pub quoted: bool,
    /// 1-based column of the token start.
    pub col: usize,
}

impl Token {
    pub fn is_bare(&self, s: &str) -> bool {
        !self.quoted && self.text == s
    }
}

pub struct Lexer;

impl Lexer {
    pub fn tokenize_line(line: &str, line_no: usize) -> Result<Vec<Token>, ParseError> {
        let mut tokens = Vec::new();
        let chars: Vec<char> = line.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            if c.is_whitespace() {
                i += 1;
                continue;
            }
            if c == '#' {
                break;
            }
            let start = i;
            if c == '"' {
                let mut text = String::new();
                i += 1;
                loop {
                    let Some(&c) = chars.get(i) else {
                        return Err(ParseError::new(line_no, start + 1, "unterminated string"));
                    };
                    match c {
                        '"' => break,
                        '\\' => {
                            let esc = chars.get(i + 1).copied();
                            text.push(match esc {
                                Some('"') => '"',
                                Some('\\') => '\\',
                                Some('n') => '\n',
                                Some('t') => '\t',
                                Some('r') => '\r',
                                _ => {
                                    return Err(ParseError::new(line_no, i + 1, "invalid escape sequence"));
                                }
                            });
                            i += 2;
                        }
                        c => {
                            text.push(c);
                            i += 1;
                        }
                    }
                }
                i += 1;
                if chars.get(i).is_some_and(|c| !c.is_whitespace() && *c != '#') {
                    return Err(ParseError::new(line_no, i + 1, "unexpected character after string"));
                }
                tokens.push(Token { text, quoted: true, col: start + 1 });
            } else {
                while i < chars.len() && !chars[i].is_whitespace() && chars[i] != '"' {
                    i += 1;
                }
                if chars.get(i) == Some(&'"') {
                    return Err(ParseError::new(line_no, i + 1, "unexpected quote inside token"));
                }
                let text: String = chars[start..i].iter().collect();
                tokens.push(Token { text, quoted: false, col: start + 1 });
            }
        }
        Ok(tokens)
    }
}

/// One logical line of a block-structured document.
#[derive(Debug, Clone)]
pub struct Node {
    pub line: usize,
    pub tokens: Vec<Token>,
    /// Present when the line opened a `{ ... }` block.
    pub children: Option<Vec<Node>>,
}

impl Node {
    pub fn keyword(&self) -> &str {
        self.tokens.first().map(|t| t.text.as_str()).unwrap_or("")
    }

    pub fn args(&self) -> &[Token] {
        self.tokens.get(1..).unwrap_or(&[])
    }

    pub fn error(&self, message: impl Into<String>) -> ParseError {
        let col = self.tokens.first().map(|t| t.col).unwrap_or(1);
        ParseError::new(self.line, col, message)
    }

    pub fn error_at(&self, token: &Token, message: impl Into<String>) -> ParseError {
        ParseError::new(self.line, token.col, message)
    }
}

/// Reads a whole document into a tree of [`Node`]s.
pub fn read_blocks(source: &str) -> Result<Vec<Node>, ParseError> {
    let mut stack: Vec<(Node, Vec<Node>)> = Vec::new();
    let mut top = Vec::new();
    let mut last_line = 0;
    for (idx, raw) in source.lines().enumerate() {
        let line_no = idx + 1;
        last_line = line_no;
        let mut tokens = Lexer::tokenize_line(raw, line_no)?;
        if tokens.is_empty() {
            continue;
        }
        if tokens.len() == 1 && tokens[0].is_bare("}") {
            let Some((mut open, children)) = stack.pop() else {
                return Err(ParseError::new(line_no, tokens[0].col, "unmatched '}'"));
            };
            open.children = Some(children);
            match stack.last_mut() {
                Some((_, siblings)) => siblings.push(open),
                None => top.push(open),
            }
            continue;
        }
        if let Some(t) = tokens.iter().find(|t| t.is_bare("}")) {
            return Err(ParseError::new(line_no, t.col, "'}' must stand on its own line"));
        }
        let opens = tokens.last().is_some_and(|t| t.is_bare("{"));
        if opens {
            tokens.pop();
        }
        if let Some(t) = tokens.iter().find(|t| t.is_bare("{")) {
            return Err(ParseError::new(line_no, t.col, "'{' must end the line"));
        }
        if tokens.is_empty() {
            return Err(ParseError::new(line_no, 1, "block without a header"));
        }
        let node = Node { line: line_no, tokens, children: None };
        if opens {
            stack.push((node, Vec::new()));
        } else {
            match stack.last_mut() {
                Some((_, siblings)) => siblings.push(node),
                None => top.push(node),
            }
        }
    }
    if let Some((open, _)) = stack.last() {
        return Err(ParseError::new(
            last_line.max(open.line),
            1,
            format!("block opened on line {} is never closed", open.line),
        ));
    }
    Ok(top)
}

/// Checks an optional leading `version N` line and returns the remaining nodes.
pub fn strip_version(nodes: Vec<Node>, supported: u32) -> Result<Vec<Node>, ParseError> {
    let mut iter = nodes.into_iter().peekable();
    if let Some(first) = iter.peek() {
        if first.keyword() == "version" && first.children.is_none() {
            let first = iter.next().expect("peeked");
            let v = first
                .args()
                .first()
                .and_then(|t| t.text.parse::<u32>().ok())
                .ok_or_else(|| first.error("version expects an integer"))?;
            if v != supported {
                return Err(first.error(format!("unsupported format version {v}, expected {supported}")));
            }
        }
    }
    Ok(iter.collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokenizes_strings_and_comments() {
        let toks = Lexer::tokenize_line(r#"a "b c" d # tail "x""#, 1).unwrap();
        let texts: Vec<_> = toks.iter().map(|t| (t.text.as_str(), t.quoted, t.col)).collect();
        assert_eq!(texts, vec![("a", false, 1), ("b c", true, 3), ("d", false, 9)]);
    }

    #[test]
    fn hash_inside_string_is_not_a_comment() {
        let toks = Lexer::tokenize_line(r#""a # b""#, 1).unwrap();
        assert_eq!(toks[0].text, "a # b");
    }

    #[test]
    fn unterminated_string_reports_column() {
        let err = Lexer::tokenize_line(r#"x "oops"#, 4).unwrap_err();
        assert_eq!((err.line, err.col), (4, 3));
    }

    #[test]
    fn nested_blocks() {
        let doc = "rule a {\n  pattern {\n    x y z\n  }\n  k v\n}\n";
        let nodes = read_blocks(doc).unwrap();
        assert_eq!(nodes.len(), 1);
        let kids = nodes[0].children.as_ref().unwrap();
        assert_eq!(kids.len(), 2);
        assert_eq!(kids[0].children.as_ref().unwrap()[0].tokens.len(), 3);
    }

    #[test]
    fn unclosed_block_is_an_error() {
        assert!(read_blocks("a {\n b\n").is_err());
        assert!(read_blocks("}\n").is_err());
    }
}
