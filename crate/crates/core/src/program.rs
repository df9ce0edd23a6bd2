//! Composition programs: expression trees stored in prefix order.
//!
//! A tree is the pre-order sequence of its node kinds. Because every kind has
//! a fixed arity, the sequence determines the tree, and any subtree is a
//! contiguous slice starting at its root. Crossover and mutation become slice
//! splices.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::{self, Write as _};
use core::str::FromStr;

use crate::ops::{apply_binary_in_place, apply_unary_in_place, OperatorKind, RintMode};

/// Maximum tree depth. The root sits at depth 0.
pub const DEPTH_LIMIT: usize = 10;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ProgramTree {
    nodes: Vec<OperatorKind>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TreeError {
    /// The prefix sequence is empty, ends early, or has leftover nodes.
    MalformedPrefix,
}

impl fmt::Display for TreeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TreeError::MalformedPrefix => f.write_str("node sequence is not a complete prefix tree"),
        }
    }
}

impl core::error::Error for TreeError {}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EvalError {
    DimensionMismatch { arg0: usize, arg1: usize, arg2: usize },
    EmptyVectors,
}

impl fmt::Display for EvalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalError::DimensionMismatch { arg0, arg1, arg2 } => {
                write!(f, "argument dimensions differ: {arg0}, {arg1}, {arg2}")
            }
            EvalError::EmptyVectors => f.write_str("argument vectors are empty"),
        }
    }
}

impl core::error::Error for EvalError {}

impl ProgramTree {
    /// Wraps a pre-order node sequence, checking that it forms exactly one tree.
    pub fn from_prefix(nodes: Vec<OperatorKind>) -> Result<Self, TreeError> {
        if nodes.is_empty() || subtree_end(&nodes, 0) != Some(nodes.len()) {
            return Err(TreeError::MalformedPrefix);
        }
        Ok(ProgramTree { nodes })
    }

    pub fn terminal(kind: OperatorKind) -> Self {
        assert!(kind.is_terminal(), "{kind} is not a terminal");
        ProgramTree { nodes: alloc::vec![kind] }
    }

    pub fn unary(op: OperatorKind, child: ProgramTree) -> Self {
        assert_eq!(op.arity(), 1, "{op} is not unary");
        let mut nodes = Vec::with_capacity(child.nodes.len() + 1);
        nodes.push(op);
        nodes.extend(child.nodes);
        ProgramTree { nodes }
    }

    pub fn binary(op: OperatorKind, left: ProgramTree, right: ProgramTree) -> Self {
        assert_eq!(op.arity(), 2, "{op} is not binary");
        let mut nodes = Vec::with_capacity(left.nodes.len() + right.nodes.len() + 1);
        nodes.push(op);
        nodes.extend(left.nodes);
        nodes.extend(right.nodes);
        ProgramTree { nodes }
    }

    pub fn nodes(&self) -> &[OperatorKind] {
        &self.nodes
    }

    pub fn root(&self) -> OperatorKind {
        self.nodes[0]
    }

    /// Node count.
    pub fn size(&self) -> usize {
        self.nodes.len()
    }

    pub fn depth(&self) -> usize {
        self.node_depths().into_iter().max().unwrap_or(0)
    }

    /// Depth of every node, in prefix order.
    pub fn node_depths(&self) -> Vec<usize> {
        let mut depths = Vec::with_capacity(self.nodes.len());
        // Stack of (depth, remaining children) for open internal nodes.
        let mut open: Vec<(usize, usize)> = Vec::new();
        for &kind in &self.nodes {
            let depth = open.last().map_or(0, |&(d, _)| d + 1);
            depths.push(depth);
            if let Some(top) = open.last_mut() {
                top.1 -= 1;
            }
            while matches!(open.last(), Some(&(_, 0))) {
                open.pop();
            }
            if kind.arity() > 0 {
                open.push((depth, kind.arity()));
            }
        }
        depths
    }

    /// One past the last node of the subtree rooted at `start`.
    pub fn subtree_end(&self, start: usize) -> usize {
        subtree_end(&self.nodes, start).expect("tree invariant")
    }

    pub fn subtree(&self, start: usize) -> ProgramTree {
        let end = self.subtree_end(start);
        ProgramTree { nodes: self.nodes[start..end].to_vec() }
    }

    /// Copy of `self` with the subtree at `start` replaced by `with`.
    pub fn replace_subtree(&self, start: usize, with: &ProgramTree) -> ProgramTree {
        let end = self.subtree_end(start);
        let mut nodes = Vec::with_capacity(self.nodes.len() - (end - start) + with.nodes.len());
        nodes.extend_from_slice(&self.nodes[..start]);
        nodes.extend_from_slice(&with.nodes);
        nodes.extend_from_slice(&self.nodes[end..]);
        ProgramTree { nodes }
    }

    /// Evaluates with the default `rint` rounding (ties to even).
    pub fn evaluate(&self, args: [&[f64]; 3]) -> Result<Vec<f64>, EvalError> {
        self.evaluate_with(args, RintMode::HalfEven)
    }

    /// Evaluates the tree bottom-up on three equally sized vectors.
    ///
    /// Non-finite components are returned as-is; deciding what they mean is
    /// the caller's business.
    pub fn evaluate_with(&self, args: [&[f64]; 3], rint: RintMode) -> Result<Vec<f64>, EvalError> {
        let n = args[0].len();
        if args[1].len() != n || args[2].len() != n {
            return Err(EvalError::DimensionMismatch {
                arg0: n,
                arg1: args[1].len(),
                arg2: args[2].len(),
            });
        }
        if n == 0 {
            return Err(EvalError::EmptyVectors);
        }
        // Reverse prefix order is a valid postfix order for a value stack.
        let mut stack: Vec<Vec<f64>> = Vec::with_capacity(self.depth() + 2);
        for &kind in self.nodes.iter().rev() {
            match kind.arity() {
                0 => stack.push(args[kind.arg_index().unwrap()].to_vec()),
                1 => {
                    let top = stack.last_mut().expect("tree invariant");
                    apply_unary_in_place(kind, top, rint);
                }
                _ => {
                    // The left operand was pushed last.
                    let mut left = stack.pop().expect("tree invariant");
                    let right = stack.pop().expect("tree invariant");
                    apply_binary_in_place(kind, &mut left, &right);
                    stack.push(left);
                }
            }
        }
        debug_assert_eq!(stack.len(), 1);
        Ok(stack.pop().unwrap())
    }

    /// Graph description of the tree, one statement per line.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph program {\n");
        for (i, kind) in self.nodes.iter().enumerate() {
            let _ = writeln!(out, "  n{i} [label=\"{}\"];", kind.name());
        }
        let mut open: Vec<(usize, usize)> = Vec::new();
        for (i, &kind) in self.nodes.iter().enumerate() {
            if let Some(top) = open.last_mut() {
                let _ = writeln!(out, "  n{} -> n{i};", top.0);
                top.1 -= 1;
            }
            while matches!(open.last(), Some(&(_, 0))) {
                open.pop();
            }
            if kind.arity() > 0 {
                open.push((i, kind.arity()));
            }
        }
        out.push_str("}\n");
        out
    }

    fn fmt_node(&self, pos: usize, f: &mut fmt::Formatter<'_>) -> Result<usize, fmt::Error> {
        let kind = self.nodes[pos];
        f.write_str(kind.name())?;
        let mut next = pos + 1;
        if kind.arity() > 0 {
            f.write_char('(')?;
            for i in 0..kind.arity() {
                if i > 0 {
                    f.write_char(',')?;
                }
                next = self.fmt_node(next, f)?;
            }
            f.write_char(')')?;
        }
        Ok(next)
    }
}

fn subtree_end(nodes: &[OperatorKind], start: usize) -> Option<usize> {
    let mut pending = 1usize;
    let mut i = start;
    while pending > 0 {
        let kind = nodes.get(i)?;
        pending = pending - 1 + kind.arity();
        i += 1;
    }
    Some(i)
}

/// Canonical text, e.g. `add(ARG2,sub(ARG1,ARG0))`.
impl fmt::Display for ProgramTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_node(0, f).map(|_| ())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ParseErrorKind {
    UnknownIdentifier(String),
    /// The operator got `found` arguments instead of `expected`.
    Arity { op: OperatorKind, expected: usize, found: usize },
    UnbalancedParentheses,
    TrailingInput,
    UnexpectedToken,
    UnexpectedEnd,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseError {
    pub kind: ParseErrorKind,
    /// Byte offset into the input.
    pub offset: usize,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ParseErrorKind::UnknownIdentifier(id) => write!(f, "unknown identifier `{id}`")?,
            ParseErrorKind::Arity { op, expected, found } => {
                write!(f, "`{op}` takes {expected} argument(s), found {found}")?
            }
            ParseErrorKind::UnbalancedParentheses => f.write_str("unbalanced parentheses")?,
            ParseErrorKind::TrailingInput => f.write_str("unexpected trailing input")?,
            ParseErrorKind::UnexpectedToken => f.write_str("unexpected character")?,
            ParseErrorKind::UnexpectedEnd => f.write_str("unexpected end of input")?,
        }
        write!(f, " at byte {}", self.offset)
    }
}

impl core::error::Error for ParseError {}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    depth: usize,
    nodes: Vec<OperatorKind>,
}

impl Parser<'_> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn err(&self, kind: ParseErrorKind, offset: usize) -> ParseError {
        ParseError { kind, offset }
    }

    fn expr(&mut self) -> Result<(), ParseError> {
        match self.peek() {
            None => return Err(self.err(ParseErrorKind::UnexpectedEnd, self.pos)),
            Some(c) if !(c.is_ascii_alphanumeric() || c == b'_') => {
                let kind = if c == b')' {
                    ParseErrorKind::UnbalancedParentheses
                } else {
                    ParseErrorKind::UnexpectedToken
                };
                return Err(self.err(kind, self.pos));
            }
            _ => {}
        }
        let start = self.pos;
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
        {
            self.pos += 1;
        }
        // Identifiers are ASCII, so this slice is valid UTF-8.
        let ident = core::str::from_utf8(&self.src[start..self.pos]).unwrap();
        let kind = OperatorKind::from_name(ident)
            .ok_or_else(|| self.err(ParseErrorKind::UnknownIdentifier(ident.into()), start))?;
        self.nodes.push(kind);

        if kind.is_terminal() {
            if self.peek() == Some(b'(') {
                return Err(self.err(
                    ParseErrorKind::Arity { op: kind, expected: 0, found: 1 },
                    self.pos,
                ));
            }
            return Ok(());
        }

        match self.peek() {
            Some(b'(') => self.pos += 1,
            None => return Err(self.err(ParseErrorKind::UnexpectedEnd, self.pos)),
            Some(_) => return Err(self.err(ParseErrorKind::UnexpectedToken, self.pos)),
        }
        self.depth += 1;
        let mut found = 0;
        loop {
            self.expr()?;
            found += 1;
            match self.peek() {
                Some(b',') => self.pos += 1,
                Some(b')') => {
                    if found != kind.arity() {
                        return Err(self.err(
                            ParseErrorKind::Arity { op: kind, expected: kind.arity(), found },
                            self.pos,
                        ));
                    }
                    self.pos += 1;
                    self.depth -= 1;
                    return Ok(());
                }
                None => return Err(self.err(ParseErrorKind::UnbalancedParentheses, self.pos)),
                Some(_) => return Err(self.err(ParseErrorKind::UnexpectedToken, self.pos)),
            }
        }
    }
}

/// Parses `expr := IDENT '(' expr (',' expr)* ')' | TERMINAL`.
///
/// Identifiers are case-insensitive and whitespace between tokens is ignored.
pub fn parse_program(text: &str) -> Result<ProgramTree, ParseError> {
    let mut parser = Parser { src: text.as_bytes(), pos: 0, depth: 0, nodes: Vec::new() };
    parser.expr()?;
    if let Some(c) = parser.peek() {
        let kind = if c == b')' {
            ParseErrorKind::UnbalancedParentheses
        } else {
            ParseErrorKind::TrailingInput
        };
        return Err(parser.err(kind, parser.pos));
    }
    Ok(ProgramTree { nodes: parser.nodes })
}

impl FromStr for ProgramTree {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_program(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;
    use OperatorKind::*;

    fn rule() -> ProgramTree {
        parse_program("add(ARG2,sub(ARG1,ARG0))").unwrap()
    }

    #[test]
    fn rule_text_round_trips() {
        let t = rule();
        assert_eq!(t.nodes(), &[Add, Arg2, Sub, Arg1, Arg0]);
        assert_eq!(t.to_string(), "add(ARG2,sub(ARG1,ARG0))");
    }

    #[test]
    fn parse_is_case_and_space_tolerant() {
        let t = parse_program("ADD( arg2 , SUB(ARG1,ARG0) )").unwrap();
        assert_eq!(t, rule());
        assert_eq!(parse_program("\n\tsafediv(arg0,ARG1)\n").unwrap().to_string(), "safeDiv(ARG0,ARG1)");
    }

    #[test]
    fn parse_errors_carry_offsets() {
        let e = parse_program("add(ARG0)").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::Arity { op: Add, expected: 2, found: 1 });
        assert_eq!(e.offset, 8);

        let e = parse_program("foo(ARG0)").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::UnknownIdentifier("foo".into()));
        assert_eq!(e.offset, 0);

        let e = parse_program("neg(ARG0").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::UnbalancedParentheses);
        assert_eq!(e.offset, 8);

        let e = parse_program("neg(ARG0))").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::UnbalancedParentheses);
        assert_eq!(e.offset, 9);

        let e = parse_program("ARG0 ARG1").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::TrailingInput);
        assert_eq!(e.offset, 5);

        let e = parse_program("neg(ARG0,ARG1)").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::Arity { op: Neg, expected: 1, found: 2 });

        assert_eq!(parse_program("").unwrap_err().kind, ParseErrorKind::UnexpectedEnd);
        assert_eq!(
            parse_program("ARG0(ARG1)").unwrap_err().kind,
            ParseErrorKind::Arity { op: Arg0, expected: 0, found: 1 }
        );
        assert_eq!(parse_program("neg ARG0").unwrap_err().kind, ParseErrorKind::UnexpectedToken);
    }

    #[test]
    fn depth_and_size() {
        let t = ProgramTree::terminal(Arg0);
        assert_eq!((t.depth(), t.size()), (0, 1));
        assert_eq!((rule().depth(), rule().size()), (2, 5));

        let mut chain = ProgramTree::terminal(Arg0);
        for _ in 0..10 {
            chain = ProgramTree::unary(Neg, chain);
        }
        assert_eq!(chain.depth(), 10);
        assert!(chain.depth() <= DEPTH_LIMIT);
        let chain = ProgramTree::unary(Neg, chain);
        assert_eq!(chain.depth(), 11);
        assert!(chain.depth() > DEPTH_LIMIT);
    }

    #[test]
    fn node_depths_in_prefix_order() {
        // add(ARG2, sub(ARG1, ARG0))
        assert_eq!(rule().node_depths(), vec![0, 1, 1, 2, 2]);
        let t = parse_program("mul(neg(ARG0),ARG1)").unwrap();
        assert_eq!(t.node_depths(), vec![0, 1, 2, 1]);
    }

    #[test]
    fn evaluate_examples() {
        let out = rule().evaluate([&[1.0, 0.0], &[0.0, 1.0], &[2.0, 2.0]]).unwrap();
        assert_eq!(out, vec![1.0, 3.0]);

        let t = parse_program("safeDiv(ARG0,ARG1)").unwrap();
        let z = [9.0, 9.0, 9.0];
        assert_eq!(t.evaluate([&[4.0, 5.0, 6.0], &[2.0, 0.0, 3.0], &z]).unwrap(), vec![2.0, 0.0, 2.0]);

        let t = parse_program("roll(ARG0)").unwrap();
        assert_eq!(t.evaluate([&[1.0, 2.0, 3.0], &z, &z]).unwrap(), vec![2.0, 3.0, 1.0]);

        let t = parse_program("log1p(ARG0)").unwrap();
        assert_eq!(t.evaluate([&[0.0, 0.0], &[1.0, 1.0], &[1.0, 1.0]]).unwrap(), vec![0.0, 0.0]);

        let t = parse_program("rint(ARG0)").unwrap();
        let out = t.evaluate([&[1.5, -0.5, 2.3], &z, &z]).unwrap();
        assert_eq!(out, vec![2.0, 0.0, 2.0]);
        let out = t.evaluate_with([&[1.5, -0.5, 2.3], &z, &z], RintMode::TowardZero).unwrap();
        assert_eq!(out, vec![1.0, 0.0, 2.0]);
    }

    #[test]
    fn evaluate_operand_order() {
        let t = parse_program("sub(ARG0,ARG1)").unwrap();
        assert_eq!(t.evaluate([&[5.0], &[2.0], &[0.0]]).unwrap(), vec![3.0]);
        let t = parse_program("sub(neg(ARG0),half(ARG1))").unwrap();
        assert_eq!(t.evaluate([&[5.0], &[2.0], &[0.0]]).unwrap(), vec![-6.0]);
    }

    #[test]
    fn evaluate_rejects_dimension_mismatch() {
        let err = rule().evaluate([&[1.0], &[1.0, 2.0], &[1.0]]).unwrap_err();
        assert_eq!(err, EvalError::DimensionMismatch { arg0: 1, arg1: 2, arg2: 1 });
    }

    #[test]
    fn subtree_replace() {
        let t = rule();
        assert_eq!(t.subtree(2).to_string(), "sub(ARG1,ARG0)");
        let r = t.replace_subtree(2, &ProgramTree::terminal(Arg0));
        assert_eq!(r.to_string(), "add(ARG2,ARG0)");
        let r = t.replace_subtree(0, &ProgramTree::terminal(Arg1));
        assert_eq!(r.to_string(), "ARG1");
    }

    #[test]
    fn from_prefix_validates() {
        assert!(ProgramTree::from_prefix(vec![Add, Arg0]).is_err());
        assert!(ProgramTree::from_prefix(vec![Arg0, Arg1]).is_err());
        assert!(ProgramTree::from_prefix(vec![]).is_err());
        assert_eq!(ProgramTree::from_prefix(vec![Neg, Arg2]).unwrap().to_string(), "neg(ARG2)");
    }

    #[test]
    fn dot_rendering_lists_edges() {
        let dot = rule().to_dot();
        assert!(dot.contains("n0 [label=\"add\"]"));
        assert!(dot.contains("n0 -> n1;"));
        assert!(dot.contains("n0 -> n2;"));
        assert!(dot.contains("n2 -> n3;"));
        assert!(dot.contains("n2 -> n4;"));
        assert_eq!(dot.matches("->").count(), 4);
    }
}
