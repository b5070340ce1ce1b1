//! Weighted Boolean query language and the extended Boolean p-norm model.
//!
//! Grammar (operators case-insensitive):
//!
//! ```text
//! expr := or
//! or   := and ("OR" and)*
//! and  := atom ("AND" atom)*
//! atom := TERM (":" WEIGHT)? | "(" expr ")" ("^" P)?
//! ```
//!
//! Weights lie in (0, 1] and default to 1; `p` is at least 1 and defaults to 2.

use std::fmt;

use rayon::prelude::*;

use crate::corpus::{tokenize, TokenizerConfig};
use crate::index::InvertedIndex;
use crate::{Error, RankedList, Result};

pub const DEFAULT_P: f64 = 2.0;

#[derive(Debug, Clone, PartialEq)]
pub enum QueryAst {
    Term { term: String, weight: f64 },
    And { children: Vec<QueryAst>, p: f64 },
    Or { children: Vec<QueryAst>, p: f64 },
}

impl QueryAst {
    pub fn term(term: impl Into<String>, weight: f64) -> Result<Self> {
        check_weight(weight, 0)?;
        Ok(QueryAst::Term {
            term: term.into(),
            weight,
        })
    }

    pub fn and(children: Vec<QueryAst>, p: f64) -> Result<Self> {
        check_node(&children, p)?;
        Ok(QueryAst::And { children, p })
    }

    pub fn or(children: Vec<QueryAst>, p: f64) -> Result<Self> {
        check_node(&children, p)?;
        Ok(QueryAst::Or { children, p })
    }

    /// OR over weighted terms; a single term is returned as a bare term node.
    /// Weights are rescaled so the largest becomes 1.
    pub fn weighted_or<'a>(terms: impl IntoIterator<Item = (&'a str, f64)>, p: f64) -> Result<Self> {
        let terms: Vec<(&str, f64)> = terms.into_iter().collect();
        let max = terms.iter().map(|(_, w)| *w).fold(0.0, f64::max);
        if terms.is_empty() || max <= 0.0 {
            return Err(Error::InvalidArgument("query has no positively weighted terms".into()));
        }
        let mut children = terms
            .into_iter()
            .filter(|(_, w)| *w > 0.0)
            .map(|(t, w)| QueryAst::term(t, w / max))
            .collect::<Result<Vec<_>>>()?;
        if children.len() == 1 {
            Ok(children.pop().unwrap())
        } else {
            QueryAst::or(children, p)
        }
    }

    /// Leaf terms with their weights, left to right.
    pub fn terms(&self) -> Vec<(&str, f64)> {
        let mut out = Vec::new();
        self.collect_terms(&mut out);
        out
    }

    fn collect_terms<'a>(&'a self, out: &mut Vec<(&'a str, f64)>) {
        match self {
            QueryAst::Term { term, weight } => out.push((term, *weight)),
            QueryAst::And { children, .. } | QueryAst::Or { children, .. } => {
                children.iter().for_each(|c| c.collect_terms(out))
            }
        }
    }

    /// Maps every term through the tokenizer so it matches indexed terms.
    /// Terms the tokenizer would drop are kept verbatim and simply match nothing.
    pub fn normalized(&self, config: &TokenizerConfig) -> QueryAst {
        match self {
            QueryAst::Term { term, weight } => QueryAst::Term {
                term: tokenize(term, config).into_iter().next().unwrap_or_else(|| term.clone()),
                weight: *weight,
            },
            QueryAst::And { children, p } => QueryAst::And {
                children: children.iter().map(|c| c.normalized(config)).collect(),
                p: *p,
            },
            QueryAst::Or { children, p } => QueryAst::Or {
                children: children.iter().map(|c| c.normalized(config)).collect(),
                p: *p,
            },
        }
    }

    fn weight_in_parent(&self) -> f64 {
        match self {
            QueryAst::Term { weight, .. } => *weight,
            _ => 1.0,
        }
    }
}

impl fmt::Display for QueryAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QueryAst::Term { term, weight } if *weight == 1.0 => write!(f, "{term}"),
            QueryAst::Term { term, weight } => write!(f, "{term}:{weight}"),
            QueryAst::And { children, p } | QueryAst::Or { children, p } => {
                let op = if matches!(self, QueryAst::And { .. }) { " AND " } else { " OR " };
                f.write_str("(")?;
                for (i, c) in children.iter().enumerate() {
                    if i > 0 {
                        f.write_str(op)?;
                    }
                    write!(f, "{c}")?;
                }
                write!(f, ")^{p}")
            }
        }
    }
}

fn check_weight(weight: f64, column: usize) -> Result<()> {
    if weight > 0.0 && weight <= 1.0 {
        Ok(())
    } else {
        Err(Error::Range {
            what: "weight",
            column,
            value: weight.to_string(),
        })
    }
}

fn check_p(p: f64, column: usize) -> Result<()> {
    if p >= 1.0 && p.is_finite() {
        Ok(())
    } else {
        Err(Error::Range {
            what: "p",
            column,
            value: p.to_string(),
        })
    }
}

fn check_node(children: &[QueryAst], p: f64) -> Result<()> {
    if children.len() < 2 {
        return Err(Error::InvalidArgument("operators need at least two operands".into()));
    }
    check_p(p, 0)
}

pub fn parse_query(input: &str) -> Result<QueryAst> {
    parse_query_with_p(input, DEFAULT_P)
}

/// Parses `input`, giving operators without an explicit `^P` the exponent `default_p`.
pub fn parse_query_with_p(input: &str, default_p: f64) -> Result<QueryAst> {
    check_p(default_p, 0)?;
    let tokens = lex(input);
    let mut parser = Parser {
        tokens: &tokens,
        pos: 0,
        default_p,
    };
    let ast = parser.expr()?;
    match parser.peek() {
        Token { kind: Kind::Eof, .. } => Ok(ast),
        tok => Err(syntax(tok.column, format!("unexpected {}", tok.describe()))),
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Kind {
    LParen,
    RParen,
    Colon,
    Caret,
    Word(String),
    Eof,
}

#[derive(Debug, Clone)]
struct Token {
    kind: Kind,
    column: usize,
}

impl Token {
    fn describe(&self) -> String {
        match &self.kind {
            Kind::LParen => "'('".into(),
            Kind::RParen => "')'".into(),
            Kind::Colon => "':'".into(),
            Kind::Caret => "'^'".into(),
            Kind::Word(w) => format!("{w:?}"),
            Kind::Eof => "end of input".into(),
        }
    }

    fn is_operator(&self, op: &str) -> bool {
        matches!(&self.kind, Kind::Word(w) if w.eq_ignore_ascii_case(op))
    }
}

fn lex(input: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut word: Option<(String, usize)> = None;
    let mut column = 0;
    for (i, c) in input.chars().enumerate() {
        column = i + 1;
        let single = match c {
            '(' => Some(Kind::LParen),
            ')' => Some(Kind::RParen),
            ':' => Some(Kind::Colon),
            '^' => Some(Kind::Caret),
            _ => None,
        };
        if single.is_some() || c.is_whitespace() {
            if let Some((w, col)) = word.take() {
                tokens.push(Token { kind: Kind::Word(w), column: col });
            }
            if let Some(kind) = single {
                tokens.push(Token { kind, column });
            }
        } else {
            word.get_or_insert_with(|| (String::new(), column)).0.push(c);
        }
    }
    if let Some((w, col)) = word.take() {
        tokens.push(Token { kind: Kind::Word(w), column: col });
    }
    tokens.push(Token {
        kind: Kind::Eof,
        column: column + 1,
    });
    tokens
}

fn syntax(column: usize, message: impl Into<String>) -> Error {
    Error::Syntax {
        column,
        message: message.into(),
    }
}

struct Parser<'a> {
    tokens: &'a [Token],
    pos: usize,
    default_p: f64,
}

/// Operator node under construction; `p` is `None` until set by `^P`.
enum Node {
    Leaf(QueryAst),
    Op { and: bool, children: Vec<Node>, p: Option<f64> },
}

impl Node {
    fn finish(self, default_p: f64) -> QueryAst {
        match self {
            Node::Leaf(ast) => ast,
            Node::Op { and, children, p } => {
                let children = children.into_iter().map(|c| c.finish(default_p)).collect();
                let p = p.unwrap_or(default_p);
                if and {
                    QueryAst::And { children, p }
                } else {
                    QueryAst::Or { children, p }
                }
            }
        }
    }
}

impl Parser<'_> {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn advance(&mut self) -> &Token {
        let tok = &self.tokens[self.pos];
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        tok
    }

    fn expr(&mut self) -> Result<QueryAst> {
        let node = self.or()?;
        Ok(node.finish(self.default_p))
    }

    fn or(&mut self) -> Result<Node> {
        self.chain("OR", false, Self::and)
    }

    fn and(&mut self) -> Result<Node> {
        self.chain("AND", true, Self::atom)
    }

    fn chain(&mut self, op: &str, and: bool, operand: fn(&mut Self) -> Result<Node>) -> Result<Node> {
        let mut children = vec![operand(self)?];
        while self.peek().is_operator(op) {
            self.advance();
            children.push(operand(self)?);
        }
        if children.len() == 1 {
            Ok(children.pop().unwrap())
        } else {
            Ok(Node::Op { and, children, p: None })
        }
    }

    fn atom(&mut self) -> Result<Node> {
        let tok = self.advance().clone();
        match tok.kind {
            Kind::Word(ref w) if !tok.is_operator("AND") && !tok.is_operator("OR") => {
                if let Some((offset, _)) = w.chars().enumerate().find(|(_, c)| !c.is_alphanumeric()) {
                    return Err(syntax(tok.column + offset, format!("invalid character in term {w:?}")));
                }
                let mut weight = 1.0;
                if self.peek().kind == Kind::Colon {
                    self.advance();
                    let (value, column) = self.number("weight")?;
                    check_weight(value, column)?;
                    weight = value;
                }
                Ok(Node::Leaf(QueryAst::Term {
                    term: w.to_lowercase(),
                    weight,
                }))
            }
            Kind::LParen => {
                let mut inner = self.or()?;
                let close = self.advance().clone();
                if close.kind != Kind::RParen {
                    return Err(syntax(close.column, format!("expected ')' but found {}", close.describe())));
                }
                if self.peek().kind == Kind::Caret {
                    self.advance();
                    let (value, column) = self.number("p")?;
                    check_p(value, column)?;
                    if let Node::Op { p, .. } = &mut inner {
                        *p = Some(value);
                    }
                }
                Ok(inner)
            }
            _ => Err(syntax(tok.column, format!("expected term or '(' but found {}", tok.describe()))),
        }
    }

    fn number(&mut self, what: &str) -> Result<(f64, usize)> {
        let tok = self.advance().clone();
        match &tok.kind {
            Kind::Word(w) => match w.parse::<f64>() {
                Ok(v) if !v.is_nan() => Ok((v, tok.column)),
                _ => Err(syntax(tok.column, format!("invalid {what} {w:?}"))),
            },
            _ => Err(syntax(tok.column, format!("expected {what} but found {}", tok.describe()))),
        }
    }
}

fn check_operands(doc_weights: &[f64], query_weights: &[f64], p: f64) -> Result<()> {
    if doc_weights.len() != query_weights.len() || doc_weights.is_empty() {
        return Err(Error::LengthMismatch {
            docs: doc_weights.len(),
            query: query_weights.len(),
        });
    }
    check_p(p, 0)?;
    if doc_weights.iter().any(|w| !(0.0..=1.0).contains(w)) {
        return Err(Error::InvalidArgument("document weights must lie in [0, 1]".into()));
    }
    if query_weights.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
        return Err(Error::InvalidArgument("query weights must be positive".into()));
    }
    Ok(())
}

/// `[Σ v^p·w^p / Σ w^p]^(1/p)`, computed with both vectors rescaled by their
/// maxima so that large `p` neither underflows nor overflows.
fn power_mean(values: impl Iterator<Item = f64> + Clone, weights: &[f64], p: f64) -> f64 {
    let vmax = values.clone().fold(0.0, f64::max);
    if vmax == 0.0 {
        return 0.0;
    }
    let wmax = weights.iter().copied().fold(0.0, f64::max);
    let (num, den) = values.zip(weights).fold((0.0, 0.0), |(num, den), (v, w)| {
        let wp = (w / wmax).powf(p);
        (num + (v / vmax).powf(p) * wp, den + wp)
    });
    (vmax * (num / den).powf(1.0 / p)).clamp(0.0, 1.0)
}

/// Soft AND: `1 − [Σ (1−wd_i)^p·wq_i^p / Σ wq_i^p]^(1/p)`.
pub fn eval_and(doc_weights: &[f64], query_weights: &[f64], p: f64) -> Result<f64> {
    check_operands(doc_weights, query_weights, p)?;
    let misses = doc_weights.iter().map(|w| 1.0 - w);
    Ok((1.0 - power_mean(misses, query_weights, p)).clamp(0.0, 1.0))
}

/// Soft OR: `[Σ wd_i^p·wq_i^p / Σ wq_i^p]^(1/p)`.
pub fn eval_or(doc_weights: &[f64], query_weights: &[f64], p: f64) -> Result<f64> {
    check_operands(doc_weights, query_weights, p)?;
    Ok(power_mean(doc_weights.iter().copied(), query_weights, p))
}

/// Recursive p-norm score of `doc_id`. Unindexed query terms score 0.
pub fn score_pnorm(index: &InvertedIndex, ast: &QueryAst, doc_id: &str) -> Result<f64> {
    if !index.contains_doc(doc_id) {
        return Err(Error::UnknownDocument(doc_id.to_string()));
    }
    score_node(index, ast, doc_id)
}

fn score_node(index: &InvertedIndex, ast: &QueryAst, doc_id: &str) -> Result<f64> {
    match ast {
        QueryAst::Term { term, .. } => index.doc_term_weight(doc_id, term),
        QueryAst::And { children, p } | QueryAst::Or { children, p } => {
            let scores = children
                .iter()
                .map(|c| score_node(index, c, doc_id))
                .collect::<Result<Vec<_>>>()?;
            let weights: Vec<f64> = children.iter().map(QueryAst::weight_in_parent).collect();
            if matches!(ast, QueryAst::And { .. }) {
                eval_and(&scores, &weights, *p)
            } else {
                eval_or(&scores, &weights, *p)
            }
        }
    }
}

/// Top `k` documents by p-norm score; zero-score documents are omitted.
pub fn rank_pnorm(index: &InvertedIndex, ast: &QueryAst, k: usize) -> Result<RankedList> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    let doc_ids: Vec<&str> = index.doc_ids().collect();
    let scored = doc_ids
        .par_iter()
        .map(|id| score_node(index, ast, id).map(|s| (id.to_string(), s)))
        .collect::<Result<Vec<_>>>()?;
    Ok(RankedList::top_k(scored, k))
}
