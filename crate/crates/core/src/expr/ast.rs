use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::ops::{BinaryOp, UnaryOp};

/// One generated feature, as a tree over 1-based feature references.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum TransformExpr {
    Feature(usize),
    Unary(UnaryOp, Box<TransformExpr>),
    Binary(BinaryOp, Box<TransformExpr>, Box<TransformExpr>),
}

impl TransformExpr {
    pub fn feature(index: usize) -> Self {
        TransformExpr::Feature(index)
    }

    pub fn unary(op: UnaryOp, child: TransformExpr) -> Self {
        TransformExpr::Unary(op, Box::new(child))
    }

    pub fn binary(op: BinaryOp, left: TransformExpr, right: TransformExpr) -> Self {
        TransformExpr::Binary(op, Box::new(left), Box::new(right))
    }

    /// Tree height, counting a lone feature reference as 1.
    pub fn depth(&self) -> usize {
        match self {
            TransformExpr::Feature(_) => 1,
            TransformExpr::Unary(_, child) => 1 + child.depth(),
            TransformExpr::Binary(_, l, r) => 1 + l.depth().max(r.depth()),
        }
    }

    /// Largest feature index referenced anywhere in the tree.
    pub fn max_feature(&self) -> usize {
        match self {
            TransformExpr::Feature(i) => *i,
            TransformExpr::Unary(_, child) => child.max_feature(),
            TransformExpr::Binary(_, l, r) => l.max_feature().max(r.max_feature()),
        }
    }

    /// Sorted, deduplicated feature indices used by the tree.
    pub fn features(&self) -> Vec<usize> {
        fn walk(e: &TransformExpr, out: &mut Vec<usize>) {
            match e {
                TransformExpr::Feature(i) => out.push(*i),
                TransformExpr::Unary(_, c) => walk(c, out),
                TransformExpr::Binary(_, l, r) => {
                    walk(l, out);
                    walk(r, out);
                }
            }
        }
        let mut out = Vec::new();
        walk(self, &mut out);
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Whether the 1-based feature token `index` occurs in the tree.
    pub fn references(&self, index: usize) -> bool {
        match self {
            TransformExpr::Feature(i) => *i == index,
            TransformExpr::Unary(_, c) => c.references(index),
            TransformExpr::Binary(_, l, r) => l.references(index) || r.references(index),
        }
    }

    pub fn node_count(&self) -> usize {
        match self {
            TransformExpr::Feature(_) => 1,
            TransformExpr::Unary(_, c) => 1 + c.node_count(),
            TransformExpr::Binary(_, l, r) => 1 + l.node_count() + r.node_count(),
        }
    }
}

impl fmt::Display for TransformExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&super::render::render_expr(self))
    }
}

impl Serialize for TransformExpr {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for TransformExpr {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        super::parse_expr(&text).map_err(serde::de::Error::custom)
    }
}

/// An ordered, non-empty list of generated features.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TransformSequence {
    exprs: Vec<TransformExpr>,
}

impl TransformSequence {
    /// Returns `None` for an empty list.
    pub fn new(exprs: Vec<TransformExpr>) -> Option<Self> {
        if exprs.is_empty() {
            None
        } else {
            Some(TransformSequence { exprs })
        }
    }

    pub fn exprs(&self) -> &[TransformExpr] {
        &self.exprs
    }

    pub fn into_exprs(self) -> Vec<TransformExpr> {
        self.exprs
    }

    pub fn len(&self) -> usize {
        self.exprs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exprs.is_empty()
    }

    /// Keeps at most `n` expressions (and at least one).
    pub fn truncate(&mut self, n: usize) {
        self.exprs.truncate(n.max(1));
    }

    pub fn iter(&self) -> std::slice::Iter<'_, TransformExpr> {
        self.exprs.iter()
    }
}

impl<'a> IntoIterator for &'a TransformSequence {
    type Item = &'a TransformExpr;
    type IntoIter = std::slice::Iter<'a, TransformExpr>;

    fn into_iter(self) -> Self::IntoIter {
        self.exprs.iter()
    }
}

impl fmt::Display for TransformSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&super::render::render(self))
    }
}

impl Serialize for TransformSequence {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for TransformSequence {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        super::parse(&text, &Default::default()).map_err(serde::de::Error::custom)
    }
}
