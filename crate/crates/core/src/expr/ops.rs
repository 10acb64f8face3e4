use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Two-operand operators. Written infix in the token language.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
}

/// One-operand operators. Written as `name(expr)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UnaryOp {
    Log,
    Sqrt,
    Square,
    Abs,
    Reciprocal,
    Sin,
    Cos,
    Tanh,
}

impl BinaryOp {
    pub const ALL: [BinaryOp; 4] = [BinaryOp::Add, BinaryOp::Sub, BinaryOp::Mul, BinaryOp::Div];

    pub fn name(self) -> &'static str {
        match self {
            BinaryOp::Add => "add",
            BinaryOp::Sub => "sub",
            BinaryOp::Mul => "mul",
            BinaryOp::Div => "div",
        }
    }

    pub fn symbol(self) -> char {
        match self {
            BinaryOp::Add => '+',
            BinaryOp::Sub => '-',
            BinaryOp::Mul => '*',
            BinaryOp::Div => '/',
        }
    }

    /// Binding strength; `*` and `/` bind tighter than `+` and `-`.
    pub fn precedence(self) -> u8 {
        match self {
            BinaryOp::Add | BinaryOp::Sub => 1,
            BinaryOp::Mul | BinaryOp::Div => 2,
        }
    }

    pub fn is_commutative(self) -> bool {
        matches!(self, BinaryOp::Add | BinaryOp::Mul)
    }
}

impl UnaryOp {
    pub const ALL: [UnaryOp; 8] = [
        UnaryOp::Log,
        UnaryOp::Sqrt,
        UnaryOp::Square,
        UnaryOp::Abs,
        UnaryOp::Reciprocal,
        UnaryOp::Sin,
        UnaryOp::Cos,
        UnaryOp::Tanh,
    ];

    pub fn name(self) -> &'static str {
        match self {
            UnaryOp::Log => "log",
            UnaryOp::Sqrt => "sqrt",
            UnaryOp::Square => "square",
            UnaryOp::Abs => "abs",
            UnaryOp::Reciprocal => "reciprocal",
            UnaryOp::Sin => "sin",
            UnaryOp::Cos => "cos",
            UnaryOp::Tanh => "tanh",
        }
    }
}

impl fmt::Display for BinaryOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl fmt::Display for UnaryOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for UnaryOp {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        UnaryOp::ALL
            .into_iter()
            .find(|op| op.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown unary operator `{s}`"))
    }
}

impl FromStr for BinaryOp {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        BinaryOp::ALL
            .into_iter()
            .find(|op| {
                op.name().eq_ignore_ascii_case(s) || s.len() == 1 && s.starts_with(op.symbol())
            })
            .ok_or_else(|| format!("unknown binary operator `{s}`"))
    }
}

/// The operators a generator may use. Defaults to every operator the
/// language knows about.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OperatorSet {
    binary: BTreeSet<BinaryOp>,
    unary: BTreeSet<UnaryOp>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("operator set must contain at least one operator")]
pub struct EmptyOperatorSet;

impl OperatorSet {
    pub fn new(
        binary: impl IntoIterator<Item = BinaryOp>,
        unary: impl IntoIterator<Item = UnaryOp>,
    ) -> Result<Self, EmptyOperatorSet> {
        let set = OperatorSet {
            binary: binary.into_iter().collect(),
            unary: unary.into_iter().collect(),
        };
        if set.binary.is_empty() && set.unary.is_empty() {
            return Err(EmptyOperatorSet);
        }
        Ok(set)
    }

    /// Builds a set from serialized lowercase names such as `["add", "log"]`.
    pub fn from_names<'a>(names: impl IntoIterator<Item = &'a str>) -> Result<Self, String> {
        let mut binary = Vec::new();
        let mut unary = Vec::new();
        for name in names {
            if let Ok(op) = name.parse::<BinaryOp>() {
                binary.push(op);
            } else {
                unary.push(name.parse::<UnaryOp>()?);
            }
        }
        OperatorSet::new(binary, unary).map_err(|e| e.to_string())
    }

    pub fn contains_binary(&self, op: BinaryOp) -> bool {
        self.binary.contains(&op)
    }

    pub fn contains_unary(&self, op: UnaryOp) -> bool {
        self.unary.contains(&op)
    }

    pub fn binary(&self) -> impl Iterator<Item = BinaryOp> + '_ {
        self.binary.iter().copied()
    }

    pub fn unary(&self) -> impl Iterator<Item = UnaryOp> + '_ {
        self.unary.iter().copied()
    }

    /// Lowercase names of every operator, binary first.
    pub fn names(&self) -> Vec<&'static str> {
        self.binary()
            .map(BinaryOp::name)
            .chain(self.unary().map(UnaryOp::name))
            .collect()
    }
}

impl Default for OperatorSet {
    fn default() -> Self {
        OperatorSet {
            binary: BinaryOp::ALL.into_iter().collect(),
            unary: UnaryOp::ALL.into_iter().collect(),
        }
    }
}
