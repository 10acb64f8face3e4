//! Offline stand-in for a language model.
//!
//! The backend reads the prompts built by this module back in. As critic it
//! names the most correlated pair and the most skewed column; as generator
//! it turns the features mentioned in the advice into a product, a log and a
//! ratio. Output depends only on the request text.

use std::fmt::Write as _;

use super::prompts::{
    BINARY_PREFIX, DESCRIPTIONS_HEADER, DISTRIBUTION_HEADER, FEATURES_HEADER, SEMANTIC_HEADER,
    STATS_BLOCK_HEADER, UNARY_PREFIX,
};
use super::{AgentRole, BackendError, ChatBackend, ChatRequest};
use crate::diagnosis::{sig4, LOW_VARIANCE_PREFIX, PAIRS_HEADER, STATS_HEADER};

/// Pairs with a smaller |r| are treated as uncorrelated, leaving the choice
/// to the lowest-index rule.
pub const WEAK_CORRELATION: f64 = 0.3;

#[derive(Debug, Clone, Copy, Default)]
pub struct HeuristicBackend;

impl HeuristicBackend {
    pub fn new() -> Self {
        HeuristicBackend
    }
}

impl ChatBackend for HeuristicBackend {
    fn complete(&mut self, request: &ChatRequest) -> Result<String, BackendError> {
        Ok(match request.role {
            AgentRole::Critic => critic(&request.user),
            AgentRole::Generator => generator(&request.system, &request.user),
        })
    }

    fn name(&self) -> &str {
        "heuristic"
    }
}

/// Parses `f12` at the start of `s`, returning the 1-based index and the
/// length consumed.
fn leading_token(s: &str) -> Option<(usize, usize)> {
    let rest = s.strip_prefix('f')?;
    let digits = rest.chars().take_while(char::is_ascii_digit).count();
    if digits == 0 {
        return None;
    }
    let index = rest[..digits].parse().ok().filter(|&i| i > 0)?;
    Some((index, digits + 1))
}

fn is_word(b: u8) -> bool {
    b.is_ascii_alphanumeric() || b == b'_'
}

/// Feature tokens mentioned outside parentheses, in order of first
/// appearance.
fn mentioned(text: &str, limit: usize) -> Vec<usize> {
    let bytes = text.as_bytes();
    let mut found = Vec::new();
    let mut depth = 0usize;
    let mut i = 0;
    while i < bytes.len() {
        match bytes[i] {
            b'(' => depth += 1,
            b')' => depth = depth.saturating_sub(1),
            b'f' if depth == 0 && (i == 0 || !is_word(bytes[i - 1])) => {
                if let Some((index, len)) = leading_token(&text[i..]) {
                    let boundary = bytes.get(i + len).is_none_or(|&b| !is_word(b));
                    if boundary && index <= limit && !found.contains(&index) {
                        found.push(index);
                    }
                    i += len;
                    continue;
                }
            }
            _ => {}
        }
        i += 1;
    }
    found
}

/// Lines strictly between the `start` line and the first line satisfying
/// `end`.
fn block<'a>(text: &'a str, start: &str, end: impl Fn(&str) -> bool) -> Vec<&'a str> {
    text.lines()
        .skip_while(|l| l.trim() != start)
        .skip(1)
        .take_while(|l| !end(l))
        .collect()
}

/// `fN = name...` lines of a block, as (index, name).
fn named_tokens(lines: &[&str]) -> Vec<(usize, String)> {
    lines
        .iter()
        .filter_map(|l| {
            let (index, len) = leading_token(l)?;
            let name = l[len..].strip_prefix(" = ")?;
            Some((index, name.to_string()))
        })
        .collect()
}

struct ColumnLine {
    index: usize,
    skew: f64,
    constant: bool,
}

fn critic(user: &str) -> String {
    let mut names: Vec<(usize, String)> =
        named_tokens(&block(user, DESCRIPTIONS_HEADER, str::is_empty));
    names.extend(named_tokens(&block(
        user,
        "Generated features:",
        str::is_empty,
    )));
    let label = |index: usize| -> String {
        let name = names.iter().find(|(i, _)| *i == index).map(|(_, n)| {
            let n = n.split(": ").next().unwrap_or(n);
            n.find(" (round ").map_or(n, |cut| &n[..cut])
        });
        match name {
            Some(n) if n != format!("f{index}") => format!("f{index} ({n})"),
            _ => format!("f{index}"),
        }
    };

    let stats = block(user, STATS_BLOCK_HEADER, |_| false);
    let columns: Vec<ColumnLine> = stats
        .iter()
        .skip_while(|l| **l != STATS_HEADER)
        .skip(1)
        .take_while(|l| **l != PAIRS_HEADER)
        .filter_map(|l| {
            let fields: Vec<&str> = l.split_whitespace().collect();
            let (index, _) = leading_token(fields.first()?)?;
            Some(ColumnLine {
                index,
                skew: fields.get(5)?.parse().ok()?,
                constant: fields.last() == Some(&"constant"),
            })
        })
        .collect();
    let pairs: Vec<(usize, usize, f64)> = stats
        .iter()
        .skip_while(|l| **l != PAIRS_HEADER)
        .skip(1)
        .take_while(|l| !l.starts_with(LOW_VARIANCE_PREFIX))
        .filter_map(|l| {
            let (pair, r) = l.split_once(' ')?;
            let (a, b) = pair.split_once('~')?;
            Some((
                leading_token(a)?.0,
                leading_token(b)?.0,
                r.trim().parse().ok()?,
            ))
        })
        .collect();

    let strong = pairs.iter().filter(|p| p.2 >= WEAK_CORRELATION).fold(
        None::<(usize, usize, f64)>,
        |best, &p| match best {
            Some(b) if b.2 > p.2 || (b.2 == p.2 && (b.0, b.1) <= (p.0, p.1)) => Some(b),
            _ => Some(p),
        },
    );
    let varying: Vec<usize> = columns
        .iter()
        .filter(|c| !c.constant)
        .map(|c| c.index)
        .collect();
    let skewed = columns
        .iter()
        .filter(|c| !c.constant)
        .fold(None::<&ColumnLine>, |best, c| match best {
            Some(b) if b.skew.abs() >= c.skew.abs() => Some(b),
            _ => Some(c),
        });

    let mut out = String::from("SEMANTIC:\n");
    match (strong, varying.as_slice()) {
        (Some((a, b, r)), _) => writeln!(
            out,
            "- {} and {} are the most strongly related pair (|r| = {}); their product f{a}*f{b} and ratio f{a}/f{b} describe how they interact.",
            label(a),
            label(b),
            sig4(r)
        )
        .unwrap(),
        (None, [a, b, ..]) => writeln!(
            out,
            "- {} and {} show no strong linear relation; their product f{a}*f{b} and ratio f{a}/f{b} may reveal a joint effect.",
            label(*a),
            label(*b)
        )
        .unwrap(),
        (None, [a]) => writeln!(out, "- {} is the only informative feature; transform it directly.", label(*a)).unwrap(),
        (None, []) => out.push_str("- Every feature is constant; no combination can add information.\n"),
    }
    out.push_str("DISTRIBUTION:\n");
    match skewed {
        Some(c) => writeln!(
            out,
            "- {} is the most skewed feature (skewness {}); log(f{}) compresses its tail.",
            label(c.index),
            sig4(c.skew),
            c.index
        )
        .unwrap(),
        None => out.push_str("- No column varies enough to diagnose its shape.\n"),
    }
    out
}

struct Available {
    binary: Vec<String>,
    unary: Vec<String>,
}

impl Available {
    fn from_system(system: &str) -> Self {
        let names = |prefix: &str| -> Vec<String> {
            system
                .lines()
                .find_map(|l| l.strip_prefix(prefix))
                .map(|rest| {
                    rest.split(", ")
                        .map(|item| {
                            let item = item.trim();
                            // "* (mul)" for binary, "log(x)" for unary
                            match item.split_once('(') {
                                Some((sym, name)) if sym.trim().len() == 1 => {
                                    name.trim_end_matches(')').to_string()
                                }
                                Some((name, _)) => name.to_string(),
                                None => item.to_string(),
                            }
                        })
                        .collect()
                })
                .unwrap_or_default()
        };
        Available {
            binary: names(BINARY_PREFIX),
            unary: names(UNARY_PREFIX),
        }
    }

    fn has(&self, name: &str) -> bool {
        self.binary.iter().chain(&self.unary).any(|n| n == name)
    }

    fn binary_expr(&self, name: &str, a: usize, b: usize) -> Option<String> {
        let symbol = match name {
            "add" => '+',
            "sub" => '-',
            "mul" => '*',
            "div" => '/',
            _ => return None,
        };
        self.has(name).then(|| format!("f{a}{symbol}f{b}"))
    }

    fn unary_expr(&self, name: &str, a: usize) -> Option<String> {
        self.has(name).then(|| format!("{name}(f{a})"))
    }

    /// Any single expression the operator set allows.
    fn fallback(&self, a: usize, b: usize) -> Option<String> {
        if let Some(op) = self.unary.first() {
            return Some(format!("{op}(f{a})"));
        }
        self.binary
            .first()
            .and_then(|op| self.binary_expr(op, a, b))
    }
}

fn generator(system: &str, user: &str) -> String {
    let n = named_tokens(&block(system, FEATURES_HEADER, str::is_empty)).len();
    let ops = Available::from_system(system);
    let is_header = |l: &str| l == SEMANTIC_HEADER || l == DISTRIBUTION_HEADER || l.is_empty();
    let semantic = mentioned(&block(user, SEMANTIC_HEADER, is_header).join("\n"), n);
    let distribution = mentioned(&block(user, DISTRIBUTION_HEADER, is_header).join("\n"), n);
    let mut all = semantic.clone();
    all.extend(distribution.iter().filter(|t| !semantic.contains(t)));

    let mut exprs: Vec<String> = Vec::new();
    let (explanation, a, b) = if let [x] = all.as_slice() {
        let x = *x;
        let y = (1..=n).find(|&i| i != x).unwrap_or(x);
        exprs.extend(
            ["log", "sqrt", "square"]
                .iter()
                .filter_map(|op| ops.unary_expr(op, x)),
        );
        if y != x {
            exprs.extend(
                ["mul", "div"]
                    .iter()
                    .filter_map(|op| ops.binary_expr(op, x, y)),
            );
        }
        (
            format!("Variants of f{x} under the available operators."),
            x,
            y,
        )
    } else {
        let source = if semantic.len() >= 2 { &semantic } else { &all };
        let (a, b) = match source.as_slice() {
            [a, b, ..] => (*a, *b),
            _ if n >= 2 => (1, 2),
            _ => (1, 1),
        };
        let s = distribution.first().or(all.first()).copied().unwrap_or(a);
        if a != b {
            exprs.extend(ops.binary_expr("mul", a, b));
            exprs.extend(ops.unary_expr("log", s));
            exprs.extend(ops.binary_expr("div", a, b));
        } else {
            exprs.extend(ops.unary_expr("log", a));
            exprs.extend(ops.unary_expr("square", a));
        }
        (
            format!("The product and ratio of f{a} and f{b} capture their interaction, and the log tames f{s}."),
            a,
            b,
        )
    };
    if exprs.is_empty() {
        exprs.extend(ops.fallback(a, b));
    }
    format!("{explanation}\n<SEQ>{}</SEQ>", exprs.join(","))
}
