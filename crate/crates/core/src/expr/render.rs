use super::ast::{TransformExpr, TransformSequence};
use super::ops::BinaryOp;

/// Canonical text: lowercase names, no whitespace, and parentheses only
/// where precedence or left-associativity would otherwise change the tree.
pub fn render(seq: &TransformSequence) -> String {
    let mut out = String::new();
    for (i, expr) in seq.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        write_expr(expr, &mut out);
    }
    out
}

pub fn render_expr(expr: &TransformExpr) -> String {
    let mut out = String::new();
    write_expr(expr, &mut out);
    out
}

fn write_expr(expr: &TransformExpr, out: &mut String) {
    match expr {
        TransformExpr::Feature(i) => {
            out.push('f');
            out.push_str(&i.to_string());
        }
        TransformExpr::Unary(op, child) => {
            out.push_str(op.name());
            out.push('(');
            write_expr(child, out);
            out.push(')');
        }
        TransformExpr::Binary(op, left, right) => {
            write_operand(left, *op, false, out);
            out.push(op.symbol());
            write_operand(right, *op, true, out);
        }
    }
}

fn write_operand(child: &TransformExpr, parent: BinaryOp, is_right: bool, out: &mut String) {
    let needs_parens = match child {
        TransformExpr::Binary(op, _, _) => {
            let (c, p) = (op.precedence(), parent.precedence());
            // The grammar is left-associative, so an equal-precedence right
            // operand must keep its parentheses to survive a re-parse.
            c < p || (is_right && c == p)
        }
        _ => false,
    };
    if needs_parens {
        out.push('(');
        write_expr(child, out);
        out.push(')');
    } else {
        write_expr(child, out);
    }
}

/// Rewrites the tree so operands of `+` and `*` appear in key order.
pub fn canonicalize(expr: &TransformExpr) -> TransformExpr {
    canonical_with_key(expr).0
}

/// Dedup key: the rendering of [`canonicalize`]d form. Equal keys imply the
/// expressions are identical up to commuting `+`/`*` operands.
pub fn canonical_key(expr: &TransformExpr) -> String {
    canonical_with_key(expr).1
}

fn canonical_with_key(expr: &TransformExpr) -> (TransformExpr, String) {
    let tree = match expr {
        TransformExpr::Feature(i) => TransformExpr::Feature(*i),
        TransformExpr::Unary(op, child) => TransformExpr::unary(*op, canonical_with_key(child).0),
        TransformExpr::Binary(op, left, right) => {
            let (l, lk) = canonical_with_key(left);
            let (r, rk) = canonical_with_key(right);
            if op.is_commutative() && rk < lk {
                TransformExpr::binary(*op, r, l)
            } else {
                TransformExpr::binary(*op, l, r)
            }
        }
    };
    let key = render_expr(&tree);
    (tree, key)
}
