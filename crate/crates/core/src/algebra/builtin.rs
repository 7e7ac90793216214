//! Built-in algebras. All tables hold exact small integers.

use super::StructureConstants;
use crate::tensor::Tensor3;

pub const BUILTIN_NAMES: &[&str] =
    &["h4-e", "h4-psi", "complex", "dual", "split-complex", "diag3", "cyclic3", "nil3", "bicomplex"];

pub fn builtin(name: &str) -> Option<StructureConstants> {
    Some(match name {
        "h4-e" => h4_e(),
        "h4-psi" => h4_psi(),
        "complex" => complex(),
        "dual" => dual(),
        "split-complex" => split_complex(),
        "diag3" => diag(3),
        "cyclic3" => cyclic3(),
        "nil3" => nil3(),
        "bicomplex" => bicomplex(),
        _ => return None,
    })
}

/// Table from a rule `e_i e_j = c · e_k`, with `e_0` as the unit.
fn from_rule(tag: &str, n: usize, rule: impl Fn(usize, usize) -> Option<(usize, f64)>) -> StructureConstants {
    let mut p = Tensor3::zeros(n);
    for i in 0..n {
        for j in 0..n {
            if let Some((k, c)) = rule(i, j) {
                p[(k, i, j)] = c;
            }
        }
    }
    StructureConstants::new(tag, p, Some(0)).expect("built-in table is well-formed")
}

/// H4 in the basis `1, j, k, jk` with `j² = k² = (jk)² = 1`.
///
/// The basis is the Klein four-group, so `e_a e_b = e_{a xor b}`.
pub fn h4_e() -> StructureConstants {
    from_rule("h4-e", 4, |i, j| Some((i ^ j, 1.0)))
}

/// H4 in the idempotent basis: `ψ_i ψ_j = δ_ij ψ_i`.
pub fn h4_psi() -> StructureConstants {
    diag_tagged("h4-psi", 4)
}

/// `R^n` with componentwise multiplication; the unit is `(1, …, 1)`.
pub fn diag(n: usize) -> StructureConstants {
    diag_tagged(&format!("diag{n}"), n)
}

fn diag_tagged(tag: &str, n: usize) -> StructureConstants {
    let p = Tensor3::from_fn(n, |k, i, j| if i == j && j == k { 1.0 } else { 0.0 });
    StructureConstants::with_unit(tag, p, Some(vec![1.0; n])).expect("built-in table is well-formed")
}

pub fn complex() -> StructureConstants {
    from_rule("complex", 2, |i, j| match (i, j) {
        (1, 1) => Some((0, -1.0)),
        _ => Some((i + j, 1.0)),
    })
}

/// Dual numbers: the second basis element squares to zero.
pub fn dual() -> StructureConstants {
    from_rule("dual", 2, |i, j| (i + j < 2).then_some((i + j, 1.0)))
}

pub fn split_complex() -> StructureConstants {
    from_rule("split-complex", 2, |i, j| Some(((i + j) % 2, 1.0)))
}

/// `1, j, j²` with `j³ = 1`.
pub fn cyclic3() -> StructureConstants {
    from_rule("cyclic3", 3, |i, j| Some(((i + j) % 3, 1.0)))
}

/// `1, ε, ε²` with `ε³ = 0`.
pub fn nil3() -> StructureConstants {
    from_rule("nil3", 3, |i, j| (i + j < 3).then_some((i + j, 1.0)))
}

/// `1, i, j, ij` with `i² = j² = -1` and `ij = ji`.
pub fn bicomplex() -> StructureConstants {
    from_rule("bicomplex", 4, |a, b| {
        let sign = if (a & b).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
        Some((a ^ b, sign))
    })
}
