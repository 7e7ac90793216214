//! Conditions under which a connection propagates generalized analyticity
//! to the iterated derivatives `f^(m)`.
//!
//! Index `1` of the textbook conditions is the unit direction: contracting
//! with the unit coordinates `u` gives `Γ^i_1j` when `e_1 = 1` and the
//! natural generalization in bases without a unit basis element.

use super::{check_finite, fd_jacobian, ConnectionField, DiffConfig, GAPair, GammaField, VectorField};
use crate::algebra::StructureConstants;
use crate::error::Result;
use crate::tensor::{self, Tensor3};

/// Both chain conditions at one point, stored at `(i, k, r)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainResiduals {
    /// `Γ^i_1j p^j_kr − p^i_kj Γ^j_1r`.
    pub commutation: Tensor3,
    /// `∂_kΓ^i_1r − ∂_1Γ^i_kr + (Γ^i_kj − p^i_km Γ^m_1j)Γ^j_1r − Γ^i_1j(Γ^j_kr − p^j_km Γ^m_1r)`.
    pub curvature: Tensor3,
}

pub fn chain_conditions(
    conn: &ConnectionField,
    s: &StructureConstants,
    x: &[f64],
    cfg: &DiffConfig,
) -> Result<ChainResiduals> {
    let n = s.n();
    tensor::check_dim(n, conn.dim())?;
    tensor::check_dim(n, x.len())?;
    let u = s.unit_or_err()?.to_vec();
    let g = conn.eval(x);
    let gu = g.contract_middle(&u);

    let commutation =
        Tensor3::from_fn(n, |i, k, r| (0..n).map(|j| gu[(i, j)] * s.p(j, k, r) - s.p(i, k, j) * gu[(j, r)]).sum());

    // d[(flat(i,k,j), m)] = ∂Γ^i_kj/∂x^m
    let d = fd_jacobian(|y| conn.eval(y).as_slice().to_vec(), x, cfg);
    check_finite(d.as_slice(), "connection derivative")?;
    let flat = |i: usize, k: usize, j: usize| (i * n + k) * n + j;
    let du = |i: usize, j: usize, m: usize| -> f64 { (0..n).map(|a| u[a] * d[(flat(i, a, j), m)]).sum() };

    // a_k(i, j) = Γ^i_kj − p^i_km Γ^m_1j
    let shifted =
        |i: usize, k: usize, j: usize| -> f64 { g[(i, k, j)] - (0..n).map(|m| s.p(i, k, m) * gu[(m, j)]).sum::<f64>() };
    let curvature = Tensor3::from_fn(n, |i, k, r| {
        let along_unit: f64 = (0..n).map(|m| u[m] * d[(flat(i, k, r), m)]).sum();
        let quad: f64 = (0..n).map(|j| shifted(i, k, j) * gu[(j, r)] - gu[(i, j)] * shifted(j, k, r)).sum();
        du(i, r, k) - along_unit + quad
    });
    Ok(ChainResiduals { commutation, curvature })
}

/// The pair `{f^(m), Γ·f^(m)}` with `f^(m) = ∂_1 f^(m−1) + Γ_1 f^(m−1)`.
///
/// Each iterate is differenced numerically from the previous one, so use a
/// fourth-order `cfg` for `m ≥ 2`.
pub fn derivative_chain(pair: &GAPair, conn: &ConnectionField, m: usize, cfg: &DiffConfig) -> Result<GAPair> {
    let s = pair.algebra.clone();
    let n = s.n();
    tensor::check_dim(n, conn.dim())?;
    let u = s.unit_or_err()?.to_vec();
    let mut current = pair.f.clone();
    for _ in 0..m {
        let prev = current.clone();
        let (conn, u, cfg) = (conn.clone(), u.clone(), *cfg);
        current = VectorField::new(n, move |x| {
            let along = tensor::mat_vec(&prev.jacobian(x, &cfg), &u);
            let gu = conn.eval(x).contract_middle(&u);
            let shift = tensor::mat_vec(&gu, &prev.eval(x));
            along.iter().zip(shift).map(|(a, b)| a + b).collect()
        })
        .with_domain(pair.f.domain().clone());
    }
    let field = current.clone();
    let c = conn.clone();
    let gamma = GammaField::new(n, move |x| c.eval(x).contract_last(&field.eval(x)));
    GAPair::new(current, gamma, s)
}

/// Flattened `(i, k, a, b)` residual of
/// `Γ^i_km p^m_ab − Γ^m_ka p^i_mb − Γ^m_kb p^i_am`: zero iff the structure
/// constants are parallel under `Γ`, which is what the product rule needs.
pub fn product_connection_residual(conn: &ConnectionField, s: &StructureConstants, x: &[f64]) -> Result<Vec<f64>> {
    let n = s.n();
    tensor::check_dim(n, conn.dim())?;
    let g = conn.eval(x);
    let mut out = Vec::with_capacity(n.pow(4));
    for i in 0..n {
        for k in 0..n {
            for a in 0..n {
                for b in 0..n {
                    let v: f64 = (0..n)
                        .map(|m| {
                            g[(i, k, m)] * s.p(m, a, b) - g[(m, k, a)] * s.p(i, m, b) - g[(m, k, b)] * s.p(i, a, m)
                        })
                        .sum();
                    out.push(v);
                }
            }
        }
    }
    Ok(out)
}

/// `λ·p^i_kj` as a constant connection.
pub fn scaled_structure_connection(s: &StructureConstants, lambda: f64) -> ConnectionField {
    ConnectionField::constant(s.tensor().scaled(lambda))
}
