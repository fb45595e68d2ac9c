//! Backtrack-downweighted walk counts.
//!
//! `q_k(A)_{ij}` sums, over every walk of length `k` from `i` to `j`, the weight
//! `θ^b` where `b` counts the positions `s` with `i_s = i_{s+2}`. The counts obey
//! a four-term recurrence in `q_{k−1}, q_{k−2}, q_{k−3}` with coefficients built
//! from `A`, `D` and `S`; the matrices here are dense because they fill in
//! quickly with `k`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::graph::{DerivedMatrices, Graph};
use crate::io::fmt_sci;

/// Downweighting factor `θ ∈ [0, 1]` with the cached complement `μ = 1 − θ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BtdwParams {
    theta: f64,
    mu: f64,
}

impl BtdwParams {
    /// Fully nonbacktracking counting (`θ = 0`).
    pub const NONBACKTRACKING: Self = Self {
        theta: 0.0,
        mu: 1.0,
    };
    /// Classical walk counting (`θ = 1`).
    pub const CLASSICAL: Self = Self {
        theta: 1.0,
        mu: 0.0,
    };

    pub fn new(theta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&theta) {
            return Err(Error::InvalidParameter(format!(
                "theta must lie in [0, 1], got {theta}"
            )));
        }
        Ok(Self {
            theta,
            mu: 1.0 - theta,
        })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }
}

/// Which multiplication order the recurrence uses. Both produce the same
/// matrices; they differ only in round-off.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// `q_{k+1} = A q_k + μ(μI − D) q_{k−1} − μ²(A − S) q_{k−2}`
    Left,
    /// `q_{k+1} = q_k A + μ q_{k−1}(μI − D) − μ² q_{k−2}(A − S)`
    Right,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WalkCountMatrix {
    pub k: usize,
    pub theta: f64,
    pub values: DMatrix<f64>,
}

impl WalkCountMatrix {
    /// Row-major CSV with a `# k=…, theta=…` header line.
    pub fn to_csv(&self) -> String {
        let mut out = format!("# k={}, theta={}\n", self.k, fmt_sci(self.theta));
        for row in self.values.row_iter() {
            let cells: Vec<String> = row.iter().map(|&v| fmt_sci(v)).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

/// `q_0, …, q_K` for one parameter choice.
#[derive(Debug, Clone, PartialEq)]
pub struct WalkCountSequence {
    pub params: BtdwParams,
    pub matrices: Vec<DMatrix<f64>>,
}

impl WalkCountSequence {
    pub fn get(&self, k: usize) -> Option<WalkCountMatrix> {
        self.matrices.get(k).map(|values| WalkCountMatrix {
            k,
            theta: self.params.theta(),
            values: values.clone(),
        })
    }

    pub fn max_len(&self) -> usize {
        self.matrices.len() - 1
    }
}

/// `X A` for dense `X`, using the sparse rows of `a`.
fn mul_right(x: &DMatrix<f64>, a: &Graph) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(x.nrows(), a.node_count());
    for (l, j) in a.edges() {
        let src = x.column(l).clone_owned();
        let mut dst = out.column_mut(j);
        dst += src;
    }
    out
}

/// `A X` for dense `X`.
pub(crate) fn mul_left(a: &Graph, x: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(a.node_count(), x.ncols());
    for (i, l) in a.edges() {
        let src = x.row(l).clone_owned();
        let mut dst = out.row_mut(i);
        dst += src;
    }
    out
}

fn scale_columns(x: &DMatrix<f64>, diag: &[f64]) -> DMatrix<f64> {
    let mut out = x.clone();
    for (j, &d) in diag.iter().enumerate() {
        out.column_mut(j).scale_mut(d);
    }
    out
}

pub(crate) fn scale_rows(x: &DMatrix<f64>, diag: &[f64]) -> DMatrix<f64> {
    let mut out = x.clone();
    for (i, &d) in diag.iter().enumerate() {
        out.row_mut(i).scale_mut(d);
    }
    out
}

/// Four-term recurrence shared by the BTDW and nonbacktracking sequences.
/// `q2` is supplied by the caller; from there
/// `q_{k+1} = q_k A + q_{k−1} diag(c1) − c2 · q_{k−2}(A − S)` (or its left form).
fn run_recurrence(
    g: &Graph,
    dm: &DerivedMatrices,
    c1: &[f64],
    c2: f64,
    q2: DMatrix<f64>,
    k_max: usize,
    side: Side,
) -> Vec<DMatrix<f64>> {
    let n = g.node_count();
    let mut qs = vec![DMatrix::identity(n, n), g.to_dense(), q2];
    qs.truncate(k_max + 1);
    for k in 2..k_max {
        let next = match side {
            Side::Right => {
                let mut next = mul_right(&qs[k], g);
                next += scale_columns(&qs[k - 1], c1);
                if c2 != 0.0 {
                    next -= mul_right(&qs[k - 2], &dm.a_minus_s) * c2;
                }
                next
            }
            Side::Left => {
                let mut next = mul_left(g, &qs[k]);
                next += scale_rows(&qs[k - 1], c1);
                if c2 != 0.0 {
                    next -= mul_left(&dm.a_minus_s, &qs[k - 2]) * c2;
                }
                next
            }
        };
        qs.push(next);
    }
    qs
}

/// BTDW count matrices `q_0 … q_K`, starting from
/// `q_0 = I`, `q_1 = A`, `q_2 = A² − μD`.
pub fn btdw_sequence(g: &Graph, p: BtdwParams, k_max: usize, side: Side) -> WalkCountSequence {
    let dm = g.derived();
    let mu = p.mu();
    let a = g.to_dense();
    let mut q2 = &a * &a;
    for (i, d) in dm.d.iter().enumerate() {
        q2[(i, i)] -= mu * d;
    }
    let c1: Vec<f64> = dm.d.iter().map(|d| mu * (mu - d)).collect();
    WalkCountSequence {
        params: p,
        matrices: run_recurrence(g, &dm, &c1, mu * mu, q2, k_max, side),
    }
}

/// Nonbacktracking count matrices `p_0 … p_K` with
/// `p_{k+1} = p_k A + p_{k−1}(I − D) − p_{k−2}(A − S)`.
pub fn nbt_sequence(g: &Graph, k_max: usize) -> WalkCountSequence {
    let dm = g.derived();
    let a = g.to_dense();
    let p2 = &a * &a - dm.d_dense();
    let c1: Vec<f64> = dm.d.iter().map(|d| 1.0 - d).collect();
    WalkCountSequence {
        params: BtdwParams::NONBACKTRACKING,
        matrices: run_recurrence(g, &dm, &c1, 1.0, p2, k_max, Side::Right),
    }
}

/// Largest graph the enumeration oracle accepts.
pub const BRUTE_FORCE_MAX_NODES: usize = 12;
/// Longest walk the enumeration oracle accepts.
pub const BRUTE_FORCE_MAX_LEN: usize = 10;

/// Depth-first enumeration of every walk of length `k`, each weighted by
/// `θ^(number of s with i_s = i_{s+2})`. Exponential in `k`; used as the
/// reference the recurrences are checked against.
pub fn brute_force_btdw(g: &Graph, p: BtdwParams, k: usize) -> Result<WalkCountMatrix> {
    let n = g.node_count();
    if n > BRUTE_FORCE_MAX_NODES || k > BRUTE_FORCE_MAX_LEN {
        return Err(Error::TooLarge(format!(
            "enumeration limited to n <= {BRUTE_FORCE_MAX_NODES} and k <= {BRUTE_FORCE_MAX_LEN}, got n = {n}, k = {k}"
        )));
    }
    let mut values = DMatrix::zeros(n, n);
    let mut walk = Vec::with_capacity(k + 1);
    for start in 0..n {
        walk.clear();
        walk.push(start);
        extend(g, p.theta(), k, &mut walk, &mut values);
    }
    Ok(WalkCountMatrix {
        k,
        theta: p.theta(),
        values,
    })
}

fn extend(g: &Graph, theta: f64, k: usize, walk: &mut Vec<usize>, acc: &mut DMatrix<f64>) {
    if walk.len() == k + 1 {
        let backtracks = walk.windows(3).filter(|w| w[0] == w[2]).count();
        acc[(walk[0], walk[k])] += theta.powi(backtracks as i32);
        return;
    }
    let last = *walk.last().expect("walk is never empty");
    for &next in g.out_neighbors(last) {
        walk.push(next);
        extend(g, theta, k, walk, acc);
        walk.pop();
    }
}
