//! The 3n×3n block operator
//!
//! ```text
//!     ⎡   0        I      0 ⎤
//! Z = ⎢   0        0      I ⎥
//!     ⎣ −μ²(A−S)  μ(μI−D)  A ⎦
//! ```
//!
//! whose powers carry consecutive count blocks `[q_k; q_{k+1}; q_{k+2}]`
//! forward, its spectral radius (giving the convergence bound `α* = 1/ρ(Z)`
//! for the Katz series), and the eigenvector centrality read off its dominant
//! eigenvector.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{DerivedMatrices, Graph};
use crate::katz::{self, normalize, CentralityResult, Normalization, SolveInfo};
use crate::metrics;
use crate::walks::BtdwParams;

/// Largest `n` for which dense assemblies (3n×3n) are produced.
pub const DENSE_LIMIT: usize = 2000;

/// Relative gap under which two scores are treated as tied when rankings
/// are compared.
pub const TIE_TOLERANCE: f64 = 1e-8;

/// A square operator known only through its action on vectors.
pub trait LinearOperator {
    fn dim(&self) -> usize;
    /// `y = M x`; `y` is overwritten.
    fn apply(&self, x: &[f64], y: &mut [f64]);
}

/// The adjacency matrix of a graph as an operator.
#[derive(Debug, Clone, Copy)]
pub struct Adjacency<'a>(pub &'a Graph);

impl LinearOperator for Adjacency<'_> {
    fn dim(&self) -> usize {
        self.0.node_count()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.0.apply(x, y);
    }
}

/// Matrix-free `Z` for one graph and one `θ`.
#[derive(Debug, Clone)]
pub struct BlockOperatorZ<'a> {
    graph: &'a Graph,
    derived: DerivedMatrices,
    mu: f64,
    /// `μ(μ − d_i)`, the middle block's diagonal.
    middle: Vec<f64>,
}

impl<'a> BlockOperatorZ<'a> {
    pub fn assemble(g: &'a Graph, p: BtdwParams) -> Self {
        let derived = g.derived();
        let mu = p.mu();
        let middle = derived.d.iter().map(|d| mu * (mu - d)).collect();
        Self {
            graph: g,
            derived,
            mu,
            middle,
        }
    }

    /// Node count `n` of the underlying graph.
    pub fn n(&self) -> usize {
        self.graph.node_count()
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// Applies `Z` to each column of a 3n×c block.
    pub fn apply_block(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        assert_eq!(x.nrows(), 3 * self.n());
        let mut out = DMatrix::zeros(x.nrows(), x.ncols());
        let mut col_out = vec![0.0; x.nrows()];
        for c in 0..x.ncols() {
            let col: Vec<f64> = x.column(c).iter().copied().collect();
            self.apply(&col, &mut col_out);
            out.column_mut(c).copy_from_slice(&col_out);
        }
        out
    }

    /// Explicit dense matrix, for cross-checks on small graphs.
    pub fn to_dense(&self) -> Result<DMatrix<f64>> {
        let n = self.n();
        if n > DENSE_LIMIT {
            return Err(Error::TooLarge(format!(
                "dense Z limited to n <= {DENSE_LIMIT}, got {n}"
            )));
        }
        let mut z = DMatrix::zeros(3 * n, 3 * n);
        for i in 0..n {
            z[(i, n + i)] = 1.0;
            z[(n + i, 2 * n + i)] = 1.0;
            z[(2 * n + i, n + i)] = self.middle[i];
        }
        for (i, j) in self.graph.edges() {
            z[(2 * n + i, 2 * n + j)] = 1.0;
        }
        let c = -self.mu * self.mu;
        if c != 0.0 {
            for (i, j) in self.derived.a_minus_s.edges() {
                z[(2 * n + i, j)] = c;
            }
        }
        Ok(z)
    }

    /// `‖Z‖₁`, the largest absolute column sum.
    pub fn norm_1(&self) -> f64 {
        let n = self.n();
        let mut in_a = vec![0.0; n];
        for (_, j) in self.graph.edges() {
            in_a[j] += 1.0;
        }
        let mut in_one_way = vec![0.0; n];
        for (_, j) in self.derived.a_minus_s.edges() {
            in_one_way[j] += 1.0;
        }
        let mu2 = self.mu * self.mu;
        (0..n)
            .map(|j| {
                (mu2 * in_one_way[j])
                    .max(1.0 + self.middle[j].abs())
                    .max(1.0 + in_a[j])
            })
            .fold(0.0, f64::max)
    }
}

impl LinearOperator for BlockOperatorZ<'_> {
    fn dim(&self) -> usize {
        3 * self.n()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let n = self.n();
        let (x1, rest) = x.split_at(n);
        let (x2, x3) = rest.split_at(n);
        let (y1, rest) = y.split_at_mut(n);
        let (y2, y3) = rest.split_at_mut(n);
        y1.copy_from_slice(x2);
        y2.copy_from_slice(x3);
        self.graph.apply(x3, y3);
        for i in 0..n {
            y3[i] += self.middle[i] * x2[i];
        }
        let c = self.mu * self.mu;
        if c != 0.0 {
            for (i, j) in self.derived.a_minus_s.edges() {
                y3[i] -= c * x1[j];
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerConfig {
    /// Relative tolerance on both the eigenvalue change and the residual.
    pub tol: f64,
    /// Operator applies per attempt; defaults to `max(50 · dim, 1000)`.
    pub max_iter: Option<usize>,
    pub seed: u64,
}

impl Default for PowerConfig {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: None,
            seed: 0,
        }
    }
}

/// How the dominant eigenvalue was isolated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Period {
    /// A single dominant real eigenvalue.
    One,
    /// A dominant pair `±ρ` (symmetric spectrum, e.g. bipartite graphs),
    /// resolved through `Z²`.
    Two,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralEstimate {
    pub rho: f64,
    /// Signed dominant eigenvalue the returned vector belongs to.
    pub lambda: f64,
    pub converged: bool,
    /// Operator applies used (over all attempts).
    pub iterations: usize,
    /// `‖Mv − λv‖₂` for the returned unit vector.
    pub residual: f64,
    pub period: Period,
    pub vector: Option<Vec<f64>>,
}

fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

fn residual_of<O: LinearOperator + ?Sized>(op: &O, v: &[f64], lambda: f64) -> f64 {
    let mut w = vec![0.0; v.len()];
    op.apply(v, &mut w);
    norm2(
        &w.iter()
            .zip(v)
            .map(|(a, b)| a - lambda * b)
            .collect::<Vec<_>>(),
    )
}

/// Power iteration with a seeded positive start.
///
/// Each step applies the operator twice and tests both the one-step
/// Rayleigh quotient (a single dominant eigenvalue) and the two-step one
/// (a dominant `±ρ` pair). If neither settles within the apply budget the
/// iteration restarts once from a different seed, then gives up with
/// `converged = false`, as happens for a complex or defective dominant pair.
pub fn spectral_radius<O: LinearOperator + ?Sized>(op: &O, cfg: &PowerConfig) -> SpectralEstimate {
    let first = power_attempt(op, cfg, cfg.seed);
    if first.converged {
        return first;
    }
    let mut second = power_attempt(op, cfg, cfg.seed ^ 0x9e37_79b9_7f4a_7c15);
    second.iterations += first.iterations;
    second
}

fn power_attempt<O: LinearOperator + ?Sized>(
    op: &O,
    cfg: &PowerConfig,
    seed: u64,
) -> SpectralEstimate {
    let dim = op.dim();
    let max_iter = cfg.max_iter.unwrap_or((50 * dim).max(1000));
    let tol = cfg.tol;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<f64> = (0..dim).map(|_| rng.random_range(0.5..1.5)).collect();
    let nv = norm2(&v);
    v.iter_mut().for_each(|x| *x /= nv);

    let mut w = vec![0.0; dim];
    let mut u = vec![0.0; dim];
    let mut prev = (f64::NAN, f64::NAN);
    let mut applies = 0;
    let mut last = (0.0, f64::INFINITY);

    while applies + 2 <= max_iter {
        op.apply(&v, &mut w);
        op.apply(&w, &mut u);
        applies += 2;

        let nu = norm2(&u);
        if nu == 0.0 || norm2(&w) == 0.0 {
            // Z²v = 0 for a generic start: the operator is nilpotent
            return SpectralEstimate {
                rho: 0.0,
                lambda: 0.0,
                converged: true,
                iterations: applies,
                residual: 0.0,
                period: Period::One,
                vector: None,
            };
        }

        let l1 = dot(&v, &w);
        let r1 = norm2(
            &w.iter()
                .zip(&v)
                .map(|(a, b)| a - l1 * b)
                .collect::<Vec<_>>(),
        );
        let l2 = dot(&v, &u);
        let r2 = norm2(
            &u.iter()
                .zip(&v)
                .map(|(a, b)| a - l2 * b)
                .collect::<Vec<_>>(),
        );

        let settled = |l: f64, p: f64, r: f64| {
            l != 0.0 && (l - p).abs() <= tol * l.abs() && r <= tol * l.abs()
        };
        if settled(l1, prev.0, r1) {
            return SpectralEstimate {
                rho: l1.abs(),
                lambda: l1,
                converged: true,
                iterations: applies,
                residual: r1,
                period: Period::One,
                vector: Some(v),
            };
        }
        if l2 > 0.0 && settled(l2, prev.1, r2) {
            let rho = l2.sqrt();
            // split v into its ±ρ components: Zv ± ρv lies in the ±ρ eigenspace
            let plus: Vec<f64> = w.iter().zip(&v).map(|(a, b)| a + rho * b).collect();
            let minus_norm = norm2(
                &w.iter()
                    .zip(&v)
                    .map(|(a, b)| a - rho * b)
                    .collect::<Vec<_>>(),
            );
            let np = norm2(&plus);
            let (lambda, vector) = if np > 1e-8 * rho {
                (rho, plus.into_iter().map(|x| x / np).collect::<Vec<_>>())
            } else {
                (-rho, v)
            };
            // only a start with weight on both ±ρ makes the pair visible
            let period = if np > 1e-6 * rho && minus_norm > 1e-6 * rho {
                Period::Two
            } else {
                Period::One
            };
            let residual = residual_of(op, &vector, lambda);
            return SpectralEstimate {
                rho,
                lambda,
                converged: true,
                iterations: applies + 1,
                residual,
                period,
                vector: Some(vector),
            };
        }
        prev = (l1, l2);
        last = (l2.abs().sqrt(), r2);
        for (vi, ui) in v.iter_mut().zip(&u) {
            *vi = ui / nu;
        }
    }

    SpectralEstimate {
        rho: last.0,
        lambda: last.0,
        converged: false,
        iterations: applies,
        residual: last.1,
        period: Period::Two,
        vector: None,
    }
}

/// The bound `α* = 1/ρ(Z)`: the Katz series converges for every `α < α*`.
/// It is a lower bound on the true radius of convergence and need not be
/// sharp (on stars with `θ < 1/(m+1)` the series converges beyond it).
///
/// Returns `f64::INFINITY` when `Z` is nilpotent.
pub fn alpha_star(g: &Graph, p: BtdwParams, cfg: &PowerConfig) -> Result<f64> {
    let est = spectral_radius(&BlockOperatorZ::assemble(g, p), cfg);
    if !est.converged {
        return Err(Error::NotConverged {
            iterations: est.iterations,
            estimate: est.rho,
        });
    }
    Ok(if est.rho == 0.0 {
        f64::INFINITY
    } else {
        1.0 / est.rho
    })
}

/// BTDW eigenvector centrality: the last `n` components of the eigenvector of
/// `Z` for the eigenvalue `ρ(Z)`, signed nonnegative and l1-normalized.
pub fn eigen_centrality_btdw(
    g: &Graph,
    p: BtdwParams,
    cfg: &PowerConfig,
) -> Result<CentralityResult> {
    let z = BlockOperatorZ::assemble(g, p);
    let est = spectral_radius(&z, cfg);
    if !est.converged {
        return Err(Error::NotConverged {
            iterations: est.iterations,
            estimate: est.rho,
        });
    }
    if est.rho == 0.0 {
        return Err(Error::DegenerateSpectrum(
            "rho(Z) = 0, no dominant eigenvector".into(),
        ));
    }
    if est.lambda < 0.0 {
        return Err(Error::DegenerateSpectrum(format!(
            "dominant eigenvalue is -{:.6}; +rho(Z) is not an eigenvalue",
            est.rho
        )));
    }
    let v = est
        .vector
        .as_deref()
        .expect("converged estimate carries a vector");
    let n = g.node_count();
    let mut tail = v[2 * n..].to_vec();
    let peak = tail
        .iter()
        .copied()
        .fold(0.0_f64, |m, x| if x.abs() > m.abs() { x } else { m });
    if peak == 0.0 {
        return Err(Error::DegenerateSpectrum("last n components vanish".into()));
    }
    let sign = peak.signum();
    let floor = 1e-8 * peak.abs();
    for x in &mut tail {
        *x *= sign;
        if *x < -floor {
            return Err(Error::DegenerateSpectrum(format!(
                "eigenvector has mixed signs ({:.3e} against peak {:.3e})",
                *x,
                peak.abs()
            )));
        }
        if *x < 0.0 {
            *x = 0.0;
        }
    }
    let residual = est.residual / est.rho;
    let info = SolveInfo {
        method: "power-iteration".into(),
        residual,
        iterations: est.iterations,
        converged: true,
        truncation_bound: None,
    };
    normalize(
        CentralityResult::new(tail, None, p.theta(), info),
        Normalization::L1,
    )
}

/// Ranking agreement between BTDW Katz and the eigenvector limit.
#[derive(Debug, Clone, PartialEq)]
pub struct ConsistencyReport {
    pub alpha_star: f64,
    pub alphas: Vec<f64>,
    /// Kendall tau-b between each Katz vector and the eigenvector centrality.
    pub taus: Vec<f64>,
    pub eigen: CentralityResult,
}

/// Kendall tau between `katz_btdw` at each `α` (ascending, below `α*`) and
/// `eigen_centrality_btdw`. Scores within [`TIE_TOLERANCE`] (relative) of
/// each other count as tied.
pub fn katz_to_spectral_consistency(
    g: &Graph,
    p: BtdwParams,
    alphas: &[f64],
    cfg: &PowerConfig,
) -> Result<ConsistencyReport> {
    if alphas.is_empty() {
        return Err(Error::InvalidParameter("no alpha values given".into()));
    }
    if alphas.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidParameter(
            "alpha values must be strictly ascending".into(),
        ));
    }
    let bound = alpha_star(g, p, cfg)?;
    if let Some(&a) = alphas.iter().find(|&&a| !(a > 0.0 && a < bound)) {
        return Err(Error::InvalidParameter(format!(
            "alpha {a} not strictly inside (0, alpha* = {bound})"
        )));
    }
    let eigen = eigen_centrality_btdw(g, p, cfg)?;
    let eig_snapped = metrics::snap_ties(&eigen.scores, TIE_TOLERANCE);
    let taus = alphas
        .iter()
        .map(|&a| {
            let x = katz::katz_btdw(g, a, p)?;
            metrics::kendall_tau(&metrics::snap_ties(&x.scores, TIE_TOLERANCE), &eig_snapped)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ConsistencyReport {
        alpha_star: bound,
        alphas: alphas.to_vec(),
        taus,
        eigen,
    })
}
