//! Katz-style centralities from resolvent linear systems.
//!
//! The BTDW Katz vector `x = 1 + Σ_{k≥1} α^k q_k(A) 1` solves
//!
//! ```text
//! [I − αA − μα²(μI − D) + μ²α³(A − S)] x = (1 − μ²α²) 1
//! ```
//!
//! whose coefficient matrix has the sparsity of `I − αA`. At `θ = 1` this is
//! classical Katz, at `θ = 0` the fully nonbacktracking variant.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::linalg::{self, CsrMatrix, SolveOutcome, SolverChoice};
use crate::spectral::{self, PowerConfig};
use crate::walks::BtdwParams;

/// Relative residual a linear solve must reach to be accepted.
pub const RESIDUAL_LIMIT: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Normalization {
    #[default]
    None,
    L1,
    L2,
}

impl FromStr for Normalization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "none" => Ok(Self::None),
            "l1" => Ok(Self::L1),
            "l2" => Ok(Self::L2),
            other => Err(Error::InvalidParameter(format!(
                "unknown normalization {other:?}"
            ))),
        }
    }
}

impl fmt::Display for Normalization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::None => "none",
            Self::L1 => "l1",
            Self::L2 => "l2",
        })
    }
}

/// How a score vector was obtained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveInfo {
    pub method: String,
    /// Relative residual of the defining equation (linear system or eigen-equation).
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Estimated size of the neglected tail, for truncated series.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truncation_bound: Option<f64>,
}

impl SolveInfo {
    fn exact(method: &str) -> Self {
        Self {
            method: method.to_string(),
            residual: 0.0,
            iterations: 0,
            converged: true,
            truncation_bound: None,
        }
    }
}

/// A node-indexed score vector with its provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct CentralityResult {
    pub scores: Vec<f64>,
    pub normalization: Normalization,
    pub alpha: Option<f64>,
    pub theta: f64,
    pub info: SolveInfo,
}

/// JSON sidecar written next to a score CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultMetadata {
    pub alpha: Option<f64>,
    pub theta: f64,
    pub normalization: Normalization,
    pub nodes: usize,
    #[serde(flatten)]
    pub info: SolveInfo,
}

impl CentralityResult {
    pub(crate) fn new(scores: Vec<f64>, alpha: Option<f64>, theta: f64, info: SolveInfo) -> Self {
        Self {
            scores,
            normalization: Normalization::None,
            alpha,
            theta,
            info,
        }
    }

    pub fn closed_form(scores: Vec<f64>, alpha: Option<f64>, theta: f64) -> Self {
        Self::new(scores, alpha, theta, SolveInfo::exact("closed-form"))
    }

    pub fn metadata(&self) -> ResultMetadata {
        ResultMetadata {
            alpha: self.alpha,
            theta: self.theta,
            normalization: self.normalization,
            nodes: self.scores.len(),
            info: self.info.clone(),
        }
    }

    pub fn max_abs_diff(&self, other: &[f64]) -> f64 {
        self.scores
            .iter()
            .zip(other)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Assembled coefficient matrix and right-hand side of the BTDW Katz system.
#[derive(Debug, Clone)]
pub struct KatzSystem {
    pub alpha: f64,
    pub params: BtdwParams,
    pub matrix: CsrMatrix,
    /// Every entry of the right-hand side equals this scalar.
    pub rhs_value: f64,
}

impl KatzSystem {
    pub fn assemble(g: &Graph, alpha: f64, p: BtdwParams) -> Self {
        let mu = p.mu();
        let dm = g.derived();
        let n = g.node_count();
        let mut entries = Vec::with_capacity(n + g.edge_count());
        for (i, d) in dm.d.iter().enumerate() {
            entries.push((i, i, 1.0 - mu * alpha * alpha * (mu - d)));
        }
        for (i, j) in g.edges() {
            entries.push((i, j, -alpha));
        }
        if mu != 0.0 {
            let c = mu * mu * alpha.powi(3);
            for (i, j) in dm.a_minus_s.edges() {
                entries.push((i, j, c));
            }
        }
        Self {
            alpha,
            params: p,
            matrix: CsrMatrix::from_triplets(n, entries),
            rhs_value: 1.0 - mu * mu * alpha * alpha,
        }
    }

    pub fn rhs(&self) -> Vec<f64> {
        vec![self.rhs_value; self.matrix.dim()]
    }

    pub fn residual(&self, x: &[f64]) -> f64 {
        linalg::relative_residual(&self.matrix, x, &self.rhs())
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha >= 0.0) || !alpha.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "alpha must be finite and non-negative, got {alpha}"
        )));
    }
    Ok(())
}

/// Accepts a solve only when the residual is small and every score positive.
fn vet(
    outcome: Result<SolveOutcome>,
    alpha: f64,
    bound: impl FnOnce() -> Option<f64>,
) -> Result<SolveOutcome> {
    let reason = match outcome {
        Err(e) => format!("solver breakdown: {e}"),
        Ok(out) if !(out.relative_residual <= RESIDUAL_LIMIT) => {
            format!(
                "relative residual {:.3e} above {RESIDUAL_LIMIT:e}",
                out.relative_residual
            )
        }
        Ok(out) => match out.x.iter().position(|&v| !(v > 0.0)) {
            Some(i) => format!("non-positive score {:.3e} at node index {i}", out.x[i]),
            None => return Ok(out),
        },
    };
    Err(Error::OutsideConvergence {
        alpha,
        alpha_star: bound(),
        reason,
    })
}

fn into_result(out: SolveOutcome, alpha: f64, theta: f64) -> CentralityResult {
    CentralityResult::new(
        out.x,
        Some(alpha),
        theta,
        SolveInfo {
            method: out.method.to_string(),
            residual: out.relative_residual,
            iterations: out.iterations,
            converged: true,
            truncation_bound: None,
        },
    )
}

/// Classical Katz, `(I − αA) x = 1`, assembled independently of the BTDW system.
pub fn katz_standard(g: &Graph, alpha: f64) -> Result<CentralityResult> {
    katz_standard_with(g, alpha, SolverChoice::Auto)
}

pub fn katz_standard_with(g: &Graph, alpha: f64, solver: SolverChoice) -> Result<CentralityResult> {
    check_alpha(alpha)?;
    let n = g.node_count();
    let entries = (0..n)
        .map(|i| (i, i, 1.0))
        .chain(g.edges().map(|(i, j)| (i, j, -alpha)))
        .collect();
    let m = CsrMatrix::from_triplets(n, entries);
    let out = vet(linalg::solve(&m, &vec![1.0; n], solver), alpha, || {
        let est = spectral::spectral_radius(&spectral::Adjacency(g), &PowerConfig::default());
        (est.converged && est.rho > 0.0).then(|| 1.0 / est.rho)
    })?;
    Ok(into_result(out, alpha, 1.0))
}

/// BTDW Katz centrality by a sparse solve of the resolvent system.
///
/// `α` is not checked against `1/ρ(Z)` up front because that bound can be
/// loose; a failed residual or positivity check is reported as
/// [`Error::OutsideConvergence`] carrying the bound.
pub fn katz_btdw(g: &Graph, alpha: f64, p: BtdwParams) -> Result<CentralityResult> {
    katz_btdw_with(g, alpha, p, SolverChoice::Auto)
}

pub fn katz_btdw_with(
    g: &Graph,
    alpha: f64,
    p: BtdwParams,
    solver: SolverChoice,
) -> Result<CentralityResult> {
    check_alpha(alpha)?;
    let sys = KatzSystem::assemble(g, alpha, p);
    let out = vet(
        linalg::solve(&sys.matrix, &sys.rhs(), solver),
        alpha,
        || spectral::alpha_star(g, p, &PowerConfig::default()).ok(),
    )?;
    Ok(into_result(out, alpha, p.theta()))
}

/// Consecutive two-step growths after which the series is declared divergent.
const DIVERGENCE_RUN: usize = 10;

/// Truncated power series `x = Σ α^k q_k(A) 1`, with `q_k 1` propagated by the
/// left-multiplication recurrence on vectors.
///
/// Stops once two consecutive terms fall below `tol · ‖x‖∞`, or after `k_max`
/// terms (then `info.converged` is false). Terms are compared two steps apart
/// because bipartite graphs alternate term sizes by parity.
pub fn katz_series_oracle(
    g: &Graph,
    alpha: f64,
    p: BtdwParams,
    tol: f64,
    k_max: usize,
) -> Result<CentralityResult> {
    check_alpha(alpha)?;
    let n = g.node_count();
    let mu = p.mu();
    let dm = g.derived();
    let norm_inf = |v: &[f64]| v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));

    let w0 = vec![1.0; n];
    let w1 = g.mul_vec(&w0);
    let mut w2 = g.mul_vec(&w1);
    for (w, d) in w2.iter_mut().zip(&dm.d) {
        *w -= mu * d;
    }
    let mut window = [w0, w1, w2];
    let mut x = vec![0.0; n];
    let mut term_norms: Vec<f64> = Vec::new();
    let mut scale = 1.0;
    let mut growth_run = 0;
    let mut small_run = 0;
    let mut converged = false;
    let mut k = 0;

    while k <= k_max {
        let wk = &window[k.min(2)];
        let t = norm_inf(wk) * scale;
        for (xi, wi) in x.iter_mut().zip(wk) {
            *xi += scale * wi;
        }
        term_norms.push(t);
        if !t.is_finite() {
            return Err(Error::Divergence(format!("term {k} overflowed")));
        }
        if k >= 2 && t > term_norms[k - 2] && t > 0.0 {
            growth_run += 1;
            if growth_run >= DIVERGENCE_RUN {
                return Err(Error::Divergence(format!(
                    "series terms grew for {DIVERGENCE_RUN} consecutive steps (alpha = {alpha}, term {k} = {t:.3e})"
                )));
            }
        } else {
            growth_run = 0;
        }
        if t <= tol * norm_inf(&x) {
            small_run += 1;
            if small_run >= 2 {
                converged = true;
                break;
            }
        } else {
            small_run = 0;
        }

        // advance: produce q_{k+3} 1 once the three base vectors are consumed
        if k >= 2 {
            let [a, b, c] = &window;
            let mut next = g.mul_vec(c);
            for i in 0..n {
                next[i] += mu * (mu - dm.d[i]) * b[i];
            }
            if mu != 0.0 {
                let back = dm.a_minus_s.mul_vec(a);
                for i in 0..n {
                    next[i] -= mu * mu * back[i];
                }
            }
            window = [window[1].clone(), window[2].clone(), next];
        }
        scale *= alpha;
        k += 1;
    }

    let terms = term_norms.len();
    let bound = tail_bound(&term_norms);
    Ok(CentralityResult::new(
        x,
        Some(alpha),
        p.theta(),
        SolveInfo {
            method: "series".into(),
            residual: f64::NAN,
            iterations: terms,
            converged,
            truncation_bound: Some(bound),
        },
    ))
}

/// Geometric tail estimate from the last two-step decay ratio.
fn tail_bound(t: &[f64]) -> f64 {
    let n = t.len();
    if n < 3 {
        return t.last().copied().unwrap_or(0.0);
    }
    let last = t[n - 1].max(t[n - 2]);
    let prev = t[n - 3].max(t.get(n.wrapping_sub(4)).copied().unwrap_or(0.0));
    if prev <= 0.0 || last == 0.0 {
        return last;
    }
    let r = (last / prev).sqrt();
    if r < 1.0 {
        last * 2.0 * r / (1.0 - r)
    } else {
        f64::INFINITY
    }
}

/// Rescales the scores; positive scaling leaves every ranking unchanged.
pub fn normalize(mut x: CentralityResult, norm: Normalization) -> Result<CentralityResult> {
    let scale = match norm {
        Normalization::None => 1.0,
        Normalization::L1 => x.scores.iter().map(|v| v.abs()).sum::<f64>(),
        Normalization::L2 => x.scores.iter().map(|v| v * v).sum::<f64>().sqrt(),
    };
    if norm != Normalization::None {
        if scale == 0.0 {
            return Err(Error::ZeroVector);
        }
        for v in &mut x.scores {
            *v /= scale;
        }
    }
    x.normalization = norm;
    Ok(x)
}
