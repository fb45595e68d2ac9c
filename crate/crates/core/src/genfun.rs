//! Power-series generating functions `Σ c_k q_k(A)` and their action on `1`.
//!
//! Two routes are provided. [`genfun_direct`] sums the dense count matrices
//! from the recurrence. [`genfun_blockz`] never forms a count matrix: with
//! `f_s(y) = Σ_k c_{s+k} y^k`, the sum equals the bottom-right block of
//! `f_0(Z) − μ² f_2(Z)`, so it is enough to apply truncated series in `Z` to
//! stacked vectors `[0; 0; v]`. For the exponential series,
//! [`expm_btdw_action`] reads the sum off the top block of
//! `exp(αZ) [1; A1; (A² − μD)1]`.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::spectral::{BlockOperatorZ, LinearOperator};
use crate::walks::{mul_left, scale_rows, BtdwParams};

/// Hard cap on the number of series terms any route evaluates.
pub const MAX_TERMS: usize = 10_000;

/// Coefficients `c_0, c_1, …` of a generating function.
#[derive(Debug, Clone, PartialEq)]
pub enum CoefficientSeries {
    /// `c_k = α^k`.
    Resolvent { alpha: f64 },
    /// `c_k = α^k / k!`.
    Exponential { alpha: f64 },
    /// An explicitly truncated list `c_0 … c_K`; later coefficients are zero.
    Custom(Vec<f64>),
}

impl CoefficientSeries {
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Resolvent { alpha } | Self::Exponential { alpha } => {
                if !(*alpha >= 0.0 && alpha.is_finite()) {
                    return Err(Error::InvalidParameter(format!(
                        "series alpha must be finite and non-negative, got {alpha}"
                    )));
                }
            }
            Self::Custom(c) => {
                if c.is_empty() {
                    return Err(Error::InvalidParameter("empty coefficient list".into()));
                }
                if let Some(v) = c.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
                    return Err(Error::InvalidParameter(format!(
                        "coefficients must be finite and non-negative, got {v}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn coefficient(&self, k: usize) -> f64 {
        match self {
            Self::Resolvent { alpha } => alpha.powi(k as i32),
            Self::Exponential { alpha } => (1..=k).fold(1.0, |acc, i| acc * alpha / i as f64),
            Self::Custom(c) => c.get(k).copied().unwrap_or(0.0),
        }
    }

    /// `c_{s+k}`, the k-th coefficient of `f_s`.
    pub fn shifted(&self, s: usize, k: usize) -> f64 {
        self.coefficient(s + k)
    }

    /// Number of coefficients for a finite list.
    pub fn finite_len(&self) -> Option<usize> {
        match self {
            Self::Custom(c) => Some(c.len()),
            _ => None,
        }
    }

    /// Scalar `f_s(y)`, summed until the terms stop mattering.
    pub fn eval_shifted(&self, s: usize, y: f64) -> Result<f64> {
        if let Self::Custom(c) = self {
            return Ok(c.iter().skip(s).rev().fold(0.0, |acc, v| acc * y + v));
        }
        if let Self::Resolvent { alpha } = self {
            if (alpha * y).abs() >= 1.0 {
                return Err(Error::Divergence(format!(
                    "resolvent series diverges at |alpha y| = {}",
                    (alpha * y).abs()
                )));
            }
        }
        let mut sum = 0.0;
        let mut yk = 1.0;
        for k in 0..MAX_TERMS {
            let t = self.shifted(s, k) * yk;
            sum += t;
            if k > 2 && t.abs() <= f64::EPSILON * sum.abs() * 1e-2 {
                return Ok(sum);
            }
            yk *= y;
        }
        Err(Error::Divergence(format!(
            "scalar series f_{s}({y}) did not settle"
        )))
    }

    pub fn eval(&self, y: f64) -> Result<f64> {
        self.eval_shifted(0, y)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenfunResult {
    /// `Σ c_k q_k(A)`, when requested.
    pub matrix: Option<DMatrix<f64>>,
    /// `(Σ c_k q_k(A)) 1`.
    pub action: Vec<f64>,
    /// Number of series terms used.
    pub terms: usize,
    /// Estimated size of the neglected tail (0 for finite series).
    pub error_bound: f64,
}

/// Tracks when a series of nonnegative-coefficient terms may stop: two
/// consecutive terms at or below `tol` times the running sum, or the end of
/// a finite list.
struct Stopper {
    tol: f64,
    small_run: usize,
    growth_run: usize,
    norms: Vec<f64>,
}

impl Stopper {
    fn new(tol: f64) -> Self {
        Self {
            tol,
            small_run: 0,
            growth_run: 0,
            norms: Vec::new(),
        }
    }

    /// Records `term_norm`; returns `Ok(true)` when the series has settled.
    fn push(&mut self, term_norm: f64, sum_norm: f64) -> std::result::Result<bool, String> {
        if !term_norm.is_finite() {
            return Err(format!("term {} overflowed", self.norms.len()));
        }
        let k = self.norms.len();
        self.norms.push(term_norm);
        if k >= 2 && term_norm > self.norms[k - 2] && term_norm > self.tol * sum_norm {
            self.growth_run += 1;
            if self.growth_run >= 25 {
                return Err(format!(
                    "terms grew for 25 consecutive steps (term {k} = {term_norm:.3e})"
                ));
            }
        } else {
            self.growth_run = 0;
        }
        if term_norm <= self.tol * sum_norm {
            self.small_run += 1;
        } else {
            self.small_run = 0;
        }
        Ok(self.small_run >= 2)
    }

    /// Geometric tail estimate from the last two-step decay ratio.
    fn tail(&self) -> f64 {
        let t = &self.norms;
        let n = t.len();
        if n < 4 {
            return t.last().copied().unwrap_or(0.0);
        }
        let last = t[n - 1].max(t[n - 2]);
        let prev = t[n - 3].max(t[n - 4]);
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
}

fn max_abs(x: &[f64]) -> f64 {
    x.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

fn check_tol(tol: f64) -> Result<()> {
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "tolerance must lie in (0, 1), got {tol}"
        )));
    }
    Ok(())
}

/// Partial sums of `c_k q_k(A)` with the count matrices taken from the
/// recurrence, until a term's largest entry falls below `tol` times the
/// largest entry of the sum (twice in a row).
pub fn genfun_direct(
    g: &Graph,
    p: BtdwParams,
    series: &CoefficientSeries,
    tol: f64,
    k_max: usize,
) -> Result<GenfunResult> {
    series.validate()?;
    check_tol(tol)?;
    let n = g.node_count();
    let mu = p.mu();
    let dm = g.derived();
    let c1: Vec<f64> = dm.d.iter().map(|d| mu * (mu - d)).collect();
    let a = g.to_dense();
    let mut q2 = &a * &a;
    for (i, d) in dm.d.iter().enumerate() {
        q2[(i, i)] -= mu * d;
    }
    let mut window = [DMatrix::identity(n, n), a, q2];
    let limit = series.finite_len().map_or(k_max, |len| len - 1);

    let mut sum = DMatrix::zeros(n, n);
    let mut stop = Stopper::new(tol);
    let mut terms = 0;
    let mut settled = false;
    for k in 0..=limit {
        let qk = &window[k.min(2)];
        let c = series.coefficient(k);
        sum += qk * c;
        terms = k + 1;
        let t = c * qk.abs().max();
        match stop.push(t, sum.abs().max()) {
            Err(msg) => return Err(Error::Divergence(msg)),
            Ok(true) if series.finite_len().is_none() => {
                settled = true;
                break;
            }
            Ok(_) => {}
        }
        if k >= 2 && k < limit {
            let [q0, q1, q2] = &window;
            let mut next = mul_left(g, q2) + scale_rows(q1, &c1);
            if mu != 0.0 {
                next -= mul_left(&dm.a_minus_s, q0) * (mu * mu);
            }
            window = [window[1].clone(), window[2].clone(), next];
        }
    }
    if series.finite_len().is_none() && !settled {
        return Err(Error::Divergence(format!(
            "series did not settle within {k_max} terms"
        )));
    }
    let error_bound = if series.finite_len().is_some() {
        0.0
    } else {
        stop.tail()
    };
    let action = (&sum * DVector::from_element(n, 1.0))
        .iter()
        .copied()
        .collect();
    Ok(GenfunResult {
        matrix: Some(sum),
        action,
        terms,
        error_bound,
    })
}

/// `bottom(f_0(Z) u) − μ² bottom(f_2(Z) u)` for `u = [0; 0; v]`.
fn blockz_apply(
    z: &BlockOperatorZ<'_>,
    series: &CoefficientSeries,
    v: &[f64],
    tol: f64,
) -> Result<(Vec<f64>, usize, f64)> {
    let n = z.n();
    let mu2 = z.mu() * z.mu();
    let mut u = vec![0.0; 3 * n];
    u[2 * n..].copy_from_slice(v);
    let mut next = vec![0.0; 3 * n];
    let mut s0 = vec![0.0; n];
    let mut s2 = vec![0.0; n];
    let mut stop0 = Stopper::new(tol);
    let mut stop2 = Stopper::new(tol);
    let (mut done0, mut done2) = (false, false);
    let finite = series.finite_len();
    let limit = finite.unwrap_or(MAX_TERMS);

    let mut k = 0;
    while k < limit {
        let c0 = series.shifted(0, k);
        let c2 = series.shifted(2, k);
        let bottom = &u[2 * n..];
        let un = max_abs(bottom);
        for i in 0..n {
            s0[i] += c0 * bottom[i];
            s2[i] += c2 * bottom[i];
        }
        let r2 = stop2.push(c2 * un, max_abs(&s2));
        let r0 = stop0.push(c0 * un, max_abs(&s0));
        match (r2, r0) {
            (Err(msg), _) => return Err(Error::Divergence(format!("f_2(Z) series: {msg}"))),
            (_, Err(msg)) => return Err(Error::Divergence(format!("f_0(Z) series: {msg}"))),
            (Ok(a), Ok(b)) => {
                done2 |= a;
                done0 |= b;
            }
        }
        k += 1;
        if finite.is_none() && done0 && done2 {
            break;
        }
        z.apply(&u, &mut next);
        std::mem::swap(&mut u, &mut next);
    }
    if finite.is_none() && !(done0 && done2) {
        let which = if done2 { "f_0" } else { "f_2" };
        return Err(Error::Divergence(format!(
            "{which}(Z) series did not settle within {MAX_TERMS} terms"
        )));
    }
    let bound = if finite.is_some() {
        0.0
    } else {
        stop0.tail() + mu2 * stop2.tail()
    };
    let out = s0.iter().zip(&s2).map(|(a, b)| a - mu2 * b).collect();
    Ok((out, k, bound))
}

/// The block-operator route. The matrix, when requested, is built column by
/// column from actions on unit vectors.
pub fn genfun_blockz(
    g: &Graph,
    p: BtdwParams,
    series: &CoefficientSeries,
    tol: f64,
    with_matrix: bool,
) -> Result<GenfunResult> {
    series.validate()?;
    check_tol(tol)?;
    let n = g.node_count();
    let z = BlockOperatorZ::assemble(g, p);
    let (action, terms, error_bound) = blockz_apply(&z, series, &vec![1.0; n], tol)?;
    let matrix = if with_matrix {
        let cols = (0..n)
            .into_par_iter()
            .map(|j| {
                let mut e = vec![0.0; n];
                e[j] = 1.0;
                blockz_apply(&z, series, &e, tol).map(|(col, _, _)| col)
            })
            .collect::<Result<Vec<_>>>()?;
        Some(DMatrix::from_fn(n, n, |i, j| cols[j][i]))
    } else {
        None
    };
    Ok(GenfunResult {
        matrix,
        action,
        terms,
        error_bound,
    })
}

/// `(Σ α^k q_k(A) / k!) 1` as the top block of a truncated Taylor expansion
/// of `exp(αZ)` applied to `[1; A1; (A² − μD)1]`.
///
/// The term count `K` is the first with `x^{K+1}/(K+1)! · e^x < tol`, where
/// `x = α‖Z‖₁` (the Lagrange remainder of the scalar exponential).
pub fn expm_btdw_action(g: &Graph, p: BtdwParams, alpha: f64, tol: f64) -> Result<GenfunResult> {
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "alpha must be finite and non-negative, got {alpha}"
        )));
    }
    check_tol(tol)?;
    let n = g.node_count();
    let z = BlockOperatorZ::assemble(g, p);
    let x = alpha * z.norm_1();

    let mut bound = x * x.exp();
    let mut k_terms = 1;
    while bound >= tol {
        k_terms += 1;
        bound *= x / k_terms as f64;
        if k_terms > MAX_TERMS {
            return Err(Error::TooLarge(format!(
                "alpha * ||Z||_1 = {x:.3} needs more than {MAX_TERMS} Taylor terms"
            )));
        }
    }

    let dm = g.derived();
    let ones = vec![1.0; n];
    let a1 = g.mul_vec(&ones);
    let mut a21 = g.mul_vec(&a1);
    for (v, d) in a21.iter_mut().zip(&dm.d) {
        *v -= p.mu() * d;
    }
    let mut u: Vec<f64> = ones.into_iter().chain(a1).chain(a21).collect();
    let mut next = vec![0.0; 3 * n];
    let mut sum = vec![0.0; n];
    let mut coef = 1.0;
    for k in 0..k_terms {
        for i in 0..n {
            sum[i] += coef * u[i];
        }
        z.apply(&u, &mut next);
        std::mem::swap(&mut u, &mut next);
        coef *= alpha / (k + 1) as f64;
    }
    Ok(GenfunResult {
        matrix: None,
        action: sum,
        terms: k_terms,
        error_bound: bound,
    })
}
