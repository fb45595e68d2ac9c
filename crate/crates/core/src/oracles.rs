//! Closed-form reference values: star walk counts and Katz scores, the
//! singular `α` of regular graphs, and the squid's Perron pair.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::graph::{Graph, NamedGraph};
use crate::katz::CentralityResult;
use crate::walks::{BtdwParams, WalkCountMatrix};

/// Star `S_{1,m}` (hub at index 0) with a downweighting factor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StarParams {
    pub m: usize,
    pub params: BtdwParams,
}

impl StarParams {
    pub fn new(m: usize, theta: f64) -> Result<Self> {
        if m < 1 {
            return Err(Error::InvalidParameter("star needs m >= 1 leaves".into()));
        }
        Ok(Self {
            m,
            params: BtdwParams::new(theta)?,
        })
    }

    pub fn theta(&self) -> f64 {
        self.params.theta()
    }

    /// `η = θ(θ + m − 1)`, the growth factor of odd-length counts.
    pub fn eta(&self) -> f64 {
        let t = self.theta();
        t * (t + self.m as f64 - 1.0)
    }

    /// Diagonal of `B = μI − D`: `−(θ + m − 1)` at the hub, `−θ` at the leaves.
    pub fn b_diag(&self) -> Vec<f64> {
        let mu = self.params.mu();
        std::iter::once(mu - self.m as f64)
            .chain(std::iter::repeat_n(mu - 1.0, self.m))
            .collect()
    }

    pub fn graph(&self) -> Graph {
        NamedGraph::Star { m: self.m }
            .build()
            .expect("m >= 1 was checked on construction")
    }
}

/// `q_k` on the star from the closed forms: `q_{2j+1} = η^j A` and, for
/// `j ≥ 1`,
///
/// ```text
/// q_{2j} = η^{j−1} A² Σ_{i<j} C^i − μ^j D B^{j−1},   C = μB/η
/// ```
///
/// (the geometric sum is `(I − C^j)(I − C)^{−1}` without the inverse).
/// `θ = 0` has `η = 0`, so even `k ≥ 4` is refused there and the caller
/// should use the nonbacktracking recurrence instead.
pub fn star_qk(sp: &StarParams, k: usize) -> Result<WalkCountMatrix> {
    let g = sp.graph();
    let n = sp.m + 1;
    let a = g.to_dense();
    let eta = sp.eta();
    let mu = sp.params.mu();
    let d: Vec<f64> = g.derived().d;
    let values = match k {
        0 => DMatrix::identity(n, n),
        1 => a,
        2 => &a * &a - DMatrix::from_diagonal(&d.clone().into()) * mu,
        k if k % 2 == 1 => a * eta.powi((k / 2) as i32),
        k => {
            if sp.theta() == 0.0 {
                return Err(Error::Unsupported(format!(
                    "even k = {k} >= 4 needs theta > 0; use the nonbacktracking recurrence"
                )));
            }
            let j = k / 2;
            let b = sp.b_diag();
            // η^{j−1} Σ_{i<j} (μB/η)^i = Σ_{i<j} η^{j−1−i} (μB)^i, computed entrywise
            let geo: Vec<f64> = b
                .iter()
                .map(|&bi| {
                    (0..j)
                        .map(|i| eta.powi((j - 1 - i) as i32) * (mu * bi).powi(i as i32))
                        .sum()
                })
                .collect();
            let a2 = &a * &a;
            DMatrix::from_fn(n, n, |r, c| {
                let tail = if r == c {
                    mu.powi(j as i32) * d[r] * b[r].powi(j as i32 - 1)
                } else {
                    0.0
                };
                a2[(r, c)] * geo[c] - tail
            })
        }
    };
    Ok(WalkCountMatrix {
        k,
        theta: sp.theta(),
        values,
    })
}

/// Star Katz scores. For `θ > 0`, with `α²η < 1`:
/// hub `1 + αm(1 + αθ)/(1 − α²η)`, leaves `1 + α(1 + α(θ + m − 1))/(1 − α²η)`.
/// At `θ = 0` the series is finite: hub `1 + αm`, leaves `1 + α + α²(m − 1)`.
pub fn star_katz(sp: &StarParams, alpha: f64) -> Result<CentralityResult> {
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "alpha must be finite and non-negative, got {alpha}"
        )));
    }
    let m = sp.m as f64;
    let theta = sp.theta();
    let (hub, leaf) = if theta == 0.0 {
        (1.0 + alpha * m, 1.0 + alpha + alpha * alpha * (m - 1.0))
    } else {
        let eta = sp.eta();
        let den = 1.0 - alpha * alpha * eta;
        if den <= 0.0 {
            return Err(Error::OutsideConvergence {
                alpha,
                alpha_star: Some(1.0 / eta.sqrt()),
                reason: format!("alpha^2 eta = {:.6} is not below 1", alpha * alpha * eta),
            });
        }
        (
            1.0 + alpha * m * (1.0 + alpha * theta) / den,
            1.0 + alpha * (1.0 + alpha * (theta + m - 1.0)) / den,
        )
    };
    let mut scores = vec![leaf; sp.m + 1];
    scores[0] = hub;
    Ok(CentralityResult::closed_form(scores, Some(alpha), theta))
}

/// The `α` at which the Katz system of a `d`-regular undirected graph is
/// singular: `1/(d − 1 + θ)`.
pub fn regular_singular_alpha(d: usize, theta: f64) -> Result<f64> {
    if d < 2 {
        return Err(Error::InvalidParameter(format!(
            "degree must be >= 2, got {d}"
        )));
    }
    let p = BtdwParams::new(theta)?;
    Ok(1.0 / (d as f64 - p.mu()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SquidSpectrum {
    /// `(1 + √17)/2`.
    pub lambda: f64,
    /// Perron vector scaled so node 1 has entry 1.
    pub v: Vec<f64>,
}

/// The squid's Perron pair, checked against the built graph.
pub fn squid_spectrum() -> Result<SquidSpectrum> {
    let lambda = (1.0 + 17f64.sqrt()) / 2.0;
    let half = (lambda - 1.0) / 2.0;
    let quarter = (lambda - 1.0) / 4.0;
    // nodes 1..=11
    let v = vec![
        1.0, quarter, quarter, quarter, quarter, 1.0, half, 1.0, half, 1.0, half,
    ];
    let g = NamedGraph::Squid.build()?;
    let av = g.mul_vec(&v);
    let err = av
        .iter()
        .zip(&v)
        .map(|(a, x)| (a - lambda * x).abs())
        .fold(0.0, f64::max);
    if !(err < 1e-12) {
        return Err(Error::Fixture(format!(
            "squid eigen-equation residual {err:.3e}; the edge set does not match"
        )));
    }
    Ok(SquidSpectrum { lambda, v })
}

/// Outcome of one built-in self-check.
#[derive(Debug, Clone, PartialEq)]
pub struct FixtureCheck {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// Cross-checks the bundled fixtures against independent routes: the
/// squid eigen-equation, Figure-1 counts against enumeration, star closed
/// forms against the recurrence, and the circulant bound.
pub fn fixture_checks() -> Vec<FixtureCheck> {
    fn check(name: &'static str, f: impl FnOnce() -> Result<(bool, String)>) -> FixtureCheck {
        match f() {
            Ok((passed, detail)) => FixtureCheck {
                name,
                passed,
                detail,
            },
            Err(e) => FixtureCheck {
                name,
                passed: false,
                detail: e.to_string(),
            },
        }
    }
    vec![
        check("squid-perron-pair", || {
            let s = squid_spectrum()?;
            Ok((true, format!("lambda = {:.12}", s.lambda)))
        }),
        check("figure1-counts-vs-enumeration", || {
            let g = NamedGraph::Figure1.build()?;
            let mut worst = 0.0_f64;
            for theta in [0.0, 0.3, 1.0] {
                let p = BtdwParams::new(theta)?;
                let seq = crate::walks::btdw_sequence(&g, p, 6, crate::walks::Side::Right);
                for k in 0..=6 {
                    let bf = crate::walks::brute_force_btdw(&g, p, k)?;
                    worst = worst.max((&bf.values - &seq.matrices[k]).abs().max());
                }
            }
            Ok((worst <= 1e-12, format!("max deviation {worst:.3e}")))
        }),
        check("star-closed-forms", || {
            let mut worst = 0.0_f64;
            for m in [2, 5, 8] {
                let sp = StarParams::new(m, 0.4)?;
                let seq = crate::walks::btdw_sequence(
                    &sp.graph(),
                    sp.params,
                    10,
                    crate::walks::Side::Right,
                );
                for (k, q) in seq.matrices.iter().enumerate() {
                    let rel = (&star_qk(&sp, k)?.values - q).abs().max() / q.abs().max().max(1.0);
                    worst = worst.max(rel);
                }
            }
            Ok((
                worst <= 1e-10,
                format!("max relative deviation {worst:.3e}"),
            ))
        }),
        check("circulant-alpha-star", || {
            let g = NamedGraph::RegularCirculant { n: 20, d: 4 }.build()?;
            let p = BtdwParams::new(0.5)?;
            let a = crate::spectral::alpha_star(&g, p, &crate::spectral::PowerConfig::default())?;
            let expected = regular_singular_alpha(4, 0.5)?;
            let err = (a - expected).abs();
            Ok((
                err <= 1e-8,
                format!("alpha* = {a:.12}, expected {expected:.12}"),
            ))
        }),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::katz::{katz_btdw, katz_series_oracle};
    use crate::walks::{btdw_sequence, Side};

    #[test]
    fn star_params() {
        let sp = StarParams::new(4, 0.5).unwrap();
        assert_eq!(sp.eta(), 1.75);
        assert_eq!(sp.b_diag(), vec![-3.5, -0.5, -0.5, -0.5, -0.5]);
        assert!(StarParams::new(0, 0.5).is_err());
        assert!(StarParams::new(3, 1.2).is_err());
    }

    #[test]
    fn odd_counts_scale_adjacency() {
        let sp = StarParams::new(4, 0.5).unwrap();
        let q5 = star_qk(&sp, 5).unwrap();
        assert_eq!(q5.values, sp.graph().to_dense() * (1.75 * 1.75));
        assert_eq!(star_qk(&sp, 1).unwrap().values, sp.graph().to_dense());
    }

    #[test]
    fn even_counts_match_recurrence() {
        let sp = StarParams::new(3, 0.4).unwrap();
        let seq = btdw_sequence(&sp.graph(), sp.params, 12, Side::Right);
        for k in 0..=12 {
            let q = star_qk(&sp, k).unwrap();
            let diff = (&q.values - &seq.matrices[k]).abs().max();
            assert!(diff < 1e-10, "k = {k}: {diff}");
        }
    }

    #[test]
    fn theta_zero_even_is_unsupported() {
        let sp = StarParams::new(3, 0.0).unwrap();
        assert!(star_qk(&sp, 3).is_ok());
        assert!(star_qk(&sp, 2).is_ok());
        assert!(matches!(star_qk(&sp, 4), Err(Error::Unsupported(_))));
    }

    #[test]
    fn katz_closed_forms() {
        let sp = StarParams::new(10, 0.5).unwrap();
        let x = star_katz(&sp, 0.2).unwrap();
        let solved = katz_btdw(&sp.graph(), 0.2, sp.params).unwrap();
        assert!(x.max_abs_diff(&solved.scores) < 1e-10);

        let sp0 = StarParams::new(5, 0.0).unwrap();
        let x = star_katz(&sp0, 0.3).unwrap();
        assert_eq!(x.scores[0], 2.5);
        assert!((x.scores[1] - 1.66).abs() < 1e-15);
        let solved = katz_btdw(&sp0.graph(), 0.3, sp0.params).unwrap();
        assert!(x.max_abs_diff(&solved.scores) < 1e-12);

        let sp = StarParams::new(4, 0.5).unwrap();
        assert!(matches!(
            star_katz(&sp, 1.001 / 1.75f64.sqrt()),
            Err(Error::OutsideConvergence { .. })
        ));
    }

    #[test]
    fn hub_leaf_ratio_for_many_leaves() {
        // admissible only while α²θ(θ + m − 1) < 1, so m stays below ~660 here
        let (alpha, theta) = (0.05, 0.6);
        let mut prev = f64::INFINITY;
        for m in [20, 100, 500] {
            let sp = StarParams::new(m, theta).unwrap();
            let x = star_katz(&sp, alpha).unwrap();
            let gap = (x.scores[0] / x.scores[1] - (1.0 / alpha + theta)).abs();
            assert!(gap < prev);
            assert!(gap * (m as f64) < 2.0 / alpha.powi(3), "m = {m}: gap {gap}");
            prev = gap;
        }
    }

    #[test]
    fn star_series_radius() {
        // sharp side: theta >= 1/(m+1)
        let sp = StarParams::new(6, 0.5).unwrap();
        let r = 1.0 / sp.eta().sqrt();
        let g = sp.graph();
        let inside = katz_series_oracle(&g, 0.95 * r, sp.params, 1e-12, 20_000).unwrap();
        assert!(inside.info.converged);
        assert!(katz_series_oracle(&g, 1.05 * r, sp.params, 1e-12, 20_000).is_err());
    }

    #[test]
    fn regular_alpha() {
        assert_eq!(regular_singular_alpha(4, 1.0).unwrap(), 0.25);
        assert!((regular_singular_alpha(4, 0.0).unwrap() - 1.0 / 3.0).abs() < 1e-16);
        assert!((regular_singular_alpha(6, 0.5).unwrap() - 1.0 / 5.5).abs() < 1e-16);
        assert!(regular_singular_alpha(1, 0.5).is_err());
    }

    #[test]
    fn fixtures_pass() {
        for c in fixture_checks() {
            assert!(c.passed, "{}: {}", c.name, c.detail);
        }
    }

    #[test]
    fn squid_pair() {
        let s = squid_spectrum().unwrap();
        assert!((s.lambda - 2.561552813).abs() < 1e-9);
        assert!((s.v[6] - 0.780776).abs() < 1e-6);
    }
}
