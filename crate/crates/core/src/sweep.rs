//! Parameter sweeps over `(θ, α)` grids and their CSV reports.
//!
//! Cells run in parallel; rows are emitted in grid order (θ outer, α inner)
//! so output is byte-identical however the work was scheduled.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::genfun::expm_btdw_action;
use crate::graph::Graph;
use crate::io::fmt_sci;
use crate::katz::{katz_btdw, normalize, CentralityResult, Normalization, SolveInfo};
use crate::metrics::{ipr, kendall_tau, spearman_rho};
use crate::spectral::{alpha_star, eigen_centrality_btdw, PowerConfig};
use crate::walks::BtdwParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Measure {
    KatzBtdw,
    EigenBtdw,
    Expm,
}

impl Measure {
    pub fn needs_alpha(&self) -> bool {
        !matches!(self, Self::EigenBtdw)
    }
}

impl FromStr for Measure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "katz-btdw" | "katz" => Ok(Self::KatzBtdw),
            "eigen-btdw" | "eigen" => Ok(Self::EigenBtdw),
            "expm" => Ok(Self::Expm),
            other => Err(Error::InvalidParameter(format!(
                "unknown measure {other:?} (katz-btdw, eigen-btdw, expm)"
            ))),
        }
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::KatzBtdw => "katz-btdw",
            Self::EigenBtdw => "eigen-btdw",
            Self::Expm => "expm",
        })
    }
}

/// Parses `a,b,c` or an inclusive range `start:stop:step`.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let bad = |msg: String| Error::InvalidParameter(format!("grid {spec:?}: {msg}"));
    let num = |s: &str| -> Result<f64> {
        s.trim()
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| bad(format!("bad number {s:?}")))
    };
    let parts: Vec<&str> = spec.split(':').collect();
    let values = match parts.as_slice() {
        [start, stop, step] => {
            let (start, stop, step) = (num(start)?, num(stop)?, num(step)?);
            if !(step > 0.0) || stop < start {
                return Err(bad("need start <= stop and step > 0".into()));
            }
            let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
            (0..count)
                .map(|i| {
                    let v = start + i as f64 * step;
                    // strip the accumulated representation error, e.g. 0.30000000000000004
                    (v * 1e12).round() / 1e12
                })
                .collect()
        }
        [list] => list
            .split(',')
            .filter(|s| !s.trim().is_empty())
            .map(num)
            .collect::<Result<Vec<_>>>()?,
        _ => return Err(bad("expected a list or start:stop:step".into())),
    };
    if values.is_empty() {
        return Err(bad("empty".into()));
    }
    Ok(values)
}

#[derive(Debug, Clone, PartialEq)]
pub enum AlphaGrid {
    Absolute(Vec<f64>),
    /// Fractions of `α*(θ)`, each in (0, 1).
    Relative(Vec<f64>),
}

impl AlphaGrid {
    fn labels(&self) -> &[f64] {
        match self {
            Self::Absolute(v) | Self::Relative(v) => v,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub thetas: Vec<f64>,
    pub alphas: Option<AlphaGrid>,
    pub measure: Measure,
    pub normalization: Normalization,
    /// Reference scores (e.g. passenger counts) for the tau/rho columns.
    pub reference: Option<Vec<f64>>,
    pub power: PowerConfig,
    /// Truncation tolerance for the exponential measure.
    pub tol: f64,
}

impl SweepConfig {
    pub fn validate(&self, n: usize) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.thetas.is_empty() {
            return bad("empty theta grid".into());
        }
        for &t in &self.thetas {
            BtdwParams::new(t)?;
        }
        match (&self.alphas, self.measure.needs_alpha()) {
            (None, true) => return bad(format!("measure {} needs an alpha grid", self.measure)),
            (Some(_), false) => return bad(format!("measure {} takes no alpha", self.measure)),
            (Some(AlphaGrid::Absolute(v)), _) => {
                if v.is_empty() || v.iter().any(|a| !(*a > 0.0 && a.is_finite())) {
                    return bad("absolute alphas must be positive".into());
                }
            }
            (Some(AlphaGrid::Relative(v)), _) => {
                if v.is_empty() || v.iter().any(|f| !(*f > 0.0 && *f < 1.0)) {
                    return bad("relative alpha fractions must lie in (0, 1)".into());
                }
            }
            (None, false) => {}
        }
        if let Some(r) = &self.reference {
            if r.len() != n {
                return bad(format!("reference has {} scores for {n} nodes", r.len()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub theta: f64,
    /// The grid label: an absolute α or a fraction of α*.
    pub alpha_label: Option<f64>,
    /// The α actually used.
    pub alpha: Option<f64>,
    pub outcome: std::result::Result<CellScores, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellScores {
    pub scores: Vec<f64>,
    pub ipr: f64,
    pub tau: Option<f64>,
    pub rho: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutput {
    pub measure: Measure,
    pub normalization: Normalization,
    pub has_reference: bool,
    pub relative: bool,
    pub cells: Vec<SweepCell>,
}

fn measure_cell(
    g: &Graph,
    cfg: &SweepConfig,
    p: BtdwParams,
    alpha: Option<f64>,
) -> Result<CellScores> {
    let res = match (cfg.measure, alpha) {
        (Measure::KatzBtdw, Some(a)) => katz_btdw(g, a, p)?,
        (Measure::Expm, Some(a)) => {
            let e = expm_btdw_action(g, p, a, cfg.tol)?;
            let info = SolveInfo {
                method: "taylor".into(),
                residual: 0.0,
                iterations: e.terms,
                converged: true,
                truncation_bound: Some(e.error_bound),
            };
            CentralityResult::new(e.action, Some(a), p.theta(), info)
        }
        (Measure::EigenBtdw, None) => eigen_centrality_btdw(g, p, &cfg.power)?,
        _ => unreachable!("validated"),
    };
    let res = normalize(res, cfg.normalization)?;
    let ipr = ipr(&res.scores)?;
    let (tau, rho) = match &cfg.reference {
        Some(r) => (
            Some(kendall_tau(&res.scores, r)?),
            Some(spearman_rho(&res.scores, r)?),
        ),
        None => (None, None),
    };
    Ok(CellScores {
        scores: res.scores,
        ipr,
        tau,
        rho,
    })
}

/// Evaluates every grid cell. A failing cell is recorded with its error
/// message instead of aborting the sweep.
pub fn run_sweep(g: &Graph, cfg: &SweepConfig) -> Result<SweepOutput> {
    cfg.validate(g.node_count())?;
    // α* per θ, only needed for relative grids
    let bounds: Vec<Option<std::result::Result<f64, String>>> = cfg
        .thetas
        .par_iter()
        .map(|&t| match cfg.alphas {
            Some(AlphaGrid::Relative(_)) => {
                let p = BtdwParams::new(t).expect("validated");
                Some(alpha_star(g, p, &cfg.power).map_err(|e| e.to_string()))
            }
            _ => None,
        })
        .collect();

    let mut jobs = Vec::new();
    for (ti, &theta) in cfg.thetas.iter().enumerate() {
        match &cfg.alphas {
            None => jobs.push((theta, None, Ok(None))),
            Some(grid) => {
                for &label in grid.labels() {
                    let alpha = match (&bounds[ti], grid) {
                        (Some(Ok(b)), _) => Ok(Some(label * b)),
                        (Some(Err(e)), _) => Err(format!("alpha* unavailable: {e}")),
                        (None, _) => Ok(Some(label)),
                    };
                    jobs.push((theta, Some(label), alpha));
                }
            }
        }
    }

    let cells = jobs
        .into_par_iter()
        .map(|(theta, alpha_label, alpha)| {
            let p = BtdwParams::new(theta).expect("validated");
            let (alpha, outcome) = match alpha {
                Err(e) => (None, Err(e)),
                Ok(a) => (a, measure_cell(g, cfg, p, a).map_err(|e| e.to_string())),
            };
            SweepCell {
                theta,
                alpha_label,
                alpha,
                outcome,
            }
        })
        .collect();

    Ok(SweepOutput {
        measure: cfg.measure,
        normalization: cfg.normalization,
        has_reference: cfg.reference.is_some(),
        relative: matches!(cfg.alphas, Some(AlphaGrid::Relative(_))),
        cells,
    })
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt_sci).unwrap_or_default()
}

/// Keeps a free-text field inside one CSV cell.
fn csv_text(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\"").replace('\n', " "))
    } else {
        s.to_string()
    }
}

impl SweepOutput {
    /// `theta,alpha,node,score`, one row per node of every successful cell.
    pub fn long_csv(&self, one_based: bool) -> String {
        let base = usize::from(one_based);
        let mut out = String::from("theta,alpha,node,score\n");
        for c in &self.cells {
            if let Ok(s) = &c.outcome {
                for (i, v) in s.scores.iter().enumerate() {
                    out.push_str(&format!(
                        "{},{},{},{}\n",
                        fmt_sci(c.theta),
                        opt(c.alpha),
                        i + base,
                        fmt_sci(*v)
                    ));
                }
            }
        }
        out
    }

    /// One row per cell: `theta,alpha,norm,ipr[,tau,rho],status`.
    pub fn summary_csv(&self) -> String {
        let mut out = String::from("theta,alpha,norm,ipr");
        if self.has_reference {
            out.push_str(",tau,rho");
        }
        out.push_str(",status\n");
        for c in &self.cells {
            let mut row = vec![
                fmt_sci(c.theta),
                opt(c.alpha),
                self.normalization.to_string(),
            ];
            match &c.outcome {
                Ok(s) => {
                    row.push(fmt_sci(s.ipr));
                    if self.has_reference {
                        row.push(opt(s.tau));
                        row.push(opt(s.rho));
                    }
                    row.push("ok".into());
                }
                Err(e) => {
                    row.push(String::new());
                    if self.has_reference {
                        row.extend([String::new(), String::new()]);
                    }
                    row.push(csv_text(&format!("error: {e}")));
                }
            }
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    /// θ rows by α columns of one statistic (`ipr` or `tau`). Column
    /// headers are the grid labels, prefixed `frac=` for relative grids;
    /// failed cells are empty.
    pub fn wide_csv(&self, stat: WideStat) -> String {
        let mut labels: Vec<Option<f64>> = Vec::new();
        let mut thetas: Vec<f64> = Vec::new();
        for c in &self.cells {
            if !labels.contains(&c.alpha_label) {
                labels.push(c.alpha_label);
            }
            if !thetas.contains(&c.theta) {
                thetas.push(c.theta);
            }
        }
        let prefix = if self.relative { "frac=" } else { "alpha=" };
        let mut out = String::from("theta");
        for l in &labels {
            out.push(',');
            if let Some(l) = l {
                out.push_str(&format!("{prefix}{}", fmt_sci(*l)));
            } else {
                out.push_str(&self.measure.to_string());
            }
        }
        out.push('\n');
        for t in &thetas {
            out.push_str(&fmt_sci(*t));
            for l in &labels {
                out.push(',');
                let cell = self
                    .cells
                    .iter()
                    .find(|c| c.theta == *t && c.alpha_label == *l);
                if let Some(Ok(s)) = cell.map(|c| &c.outcome) {
                    let v = match stat {
                        WideStat::Ipr => Some(s.ipr),
                        WideStat::Tau => s.tau,
                    };
                    out.push_str(&opt(v));
                }
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WideStat {
    Ipr,
    Tau,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlphaStarRow {
    pub theta: f64,
    /// `1/ρ(Z)`, or the last estimate when the iteration did not settle.
    pub alpha_star: f64,
    pub converged: bool,
}

pub fn alpha_star_table(g: &Graph, thetas: &[f64], cfg: &PowerConfig) -> Result<Vec<AlphaStarRow>> {
    let params = thetas
        .iter()
        .map(|&t| BtdwParams::new(t))
        .collect::<Result<Vec<_>>>()?;
    Ok(params
        .par_iter()
        .map(|&p| match alpha_star(g, p, cfg) {
            Ok(a) => AlphaStarRow {
                theta: p.theta(),
                alpha_star: a,
                converged: true,
            },
            Err(Error::NotConverged { estimate, .. }) => AlphaStarRow {
                theta: p.theta(),
                alpha_star: if estimate > 0.0 {
                    1.0 / estimate
                } else {
                    f64::NAN
                },
                converged: false,
            },
            Err(_) => AlphaStarRow {
                theta: p.theta(),
                alpha_star: f64::NAN,
                converged: false,
            },
        })
        .collect())
}

pub fn alpha_star_csv(rows: &[AlphaStarRow]) -> String {
    let mut out = String::from("theta,alpha_star,converged\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{}\n",
            fmt_sci(r.theta),
            fmt_sci(r.alpha_star),
            r.converged
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::NamedGraph;

    fn squid() -> Graph {
        NamedGraph::Squid.build().unwrap()
    }

    fn katz_cfg(thetas: Vec<f64>, alphas: AlphaGrid) -> SweepConfig {
        SweepConfig {
            thetas,
            alphas: Some(alphas),
            measure: Measure::KatzBtdw,
            normalization: Normalization::L1,
            reference: None,
            power: PowerConfig::default(),
            tol: 1e-12,
        }
    }

    #[test]
    fn grids() {
        assert_eq!(parse_grid("0,0.5,1").unwrap(), vec![0.0, 0.5, 1.0]);
        let g = parse_grid("0:1:0.05").unwrap();
        assert_eq!(g.len(), 21);
        assert_eq!(g[6], 0.3);
        assert_eq!(*g.last().unwrap(), 1.0);
        assert_eq!(parse_grid("0.05:0.26:0.01").unwrap().len(), 22);
        assert!(parse_grid("1:0:0.1").is_err());
        assert!(parse_grid("a,b").is_err());
        assert!(parse_grid("").is_err());
    }

    #[test]
    fn measure_names() {
        for m in [Measure::KatzBtdw, Measure::EigenBtdw, Measure::Expm] {
            assert_eq!(m.to_string().parse::<Measure>().unwrap(), m);
        }
        assert!("pagerank".parse::<Measure>().is_err());
    }

    #[test]
    fn config_checks() {
        let n = 11;
        assert!(katz_cfg(vec![0.5], AlphaGrid::Relative(vec![1.0]))
            .validate(n)
            .is_err());
        assert!(katz_cfg(vec![0.5], AlphaGrid::Absolute(vec![-0.1]))
            .validate(n)
            .is_err());
        assert!(katz_cfg(vec![], AlphaGrid::Absolute(vec![0.1]))
            .validate(n)
            .is_err());
        assert!(katz_cfg(vec![1.5], AlphaGrid::Absolute(vec![0.1]))
            .validate(n)
            .is_err());
        let mut c = katz_cfg(vec![0.5], AlphaGrid::Absolute(vec![0.1]));
        c.measure = Measure::EigenBtdw;
        assert!(c.validate(n).is_err());
        c.alphas = None;
        assert!(c.validate(n).is_ok());
        c.reference = Some(vec![1.0; 3]);
        assert!(c.validate(n).is_err());
    }

    #[test]
    fn failed_cells_are_recorded() {
        let cfg = katz_cfg(vec![1.0], AlphaGrid::Absolute(vec![0.1, 0.5]));
        let out = run_sweep(&squid(), &cfg).unwrap();
        assert!(out.cells[0].outcome.is_ok());
        assert!(out.cells[1].outcome.is_err());
        let summary = out.summary_csv();
        let lines: Vec<&str> = summary.lines().collect();
        assert_eq!(lines[0], "theta,alpha,norm,ipr,status");
        assert!(lines[1].ends_with(",ok"));
        assert!(lines[2].contains("error"));
        assert_eq!(out.long_csv(true).lines().count(), 1 + 11);
    }

    #[test]
    fn relative_single_cell_matches_direct_run() {
        let g = squid();
        let cfg = katz_cfg(vec![1.0], AlphaGrid::Relative(vec![0.99]));
        let out = run_sweep(&g, &cfg).unwrap();
        let a = 0.99 * alpha_star(&g, BtdwParams::CLASSICAL, &PowerConfig::default()).unwrap();
        let direct = normalize(
            katz_btdw(&g, a, BtdwParams::CLASSICAL).unwrap(),
            Normalization::L1,
        )
        .unwrap();
        assert_eq!(out.cells[0].outcome.as_ref().unwrap().scores, direct.scores);
        assert_eq!(out.cells[0].alpha, Some(a));
    }

    #[test]
    fn parallel_equals_serial() {
        let g = squid();
        let cfg = katz_cfg(
            parse_grid("0:1:0.25").unwrap(),
            AlphaGrid::Relative(vec![0.3, 0.6, 0.9]),
        );
        let par = run_sweep(&g, &cfg).unwrap();
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let ser = pool.install(|| run_sweep(&g, &cfg)).unwrap();
        assert_eq!(par, ser);
        assert_eq!(par.long_csv(true), ser.long_csv(true));
    }

    #[test]
    fn reference_columns_and_wide_layout() {
        let g = squid();
        let mut cfg = katz_cfg(vec![0.0, 1.0], AlphaGrid::Absolute(vec![0.1, 0.2]));
        cfg.reference = Some((1..=11).map(f64::from).collect());
        let out = run_sweep(&g, &cfg).unwrap();
        assert!(out
            .summary_csv()
            .starts_with("theta,alpha,norm,ipr,tau,rho,status\n"));
        let wide = out.wide_csv(WideStat::Ipr);
        let lines: Vec<&str> = wide.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[0].split(',').count(), 3);
        assert!(lines[0].starts_with("theta,alpha=1.0"));
    }

    #[test]
    fn eigen_sweep_has_one_cell_per_theta() {
        let cfg = SweepConfig {
            thetas: vec![0.5, 1.0],
            alphas: None,
            measure: Measure::EigenBtdw,
            normalization: Normalization::L1,
            reference: None,
            power: PowerConfig::default(),
            tol: 1e-12,
        };
        let out = run_sweep(&squid(), &cfg).unwrap();
        assert_eq!(out.cells.len(), 2);
        assert!(out
            .cells
            .iter()
            .all(|c| c.outcome.is_ok() && c.alpha.is_none()));
    }

    #[test]
    fn circulant_alpha_star_table() {
        let g = NamedGraph::RegularCirculant { n: 12, d: 4 }
            .build()
            .unwrap();
        let rows = alpha_star_table(&g, &[0.0, 0.5, 1.0], &PowerConfig::default()).unwrap();
        for r in &rows {
            assert!(r.converged);
            assert!((r.alpha_star - 1.0 / (3.0 + r.theta)).abs() < 1e-9, "{r:?}");
        }
        let csv = alpha_star_csv(&rows);
        assert!(csv.starts_with("theta,alpha_star,converged\n0.000000000000e+00,"));
    }
}
