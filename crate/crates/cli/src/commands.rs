use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use btdw_core::io::{fmt_sci, parse_score_file, scores_csv};
use btdw_core::oracles::fixture_checks;
use btdw_core::sweep::{alpha_star_csv, alpha_star_table, parse_grid, WideStat};
use btdw_core::{
    alpha_star, brute_force_btdw, btdw_sequence, eigen_centrality_btdw, expm_btdw_action,
    genfun_blockz, genfun_direct, katz_btdw, load_graph, nbt_sequence, normalize, run_sweep,
    AlphaGrid, BtdwParams, CentralityResult, CoefficientSeries, EdgeListOptions, Graph, Measure,
    NamedGraph, Normalization, PowerConfig, Side, SolveInfo, SweepConfig,
};
use nalgebra::DMatrix;
use serde_json::json;

use crate::{
    AlphaStarArgs, CentralityArgs, CountMethod, GenfunArgs, GraphArgs, NumericArgs, Route,
    SeriesKind, SweepArgs, WalkCountArgs,
};

impl GraphArgs {
    fn one_based(&self) -> bool {
        !self.zero_based
    }

    fn load(&self) -> Result<Graph> {
        if let Some(spec) = &self.named {
            let named: NamedGraph = spec.parse()?;
            return Ok(named.build()?);
        }
        let path = self
            .graph
            .as_ref()
            .expect("clap requires --graph or --named");
        let opts = EdgeListOptions {
            directed: !self.undirected,
            one_based: self.one_based(),
            nodes: None,
        };
        load_graph(path, opts).with_context(|| format!("reading {}", path.display()))
    }

    fn describe(&self) -> String {
        match (&self.named, &self.graph) {
            (Some(n), _) => n.clone(),
            (None, Some(p)) => p.display().to_string(),
            (None, None) => String::new(),
        }
    }
}

impl NumericArgs {
    fn power(&self) -> Result<PowerConfig> {
        if !(self.tol > 0.0 && self.tol < 1.0) {
            bail!("--tol must lie in (0, 1), got {}", self.tol);
        }
        Ok(PowerConfig {
            tol: self.tol.max(1e-14),
            max_iter: None,
            seed: self.seed,
        })
    }
}

/// `foo/bar.csv` → `foo/bar.<ext>`
fn sibling(path: &Path, ext: &str) -> PathBuf {
    path.with_extension(ext)
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => write_file(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    write_file(path, &(serde_json::to_string_pretty(value)? + "\n"))
}

fn expm_result(g: &Graph, p: BtdwParams, alpha: f64, tol: f64) -> Result<CentralityResult> {
    let e = expm_btdw_action(g, p, alpha, tol)?;
    let mut res = CentralityResult::closed_form(e.action, Some(alpha), p.theta());
    res.info = SolveInfo {
        method: "taylor".into(),
        residual: 0.0,
        iterations: e.terms,
        converged: true,
        truncation_bound: Some(e.error_bound),
    };
    Ok(res)
}

pub fn centrality(a: CentralityArgs) -> Result<ExitCode> {
    let g = a.graph.load()?;
    let measure: Measure = a.measure.parse()?;
    let norm: Normalization = a.norm.parse()?;
    let p = BtdwParams::new(a.theta)?;
    let power = a.numeric.power()?;
    let alpha = match (a.alpha, a.alpha_rel) {
        (Some(x), None) => Some(x),
        (None, Some(f)) => {
            if !(f > 0.0 && f < 1.0) {
                bail!("--alpha-rel must lie in (0, 1), got {f}");
            }
            let bound = alpha_star(&g, p, &power)?;
            if !bound.is_finite() {
                bail!("alpha* is infinite (Z is nilpotent); give --alpha instead");
            }
            Some(f * bound)
        }
        (None, None) => None,
        (Some(_), Some(_)) => unreachable!("clap rejects both"),
    };
    let res = match (measure, alpha) {
        (Measure::EigenBtdw, None) => eigen_centrality_btdw(&g, p, &power)?,
        (Measure::EigenBtdw, Some(_)) => bail!("measure eigen-btdw takes no alpha"),
        (_, None) => bail!("measure {measure} needs --alpha or --alpha-rel"),
        (Measure::KatzBtdw, Some(x)) => katz_btdw(&g, x, p)?,
        (Measure::Expm, Some(x)) => expm_result(&g, p, x, a.numeric.tol)?,
    };
    let res = normalize(res, norm)?;
    emit(
        a.out.as_deref(),
        &scores_csv(&res.scores, a.graph.one_based()),
    )?;
    if let Some(out) = &a.out {
        let mut meta = serde_json::to_value(res.metadata())?;
        meta["measure"] = json!(measure.to_string());
        meta["graph"] = json!(a.graph.describe());
        meta["seed"] = json!(a.numeric.seed);
        write_json(&sibling(out, "json"), &meta)?;
    }
    Ok(ExitCode::SUCCESS)
}

pub fn sweep(a: SweepArgs) -> Result<ExitCode> {
    let g = a.graph.load()?;
    let measure: Measure = a.measure.parse()?;
    let alphas = match (&a.alpha, &a.alpha_rel) {
        (Some(s), None) => Some(AlphaGrid::Absolute(parse_grid(s)?)),
        (None, Some(s)) => Some(AlphaGrid::Relative(parse_grid(s)?)),
        _ => None,
    };
    let reference = match &a.scores {
        Some(path) => {
            let text =
                fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            Some(parse_score_file(
                &text,
                g.node_count(),
                a.graph.one_based(),
            )?)
        }
        None => None,
    };
    let cfg = SweepConfig {
        thetas: parse_grid(&a.theta)?,
        alphas,
        measure,
        normalization: a.norm.parse()?,
        reference,
        power: a.numeric.power()?,
        tol: a.numeric.tol,
    };
    let out = run_sweep(&g, &cfg)?;
    let failed = out.cells.iter().filter(|c| c.outcome.is_err()).count();
    match &a.out {
        Some(prefix) => {
            write_file(
                &with_suffix(prefix, ".scores.csv"),
                &out.long_csv(a.graph.one_based()),
            )?;
            write_file(&with_suffix(prefix, ".summary.csv"), &out.summary_csv())?;
            if a.wide {
                write_file(
                    &with_suffix(prefix, ".ipr.csv"),
                    &out.wide_csv(WideStat::Ipr),
                )?;
                if out.has_reference {
                    write_file(
                        &with_suffix(prefix, ".tau.csv"),
                        &out.wide_csv(WideStat::Tau),
                    )?;
                }
            }
            let meta = json!({
                "graph": a.graph.describe(),
                "nodes": g.node_count(),
                "measure": measure.to_string(),
                "normalization": cfg.normalization.to_string(),
                "thetas": cfg.thetas,
                "alpha_grid": match &cfg.alphas {
                    Some(AlphaGrid::Absolute(v)) => json!({ "absolute": v }),
                    Some(AlphaGrid::Relative(v)) => json!({ "relative": v }),
                    None => serde_json::Value::Null,
                },
                "reference": a.scores.as_ref().map(|p| p.display().to_string()),
                "cells": out.cells.len(),
                "failed_cells": failed,
                "seed": a.numeric.seed,
                "tol": a.numeric.tol,
            });
            write_json(&with_suffix(prefix, ".json"), &meta)?;
        }
        None if a.wide => print!("{}", out.wide_csv(WideStat::Ipr)),
        None => print!("{}", out.summary_csv()),
    }
    if failed > 0 {
        eprintln!(
            "warning: {failed} of {} cells failed; see the status column",
            out.cells.len()
        );
    }
    Ok(ExitCode::SUCCESS)
}

pub fn alpha_star_cmd(a: AlphaStarArgs) -> Result<ExitCode> {
    let g = a.graph.load()?;
    let rows = alpha_star_table(&g, &parse_grid(&a.theta)?, &a.numeric.power()?)?;
    emit(a.out.as_deref(), &alpha_star_csv(&rows))?;
    let unsettled = rows.iter().filter(|r| !r.converged).count();
    if unsettled > 0 {
        eprintln!("warning: power iteration did not settle for {unsettled} theta value(s)");
    }
    Ok(ExitCode::SUCCESS)
}

fn read_coefficients(path: &Path) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    text.lines()
        .map(|l| l.split('#').next().unwrap_or_default())
        .flat_map(|l| l.split(|c: char| c == ',' || c.is_whitespace()))
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<f64>()
                .with_context(|| format!("bad coefficient {t:?}"))
        })
        .collect()
}

fn matrix_csv(m: &DMatrix<f64>) -> String {
    let mut out = String::new();
    for row in m.row_iter() {
        let cells: Vec<String> = row.iter().map(|&v| fmt_sci(v)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn genfun(a: GenfunArgs) -> Result<ExitCode> {
    let g = a.graph.load()?;
    let p = BtdwParams::new(a.theta)?;
    let tol = a.numeric.tol;
    let series = match (a.series, a.alpha, &a.custom) {
        (SeriesKind::Resolvent, Some(x), None) => CoefficientSeries::Resolvent { alpha: x },
        (SeriesKind::Exponential, Some(x), None) => CoefficientSeries::Exponential { alpha: x },
        (SeriesKind::CustomFile, None, Some(path)) => {
            CoefficientSeries::Custom(read_coefficients(path)?)
        }
        (SeriesKind::CustomFile, _, _) => {
            bail!("--series custom-file needs --custom and no --alpha")
        }
        (_, None, _) => bail!("this series needs --alpha"),
        (_, Some(_), Some(_)) => bail!("--custom applies only to --series custom-file"),
    };
    let with_matrix = !a.action_only;
    let res = match a.route {
        Route::Blockz => genfun_blockz(&g, p, &series, tol, with_matrix)?,
        Route::Direct => genfun_direct(&g, p, &series, tol, btdw_core::genfun::MAX_TERMS)?,
    };
    let one_based = a.graph.one_based();
    emit(a.out.as_deref(), &scores_csv(&res.action, one_based))?;
    if with_matrix {
        let m = res.matrix.as_ref().expect("matrix requested");
        let text = matrix_csv(m);
        match &a.out {
            Some(out) => write_file(&with_suffix(&out.with_extension(""), ".matrix.csv"), &text)?,
            None => print!("# matrix\n{text}"),
        }
    }
    if let Some(out) = &a.out {
        let meta = json!({
            "graph": a.graph.describe(),
            "theta": a.theta,
            "series": format!("{:?}", a.series).to_lowercase(),
            "alpha": a.alpha,
            "route": format!("{:?}", a.route).to_lowercase(),
            "terms": res.terms,
            "error_bound": res.error_bound,
            "tol": tol,
        });
        write_json(&sibling(out, "json"), &meta)?;
    }
    Ok(ExitCode::SUCCESS)
}

pub fn walk_counts(a: WalkCountArgs) -> Result<ExitCode> {
    let g = a.graph.load()?;
    let p = BtdwParams::new(a.theta)?;
    let q = match a.method {
        CountMethod::Recurrence => btdw_sequence(&g, p, a.k, Side::Right)
            .get(a.k)
            .expect("k computed"),
        CountMethod::Enumerate => brute_force_btdw(&g, p, a.k)?,
        CountMethod::Nonbacktracking => {
            if a.theta != 0.0 {
                bail!("--method nonbacktracking counts theta = 0 walks; pass --theta 0");
            }
            nbt_sequence(&g, a.k).get(a.k).expect("k computed")
        }
    };
    emit(a.out.as_deref(), &q.to_csv())?;
    Ok(ExitCode::SUCCESS)
}

pub fn validate() -> Result<ExitCode> {
    let checks = fixture_checks();
    let mut failed = 0;
    for c in &checks {
        let tag = if c.passed { "PASS" } else { "FAIL" };
        println!("{tag} {}: {}", c.name, c.detail);
        failed += usize::from(!c.passed);
    }
    Ok(if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coefficients_accept_commas_whitespace_and_comments() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.txt");
        fs::write(&path, "# header\n1,2 3\n\n4.5 # trailing\n").unwrap();
        assert_eq!(read_coefficients(&path).unwrap(), vec![1.0, 2.0, 3.0, 4.5]);
        fs::write(&path, "1, x\n").unwrap();
        assert!(read_coefficients(&path).is_err());
    }

    #[test]
    fn output_paths() {
        assert_eq!(
            with_suffix(Path::new("out/run"), ".summary.csv"),
            PathBuf::from("out/run.summary.csv")
        );
        assert_eq!(
            sibling(Path::new("a/b.csv"), "json"),
            PathBuf::from("a/b.json")
        );
    }

    #[test]
    fn matrix_rows() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.5, 2.0]);
        let text = matrix_csv(&m);
        let rows: Vec<&str> = text.lines().collect();
        assert_eq!(rows.len(), 2);
        assert!(rows[1].starts_with("5.000000000000e-01,"));
    }

    #[test]
    fn tolerance_is_checked() {
        let bad = NumericArgs { seed: 0, tol: 0.0 };
        assert!(bad.power().is_err());
        let ok = NumericArgs {
            seed: 9,
            tol: 1e-10,
        };
        assert_eq!(ok.power().unwrap().seed, 9);
    }
}
