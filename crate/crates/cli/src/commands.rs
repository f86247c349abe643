use std::path::PathBuf;

use serde_json::json;
use simplexslice::finance::{
    build_copula, build_copula_with, copula_sampler, detect_persistent_periods,
    diagonal_band_indicator, momentum_axes, momentum_pipeline, rolling_indicator, volatility_axes,
    write_warnings_csv, CopulaMethod, ReturnsMatrix, RollingConfig,
};
use simplexslice::sampling::{SamplerConfig, UnitSimplexSampler};

use crate::args::{
    CopulaArgs, CopulaMethodArg, IndicatorArgs, IndicatorKind, SampleArgs, VolumeArgs,
};
use crate::error::{input_error, CliError, CliResult};
use crate::output::{write_atomic, write_json, OutDir};
use crate::volume::{cmd_volume, walk_config};

pub fn volume(a: &VolumeArgs, seed: u64, dir: &OutDir) -> CliResult<Vec<PathBuf>> {
    let report = cmd_volume(a, seed)?;
    let path = dir.resolve(&a.out);
    write_json(&path, &report)?;
    Ok(vec![path])
}

pub fn sample(a: &SampleArgs, seed: u64, dir: &OutDir) -> CliResult<Vec<PathBuf>> {
    if a.dim == 0 || a.n == 0 {
        return Err(CliError::usage("--dim and --n must be at least 1"));
    }
    let cfg = SamplerConfig::new(a.dim, seed).with_method(a.method.into());
    let mut sampler = UnitSimplexSampler::new(&cfg)?;
    let path = dir.resolve(&a.out);
    write_atomic(&path, |w| {
        let mut x = vec![0.0; a.dim];
        let mut line = String::new();
        for _ in 0..a.n {
            sampler.fill(&mut x);
            line.clear();
            for (k, v) in x.iter().enumerate() {
                if k > 0 {
                    line.push(',');
                }
                line.push_str(&v.to_string());
            }
            line.push('\n');
            w.write_all(line.as_bytes())?;
        }
        Ok(())
    })?;
    Ok(vec![path])
}

fn load_returns(path: &std::path::Path) -> CliResult<ReturnsMatrix> {
    ReturnsMatrix::from_csv_path(path).map_err(|e| input_error(path, e))
}

fn rolling_config(
    window: usize,
    band_width: f64,
    m: usize,
    n: usize,
    seed: u64,
    sampler: crate::args::SamplerArg,
) -> RollingConfig {
    RollingConfig {
        window,
        band_width,
        m,
        n,
        seed,
        sampler: sampler.into(),
    }
}

pub fn copula(a: &CopulaArgs, seed: u64, dir: &OutDir) -> CliResult<Vec<PathBuf>> {
    let r = load_returns(&a.returns)?;
    let t = match &a.end {
        Some(s) => r
            .dates()
            .iter()
            .position(|d| d.to_string() == *s)
            .ok_or_else(|| CliError::data(format!("{}: no row dated {s}", a.returns.display())))?,
        None => r.len() - 1,
    };
    let window = a.window.unwrap_or(match a.kind {
        IndicatorKind::Volatility => t + 1,
        IndicatorKind::Momentum => t.div_ceil(2),
    });
    let cfg = rolling_config(window, a.band_width, a.m, a.n, seed, a.sampler);
    let (axis1, axis2) = match a.kind {
        IndicatorKind::Volatility => volatility_axes(&r, t, &cfg)?,
        IndicatorKind::Momentum => momentum_axes(&r, t, &cfg)?,
    };
    let d = r.asset_count() - 1;
    let grid = match a.method {
        CopulaMethodArg::Sampling => {
            build_copula(&axis1, &axis2, a.n, &copula_sampler(&cfg, d, t))?
        }
        CopulaMethodArg::Lawrence | CopulaMethodArg::Hnr => {
            let method = if a.method == CopulaMethodArg::Lawrence {
                CopulaMethod::Lawrence
            } else {
                CopulaMethod::Hnr
            };
            build_copula_with(
                method,
                &axis1,
                &axis2,
                a.n,
                &copula_sampler(&cfg, d, t),
                &walk_config(&a.walk, seed)?,
            )?
        }
    };
    let indicator = diagonal_band_indicator(&grid, a.band_width)?;
    let start = match a.kind {
        IndicatorKind::Volatility => t + 1 - window,
        IndicatorKind::Momentum => t + 1 - 2 * window,
    };
    let csv_path = dir.resolve(&a.out);
    let json_path = csv_path.with_extension("json");
    write_atomic(&csv_path, |w| grid.write_csv(w))?;
    let sidecar = json!({
        "m": grid.m,
        "n": grid.samples,
        "seed": seed,
        "method": grid.method,
        "kind": a.kind,
        "sampler": a.sampler,
        "window": window,
        "start_date": r.dates()[start].to_string(),
        "end_date": r.dates()[t].to_string(),
        "assets": r.assets(),
        "axes": grid.axes,
        "band_width": a.band_width,
        "indicator": indicator,
    });
    write_json(&json_path, &sidecar)?;
    Ok(vec![csv_path, json_path])
}

pub fn indicator(a: &IndicatorArgs, seed: u64, dir: &OutDir) -> CliResult<Vec<PathBuf>> {
    let r = load_returns(&a.returns)?;
    let cfg = rolling_config(a.window, a.band_width, a.m, a.n, seed, a.sampler);
    let series = match a.kind {
        IndicatorKind::Volatility => rolling_indicator(&r, &cfg)?,
        IndicatorKind::Momentum => momentum_pipeline(&r, &cfg)?,
    };
    let periods = detect_persistent_periods(&series, a.min_days)?;
    let series_path = dir.resolve(&a.out);
    let warnings_path = dir.resolve(&a.warnings);
    write_atomic(&series_path, |w| series.write_csv(w))?;
    write_atomic(&warnings_path, |w| write_warnings_csv(&periods, w))?;
    Ok(vec![series_path, warnings_path])
}
