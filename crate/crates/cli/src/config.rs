//! Run configuration: JSON file merged with command-line overrides.

use std::fmt;
use std::path::{Path, PathBuf};

use qjump_core::params::{ModelParams, Rates, SpinMode};
use serde::Deserialize;

use crate::CliError;

pub const DEFAULT_SWEEP: [f64; 6] = [0.0, 1.0, 2.0, 2.83, 4.0, 6.0];
pub const DEFAULT_DECIMATE: usize = 20;
pub const DEFAULT_VERIFY_DT: f64 = qjump_core::fockcheck::DEFAULT_VERIFY_DT;
/// Largest ⟨n⟩ accepted without `--allow-large-n`.
pub const N_AVG_SOFT_LIMIT: f64 = 1.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    GammaM,
    NAvg,
}

impl SweepAxis {
    pub fn column(&self) -> &'static str {
        match self {
            SweepAxis::GammaM => "gamma_m",
            SweepAxis::NAvg => "n_avg",
        }
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.column())
    }
}

/// Sweep as written in the config file: explicit `values`, or an evenly
/// spaced `start`/`stop`/`num` range.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepFile {
    pub param: Option<SweepAxis>,
    pub values: Option<Vec<f64>>,
    pub start: Option<f64>,
    pub stop: Option<f64>,
    pub num: Option<usize>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScgfFile {
    pub s_min: Option<f64>,
    pub s_max: Option<f64>,
    pub points: Option<usize>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyFile {
    pub dt: Option<f64>,
    pub n_max: Option<usize>,
}

/// Keys accepted in the JSON config file. All optional.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub omega: Option<f64>,
    pub gamma_w: Option<f64>,
    pub gamma_m: Option<f64>,
    pub n_avg: Option<f64>,
    pub dt: Option<f64>,
    pub steps: Option<usize>,
    pub trajectories: Option<usize>,
    pub seed: Option<u64>,
    pub mode: Option<String>,
    pub out: Option<PathBuf>,
    pub decimate: Option<usize>,
    pub workers: Option<usize>,
    pub allow_large_n: Option<bool>,
    pub sweep: Option<SweepFile>,
    pub scgf: Option<ScgfFile>,
    pub verify: Option<VerifyFile>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        if text.trim().is_empty() {
            return Ok(FileConfig::default());
        }
        serde_json::from_str(text).map_err(|e| e.to_string())
    }
}

/// Values given on the command line; each one overrides the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub gamma_m: Option<Vec<f64>>,
    pub n_avg: Option<f64>,
    pub gamma_w: Option<f64>,
    pub omega: Option<f64>,
    pub dt: Option<f64>,
    pub steps: Option<usize>,
    pub trajectories: Option<usize>,
    pub seed: Option<u64>,
    pub mode: Option<String>,
    pub out: Option<PathBuf>,
    pub decimate: Option<usize>,
    pub workers: Option<usize>,
    pub allow_large_n: bool,
    pub s_min: Option<f64>,
    pub s_max: Option<f64>,
    pub points: Option<usize>,
    pub verify_dt: Option<f64>,
    pub n_max: Option<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sweep {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScgfGrid {
    pub s_min: f64,
    pub s_max: f64,
    pub points: usize,
}

impl ScgfGrid {
    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.s_min];
        }
        let h = (self.s_max - self.s_min) / (self.points - 1) as f64;
        (0..self.points).map(|k| self.s_min + h * k as f64).collect()
    }
}

/// Validated configuration shared by all subcommands.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    /// Parameters with the swept value at its base setting.
    pub base: ModelParams,
    pub sweep: Sweep,
    pub out: Option<PathBuf>,
    pub decimate: usize,
    pub workers: Option<usize>,
    pub allow_large_n: bool,
    pub scgf: ScgfGrid,
    pub verify_dt: f64,
    pub n_max: Option<usize>,
}

fn cfg_err(key: &str, msg: impl fmt::Display) -> CliError {
    CliError::Config(format!("`{key}`: {msg}"))
}

fn sweep_values(s: &SweepFile) -> Result<Vec<f64>, CliError> {
    match (&s.values, s.start, s.stop, s.num) {
        (Some(v), None, None, None) => Ok(v.clone()),
        (None, Some(a), Some(b), Some(n)) => {
            if n == 0 {
                return Err(cfg_err("sweep.num", "must be >= 1"));
            }
            if n == 1 {
                return Ok(vec![a]);
            }
            let h = (b - a) / (n - 1) as f64;
            Ok((0..n).map(|k| if k + 1 == n { b } else { a + h * k as f64 }).collect())
        }
        _ => Err(cfg_err("sweep", "give either `values` or all of `start`, `stop`, `num`")),
    }
}

impl RunConfig {
    pub fn resolve(file: FileConfig, o: Overrides) -> Result<Self, CliError> {
        let d = ModelParams::default();
        let rates = Rates {
            omega: o.omega.or(file.omega).unwrap_or(d.rates.omega),
            gamma_w: o.gamma_w.or(file.gamma_w).unwrap_or(d.rates.gamma_w),
            gamma_m: file.gamma_m.unwrap_or(d.rates.gamma_m),
            n_avg: o.n_avg.or(file.n_avg).unwrap_or(d.rates.n_avg),
        };
        let mode = match o.mode.or(file.mode) {
            Some(m) => m.parse::<SpinMode>().map_err(|e| cfg_err("mode", e))?,
            None => d.mode,
        };
        let base = ModelParams {
            rates,
            dt: o.dt.or(file.dt).unwrap_or(d.dt),
            steps: o.steps.or(file.steps).unwrap_or(d.steps),
            trajectories: o.trajectories.or(file.trajectories).unwrap_or(d.trajectories),
            seed: o.seed.or(file.seed).unwrap_or(d.seed),
            mode,
        };

        let file_sweep = file.sweep.unwrap_or_default();
        let sweep = if let Some(values) = o.gamma_m {
            if file_sweep.param == Some(SweepAxis::NAvg) {
                return Err(cfg_err("gamma_m", "--gamma-m conflicts with a config sweep over n_avg (one sweep axis per run)"));
            }
            Sweep { axis: SweepAxis::GammaM, values }
        } else if file_sweep.param.is_some() || file_sweep.values.is_some() || file_sweep.start.is_some() {
            let axis = file_sweep.param.unwrap_or(SweepAxis::GammaM);
            if axis == SweepAxis::NAvg && o.n_avg.is_some() {
                return Err(cfg_err("n_avg", "--n-avg conflicts with a config sweep over n_avg"));
            }
            Sweep { axis, values: sweep_values(&file_sweep)? }
        } else if let Some(g) = file.gamma_m {
            Sweep { axis: SweepAxis::GammaM, values: vec![g] }
        } else {
            Sweep { axis: SweepAxis::GammaM, values: DEFAULT_SWEEP.to_vec() }
        };

        let scgf_file = file.scgf.unwrap_or_default();
        let scgf = ScgfGrid {
            s_min: o.s_min.or(scgf_file.s_min).unwrap_or(-0.5),
            s_max: o.s_max.or(scgf_file.s_max).unwrap_or(0.5),
            points: o.points.or(scgf_file.points).unwrap_or(11),
        };
        let verify_file = file.verify.unwrap_or_default();
        let cfg = RunConfig {
            base,
            sweep,
            out: o.out.or(file.out),
            decimate: o.decimate.or(file.decimate).unwrap_or(DEFAULT_DECIMATE),
            workers: o.workers.or(file.workers),
            allow_large_n: o.allow_large_n || file.allow_large_n.unwrap_or(false),
            scgf,
            verify_dt: o.verify_dt.or(verify_file.dt).unwrap_or(DEFAULT_VERIFY_DT),
            n_max: o.n_max.or(verify_file.n_max),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let v = &self.sweep.values;
        if v.is_empty() {
            return Err(cfg_err(self.sweep.axis.column(), "sweep has no values"));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(cfg_err(self.sweep.axis.column(), "sweep values must be finite"));
        }
        if v.windows(2).any(|w| w[1] <= w[0]) {
            return Err(cfg_err(self.sweep.axis.column(), format!("sweep values must be strictly increasing (got {v:?})")));
        }
        if self.decimate == 0 {
            return Err(cfg_err("decimate", "must be >= 1"));
        }
        if self.workers == Some(0) {
            return Err(cfg_err("workers", "must be >= 1"));
        }
        if !(self.scgf.s_min.is_finite() && self.scgf.s_max.is_finite()) || self.scgf.s_max < self.scgf.s_min {
            return Err(cfg_err("scgf", "need finite s_min <= s_max"));
        }
        if self.scgf.points == 0 || (self.scgf.points == 1 && self.scgf.s_min != self.scgf.s_max) {
            return Err(cfg_err("scgf.points", "must be >= 2 unless s_min == s_max"));
        }
        if !(self.verify_dt > 0.0 && self.verify_dt.is_finite()) {
            return Err(cfg_err("verify.dt", "must be finite and > 0"));
        }
        for p in self.runs() {
            if p.rates.n_avg > N_AVG_SOFT_LIMIT && !self.allow_large_n {
                return Err(cfg_err(
                    "n_avg",
                    format!("{} exceeds {N_AVG_SOFT_LIMIT}; pass --allow-large-n to run anyway", p.rates.n_avg),
                ));
            }
            p.validate().map_err(|e| CliError::Config(e.to_string()))?;
        }
        Ok(())
    }

    /// One parameter set per sweep value.
    pub fn runs(&self) -> Vec<ModelParams> {
        self.sweep
            .values
            .iter()
            .map(|&v| {
                let mut p = self.base;
                match self.sweep.axis {
                    SweepAxis::GammaM => p.rates.gamma_m = v,
                    SweepAxis::NAvg => p.rates.n_avg = v,
                }
                p
            })
            .collect()
    }

    /// Step indices emitted to CSV: 0, k, 2k, … and always the last step.
    pub fn time_steps(&self) -> Vec<usize> {
        let steps = self.base.steps;
        let mut out: Vec<usize> = (0..=steps).step_by(self.decimate).collect();
        if !steps.is_multiple_of(self.decimate) {
            out.push(steps);
        }
        out
    }

    /// Parameter echo for CSV metadata. Worker count is deliberately absent
    /// so output does not depend on it.
    pub fn echo(&self) -> String {
        let r = &self.base.rates;
        let values: Vec<String> = self.sweep.values.iter().map(|v| v.to_string()).collect();
        format!(
            "omega={} gamma_w={} gamma_m={} n_avg={} dt={} steps={} trajectories={} seed={} mode={} sweep={}:[{}] decimate={}",
            r.omega,
            r.gamma_w,
            r.gamma_m,
            r.n_avg,
            self.base.dt,
            self.base.steps,
            self.base.trajectories,
            self.base.seed,
            self.base.mode,
            self.sweep.axis,
            values.join(","),
            self.decimate
        )
    }
}
