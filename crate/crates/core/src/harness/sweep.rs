use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::error::{Error, Result};

use super::config::{parse_pairs, ExperimentConfig};
use super::run::run_experiment;

/// Cartesian grid over config keys, written as `sweep.<key> = v1, v2, ...`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepSpec {
    pub axes: BTreeMap<String, Vec<String>>,
}

impl SweepSpec {
    pub fn new(axes: BTreeMap<String, Vec<String>>) -> Result<Self> {
        let spec = SweepSpec { axes };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.axes.is_empty() || self.axes.values().any(Vec::is_empty) {
            return Err(Error::Config("sweep grid is empty".into()));
        }
        Ok(())
    }

    /// Splits a file into its `sweep.*` lines and the base config.
    pub fn split_text(text: &str) -> Result<(SweepSpec, ExperimentConfig)> {
        let mut axes = BTreeMap::new();
        let mut base = String::new();
        for (key, value) in parse_pairs(text)? {
            match key.strip_prefix("sweep.") {
                Some(k) => {
                    let vals = value.split(',').map(|v| v.trim().to_string()).collect();
                    axes.insert(k.to_string(), vals);
                }
                None => base.push_str(&format!("{key} = {value}\n")),
            }
        }
        Ok((SweepSpec::new(axes)?, ExperimentConfig::from_text(&base)?))
    }

    /// Every combination, keys in sorted order, the last key varying fastest.
    pub fn cells(&self) -> Vec<Vec<(String, String)>> {
        let mut cells = vec![Vec::new()];
        for (key, values) in &self.axes {
            cells = cells
                .into_iter()
                .flat_map(|cell| {
                    values.iter().map(move |v| {
                        let mut c = cell.clone();
                        c.push((key.clone(), v.clone()));
                        c
                    })
                })
                .collect();
        }
        cells
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub settings: Vec<(String, String)>,
    pub seeds_ok: usize,
    /// Mean reward over all steps and seeds.
    pub mean_reward: f64,
    /// Final rolling reward averaged over seeds.
    pub final_rolling: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub keys: Vec<String>,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    /// Row with the highest `mean_reward`; the earliest row wins ties.
    pub fn best(&self) -> Option<&SweepRow> {
        self.rows
            .iter()
            .filter(|r| r.error.is_none())
            .fold(None, |best: Option<&SweepRow>, r| match best {
                Some(b) if b.mean_reward >= r.mean_reward => Some(b),
                _ => Some(r),
            })
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let header = self
            .keys
            .iter()
            .cloned()
            .chain(["seeds_ok", "mean_reward", "final_rolling", "error"].map(String::from));
        w.write_record(header).expect("in-memory write");
        for r in &self.rows {
            let fields = r
                .settings
                .iter()
                .map(|(_, v)| v.clone())
                .chain([
                    r.seeds_ok.to_string(),
                    format!("{:?}", r.mean_reward),
                    format!("{:?}", r.final_rolling),
                    r.error.clone().unwrap_or_default(),
                ]);
            w.write_record(fields).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
    }
}

/// Runs every grid cell for every seed, in parallel. A cell whose config
/// is invalid or whose run fails is reported with its error and no
/// numbers; the rest of the sweep goes on. Rows come back in grid order
/// whatever the completion order.
pub fn run_sweep(spec: &SweepSpec, base: &ExperimentConfig, seeds: &[u64]) -> Result<SweepTable> {
    spec.validate()?;
    if seeds.is_empty() {
        return Err(Error::Config("sweep needs at least one seed".into()));
    }
    let cells = spec.cells();
    let configs: Vec<Result<ExperimentConfig>> = cells
        .iter()
        .map(|cell| {
            let mut cfg = base.clone();
            for (k, v) in cell {
                cfg.set(k, v)?;
            }
            cfg.validate()?;
            Ok(cfg)
        })
        .collect();

    let jobs: Vec<(usize, u64)> = (0..cells.len())
        .flat_map(|c| seeds.iter().map(move |&s| (c, s)))
        .filter(|&(c, _)| configs[c].is_ok())
        .collect();
    let results: Vec<(usize, Result<(f64, f64)>)> = jobs
        .par_iter()
        .map(|&(c, seed)| {
            let cfg = configs[c].as_ref().expect("filtered");
            let out = run_experiment(cfg, seed).map(|r| (r.last().mean_reward, r.last().rolling_reward));
            (c, out)
        })
        .collect();

    let mut by_cell: BTreeMap<usize, Vec<Result<(f64, f64)>>> = BTreeMap::new();
    for (c, r) in results {
        by_cell.entry(c).or_default().push(r);
    }
    let rows = cells
        .into_iter()
        .enumerate()
        .map(|(c, settings)| {
            if let Err(e) = &configs[c] {
                return failed(settings, e.to_string());
            }
            let outs = by_cell.remove(&c).unwrap_or_default();
            if let Some(Err(e)) = outs.iter().find(|r| r.is_err()) {
                return failed(settings, e.to_string());
            }
            let ok: Vec<(f64, f64)> = outs.into_iter().map(|r| r.expect("checked")).collect();
            let k = ok.len() as f64;
            SweepRow {
                settings,
                seeds_ok: ok.len(),
                mean_reward: ok.iter().map(|o| o.0).sum::<f64>() / k,
                final_rolling: ok.iter().map(|o| o.1).sum::<f64>() / k,
                error: None,
            }
        })
        .collect();
    Ok(SweepTable {
        keys: spec.axes.keys().cloned().collect(),
        rows,
    })
}

fn failed(settings: Vec<(String, String)>, error: String) -> SweepRow {
    SweepRow {
        settings,
        seeds_ok: 0,
        mean_reward: f64::NAN,
        final_rolling: f64::NAN,
        error: Some(error),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_size_and_order() {
        let (spec, _) = SweepSpec::split_text(
            "sweep.alpha = 2e-5,2e-4,2e-3,2e-2,2e-1\nsweep.eta_theta = 1e-3,1e-2,1e-1,1,2,3,4\n",
        )
        .unwrap();
        let cells = spec.cells();
        assert_eq!(cells.len(), 35);
        assert_eq!(cells[1], vec![("alpha".into(), "2e-5".into()), ("eta_theta".into(), "1e-2".into())]);
        assert!(SweepSpec::split_text("alpha = 0.1").is_err());
    }

    #[test]
    fn failing_cell_is_recorded() {
        let (spec, base) = SweepSpec::split_text(
            "total_steps = 50\nsweep.alpha = 0.1,-1\nsweep.m = 2",
        )
        .unwrap();
        let table = run_sweep(&spec, &base, &[0, 1]).unwrap();
        assert_eq!(table.rows.len(), 2);
        assert_eq!(table.rows[0].seeds_ok, 2);
        assert!(table.rows[1].error.is_some());
        assert_eq!(table.best().unwrap().settings[0].1, "0.1");
    }
}
