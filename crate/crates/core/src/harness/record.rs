use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

/// One row of a run record.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub step: u64,
    /// Reward received on this step.
    pub reward: f64,
    /// The agent's average-reward estimate after this step.
    pub rbar: f64,
    /// Trailing mean over the last `rolling_window` rewards.
    pub rolling_reward: f64,
    /// Mean of every reward so far.
    pub mean_reward: f64,
    pub thetas: Vec<f64>,
    /// Differential-return quantiles at the agent's watched cell.
    pub omegas: Vec<f64>,
}

/// Snapshots of one run plus the header that identifies it.
///
/// CSV form: `# key=value` header lines (`config_hash`, `seed`,
/// `algorithm`), then a header row
/// `step,reward,rbar,rolling_reward,mean_reward,theta_1..theta_m,omega_1..omega_n`
/// and one row per snapshot. Floats are written in shortest round-trip
/// form. Agents without reward quantiles have no `theta_*` columns; only
/// tabular D3 agents have `omega_*` columns.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub config_hash: String,
    pub seed: u64,
    pub algorithm: String,
    pub n_thetas: usize,
    pub n_omegas: usize,
    pub rows: Vec<Snapshot>,
}

const FIXED: [&str; 5] = ["step", "reward", "rbar", "rolling_reward", "mean_reward"];

fn float(x: f64) -> String {
    format!("{x:?}")
}

impl RunRecord {
    pub fn columns(&self) -> Vec<String> {
        FIXED
            .iter()
            .map(|s| s.to_string())
            .chain((1..=self.n_thetas).map(|i| format!("theta_{i}")))
            .chain((1..=self.n_omegas).map(|i| format!("omega_{i}")))
            .collect()
    }

    pub fn last(&self) -> &Snapshot {
        self.rows.last().expect("a record has at least one row")
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!(
            "# config_hash={}\n# seed={}\n# algorithm={}\n",
            self.config_hash, self.seed, self.algorithm
        );
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(self.columns()).expect("in-memory write");
        for row in &self.rows {
            let fields = [row.step.to_string()]
                .into_iter()
                .chain(
                    [row.reward, row.rbar, row.rolling_reward, row.mean_reward]
                        .into_iter()
                        .chain(row.thetas.iter().copied())
                        .chain(row.omegas.iter().copied())
                        .map(float),
                );
            w.write_record(fields).expect("in-memory write");
        }
        out.push_str(&String::from_utf8(w.into_inner().expect("flush")).expect("ascii"));
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut hash = None;
        let mut seed = None;
        let mut algorithm = None;
        let mut body_start = 0;
        for (i, line) in text.lines().enumerate() {
            let Some(meta) = line.strip_prefix('#') else {
                body_start = i;
                break;
            };
            let (k, v) = meta
                .trim()
                .split_once('=')
                .ok_or_else(|| Error::parse(i + 1, "expected '# key=value'"))?;
            match k {
                "config_hash" => hash = Some(v.to_string()),
                "seed" => seed = Some(v.parse().map_err(|_| Error::parse(i + 1, "bad seed"))?),
                "algorithm" => algorithm = Some(v.to_string()),
                _ => {}
            }
        }
        let body: String = text
            .lines()
            .skip(body_start)
            .map(|l| format!("{l}\n"))
            .collect();
        let mut r = csv::Reader::from_reader(body.as_bytes());
        let header: Vec<String> = r
            .headers()
            .map_err(|e| Error::parse(body_start + 1, e.to_string()))?
            .iter()
            .map(str::to_string)
            .collect();
        if header.len() < FIXED.len() || header[..FIXED.len()] != FIXED {
            return Err(Error::parse(body_start + 1, "missing fixed columns"));
        }
        let n_thetas = header.iter().filter(|c| c.starts_with("theta_")).count();
        let n_omegas = header.iter().filter(|c| c.starts_with("omega_")).count();
        let mut record = RunRecord {
            config_hash: hash.ok_or_else(|| Error::parse(1, "missing config_hash"))?,
            seed: seed.ok_or_else(|| Error::parse(1, "missing seed"))?,
            algorithm: algorithm.ok_or_else(|| Error::parse(1, "missing algorithm"))?,
            n_thetas,
            n_omegas,
            rows: Vec::new(),
        };
        if record.columns() != header {
            return Err(Error::parse(body_start + 1, "unexpected column layout"));
        }
        for (i, rec) in r.records().enumerate() {
            let line = body_start + i + 2;
            let rec = rec.map_err(|e| Error::parse(line, e.to_string()))?;
            let step = rec[0]
                .parse()
                .map_err(|_| Error::parse(line, format!("bad step '{}'", &rec[0])))?;
            let vals = rec
                .iter()
                .skip(1)
                .map(|f| f.parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::parse(line, e.to_string()))?;
            record.rows.push(Snapshot {
                step,
                reward: vals[0],
                rbar: vals[1],
                rolling_reward: vals[2],
                mean_reward: vals[3],
                thetas: vals[4..4 + n_thetas].to_vec(),
                omegas: vals[4 + n_thetas..].to_vec(),
            });
        }
        if record.rows.is_empty() {
            return Err(Error::parse(body_start + 1, "record has no rows"));
        }
        if record.rows.windows(2).any(|w| w[0].step >= w[1].step) {
            return Err(Error::parse(body_start + 1, "steps must strictly increase"));
        }
        Ok(record)
    }

    /// `<dir>/<algorithm>_seed<seed>.csv`.
    pub fn file_name(&self) -> String {
        format!("{}_seed{}.csv", self.algorithm, self.seed)
    }

    pub fn save_in(&self, dir: impl AsRef<Path>) -> Result<PathBuf> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let path = dir.join(self.file_name());
        std::fs::write(&path, self.to_csv()).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv(&text)
    }
}
