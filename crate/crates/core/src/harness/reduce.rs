use std::collections::VecDeque;

use crate::error::{Error, Result};

use super::record::RunRecord;

/// Trailing mean over the last `window` values pushed.
#[derive(Debug, Clone)]
pub struct RollingMean {
    window: usize,
    buf: VecDeque<f64>,
    sum: f64,
}

impl RollingMean {
    pub fn new(window: usize) -> Result<Self> {
        if window == 0 {
            return Err(Error::invalid("rolling window must be at least 1"));
        }
        Ok(RollingMean {
            window,
            buf: VecDeque::with_capacity(window),
            sum: 0.0,
        })
    }

    /// Adds `x` and returns the mean of the last `min(window, t)` values.
    pub fn push(&mut self, x: f64) -> f64 {
        if self.buf.len() == self.window {
            self.sum -= self.buf.pop_front().expect("full buffer");
        }
        self.buf.push_back(x);
        self.sum += x;
        self.sum / self.buf.len() as f64
    }
}

/// Trailing mean over `min(window, t)` samples at every `t`.
pub fn rolling_average(values: &[f64], window: usize) -> Result<Vec<f64>> {
    let mut r = RollingMean::new(window)?;
    Ok(values.iter().map(|&x| r.push(x)).collect())
}

/// Pointwise mean and normal-approximation 95% band across seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfidenceBand {
    pub mean: Vec<f64>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub half_width: Vec<f64>,
}

/// `mean ± 1.96 · s / √k` at each point, `s` the sample standard deviation
/// over the `k` curves.
pub fn confidence_band(curves: &[Vec<f64>]) -> Result<ConfidenceBand> {
    if curves.len() < 2 {
        return Err(Error::invalid("a confidence band needs at least two curves"));
    }
    let len = curves[0].len();
    if curves.iter().any(|c| c.len() != len) {
        return Err(Error::invalid("curves differ in length"));
    }
    let k = curves.len() as f64;
    let mut band = ConfidenceBand {
        mean: Vec::with_capacity(len),
        lo: Vec::with_capacity(len),
        hi: Vec::with_capacity(len),
        half_width: Vec::with_capacity(len),
    };
    for t in 0..len {
        let mean = curves.iter().map(|c| c[t]).sum::<f64>() / k;
        let var = curves.iter().map(|c| (c[t] - mean).powi(2)).sum::<f64>() / (k - 1.0);
        let half = 1.96 * var.sqrt() / k.sqrt();
        band.mean.push(mean);
        band.lo.push(mean - half);
        band.hi.push(mean + half);
        band.half_width.push(half);
    }
    Ok(band)
}

fn check_aligned(records: &[RunRecord]) -> Result<()> {
    let first = records
        .first()
        .ok_or_else(|| Error::invalid("no records to reduce"))?;
    for r in records {
        if r.config_hash != first.config_hash {
            return Err(Error::invalid(format!(
                "records come from different configs ({} vs {})",
                first.config_hash, r.config_hash
            )));
        }
        if r.rows.len() != first.rows.len()
            || r.rows.iter().zip(&first.rows).any(|(a, b)| a.step != b.step)
        {
            return Err(Error::invalid("records have different snapshot steps"));
        }
    }
    Ok(())
}

fn float(x: f64) -> String {
    format!("{x:?}")
}

fn csv_text(header: Vec<String>, rows: impl Iterator<Item = Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("ascii")
}

/// Rolling-reward curves of several seeds reduced to
/// `step,mean,lo,hi,half_width`.
pub fn rolling_band_csv(records: &[RunRecord]) -> Result<String> {
    check_aligned(records)?;
    let curves: Vec<Vec<f64>> = records
        .iter()
        .map(|r| r.rows.iter().map(|s| s.rolling_reward).collect())
        .collect();
    let band = confidence_band(&curves)?;
    let header = ["step", "mean", "lo", "hi", "half_width"].map(String::from).to_vec();
    let rows = records[0].rows.iter().enumerate().map(|(t, s)| {
        vec![
            s.step.to_string(),
            float(band.mean[t]),
            float(band.lo[t]),
            float(band.hi[t]),
            float(band.half_width[t]),
        ]
    });
    Ok(csv_text(header, rows))
}

/// Seed-averaged reward quantile estimates: `step,theta_1..theta_m`.
pub fn quantile_mean_csv(records: &[RunRecord]) -> Result<String> {
    check_aligned(records)?;
    let m = records[0].n_thetas;
    if m == 0 {
        return Err(Error::invalid("records carry no reward quantiles"));
    }
    let k = records.len() as f64;
    let header = std::iter::once("step".to_string())
        .chain((1..=m).map(|i| format!("theta_{i}")))
        .collect();
    let rows = (0..records[0].rows.len()).map(|t| {
        std::iter::once(records[0].rows[t].step.to_string())
            .chain((0..m).map(|i| float(records.iter().map(|r| r.rows[t].thetas[i]).sum::<f64>() / k)))
            .collect()
    });
    Ok(csv_text(header, rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rolling_examples() {
        assert_eq!(rolling_average(&[3.0; 5], 3).unwrap(), vec![3.0; 5]);
        let xs = [0.5, -1.0, 2.0];
        assert_eq!(rolling_average(&xs, 1).unwrap(), xs.to_vec());
        let alt: Vec<f64> = (0..10).map(|i| (i % 2) as f64).collect();
        let r = rolling_average(&alt, 2).unwrap();
        assert_eq!(r[0], 0.0);
        assert!(r[1..].iter().all(|&x| x == 0.5));
        assert!(rolling_average(&xs, 0).is_err());
    }

    #[test]
    fn band_examples() {
        let same = vec![vec![1.0, 2.0]; 4];
        let band = confidence_band(&same).unwrap();
        assert_eq!(band.lo, band.hi);
        let band = confidence_band(&[vec![0.0], vec![1.0], vec![2.0]]).unwrap();
        assert_eq!(band.mean, vec![1.0]);
        assert!((band.half_width[0] - 1.96 / 3f64.sqrt()).abs() < 1e-12);
        assert!((band.half_width[0] - 1.1316).abs() < 1e-4);
        assert!(confidence_band(&[vec![1.0]]).is_err());
    }
}
