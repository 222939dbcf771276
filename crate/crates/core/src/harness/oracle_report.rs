use crate::envs::FiniteMdp;
use crate::error::Result;
use crate::oracle::{
    average_reward, limiting_reward_distribution, relative_value_iteration,
    stationary_distribution, true_quantiles, PolicyTable, QuantileInterval,
};
use crate::quantile::TauGrid;
use crate::values::QTable;

/// Everything the oracle knows about one MDP under one policy.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub stationary: Vec<f64>,
    pub support: Vec<f64>,
    pub masses: Vec<f64>,
    pub cdf: Vec<f64>,
    pub taus: Vec<f64>,
    pub quantiles: Vec<QuantileInterval>,
    pub rbar: f64,
    pub rbar_star: f64,
    pub q_star: QTable,
}

pub fn oracle_report(mdp: &FiniteMdp, policy: &PolicyTable, m: usize) -> Result<OracleReport> {
    let grid = TauGrid::new(m)?;
    let dist = limiting_reward_distribution(mdp, policy)?;
    let rvi = relative_value_iteration(mdp)?;
    Ok(OracleReport {
        stationary: stationary_distribution(mdp, policy)?,
        support: dist.support().to_vec(),
        masses: dist.masses(),
        cdf: dist.cum().to_vec(),
        taus: grid.taus().to_vec(),
        quantiles: true_quantiles(&dist, &grid),
        rbar: average_reward(mdp, policy)?,
        rbar_star: rvi.rbar_star,
        q_star: rvi.q_star,
    })
}

impl OracleReport {
    /// Long format `quantity,i,j,value`, one number per row. Quantities:
    /// `mu` (state `i`), `reward`/`mass`/`cdf` (support index `i`),
    /// `tau`/`quantile_lo`/`quantile_hi` (quantile `i`, 1-based), `rbar`,
    /// `rbar_star`, and `q_star` (state `i`, action `j`).
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["quantity", "i", "j", "value"]).expect("in-memory write");
        let mut put = |q: &str, i: Option<usize>, j: Option<usize>, v: f64| {
            let idx = |x: Option<usize>| x.map(|x| x.to_string()).unwrap_or_default();
            w.write_record([q.to_string(), idx(i), idx(j), format!("{v:?}")])
                .expect("in-memory write");
        };
        for (s, &p) in self.stationary.iter().enumerate() {
            put("mu", Some(s), None, p);
        }
        for k in 0..self.support.len() {
            put("reward", Some(k), None, self.support[k]);
            put("mass", Some(k), None, self.masses[k]);
            put("cdf", Some(k), None, self.cdf[k]);
        }
        for (i, (tau, q)) in self.taus.iter().zip(&self.quantiles).enumerate() {
            put("tau", Some(i + 1), None, *tau);
            put("quantile_lo", Some(i + 1), None, q.lo);
            put("quantile_hi", Some(i + 1), None, q.hi);
        }
        put("rbar", None, None, self.rbar);
        put("rbar_star", None, None, self.rbar_star);
        for s in 0..self.q_star.n_states() {
            for a in 0..self.q_star.n_actions() {
                put("q_star", Some(s), Some(a), self.q_star.get(s, a));
            }
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
    }
}
