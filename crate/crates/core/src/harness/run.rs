use crate::agents::linear::{
    D2ActorCritic, D2FaQAgent, D2FaTdAgent, D3ActorCritic, D3FaQAgent, D3FaTdAgent,
    DifferentialActorCritic, OneHot, PendulumCoder,
};
use crate::agents::tabular::{D2QAgent, D2TdAgent, D3QAgent, D3TdAgent, DifferentialQAgent};
use crate::agents::{Agent, UniformBehavior};
use crate::envs::{
    Environment, FiniteMdp, FiniteMdpEnv, Pendulum, PendulumState, RedPillBluePill,
    PENDULUM_TORQUES,
};
use crate::error::{Error, Result};
use crate::oracle::PolicyTable;
use crate::rng::{stream_rng, Stream};

use super::config::{Algorithm, EnvId, ExperimentConfig, FeatureSpec};
use super::record::{RunRecord, Snapshot};
use super::reduce::RollingMean;

type FiniteAgent = Box<dyn Agent<Obs = usize>>;
type PendulumAgent = Box<dyn Agent<Obs = PendulumState>>;

/// Behavior policy of prediction agents on finite envs: ε-greedy around
/// `behavior.actions`, uniform when none are given.
pub fn behavior_policy(cfg: &ExperimentConfig, n_states: usize, n_actions: usize) -> Result<PolicyTable> {
    match &cfg.behavior_actions {
        None => Ok(PolicyTable::uniform(n_states, n_actions)),
        Some(actions) => {
            if actions.len() != n_states {
                return Err(Error::Config(format!(
                    "behavior.actions has {} entries for {n_states} states",
                    actions.len()
                )));
            }
            PolicyTable::epsilon_greedy(actions, n_actions, cfg.hyper.epsilon)
                .map_err(|e| Error::Config(e.to_string()))
        }
    }
}

pub fn finite_agent(cfg: &ExperimentConfig, n_states: usize, n_actions: usize) -> Result<FiniteAgent> {
    let h = cfg.hyper;
    let (m, n) = (cfg.m, cfg.n);
    let onehot = OneHot { n_states };
    let agent: FiniteAgent = match cfg.algorithm {
        Algorithm::D2Q => Box::new(D2QAgent::new(n_states, n_actions, m, h)?),
        Algorithm::D3Q => Box::new(D3QAgent::new(n_states, n_actions, m, n, h)?),
        Algorithm::DiffQ => Box::new(DifferentialQAgent::new(n_states, n_actions, h)?),
        Algorithm::D2Td => Box::new(D2TdAgent::new(behavior_policy(cfg, n_states, n_actions)?, m, h)?),
        Algorithm::D3Td => Box::new(D3TdAgent::new(
            behavior_policy(cfg, n_states, n_actions)?,
            m,
            n,
            h,
        )?),
        Algorithm::D2FaTd => Box::new(D2FaTdAgent::new(
            onehot,
            behavior_policy(cfg, n_states, n_actions)?,
            m,
            h,
        )?),
        Algorithm::D3FaTd => Box::new(D3FaTdAgent::new(
            onehot,
            behavior_policy(cfg, n_states, n_actions)?,
            m,
            n,
            h,
            cfg.huber(),
        )?),
        Algorithm::D2FaQ => Box::new(D2FaQAgent::new(onehot, n_actions, m, h)?),
        Algorithm::D3FaQ => Box::new(D3FaQAgent::new(onehot, n_actions, m, n, h, cfg.huber())?),
        Algorithm::D2Ac => Box::new(D2ActorCritic::new(onehot, n_actions, m, h)?),
        Algorithm::D3Ac => Box::new(D3ActorCritic::new(onehot, n_actions, m, n, h, cfg.huber())?),
        Algorithm::DiffAc => Box::new(DifferentialActorCritic::new(onehot, n_actions, h)?),
    };
    Ok(agent)
}

pub fn pendulum_agent(cfg: &ExperimentConfig) -> Result<PendulumAgent> {
    let Some(FeatureSpec::Tiles { tilings, per_dim }) = cfg.features.or(Some(FeatureSpec::Tiles {
        tilings: 32,
        per_dim: 8,
    })) else {
        return Err(Error::Config("pendulum needs tile features".into()));
    };
    let coder = PendulumCoder::new(tilings, per_dim)?;
    let h = cfg.hyper;
    let (m, n) = (cfg.m, cfg.n);
    let k = PENDULUM_TORQUES.len();
    let uniform = UniformBehavior { n_actions: k };
    let agent: PendulumAgent = match cfg.algorithm {
        Algorithm::D2FaTd => Box::new(D2FaTdAgent::new(coder, uniform, m, h)?),
        Algorithm::D3FaTd => Box::new(D3FaTdAgent::new(coder, uniform, m, n, h, cfg.huber())?),
        Algorithm::D2FaQ => Box::new(D2FaQAgent::new(coder, k, m, h)?),
        Algorithm::D3FaQ => Box::new(D3FaQAgent::new(coder, k, m, n, h, cfg.huber())?),
        Algorithm::D2Ac => Box::new(D2ActorCritic::new(coder, k, m, h)?),
        Algorithm::D3Ac => Box::new(D3ActorCritic::new(coder, k, m, n, h, cfg.huber())?),
        Algorithm::DiffAc => Box::new(DifferentialActorCritic::new(coder, k, h)?),
        alg => return Err(Error::Config(format!("{alg} is tabular and cannot run on pendulum"))),
    };
    Ok(agent)
}

/// Steps `agent` in `env` for `cfg.total_steps`, recording a snapshot every
/// `cfg.snapshot_interval` steps and at the last step. Returns the record
/// and the full reward stream.
pub fn drive<E: Environment>(
    env: &mut E,
    agent: &mut dyn Agent<Obs = E::Obs>,
    cfg: &ExperimentConfig,
    seed: u64,
) -> (RunRecord, Vec<f64>) {
    let mut env_rng = stream_rng(seed, Stream::Env);
    let mut agent_rng = stream_rng(seed, Stream::Agent);
    let mut rolling = RollingMean::new(cfg.rolling_window).expect("validated window");
    let mut rewards = Vec::with_capacity(cfg.total_steps as usize);
    let mut total = 0.0;
    let mut rows = Vec::new();

    let mut obs = env.reset(&mut env_rng);
    for t in 1..=cfg.total_steps {
        let action = agent.act(&obs, &mut agent_rng);
        let step = env.step(action, &mut env_rng);
        agent.learn(&obs, action, step.reward, &step.next_obs);
        rewards.push(step.reward);
        total += step.reward;
        let roll = rolling.push(step.reward);
        if t % cfg.snapshot_interval == 0 || t == cfg.total_steps {
            rows.push(Snapshot {
                step: t,
                reward: step.reward,
                rbar: agent.rbar(),
                rolling_reward: roll,
                mean_reward: total / t as f64,
                thetas: agent.thetas().map(<[f64]>::to_vec).unwrap_or_default(),
                omegas: agent.omega_watch().unwrap_or_default(),
            });
        }
        obs = step.next_obs;
    }

    let first = &rows[0];
    let record = RunRecord {
        config_hash: cfg.hash(),
        seed,
        algorithm: cfg.algorithm.id().to_string(),
        n_thetas: first.thetas.len(),
        n_omegas: first.omegas.len(),
        rows,
    };
    (record, rewards)
}

/// Like [`run_experiment`], also returning every reward received.
pub fn run_with_rewards(cfg: &ExperimentConfig, seed: u64) -> Result<(RunRecord, Vec<f64>)> {
    cfg.validate()?;
    match cfg.env {
        EnvId::Pendulum => {
            let mut agent = pendulum_agent(cfg)?;
            Ok(drive(&mut Pendulum::default(), agent.as_mut(), cfg, seed))
        }
        EnvId::Rpbp => {
            let mut env = RedPillBluePill::new(cfg.rpbp.clone())?;
            let mut agent = finite_agent(cfg, 2, env.n_actions())?;
            Ok(drive(&mut env, agent.as_mut(), cfg, seed))
        }
        EnvId::Mdp => {
            let path = cfg.mdp_path.as_ref().expect("validated");
            let mdp = FiniteMdp::load(path)?;
            if let Some(s) = cfg.mdp_start.filter(|&s| s >= mdp.n_states()) {
                return Err(Error::Config(format!(
                    "mdp.start {s} out of range for {} states",
                    mdp.n_states()
                )));
            }
            let mut agent = finite_agent(cfg, mdp.n_states(), mdp.n_actions())?;
            let mut env = FiniteMdpEnv::new(mdp, cfg.mdp_start);
            Ok(drive(&mut env, agent.as_mut(), cfg, seed))
        }
    }
}

/// One run. A pure function of `(cfg, seed)`: the environment and the agent
/// draw from separate streams of a generator keyed by `seed`.
pub fn run_experiment(cfg: &ExperimentConfig, seed: u64) -> Result<RunRecord> {
    run_with_rewards(cfg, seed).map(|(record, _)| record)
}
