use std::sync::Arc;

use rand_chacha::ChaCha8Rng;

use crate::control::{Controller, Experience};
use crate::data::{load_year_csv, make_split, synthesize_year, SplitKind};
use crate::env::{Action, Dataset, Design, Env, EnvConstants, EnvState, InitMode};
use crate::error::{Error, Result};
use crate::experiment::DatasetConfig;
use crate::rng::{indexed, Stream};

/// The shared, immutable inputs of every simulator instance.
#[derive(Debug, Clone)]
pub struct EnvSpec {
    pub data: Arc<Dataset>,
    pub consts: EnvConstants,
}

impl EnvSpec {
    pub fn new(data: Dataset, consts: EnvConstants) -> Self {
        Self {
            data: Arc::new(data),
            consts,
        }
    }

    pub fn from_config(dataset: &DatasetConfig, consts: EnvConstants) -> Result<Self> {
        let series = match &dataset.csv {
            Some(path) => load_year_csv(path)?,
            None => synthesize_year(dataset.synthetic_seed),
        };
        let split = make_split(dataset.split_seed);
        Ok(Self::new(Dataset { series, split }, consts))
    }

    fn template(&self, split: SplitKind, horizon: usize) -> Result<Env> {
        let available = self.data.split.hours(split);
        if horizon > available {
            return Err(Error::HorizonTooLong { horizon, available });
        }
        Env::new(Arc::clone(&self.data), self.consts, split, horizon)
    }
}

/// One episode to simulate: the design it runs and the generator its reset
/// draws from.
#[derive(Debug, Clone)]
pub struct Episode {
    pub design: Design,
    pub reset_rng: ChaCha8Rng,
}

#[derive(Debug, Clone, Copy)]
pub struct StepRecord {
    pub episode: usize,
    pub state: EnvState,
    pub action: Action,
    pub reward: f64,
    pub next_state: EnvState,
    pub truncated: bool,
}

#[derive(Debug, Clone, Default)]
pub struct Rollout {
    /// Undiscounted return per episode.
    pub returns: Vec<f64>,
    /// Every transition in step-major order; empty unless requested.
    pub steps: Vec<StepRecord>,
}

impl Rollout {
    /// Feeds every recorded transition to a learning controller.
    pub fn replay_into(&self, controller: &mut dyn Controller, episodes: &[Episode]) {
        for r in &self.steps {
            controller.observe(Experience {
                state: &r.state,
                design: &episodes[r.episode].design,
                action: r.action,
                reward: r.reward,
                next_state: &r.next_state,
                truncated: r.truncated,
            });
        }
    }
}

/// Runs all episodes in lockstep so the controller sees one batch per hour.
/// With `explore` set the controller's exploratory actions are used.
pub fn rollout(
    controller: &dyn Controller,
    env: &EnvSpec,
    split: SplitKind,
    horizon: usize,
    init: InitMode,
    episodes: &[Episode],
    mut explore: Option<&mut ChaCha8Rng>,
    record: bool,
) -> Result<Rollout> {
    let template = env.template(split, horizon)?;
    let mut envs = Vec::with_capacity(episodes.len());
    let mut states = Vec::with_capacity(episodes.len());
    let mut designs = Vec::with_capacity(episodes.len());
    for ep in episodes {
        let mut e = template.clone();
        let mut rng = ep.reset_rng.clone();
        states.push(e.reset(init, ep.design, &mut rng)?);
        designs.push(*e.design());
        envs.push(e);
    }
    let mut out = Rollout {
        returns: vec![0.0; episodes.len()],
        steps: Vec::new(),
    };
    if record {
        out.steps.reserve(episodes.len() * horizon);
    }
    for _ in 0..horizon {
        let actions = match explore.as_deref_mut() {
            Some(rng) => controller.explore(&states, &designs, rng),
            None => controller.act(&states, &designs),
        };
        for (i, (e, a)) in envs.iter_mut().zip(&actions).enumerate() {
            let o = e.step(*a);
            out.returns[i] += o.reward;
            if record {
                out.steps.push(StepRecord {
                    episode: i,
                    state: states[i],
                    action: *a,
                    reward: o.reward,
                    next_state: o.state,
                    truncated: o.truncated,
                });
            }
            states[i] = o.state;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub mean: f64,
    /// Sample standard deviation; 0 for a single episode.
    pub std: f64,
    pub returns: Vec<f64>,
}

impl Evaluation {
    pub fn from_returns(returns: Vec<f64>) -> Self {
        let (mean, std) = mean_std(&returns);
        Self { mean, std, returns }
    }
}

pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

/// Reset generators of evaluation episodes; episode `e` always gets the same
/// stream for a given seed, whatever its design.
pub fn evaluation_episodes(designs: &[Design], seed: u64) -> Vec<Episode> {
    designs
        .iter()
        .enumerate()
        .map(|(e, d)| Episode {
            design: *d,
            reset_rng: indexed(seed, Stream::Evaluation, e as u64),
        })
        .collect()
}

/// Deterministic-policy return over `horizon` hours, one episode per design.
pub fn evaluate(
    controller: &dyn Controller,
    designs: &[Design],
    env: &EnvSpec,
    split: SplitKind,
    horizon: usize,
    init: InitMode,
    seed: u64,
) -> Result<Evaluation> {
    if designs.is_empty() {
        return Err(Error::Config("evaluation needs at least one design".into()));
    }
    let episodes = evaluation_episodes(designs, seed);
    let r = rollout(controller, env, split, horizon, init, &episodes, None, false)?;
    Ok(Evaluation::from_returns(r.returns))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::RuleBasedController;
    use crate::data::HOURS_PER_YEAR;
    use crate::env::EnvState;

    fn spec(consts: EnvConstants) -> EnvSpec {
        EnvSpec::from_config(&DatasetConfig::default(), consts).unwrap()
    }

    struct Idle;
    impl Controller for Idle {
        fn name(&self) -> &'static str {
            "idle"
        }
        fn act(&self, states: &[EnvState], _: &[Design]) -> Vec<Action> {
            vec![Action::default(); states.len()]
        }
    }

    #[test]
    fn zero_economics_give_zero_return() {
        let mut consts = EnvConstants::default().zero_cost();
        consts.ev_exchange_reward = false;
        let mut env = spec(consts);
        let mut data = (*env.data).clone();
        data.series.import_price = [0.0; 24];
        data.series.export_price = [0.0; 24];
        env.data = Arc::new(data);
        let d = vec![Design::new(4.0, 6.0).unwrap(); 3];
        let rb = RuleBasedController::new(consts);
        let e = evaluate(&rb, &d, &env, SplitKind::Validation, 672, InitMode::Validation, 9).unwrap();
        assert_eq!(e.returns, vec![0.0; 3]);
        assert_eq!((e.mean, e.std), (0.0, 0.0));
    }

    #[test]
    fn evaluation_is_repeatable() {
        let env = spec(EnvConstants::default());
        let d = vec![Design::new(4.0, 6.0).unwrap(), Design::new(1.0, 0.0).unwrap()];
        let rb = RuleBasedController::new(env.consts);
        let a = evaluate(&rb, &d, &env, SplitKind::Training, 500, InitMode::Training, 3).unwrap();
        let b = evaluate(&rb, &d, &env, SplitKind::Training, 500, InitMode::Training, 3).unwrap();
        assert_eq!(a, b);
        let c = evaluate(&rb, &d, &env, SplitKind::Training, 500, InitMode::Training, 4).unwrap();
        assert_ne!(a.returns, c.returns);
    }

    #[test]
    fn horizon_longer_than_split_is_rejected() {
        let env = spec(EnvConstants::default());
        let d = [Design::new(1.0, 1.0).unwrap()];
        let rb = Idle;
        let err = evaluate(&rb, &d, &env, SplitKind::Validation, 673, InitMode::Validation, 0)
            .unwrap_err();
        assert!(matches!(
            err,
            Error::HorizonTooLong {
                horizon: 673,
                available: 672
            }
        ));
        assert!(evaluate(&rb, &d, &env, SplitKind::Training, 8088, InitMode::Validation, 0).is_ok());
        assert!(evaluate(&rb, &d, &env, SplitKind::Training, HOURS_PER_YEAR, InitMode::Validation, 0).is_err());
    }

    #[test]
    fn recorded_steps_sum_to_returns() {
        let env = spec(EnvConstants::default());
        let d = [Design::new(3.0, 5.0).unwrap(), Design::new(6.0, 2.0).unwrap()];
        let eps = evaluation_episodes(&d, 1);
        let rb = RuleBasedController::new(env.consts);
        let r = rollout(&rb, &env, SplitKind::Training, 48, InitMode::Training, &eps, None, true).unwrap();
        assert_eq!(r.steps.len(), 96);
        for i in 0..2 {
            let s: f64 = r.steps.iter().filter(|t| t.episode == i).map(|t| t.reward).sum();
            assert!((s - r.returns[i]).abs() < 1e-9);
        }
        assert!(r.steps.iter().filter(|t| t.truncated).count() == 2);
    }

    #[test]
    fn mean_std_basics() {
        assert_eq!(mean_std(&[2.0]), (2.0, 0.0));
        let (m, s) = mean_std(&[1.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((s - 2f64.sqrt()).abs() < 1e-15);
    }
}
