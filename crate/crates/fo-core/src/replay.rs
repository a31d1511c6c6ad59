//! Episode storage, hindsight-relabeled minibatch sampling, and running
//! observation/goal normalization.

use crate::error::{Error, Result};
use crate::vec3::Vec3;
use crate::world::Goal;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// One full rollout against a (possibly substituted) goal.
#[derive(Debug, Clone, PartialEq)]
pub struct Episode {
    /// The goal rewards were computed against.
    pub goal: Vec3,
    /// Observations, length T+1.
    pub obs: Vec<Vec<f64>>,
    /// Actions, length T.
    pub actions: Vec<Vec<f64>>,
    /// Rewards, length T; `rewards[t]` scores the transition into `obs[t+1]`.
    pub rewards: Vec<f64>,
    /// Achieved object path, length T+1; `achieved[0]` is the initial
    /// object position.
    pub achieved: Vec<Vec3>,
}

impl Episode {
    pub fn horizon(&self) -> usize {
        self.actions.len()
    }

    /// Episode success: reward 0 at the final step.
    pub fn success(&self) -> bool {
        self.rewards.last().map(|r| *r == 0.0).unwrap_or(false)
    }

    pub fn validate(&self) -> Result<()> {
        let t = self.actions.len();
        if t == 0 {
            return Err(Error::Empty("episode has no transitions".into()));
        }
        if self.obs.len() != t + 1 || self.rewards.len() != t || self.achieved.len() != t + 1 {
            return Err(Error::Config(format!(
                "malformed episode: obs {}, actions {}, rewards {}, achieved {}",
                self.obs.len(),
                t,
                self.rewards.len(),
                self.achieved.len()
            )));
        }
        Ok(())
    }
}

/// FIFO ring of episodes.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    episodes: Vec<Episode>,
    capacity: usize,
    cursor: usize,
}

/// A sampled training batch. Goals are per-transition because of
/// relabeling; `relabeled` records which entries got a hindsight goal.
#[derive(Debug, Clone)]
pub struct Batch {
    pub obs: Vec<Vec<f64>>,
    pub actions: Vec<Vec<f64>>,
    pub rewards: Vec<f64>,
    pub next_obs: Vec<Vec<f64>>,
    pub goals: Vec<Vec3>,
    /// Achieved position after each sampled transition (used by tests and
    /// reward-recomputation checks).
    pub achieved_next: Vec<Vec3>,
    pub relabeled: Vec<bool>,
}

impl Batch {
    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        ReplayBuffer {
            episodes: Vec::new(),
            capacity: capacity.max(1),
            cursor: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.episodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.episodes.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn episode(&self, i: usize) -> &Episode {
        &self.episodes[i]
    }

    /// Store an episode, evicting the oldest once at capacity.
    pub fn store(&mut self, episode: Episode) -> Result<()> {
        episode.validate()?;
        if self.episodes.len() < self.capacity {
            self.episodes.push(episode);
        } else {
            self.episodes[self.cursor] = episode;
        }
        self.cursor = (self.cursor + 1) % self.capacity;
        Ok(())
    }

    /// Sample a batch with hindsight relabeling.
    ///
    /// Each transition is independently relabeled with probability
    /// `her_ratio / (1 + her_ratio)`; the substitute goal is drawn uniformly
    /// from achieved positions strictly after the transition in the same
    /// episode, and the reward is recomputed via `reward_fn`.
    pub fn sample_batch(
        &self,
        batch_size: usize,
        her_ratio: f64,
        reward_fn: &dyn Fn(Vec3, &Goal) -> f64,
        rng: &mut ChaCha8Rng,
    ) -> Result<Batch> {
        if self.episodes.is_empty() {
            return Err(Error::Empty("replay buffer".into()));
        }
        let p_relabel = her_ratio / (1.0 + her_ratio);
        let mut batch = Batch {
            obs: Vec::with_capacity(batch_size),
            actions: Vec::with_capacity(batch_size),
            rewards: Vec::with_capacity(batch_size),
            next_obs: Vec::with_capacity(batch_size),
            goals: Vec::with_capacity(batch_size),
            achieved_next: Vec::with_capacity(batch_size),
            relabeled: Vec::with_capacity(batch_size),
        };
        for _ in 0..batch_size {
            let ep = &self.episodes[rng.gen_range(0..self.episodes.len())];
            let horizon = ep.horizon();
            let t = rng.gen_range(0..horizon);
            let relabel = p_relabel > 0.0 && rng.gen::<f64>() < p_relabel;
            let (goal, rew) = if relabel {
                let j = rng.gen_range(t + 1..=horizon);
                let g = Goal(ep.achieved[j]);
                let r = reward_fn(ep.achieved[t + 1], &g);
                (g.0, r)
            } else {
                (ep.goal, ep.rewards[t])
            };
            batch.obs.push(ep.obs[t].clone());
            batch.actions.push(ep.actions[t].clone());
            batch.rewards.push(rew);
            batch.next_obs.push(ep.obs[t + 1].clone());
            batch.goals.push(goal);
            batch.achieved_next.push(ep.achieved[t + 1]);
            batch.relabeled.push(relabel);
        }
        Ok(batch)
    }
}

/// Running per-dimension standardizer with a std floor and output clipping.
#[derive(Debug, Clone, PartialEq)]
pub struct Normalizer {
    pub dim: usize,
    pub count: f64,
    pub sum: Vec<f64>,
    pub sumsq: Vec<f64>,
    pub clip: f64,
    pub std_floor: f64,
}

impl Normalizer {
    pub fn new(dim: usize) -> Self {
        Normalizer {
            dim,
            count: 0.0,
            sum: vec![0.0; dim],
            sumsq: vec![0.0; dim],
            clip: 5.0,
            std_floor: 1e-2,
        }
    }

    pub fn update(&mut self, rows: &[Vec<f64>]) -> Result<()> {
        for row in rows {
            self.update_one(row)?;
        }
        Ok(())
    }

    pub fn update_one(&mut self, row: &[f64]) -> Result<()> {
        if row.len() != self.dim {
            return Err(Error::dim("normalizer update", self.dim, row.len()));
        }
        self.count += 1.0;
        for (i, v) in row.iter().enumerate() {
            self.sum[i] += v;
            self.sumsq[i] += v * v;
        }
        Ok(())
    }

    pub fn mean(&self, i: usize) -> f64 {
        if self.count > 0.0 {
            self.sum[i] / self.count
        } else {
            0.0
        }
    }

    pub fn std(&self, i: usize) -> f64 {
        if self.count > 0.0 {
            let m = self.mean(i);
            let var = (self.sumsq[i] / self.count - m * m).max(0.0);
            var.sqrt().max(self.std_floor)
        } else {
            1.0
        }
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim {
            return Err(Error::dim("normalizer apply", self.dim, x.len()));
        }
        Ok(x.iter()
            .enumerate()
            .map(|(i, v)| ((v - self.mean(i)) / self.std(i)).clamp(-self.clip, self.clip))
            .collect())
    }

    pub fn apply_vec3(&self, v: Vec3) -> Result<Vec<f64>> {
        self.apply(&v.to_array())
    }
}
