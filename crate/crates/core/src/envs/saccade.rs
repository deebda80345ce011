use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::action::Action;
use crate::error::{Error, Result};
use crate::seed;
use crate::unit::SignalVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TaskMode {
    /// Track the moving target; no fixation point.
    Pro,
    /// Hold gaze on the fixation point while a distractor moves.
    Fixation,
    /// Fixation first, target visible throughout; foveate it once fixation ends.
    Overlap,
    /// Fixation, then a blank interval, then a stationary target at a fixed spot.
    Gap,
    /// Green fixation; look at the target's mirror image about the fixation point.
    Anti,
}

impl TaskMode {
    pub const ALL: [TaskMode; 5] = [
        TaskMode::Pro,
        TaskMode::Fixation,
        TaskMode::Overlap,
        TaskMode::Gap,
        TaskMode::Anti,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TaskMode::Pro => "pro",
            TaskMode::Fixation => "fixation",
            TaskMode::Overlap => "overlap",
            TaskMode::Gap => "gap",
            TaskMode::Anti => "anti",
        }
    }

    pub fn parse(s: &str) -> Option<TaskMode> {
        TaskMode::ALL.into_iter().find(|m| m.name() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FixationColor {
    Red,
    Green,
    None,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SaccadeObservation {
    /// `target − gaze` plus sensor noise; zero when no target is visible.
    pub retinal_offset: [f64; 2],
    pub salient_motion: bool,
    pub fixation_pos: [f64; 2],
    /// `fixation − gaze`; zero while the fixation point is off.
    pub fixation_offset: [f64; 2],
    pub fixation_on: bool,
    pub fixation_color: FixationColor,
}

impl SaccadeObservation {
    pub const FEATURES: usize = 8;

    /// `[offset, salient, fixation offset, fixation on, red, green]`
    pub fn features(&self) -> SignalVector {
        let b = |x: bool| if x { 1.0 } else { 0.0 };
        SignalVector::from_vec_unchecked(vec![
            self.retinal_offset[0],
            self.retinal_offset[1],
            b(self.salient_motion),
            self.fixation_offset[0],
            self.fixation_offset[1],
            b(self.fixation_on),
            b(self.fixation_color == FixationColor::Red),
            b(self.fixation_color == FixationColor::Green),
        ])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SaccadeConfig {
    pub mode: TaskMode,
    /// Maximum target displacement per tick.
    pub speed: f64,
    pub r_fov: f64,
    pub noise_sigma: f64,
    pub max_step: f64,
    /// `None` runs one endless episode.
    pub episode_len: Option<u64>,
    /// Tick at which the fixation point turns off (overlap, gap).
    pub fixation_off: u64,
    /// Blank ticks between fixation offset and target onset (gap).
    pub gap_len: u64,
    pub fixation_pos: [f64; 2],
    /// Where the gap-task target appears.
    pub gap_target: [f64; 2],
}

impl Default for SaccadeConfig {
    fn default() -> Self {
        SaccadeConfig {
            mode: TaskMode::Pro,
            speed: 0.01,
            r_fov: 0.05,
            noise_sigma: 0.01,
            max_step: 0.1,
            episode_len: Some(60),
            fixation_off: 30,
            gap_len: 5,
            fixation_pos: [0.5, 0.5],
            gap_target: [0.8, 0.5],
        }
    }
}

/// 2-D gaze world with a target moving between random waypoints.
#[derive(Debug, Clone)]
pub struct SaccadeEnv {
    cfg: SaccadeConfig,
    rng: seed::Rng,
    noise: Normal<f64>,
    gaze: [f64; 2],
    target: [f64; 2],
    waypoint: [f64; 2],
    t: u64,
}

fn clamp01(p: [f64; 2]) -> [f64; 2] {
    [p[0].clamp(0.0, 1.0), p[1].clamp(0.0, 1.0)]
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

impl SaccadeEnv {
    pub fn new(cfg: SaccadeConfig, seed: u64) -> Result<Self> {
        if !(cfg.noise_sigma >= 0.0 && cfg.speed >= 0.0 && cfg.r_fov > 0.0 && cfg.max_step > 0.0) {
            return Err(Error::Config("saccade speed, noise >= 0 and r_fov, max_step > 0 required".into()));
        }
        let noise = Normal::new(0.0, cfg.noise_sigma).map_err(|e| Error::Config(e.to_string()))?;
        let mut env = SaccadeEnv {
            rng: seed::stream(seed, "saccade"),
            noise,
            gaze: cfg.fixation_pos,
            target: [0.5, 0.5],
            waypoint: [0.5, 0.5],
            t: 0,
            cfg,
        };
        env.reset();
        Ok(env)
    }

    pub fn config(&self) -> &SaccadeConfig {
        &self.cfg
    }

    pub fn set_mode(&mut self, mode: TaskMode) {
        self.cfg.mode = mode;
    }

    fn random_point(&mut self) -> [f64; 2] {
        [self.rng.gen_range(0.1..0.9), self.rng.gen_range(0.1..0.9)]
    }

    /// Starts a new episode: gaze on the fixation point, target at a random spot.
    pub fn reset(&mut self) -> SaccadeObservation {
        self.t = 0;
        self.gaze = self.cfg.fixation_pos;
        self.target = self.random_point();
        self.waypoint = self.random_point();
        if self.cfg.mode == TaskMode::Gap {
            self.target = self.cfg.gap_target;
        }
        self.observe()
    }

    pub fn gaze(&self) -> [f64; 2] {
        self.gaze
    }

    pub fn target(&self) -> [f64; 2] {
        self.target
    }

    pub fn tick(&self) -> u64 {
        self.t
    }

    /// `‖target − gaze‖²`
    pub fn tracking_error_sq(&self) -> f64 {
        dist(self.target, self.gaze).powi(2)
    }

    pub fn fixation_on(&self) -> bool {
        match self.cfg.mode {
            TaskMode::Pro => false,
            TaskMode::Fixation | TaskMode::Anti => true,
            TaskMode::Overlap | TaskMode::Gap => self.t < self.cfg.fixation_off,
        }
    }

    pub fn target_visible(&self) -> bool {
        match self.cfg.mode {
            TaskMode::Gap => self.t >= self.cfg.fixation_off + self.cfg.gap_len,
            _ => true,
        }
    }

    fn fixation_color(&self) -> FixationColor {
        match (self.fixation_on(), self.cfg.mode) {
            (false, _) => FixationColor::None,
            (true, TaskMode::Anti) => FixationColor::Green,
            (true, _) => FixationColor::Red,
        }
    }

    /// Point reflection of the target about the fixation point, clamped to the screen.
    pub fn mirror_point(&self) -> [f64; 2] {
        let f = self.cfg.fixation_pos;
        clamp01([2.0 * f[0] - self.target[0], 2.0 * f[1] - self.target[1]])
    }

    fn observe(&mut self) -> SaccadeObservation {
        let visible = self.target_visible();
        let retinal_offset = if visible {
            let nx = self.noise.sample(&mut self.rng);
            let ny = self.noise.sample(&mut self.rng);
            [
                (self.target[0] - self.gaze[0] + nx).clamp(-1.0, 1.0),
                (self.target[1] - self.gaze[1] + ny).clamp(-1.0, 1.0),
            ]
        } else {
            [0.0, 0.0]
        };
        let on = self.fixation_on();
        let f = self.cfg.fixation_pos;
        SaccadeObservation {
            retinal_offset,
            salient_motion: visible,
            fixation_pos: f,
            fixation_offset: if on { [f[0] - self.gaze[0], f[1] - self.gaze[1]] } else { [0.0, 0.0] },
            fixation_on: on,
            fixation_color: self.fixation_color(),
        }
    }

    fn advance_target(&mut self) {
        if self.cfg.mode == TaskMode::Gap {
            return;
        }
        let d = dist(self.waypoint, self.target);
        if d <= self.cfg.speed {
            self.target = self.waypoint;
            self.waypoint = self.random_point();
        } else {
            let s = self.cfg.speed / d;
            self.target = [
                self.target[0] + s * (self.waypoint[0] - self.target[0]),
                self.target[1] + s * (self.waypoint[1] - self.target[1]),
            ];
        }
    }

    /// Scores the current positions against the cue schedule of the tick in
    /// which the move was made (`fixation_on`, `visible`).
    fn reward(&self, fixation_on: bool, visible: bool) -> f64 {
        let r = self.cfg.r_fov;
        let on_fix = dist(self.cfg.fixation_pos, self.gaze) <= r;
        let on_target = visible && dist(self.target, self.gaze) <= r;
        let hit = match self.cfg.mode {
            TaskMode::Pro => on_target,
            TaskMode::Fixation => on_fix,
            TaskMode::Overlap | TaskMode::Gap => {
                if fixation_on {
                    on_fix
                } else {
                    on_target
                }
            }
            TaskMode::Anti => visible && dist(self.mirror_point(), self.gaze) <= r,
        };
        if hit {
            1.0
        } else {
            0.0
        }
    }

    /// Moves the gaze, advances the target, and scores the new positions.
    pub fn step(&mut self, action: Action) -> Result<(SaccadeObservation, f64, bool)> {
        let d = action
            .dgaze()
            .ok_or_else(|| Error::contract("saccade world takes gaze actions only"))?;
        let lim = self.cfg.max_step * (1.0 + 1e-12);
        if !(d[0].is_finite() && d[1].is_finite()) || d[0].abs() > lim || d[1].abs() > lim {
            return Err(Error::contract(format!("gaze step {d:?} exceeds max_step {}", self.cfg.max_step)));
        }
        let (cue_on, cue_visible) = (self.fixation_on(), self.target_visible());
        self.gaze = clamp01([self.gaze[0] + d[0], self.gaze[1] + d[1]]);
        self.t += 1;
        if self.target_visible() {
            self.advance_target();
        }
        let reward = self.reward(cue_on, cue_visible);
        let done = self.cfg.episode_len.is_some_and(|n| self.t >= n);
        Ok((self.observe(), reward, done))
    }

    pub fn rng_mut(&mut self) -> &mut seed::Rng {
        &mut self.rng
    }
}
