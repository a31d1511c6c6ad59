//! Deterministic 2.5-D planar world.
//!
//! One world definition backs two MDPs: the manipulation MDP (a point
//! gripper pushes/carries an object) and the object-locomotion MDP (the
//! object moves itself, pose-commanded, constrained only by collisions).
//!
//! Physics is kinematic with collision clamping: motion is resolved one
//! axis at a time (x, then y, then z) against the table bounds and a set of
//! axis-aligned solid boxes. Clamping an axis leaves the tangential
//! components untouched, so sliding along surfaces falls out naturally.
//! There are no impulses and no friction model; the object moves only under
//! contact, grasp, or its own (locomotion) actions, plus gravity settling
//! in pick-and-place manipulation.

use crate::error::{Error, Result};
use crate::vec3::{Axis, Vec3, AXES};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Contact tolerance for clamped positions.
pub const CONTACT_TOL: f64 = 1e-9;

/// Axis-aligned box, used for obstacles and sampling regions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Aabb {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub z_min: f64,
    pub z_max: f64,
}

impl Aabb {
    pub fn new(x: (f64, f64), y: (f64, f64), z: (f64, f64)) -> Self {
        Aabb {
            x_min: x.0,
            x_max: x.1,
            y_min: y.0,
            y_max: y.1,
            z_min: z.0,
            z_max: z.1,
        }
    }

    pub fn range(&self, a: Axis) -> (f64, f64) {
        match a {
            Axis::X => (self.x_min, self.x_max),
            Axis::Y => (self.y_min, self.y_max),
            Axis::Z => (self.z_min, self.z_max),
        }
    }

    pub fn contains(&self, p: Vec3) -> bool {
        p.x >= self.x_min
            && p.x <= self.x_max
            && p.y >= self.y_min
            && p.y <= self.y_max
            && p.z >= self.z_min
            && p.z <= self.z_max
    }

    /// Grown by half-extents; the grown box is the forbidden region for an
    /// entity's center.
    pub fn expand(&self, half: Vec3) -> Aabb {
        Aabb {
            x_min: self.x_min - half.x,
            x_max: self.x_max + half.x,
            y_min: self.y_min - half.y,
            y_max: self.y_max + half.y,
            z_min: self.z_min - half.z,
            z_max: self.z_max + half.z,
        }
    }

    /// Strict interior test.
    pub fn interior_contains(&self, p: Vec3) -> bool {
        p.x > self.x_min
            && p.x < self.x_max
            && p.y > self.y_min
            && p.y < self.y_max
            && p.z > self.z_min
            && p.z < self.z_max
    }

    pub fn sample(&self, rng: &mut ChaCha8Rng) -> Vec3 {
        let u = |lo: f64, hi: f64, r: &mut ChaCha8Rng| {
            if hi > lo {
                r.gen_range(lo..hi)
            } else {
                lo
            }
        };
        // fixed draw order: x, y, z
        let x = u(self.x_min, self.x_max, rng);
        let y = u(self.y_min, self.y_max, rng);
        let z = u(self.z_min, self.z_max, rng);
        Vec3::new(x, y, z)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Push,
    PickAndPlace,
}

/// Full environment definition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorldConfig {
    pub name: String,
    pub mode: Mode,
    /// Table volume; `z_min` is the table surface, `z_max` the motion ceiling.
    pub table: Aabb,
    #[serde(default)]
    pub obstacles: Vec<Aabb>,
    /// Where object centers spawn.
    pub spawn_region: Aabb,
    /// Where goals are drawn from.
    pub goal_region: Aabb,
    /// Probability that a sampled goal is projected down to table level.
    #[serde(default)]
    pub goal_table_prob: f64,
    pub object_half_extent: f64,
    pub gripper_radius: f64,
    pub grasp_radius: f64,
    /// Success radius of the sparse reward.
    pub epsilon: f64,
    /// Episode length T.
    pub horizon: usize,
    /// Meters of motion per unit action component per step.
    pub max_step_displacement: f64,
    pub gripper_home: Vec3,
}

/// Goal: a target object position.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Goal(pub Vec3);

/// Manipulation-MDP state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManipState {
    pub gripper_pos: Vec3,
    pub gripper_vel: Vec3,
    /// Gripper opening in [0, 1]; 1 = fully open.
    pub opening: f64,
    pub object_pos: Vec3,
    pub object_vel: Vec3,
    pub grasped: bool,
}

impl ManipState {
    pub fn rel_pos(&self) -> Vec3 {
        self.object_pos - self.gripper_pos
    }

    pub fn rel_vel(&self) -> Vec3 {
        self.object_vel - self.gripper_vel
    }

    /// Flat observation layout:
    /// `[gripper_pos(3), gripper_vel(3), opening(1), object_pos(3),
    ///   object_vel(3), rel_pos(3), rel_vel(3), grasped(1)]`
    pub fn obs(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(MANIP_OBS_DIM);
        v.extend(self.gripper_pos.to_array());
        v.extend(self.gripper_vel.to_array());
        v.push(self.opening);
        v.extend(self.object_pos.to_array());
        v.extend(self.object_vel.to_array());
        v.extend(self.rel_pos().to_array());
        v.extend(self.rel_vel().to_array());
        v.push(if self.grasped { 1.0 } else { 0.0 });
        v
    }
}

pub const MANIP_OBS_DIM: usize = 20;
pub const OBJECT_OBS_DIM: usize = 6;
pub const ROBOT_ACTION_DIM: usize = 4;
pub const OBJECT_ACTION_DIM: usize = 3;

/// Gripper position slice of a manipulation observation.
pub fn obs_gripper(obs: &[f64]) -> Vec3 {
    Vec3::from_slice(&obs[0..3])
}

/// Object position slice of a manipulation observation.
pub fn obs_object(obs: &[f64]) -> Vec3 {
    Vec3::from_slice(&obs[7..10])
}

/// Locomotion-MDP state: the object-only reduction of [`ManipState`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectState {
    pub pos: Vec3,
    pub vel: Vec3,
}

impl ObjectState {
    pub fn obs(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(OBJECT_OBS_DIM);
        v.extend(self.pos.to_array());
        v.extend(self.vel.to_array());
        v
    }

    /// The locomotion state recoverable from a manipulation state.
    pub fn from_manip(s: &ManipState) -> Self {
        ObjectState {
            pos: s.object_pos,
            vel: s.object_vel,
        }
    }
}

/// Robot action: desired gripper displacement plus a gripper open/close
/// command, all in [-1, 1].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobotAction {
    pub delta: Vec3,
    pub grip: f64,
}

impl RobotAction {
    pub fn from_slice(a: &[f64]) -> Result<Self> {
        if a.len() != ROBOT_ACTION_DIM {
            return Err(Error::dim("RobotAction", ROBOT_ACTION_DIM, a.len()));
        }
        Ok(RobotAction {
            delta: Vec3::new(a[0], a[1], a[2]),
            grip: a[3],
        })
    }

    pub fn to_vec(&self) -> Vec<f64> {
        vec![self.delta.x, self.delta.y, self.delta.z, self.grip]
    }
}

/// Object action: desired object displacement in [-1, 1] per axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectAction {
    pub delta: Vec3,
}

impl ObjectAction {
    pub fn from_slice(a: &[f64]) -> Result<Self> {
        if a.len() != OBJECT_ACTION_DIM {
            return Err(Error::dim("ObjectAction", OBJECT_ACTION_DIM, a.len()));
        }
        Ok(ObjectAction {
            delta: Vec3::new(a[0], a[1], a[2]),
        })
    }
}

fn clip1(v: f64) -> f64 {
    v.clamp(-1.0, 1.0)
}

/// Sparse reward: 0 within `epsilon` of the goal (inclusive), else -1.
pub fn reward(o_next: Vec3, g: &Goal, epsilon: f64) -> f64 {
    if o_next.dist(g.0) <= epsilon {
        0.0
    } else {
        -1.0
    }
}

/// The known state-to-object mapping.
pub fn extract_object(state: &ManipState) -> Vec3 {
    state.object_pos
}

impl WorldConfig {
    pub fn object_half(&self) -> Vec3 {
        let he = self.object_half_extent;
        Vec3::new(he, he, he)
    }

    pub fn gripper_half(&self) -> Vec3 {
        let r = self.gripper_radius;
        Vec3::new(r, r, r)
    }

    /// Discount used by agents on this world: `1 - 1/T`.
    pub fn gamma(&self) -> f64 {
        1.0 - 1.0 / self.horizon as f64
    }

    /// Whether object z is free to move (locomotion and gravity-free flight
    /// are pick-and-place-only; push worlds keep the object on the table).
    pub fn object_z_free(&self) -> bool {
        self.mode == Mode::PickAndPlace
    }

    /// Bounds for an entity center with the given half-extents.
    fn center_bounds(&self, half: Vec3, a: Axis) -> (f64, f64) {
        let (lo, hi) = self.table.range(a);
        (lo + half.axis(a), hi - half.axis(a))
    }

    /// True if `center` is a legal resting position for a box entity.
    pub fn center_feasible(&self, center: Vec3, half: Vec3) -> bool {
        for a in AXES {
            let (lo, hi) = self.center_bounds(half, a);
            let c = center.axis(a);
            if c < lo - CONTACT_TOL || c > hi + CONTACT_TOL {
                return false;
            }
        }
        !self
            .obstacles
            .iter()
            .any(|o| o.expand(half).interior_contains(center))
    }

    pub fn validate(&self) -> Result<()> {
        if self.epsilon <= 0.0 {
            return Err(Error::Config("epsilon must be > 0".into()));
        }
        if self.horizon == 0 {
            return Err(Error::Config("horizon must be >= 1".into()));
        }
        for v in [
            self.object_half_extent,
            self.gripper_radius,
            self.grasp_radius,
            self.max_step_displacement,
        ] {
            if !(v > 0.0) {
                return Err(Error::Config("geometry scalars must be > 0".into()));
            }
        }
        let inset = self.object_half_extent;
        for (name, r) in [("spawn_region", &self.spawn_region), ("goal_region", &self.goal_region)] {
            for a in AXES {
                let (lo, hi) = r.range(a);
                let (tlo, thi) = self.table.range(a);
                if lo > hi {
                    return Err(Error::Config(format!("{name}: empty range on {a:?}")));
                }
                if lo < tlo + inset - CONTACT_TOL || hi > thi - inset + CONTACT_TOL {
                    return Err(Error::Config(format!(
                        "{name} not inside table bounds (axis {a:?})"
                    )));
                }
            }
            // coarse free-cell probe: the region must not be fully covered
            // by obstacles
            let mut any_free = false;
            let n = 8;
            'probe: for i in 0..=n {
                for j in 0..=n {
                    for k in 0..=1 {
                        let p = Vec3::new(
                            r.x_min + (r.x_max - r.x_min) * i as f64 / n as f64,
                            r.y_min + (r.y_max - r.y_min) * j as f64 / n as f64,
                            r.z_min + (r.z_max - r.z_min) * k as f64,
                        );
                        if self.center_feasible(p, self.object_half()) {
                            any_free = true;
                            break 'probe;
                        }
                    }
                }
            }
            if !any_free {
                return Err(Error::Config(format!("{name} fully covered by obstacles")));
            }
        }
        if !(0.0..=1.0).contains(&self.goal_table_prob) {
            return Err(Error::Config("goal_table_prob must be in [0, 1]".into()));
        }
        if !self.center_feasible(self.gripper_home, self.gripper_half()) {
            return Err(Error::Config("gripper_home collides with the world".into()));
        }
        Ok(())
    }

    /// Object center z when resting on the table surface.
    pub fn table_level(&self) -> f64 {
        self.table.z_min + self.object_half_extent
    }

    pub fn load_toml(text: &str) -> Result<WorldConfig> {
        let cfg: WorldConfig =
            toml::from_str(text).map_err(|e| Error::Parse(format!("world config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("world config serializes")
    }
}

/// Move one coordinate of a box entity, clamping against table bounds and
/// every obstacle. Returns the new coordinate.
fn axis_move(config: &WorldConfig, center: Vec3, half: Vec3, a: Axis, delta: f64) -> f64 {
    let c = center.axis(a);
    if delta == 0.0 {
        return c;
    }
    let (lo, hi) = config.center_bounds(half, a);
    let mut target = (c + delta).clamp(lo, hi);
    for obs in &config.obstacles {
        let e = obs.expand(half);
        // Only faces whose other two axes we are strictly inside can block.
        let blocked = AXES.iter().filter(|&&o| o != a).all(|&o| {
            let (olo, ohi) = e.range(o);
            let oc = center.axis(o);
            oc > olo && oc < ohi
        });
        if !blocked {
            continue;
        }
        let (emin, emax) = e.range(a);
        if c <= emin {
            if target > emin {
                target = emin;
            }
        } else if c >= emax {
            if target < emax {
                target = emax;
            }
        } else {
            // already interior (numerical edge case): freeze this axis
            target = c;
        }
    }
    target
}

/// Disc/box overlap in the x-y plane (strict).
fn disc_box_xy_overlap(g: Vec3, r: f64, o: Vec3, he: f64) -> bool {
    let dx = g.x - g.x.clamp(o.x - he, o.x + he);
    let dy = g.y - g.y.clamp(o.y - he, o.y + he);
    dx * dx + dy * dy < r * r
}

fn gripper_object_overlap(config: &WorldConfig, g: Vec3, o: Vec3) -> bool {
    let r = config.gripper_radius;
    let he = config.object_half_extent;
    disc_box_xy_overlap(g, r, o, he) && (g.z - o.z).abs() < r + he
}

/// Object coordinate on `axis` that just separates it from the gripper,
/// given the push direction.
fn separated_object_coord(config: &WorldConfig, g: Vec3, o: Vec3, a: Axis, dir: f64) -> f64 {
    let r = config.gripper_radius;
    let he = config.object_half_extent;
    match a {
        Axis::X => {
            let dy = g.y - g.y.clamp(o.y - he, o.y + he);
            let w = (r * r - dy * dy).max(0.0).sqrt();
            if dir > 0.0 {
                g.x + w + he
            } else {
                g.x - w - he
            }
        }
        Axis::Y => {
            let dx = g.x - g.x.clamp(o.x - he, o.x + he);
            let w = (r * r - dx * dx).max(0.0).sqrt();
            if dir > 0.0 {
                g.y + w + he
            } else {
                g.y - w - he
            }
        }
        Axis::Z => {
            if dir > 0.0 {
                g.z + r + he
            } else {
                g.z - r - he
            }
        }
    }
}

/// Gripper coordinate on `axis` that just separates it from the object,
/// given the direction it was moving.
fn separated_gripper_coord(config: &WorldConfig, g: Vec3, o: Vec3, a: Axis, dir: f64) -> f64 {
    let r = config.gripper_radius;
    let he = config.object_half_extent;
    match a {
        Axis::X => {
            let dy = g.y - g.y.clamp(o.y - he, o.y + he);
            let w = (r * r - dy * dy).max(0.0).sqrt();
            if dir > 0.0 {
                o.x - he - w
            } else {
                o.x + he + w
            }
        }
        Axis::Y => {
            let dx = g.x - g.x.clamp(o.x - he, o.x + he);
            let w = (r * r - dx * dx).max(0.0).sqrt();
            if dir > 0.0 {
                o.y - he - w
            } else {
                o.y + he + w
            }
        }
        Axis::Z => {
            if dir > 0.0 {
                o.z - r - he
            } else {
                o.z + r + he
            }
        }
    }
}

/// One manipulation step. Deterministic.
pub fn step_manip(state: &ManipState, action: &RobotAction, config: &WorldConfig) -> Result<ManipState> {
    if !action.delta.is_finite() || !action.grip.is_finite() {
        return Err(Error::NonFinite("robot action".into()));
    }
    let step = config.max_step_displacement;
    let d = Vec3::new(
        clip1(action.delta.x) * step,
        clip1(action.delta.y) * step,
        clip1(action.delta.z) * step,
    );
    let grip_cmd = if config.mode == Mode::Push {
        0.0
    } else {
        clip1(action.grip)
    };

    let ghalf = config.gripper_half();
    let ohalf = config.object_half();
    let mut s = *state;
    let prev_gripper = s.gripper_pos;
    let prev_object = s.object_pos;

    if s.grasped {
        // Gripper and object move as one unit; each axis advances by the
        // largest displacement both can make.
        for a in AXES {
            let delta = d.axis(a);
            if delta == 0.0 {
                continue;
            }
            let g_new = axis_move(config, s.gripper_pos, ghalf, a, delta);
            let dg = g_new - s.gripper_pos.axis(a);
            let o_new = axis_move(config, s.object_pos, ohalf, a, dg);
            let do_ = o_new - s.object_pos.axis(a);
            let common = if dg.abs() <= do_.abs() { dg } else { do_ };
            s.gripper_pos.set_axis(a, s.gripper_pos.axis(a) + common);
            s.object_pos.set_axis(a, s.object_pos.axis(a) + common);
        }
    } else {
        for a in AXES {
            let delta = d.axis(a);
            if delta == 0.0 {
                continue;
            }
            let before = s.gripper_pos.axis(a);
            let g_new = axis_move(config, s.gripper_pos, ghalf, a, delta);
            s.gripper_pos.set_axis(a, g_new);
            let moved = g_new - before;
            if moved != 0.0 && gripper_object_overlap(config, s.gripper_pos, s.object_pos) {
                let dir = moved.signum();
                let target = separated_object_coord(config, s.gripper_pos, s.object_pos, a, dir);
                let z_locked = a == Axis::Z && !config.object_z_free();
                let o_new = if z_locked {
                    s.object_pos.z
                } else {
                    let push = target - s.object_pos.axis(a);
                    axis_move(config, s.object_pos, ohalf, a, push)
                };
                s.object_pos.set_axis(a, o_new);
                if (o_new - target).abs() > CONTACT_TOL {
                    // Object pinned; back the gripper off to contact.
                    let g_back = separated_gripper_coord(config, s.gripper_pos, s.object_pos, a, dir);
                    s.gripper_pos.set_axis(a, g_back);
                }
            }
        }
    }

    // Grasp state transitions take effect after motion.
    if config.mode == Mode::PickAndPlace {
        if s.grasped {
            if grip_cmd > 0.0 {
                s.grasped = false;
            }
        } else if grip_cmd < 0.0
            && s.gripper_pos.dist(s.object_pos) <= config.grasp_radius
        {
            s.grasped = true;
        }
        s.opening = (s.opening + 0.5 * grip_cmd).clamp(0.0, 1.0);
    }

    // Gravity settles a free object in pick-and-place worlds.
    if config.mode == Mode::PickAndPlace && !s.grasped {
        let z_new = axis_move(config, s.object_pos, ohalf, Axis::Z, -step);
        s.object_pos.z = z_new;
    }

    s.gripper_vel = s.gripper_pos - prev_gripper;
    s.object_vel = s.object_pos - prev_object;
    Ok(s)
}

/// One locomotion step: the object moves itself, collision-clamped.
pub fn step_object(state: &ObjectState, action: &ObjectAction, config: &WorldConfig) -> Result<ObjectState> {
    if !action.delta.is_finite() {
        return Err(Error::NonFinite("object action".into()));
    }
    let step = config.max_step_displacement;
    let mut d = Vec3::new(
        clip1(action.delta.x) * step,
        clip1(action.delta.y) * step,
        clip1(action.delta.z) * step,
    );
    if !config.object_z_free() {
        d.z = 0.0;
    }
    let ohalf = config.object_half();
    let mut pos = state.pos;
    for a in AXES {
        let delta = d.axis(a);
        if delta != 0.0 {
            let c = axis_move(config, pos, ohalf, a, delta);
            pos.set_axis(a, c);
        }
    }
    Ok(ObjectState {
        pos,
        vel: pos - state.pos,
    })
}

fn sample_feasible(
    config: &WorldConfig,
    region: &Aabb,
    half: Vec3,
    force_table_level: bool,
    rng: &mut ChaCha8Rng,
) -> Result<Vec3> {
    for _ in 0..10_000 {
        let mut p = region.sample(rng);
        if force_table_level {
            p.z = config.table_level();
        }
        if config.center_feasible(p, half) {
            return Ok(p);
        }
    }
    Err(Error::Config(format!(
        "rejection sampling exhausted in world '{}'",
        config.name
    )))
}

/// Sample an initial object position and a goal. Draw order is fixed:
/// object position, then goal position, then the table-level coin.
fn sample_object_and_goal(config: &WorldConfig, rng: &mut ChaCha8Rng) -> Result<(Vec3, Goal)> {
    let table_level = config.mode == Mode::Push;
    let object = sample_feasible(config, &config.spawn_region, config.object_half(), table_level, rng)?;
    let mut goal = sample_feasible(config, &config.goal_region, config.object_half(), false, rng)?;
    if config.goal_table_prob > 0.0 && rng.gen::<f64>() < config.goal_table_prob {
        goal.z = config.table_level();
    }
    Ok((object, Goal(goal)))
}

/// Reset the manipulation MDP. Deterministic given the RNG state.
pub fn reset(config: &WorldConfig, rng: &mut ChaCha8Rng) -> Result<(ManipState, Goal)> {
    let (object, goal) = sample_object_and_goal(config, rng)?;
    let state = ManipState {
        gripper_pos: config.gripper_home,
        gripper_vel: Vec3::ZERO,
        opening: 1.0,
        object_pos: object,
        object_vel: Vec3::ZERO,
        grasped: false,
    };
    Ok((state, goal))
}

/// Reset the locomotion MDP with the same sampling as [`reset`].
pub fn reset_locomotion(config: &WorldConfig, rng: &mut ChaCha8Rng) -> Result<(ObjectState, Goal)> {
    let (object, goal) = sample_object_and_goal(config, rng)?;
    Ok((
        ObjectState {
            pos: object,
            vel: Vec3::ZERO,
        },
        goal,
    ))
}

/// Containment + non-penetration check used by tests and the safety suite.
pub fn state_within_limits(config: &WorldConfig, s: &ManipState) -> bool {
    config.center_feasible(s.object_pos, config.object_half())
        && config.center_feasible(s.gripper_pos, config.gripper_half())
}

// --- trajectory recording -------------------------------------------------

/// One row of the episode CSV.
#[derive(Debug, Clone)]
pub struct TrajectoryRow {
    pub step: usize,
    pub gripper: Vec3,
    pub object: Vec3,
    pub action: [f64; 4],
    pub reward: f64,
    pub goal: Vec3,
}

pub const TRAJECTORY_CSV_HEADER: &str =
    "step,grip_x,grip_y,grip_z,obj_x,obj_y,obj_z,act_dx,act_dy,act_dz,act_grip,reward,goal_x,goal_y,goal_z";

pub fn write_trajectory_csv(w: &mut impl std::io::Write, rows: &[TrajectoryRow]) -> Result<()> {
    writeln!(w, "{TRAJECTORY_CSV_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{:.9},{:.9},{:.9},{:.9},{:.9},{:.9},{:.9},{:.9},{:.9},{:.9},{:.1},{:.9},{:.9},{:.9}",
            r.step,
            r.gripper.x,
            r.gripper.y,
            r.gripper.z,
            r.object.x,
            r.object.y,
            r.object.z,
            r.action[0],
            r.action[1],
            r.action[2],
            r.action[3],
            r.reward,
            r.goal.x,
            r.goal.y,
            r.goal.z
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs;
    use crate::rng::stream;

    fn free_world() -> WorldConfig {
        envs::push_simple()
    }

    #[test]
    fn reset_is_deterministic() {
        let cfg = free_world();
        let mut r1 = stream(5, "reset", 0, 0);
        let mut r2 = stream(5, "reset", 0, 0);
        let (s1, g1) = reset(&cfg, &mut r1).unwrap();
        let (s2, g2) = reset(&cfg, &mut r2).unwrap();
        assert_eq!(s1, s2);
        assert_eq!(g1, g2);
    }

    #[test]
    fn pnp_v1_goal_table_level_half_the_time() {
        let cfg = envs::pnp_simple_v1();
        let mut rng = stream(9, "reset", 0, 0);
        let n = 10_000;
        let mut on_table = 0;
        for _ in 0..n {
            let (_, g) = reset(&cfg, &mut rng).unwrap();
            if g.0.z == cfg.table_level() {
                on_table += 1;
            }
        }
        let frac = on_table as f64 / n as f64;
        assert!((frac - 0.5).abs() < 0.02, "table-level fraction {frac}");
    }

    #[test]
    fn pnp_v2_goals_never_forced_to_table() {
        let cfg = envs::pnp_simple_v2();
        let mut rng = stream(9, "reset", 1, 0);
        // goal z is continuous on [z_min, z_max]; exact table level has
        // measure zero
        for _ in 0..1000 {
            let (_, g) = reset(&cfg, &mut rng).unwrap();
            assert!(g.0.z >= cfg.goal_region.z_min);
        }
    }

    #[test]
    fn spawn_distribution_is_uniform_chi_square() {
        // 4x4 grid over the spawn region, 10k resets, chi-square at 5%
        // significance: critical value for df = 15 is 24.996.
        let cfg = free_world();
        let mut rng = stream(11, "reset", 0, 0);
        let n = 10_000;
        let mut counts = [[0u32; 4]; 4];
        let r = &cfg.spawn_region;
        for _ in 0..n {
            let (s, _) = reset(&cfg, &mut rng).unwrap();
            let fx = (s.object_pos.x - r.x_min) / (r.x_max - r.x_min);
            let fy = (s.object_pos.y - r.y_min) / (r.y_max - r.y_min);
            let ix = ((fx * 4.0) as usize).min(3);
            let iy = ((fy * 4.0) as usize).min(3);
            counts[ix][iy] += 1;
        }
        let expected = n as f64 / 16.0;
        let chi2: f64 = counts
            .iter()
            .flatten()
            .map(|&c| {
                let d = c as f64 - expected;
                d * d / expected
            })
            .sum();
        assert!(chi2 < 24.996, "chi-square statistic {chi2}");
    }

    #[test]
    fn reset_errors_when_region_is_blocked() {
        let mut cfg = free_world();
        // wall exactly covering the spawn region
        let r = cfg.spawn_region;
        cfg.obstacles.push(Aabb::new(
            (r.x_min - 0.05, r.x_max + 0.05),
            (r.y_min - 0.05, r.y_max + 0.05),
            (0.0, 0.2),
        ));
        let mut rng = stream(1, "reset", 0, 0);
        assert!(reset(&cfg, &mut rng).is_err());
    }

    #[test]
    fn zero_action_keeps_resting_state() {
        let cfg = free_world();
        let mut rng = stream(2, "reset", 0, 0);
        let (mut s, _) = reset(&cfg, &mut rng).unwrap();
        s.gripper_vel = Vec3::new(0.01, 0.0, 0.0);
        let action = RobotAction {
            delta: Vec3::ZERO,
            grip: 0.0,
        };
        let next = step_manip(&s, &action, &cfg).unwrap();
        assert_eq!(next.gripper_pos, s.gripper_pos);
        assert_eq!(next.object_pos, s.object_pos);
        assert_eq!(next.gripper_vel, Vec3::ZERO);
        assert_eq!(next.object_vel, Vec3::ZERO);
    }

    #[test]
    fn scripted_push_moves_object_monotonically() {
        let cfg = free_world();
        let mut s = ManipState {
            gripper_pos: Vec3::new(0.2, 0.5, 0.02),
            gripper_vel: Vec3::ZERO,
            opening: 1.0,
            object_pos: Vec3::new(0.3, 0.5, cfg.table_level()),
            object_vel: Vec3::ZERO,
            grasped: false,
        };
        let action = RobotAction {
            delta: Vec3::new(1.0, 0.0, 0.0),
            grip: 0.0,
        };
        let mut last_x = s.object_pos.x;
        for _ in 0..10 {
            s = step_manip(&s, &action, &cfg).unwrap();
            assert!(s.object_pos.x >= last_x - CONTACT_TOL);
            assert!(state_within_limits(&cfg, &s));
            last_x = s.object_pos.x;
        }
        assert!(last_x > 0.4, "object should have been pushed, at {last_x}");
    }

    #[test]
    fn grasp_then_lift_raises_object() {
        let cfg = envs::pnp_simple_v1();
        let mut s = ManipState {
            gripper_pos: Vec3::new(0.5, 0.5, 0.05),
            gripper_vel: Vec3::ZERO,
            opening: 1.0,
            object_pos: Vec3::new(0.5, 0.5, cfg.table_level()),
            object_vel: Vec3::ZERO,
            grasped: false,
        };
        // close the gripper in place
        let close = RobotAction {
            delta: Vec3::ZERO,
            grip: -1.0,
        };
        s = step_manip(&s, &close, &cfg).unwrap();
        assert!(s.grasped);
        let lift = RobotAction {
            delta: Vec3::new(0.0, 0.0, 1.0),
            grip: -1.0,
        };
        let z0 = s.object_pos.z;
        for _ in 0..4 {
            s = step_manip(&s, &lift, &cfg).unwrap();
        }
        assert!(s.object_pos.z > z0 + 0.1, "object z {}", s.object_pos.z);
        // release and let it fall back
        let open = RobotAction {
            delta: Vec3::ZERO,
            grip: 1.0,
        };
        s = step_manip(&s, &open, &cfg).unwrap();
        assert!(!s.grasped);
        for _ in 0..20 {
            let hold = RobotAction {
                delta: Vec3::ZERO,
                grip: 0.0,
            };
            s = step_manip(&s, &hold, &cfg).unwrap();
        }
        assert!((s.object_pos.z - cfg.table_level()).abs() < 1e-9);
    }

    #[test]
    fn push_mode_never_grasps() {
        let cfg = free_world();
        let mut s = ManipState {
            gripper_pos: Vec3::new(0.3, 0.5, 0.02),
            gripper_vel: Vec3::ZERO,
            opening: 1.0,
            object_pos: Vec3::new(0.31, 0.5, cfg.table_level()),
            object_vel: Vec3::ZERO,
            grasped: false,
        };
        let a = RobotAction {
            delta: Vec3::ZERO,
            grip: -1.0,
        };
        s = step_manip(&s, &a, &cfg).unwrap();
        assert!(!s.grasped);
        assert_eq!(s.opening, 1.0);
    }

    #[test]
    fn object_step_zero_action_is_identity() {
        let cfg = free_world();
        let s = ObjectState {
            pos: Vec3::new(0.4, 0.4, cfg.table_level()),
            vel: Vec3::new(0.02, 0.0, 0.0),
        };
        let next = step_object(&s, &ObjectAction { delta: Vec3::ZERO }, &cfg).unwrap();
        assert_eq!(next.pos, s.pos);
        assert_eq!(next.vel, Vec3::ZERO);
    }

    #[test]
    fn object_free_space_displacement_is_exact() {
        let cfg = free_world();
        let mut s = ObjectState {
            pos: Vec3::new(0.2, 0.5, cfg.table_level()),
            vel: Vec3::ZERO,
        };
        let a = ObjectAction {
            delta: Vec3::new(1.0, 0.0, 0.0),
        };
        for _ in 0..10 {
            s = step_object(&s, &a, &cfg).unwrap();
        }
        let expect = 0.2 + 10.0 * cfg.max_step_displacement;
        assert!((s.pos.x - expect).abs() < 1e-12);
    }

    #[test]
    fn object_contact_clamps_normal_keeps_tangential() {
        let mut cfg = free_world();
        cfg.obstacles.push(Aabb::new((0.5, 0.55), (0.0, 1.0), (0.0, 0.1)));
        let he = cfg.object_half_extent;
        let s = ObjectState {
            // touching the obstacle's -x face
            pos: Vec3::new(0.5 - he, 0.5, cfg.table_level()),
            vel: Vec3::ZERO,
        };
        let a = ObjectAction {
            delta: Vec3::new(1.0, 1.0, 0.0),
        };
        let next = step_object(&s, &a, &cfg).unwrap();
        assert!((next.pos.x - (0.5 - he)).abs() < 1e-12, "normal clamped");
        assert!(
            (next.pos.y - (0.5 + cfg.max_step_displacement)).abs() < 1e-12,
            "tangential applied"
        );
    }

    #[test]
    fn push_mode_object_z_is_locked() {
        let cfg = free_world();
        let s = ObjectState {
            pos: Vec3::new(0.5, 0.5, cfg.table_level()),
            vel: Vec3::ZERO,
        };
        let a = ObjectAction {
            delta: Vec3::new(0.0, 0.0, 1.0),
        };
        let next = step_object(&s, &a, &cfg).unwrap();
        assert_eq!(next.pos.z, cfg.table_level());
    }

    #[test]
    fn reward_matches_sparse_rule() {
        let g = Goal(Vec3::new(0.5, 0.5, 0.0));
        assert_eq!(reward(Vec3::new(0.53, 0.5, 0.0), &g, 0.05), 0.0);
        assert_eq!(reward(g.0, &g, 0.05), 0.0);
        // boundary inclusive
        assert_eq!(reward(Vec3::new(0.55, 0.5, 0.0), &g, 0.05), 0.0);
        assert_eq!(reward(Vec3::new(0.5500001, 0.5, 0.0), &g, 0.05), -1.0);
    }

    #[test]
    fn reward_is_always_zero_or_minus_one() {
        let mut rng = stream(3, "reward_prop", 0, 0);
        for _ in 0..10_000 {
            let o = Vec3::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            let g = Goal(Vec3::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)));
            let r = reward(o, &g, 0.05);
            assert!(r == 0.0 || r == -1.0);
            assert_eq!(r == 0.0, o.dist(g.0) <= 0.05);
        }
    }

    #[test]
    fn extract_object_is_pure_projection() {
        let cfg = free_world();
        let mut rng = stream(4, "reset", 0, 0);
        let (s, _) = reset(&cfg, &mut rng).unwrap();
        assert_eq!(extract_object(&s), s.object_pos);
        let reduced = ObjectState::from_manip(&s);
        assert_eq!(reduced.pos, extract_object(&s));
        assert_eq!(reduced.vel, s.object_vel);
    }

    #[test]
    fn random_actions_respect_containment_and_non_penetration() {
        // smaller version of the acceptance safety suite
        for cfg in envs::env_suite() {
            let mut rng = stream(6, "safety", 0, 0);
            for ep in 0..50 {
                let mut reset_rng = stream(6, "safety_reset", ep, 0);
                let (mut s, _) = reset(&cfg, &mut reset_rng).unwrap();
                for _ in 0..cfg.horizon {
                    let a = RobotAction {
                        delta: Vec3::new(
                            rng.gen_range(-1.0..1.0),
                            rng.gen_range(-1.0..1.0),
                            rng.gen_range(-1.0..1.0),
                        ),
                        grip: rng.gen_range(-1.0..1.0),
                    };
                    s = step_manip(&s, &a, &cfg).unwrap();
                    assert!(state_within_limits(&cfg, &s), "violation in {}", cfg.name);
                }
            }
        }
    }

    #[test]
    fn step_is_deterministic() {
        let cfg = envs::pnp_simple_v1();
        let mut rng = stream(7, "reset", 0, 0);
        let (s, _) = reset(&cfg, &mut rng).unwrap();
        let a = RobotAction {
            delta: Vec3::new(0.3, -0.7, 0.2),
            grip: -0.5,
        };
        let n1 = step_manip(&s, &a, &cfg).unwrap();
        let n2 = step_manip(&s, &a, &cfg).unwrap();
        assert_eq!(n1, n2);
    }

    #[test]
    fn non_finite_action_is_rejected() {
        let cfg = free_world();
        let mut rng = stream(8, "reset", 0, 0);
        let (s, _) = reset(&cfg, &mut rng).unwrap();
        let a = RobotAction {
            delta: Vec3::new(f64::NAN, 0.0, 0.0),
            grip: 0.0,
        };
        assert!(step_manip(&s, &a, &cfg).is_err());
    }

    #[test]
    fn world_config_toml_roundtrip() {
        let cfg = envs::pnp_shelf();
        let text = cfg.to_toml();
        let back = WorldConfig::load_toml(&text).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn world_config_rejects_unknown_keys() {
        let cfg = free_world();
        let mut text = cfg.to_toml();
        text.push_str("\nnot_a_real_key = 3\n");
        assert!(WorldConfig::load_toml(&text).is_err());
    }

    #[test]
    fn trajectory_csv_has_header_and_rows() {
        let rows = vec![TrajectoryRow {
            step: 0,
            gripper: Vec3::new(0.1, 0.2, 0.3),
            object: Vec3::new(0.4, 0.5, 0.025),
            action: [0.5, -0.5, 0.0, 1.0],
            reward: -1.0,
            goal: Vec3::new(0.6, 0.6, 0.025),
        }];
        let mut buf = Vec::new();
        write_trajectory_csv(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), TRAJECTORY_CSV_HEADER);
        assert_eq!(lines.count(), 1);
    }
}
