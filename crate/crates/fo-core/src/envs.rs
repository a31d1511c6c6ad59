//! The built-in environment suite: seven planar analogs of the push and
//! pick-and-place benchmark family, ordered roughly by exploration demand.
//!
//! All worlds share a 1 m x 1 m table with a 0.4 m motion ceiling, a 5 cm
//! cube object, and the 5 cm success radius. Geometry below is calibrated
//! to preserve the qualitative difficulty ordering (free push < obstacle
//! push < far pick-and-place), not any specific original dimensions.

use crate::vec3::Vec3;
use crate::world::{Aabb, Mode, WorldConfig};

const HE: f64 = 0.025;
/// Object center height when resting on the table.
const TABLE_LEVEL: f64 = HE;

fn base(name: &str, mode: Mode) -> WorldConfig {
    WorldConfig {
        name: name.to_string(),
        mode,
        table: Aabb::new((0.0, 1.0), (0.0, 1.0), (0.0, 0.4)),
        obstacles: Vec::new(),
        spawn_region: Aabb::new((0.2, 0.8), (0.2, 0.8), (TABLE_LEVEL, TABLE_LEVEL)),
        goal_region: Aabb::new((0.2, 0.8), (0.2, 0.8), (TABLE_LEVEL, TABLE_LEVEL)),
        goal_table_prob: 0.0,
        object_half_extent: HE,
        gripper_radius: 0.02,
        grasp_radius: 0.05,
        epsilon: 0.05,
        horizon: 50,
        max_step_displacement: 0.05,
        gripper_home: Vec3::new(0.5, 0.12, 0.02),
    }
}

pub fn push_simple() -> WorldConfig {
    let mut w = base("push-simple", Mode::Push);
    w.spawn_region = Aabb::new((0.15, 0.45), (0.25, 0.75), (TABLE_LEVEL, TABLE_LEVEL));
    w.goal_region = Aabb::new((0.55, 0.85), (0.25, 0.75), (TABLE_LEVEL, TABLE_LEVEL));
    w
}

pub fn push_obstacle() -> WorldConfig {
    let mut w = base("push-obstacle", Mode::Push);
    // one wall with a gap at the far (+y) side
    w.obstacles = vec![Aabb::new((0.48, 0.52), (0.0, 0.7), (0.0, 0.1))];
    w.spawn_region = Aabb::new((0.15, 0.4), (0.15, 0.55), (TABLE_LEVEL, TABLE_LEVEL));
    w.goal_region = Aabb::new((0.6, 0.85), (0.15, 0.55), (TABLE_LEVEL, TABLE_LEVEL));
    w
}

pub fn push_double_obstacles() -> WorldConfig {
    let mut w = base("push-double-obstacles", Mode::Push);
    // two staggered walls forming an S-shaped corridor
    w.obstacles = vec![
        Aabb::new((0.33, 0.37), (0.0, 0.65), (0.0, 0.1)),
        Aabb::new((0.63, 0.67), (0.35, 1.0), (0.0, 0.1)),
    ];
    w.spawn_region = Aabb::new((0.1, 0.28), (0.2, 0.6), (TABLE_LEVEL, TABLE_LEVEL));
    w.goal_region = Aabb::new((0.72, 0.9), (0.4, 0.8), (TABLE_LEVEL, TABLE_LEVEL));
    w.horizon = 80;
    w
}

pub fn pnp_simple_v1() -> WorldConfig {
    let mut w = base("pnp-simple-v1", Mode::PickAndPlace);
    w.gripper_home = Vec3::new(0.5, 0.25, 0.05);
    // both object and goal positions constrained to a small square around
    // the gripper home; goals land on the table in half the episodes
    w.spawn_region = Aabb::new((0.35, 0.65), (0.1, 0.4), (TABLE_LEVEL, TABLE_LEVEL));
    w.goal_region = Aabb::new((0.35, 0.65), (0.1, 0.4), (0.05, 0.3));
    w.goal_table_prob = 0.5;
    w
}

pub fn pnp_simple_v2() -> WorldConfig {
    let mut w = pnp_simple_v1();
    w.name = "pnp-simple-v2".to_string();
    // the two v1 constraints removed: wide sampling, goals always in the
    // full 3-D region
    w.spawn_region = Aabb::new((0.1, 0.9), (0.1, 0.9), (TABLE_LEVEL, TABLE_LEVEL));
    w.goal_region = Aabb::new((0.1, 0.9), (0.1, 0.9), (0.05, 0.3));
    w.goal_table_prob = 0.0;
    w
}

pub fn pnp_obstacle() -> WorldConfig {
    let mut w = base("pnp-obstacle", Mode::PickAndPlace);
    w.gripper_home = Vec3::new(0.25, 0.5, 0.05);
    // full-width wall: the object has to be lifted over it
    w.obstacles = vec![Aabb::new((0.48, 0.52), (0.0, 1.0), (0.0, 0.12))];
    w.spawn_region = Aabb::new((0.15, 0.4), (0.2, 0.8), (TABLE_LEVEL, TABLE_LEVEL));
    w.goal_region = Aabb::new((0.6, 0.85), (0.2, 0.8), (TABLE_LEVEL, TABLE_LEVEL));
    w
}

pub fn pnp_shelf() -> WorldConfig {
    let mut w = base("pnp-shelf", Mode::PickAndPlace);
    w.gripper_home = Vec3::new(0.75, 0.3, 0.05);
    // a roofed cavity open toward -y; goals sit inside it, and the spawn
    // region overlaps the goal region (insertion-style intersecting sets)
    w.obstacles = vec![
        // roof
        Aabb::new((0.6, 0.9), (0.62, 0.98), (0.15, 0.18)),
        // back wall
        Aabb::new((0.6, 0.9), (0.94, 0.98), (0.0, 0.18)),
        // side walls
        Aabb::new((0.6, 0.64), (0.62, 0.98), (0.0, 0.18)),
        Aabb::new((0.86, 0.9), (0.62, 0.98), (0.0, 0.18)),
    ];
    w.spawn_region = Aabb::new((0.6, 0.9), (0.35, 0.75), (TABLE_LEVEL, TABLE_LEVEL));
    w.goal_region = Aabb::new((0.68, 0.82), (0.7, 0.9), (TABLE_LEVEL, TABLE_LEVEL));
    w
}

/// All seven environments.
pub fn env_suite() -> Vec<WorldConfig> {
    vec![
        push_simple(),
        push_obstacle(),
        push_double_obstacles(),
        pnp_simple_v1(),
        pnp_simple_v2(),
        pnp_obstacle(),
        pnp_shelf(),
    ]
}

/// Look an environment up by its suite name.
pub fn by_name(name: &str) -> Option<WorldConfig> {
    env_suite().into_iter().find(|w| w.name == name)
}
