mod common;

use aeroarm_core::arm::ArmParams;
use aeroarm_core::corridor::{compute_corridor, Cell, Circle, Grid};
use aeroarm_core::planner::{time_to_collision, Obstacle};
use aeroarm_core::scenario::Scenario;
use aeroarm_core::trajectory::Trajectory;
use aeroarm_core::Vec2;
use common::{closest_approach, reachable_by_scan};
use proptest::prelude::*;

/// First contact found by marching the relative motion in 1e-4 s steps.
fn ttc_by_marching(p: Vec2, v: Vec2, o: &Obstacle, horizon: f64) -> Option<f64> {
    let h = 1e-4;
    let steps = (horizon / h) as usize;
    (0..=steps).map(|k| k as f64 * h).find(|&t| (p + v * t).distance(o.center + o.velocity * t) <= o.radius)
}

fn vec2() -> impl Strategy<Value = Vec2> {
    (-3.0..3.0f64, -3.0..3.0f64).prop_map(|(x, y)| Vec2::new(x, y))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ttc_matches_time_march(p in vec2(), v in vec2(), c in vec2(), w in vec2(), r in 0.05..1.0f64) {
        let o = Obstacle { center: c, radius: r, velocity: w };
        let horizon = 10.0;
        let exact = time_to_collision(p, v, &o);
        let marched = ttc_by_marching(p, v, &o, horizon);
        match (exact, marched) {
            (Some(t), Some(m)) => prop_assert!((t - m).abs() < 1e-3, "{t} vs {m}"),
            (Some(t), None) => prop_assert!(t > horizon - 1e-3, "missed contact at {t}"),
            // Grazing contact can fall between march steps only by a hair.
            (None, Some(m)) => {
                let gap = closest_approach([p.x, p.y], [v.x, v.y], [c.x, c.y], [w.x, w.y], horizon);
                prop_assert!(gap > r - 1e-6, "contact at {m} not reported");
            }
            (None, None) => {}
        }
    }
}

fn single_target(p: Vec2) -> Trajectory {
    Trajectory::from_points(vec![p, p], 0.0, 0.1).unwrap()
}

fn circles() -> impl Strategy<Value = Vec<Circle>> {
    prop::collection::vec(
        ((-1.0..1.0f64, 0.5..2.5f64), 0.05..0.3f64).prop_map(|((x, y), radius)| Circle { center: Vec2::new(x, y), radius }),
        0..3,
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    /// Every kept cell passes the annulus, clearance and scan-IK checks, and
    /// every cell that clearly passes them is kept.
    #[test]
    fn corridor_cells_are_exactly_the_reachable_clear_ones(
        goal in (-0.5..0.5f64, 1.5..2.5f64), margin in 0.0..0.2f64, obstacles in circles(),
    ) {
        let arm = ArmParams::default();
        let goal = Vec2::new(goal.0, goal.1);
        let res = 0.1;
        let Ok(c) = compute_corridor(&single_target(goal), &arm, res, margin, &obstacles) else {
            return Ok(());
        };
        let (r_min, r_max) = ((arm.l1 - arm.l2).abs() + margin, arm.reach() - margin);
        let clear = |ix: i64, iy: i64| {
            let (x0, y0) = (ix as f64 * res, iy as f64 * res);
            obstacles.iter().all(|o| {
                let nx = o.center.x.clamp(x0, x0 + res);
                let ny = o.center.y.clamp(y0, y0 + res);
                ((nx - o.center.x).powi(2) + (ny - o.center.y).powi(2)).sqrt() > o.radius
            })
        };
        let span = (arm.reach() / res).ceil() as i64 + 2;
        let (gx, gy) = ((goal.x / res).floor() as i64, (goal.y / res).floor() as i64);
        for ix in gx - span..=gx + span {
            for iy in gy - span..=gy + span {
                let center = [(ix as f64 + 0.5) * res, (iy as f64 + 0.5) * res];
                let rel = [goal.x - center[0], goal.y - center[1]];
                let d = (rel[0] * rel[0] + rel[1] * rel[1]).sqrt();
                let kept = c.contains(0, Cell::new(ix, iy));
                if kept {
                    prop_assert!(d >= r_min - 1e-12 && d <= r_max + 1e-12);
                    prop_assert!(clear(ix, iy));
                    prop_assert!(reachable_by_scan(&arm, rel), "cell ({ix}, {iy}) unreachable");
                } else if d > r_min + 1e-6 && d < r_max - 1e-6 && clear(ix, iy) {
                    prop_assert!(!reachable_by_scan(&arm, rel), "cell ({ix}, {iy}) wrongly dropped");
                }
            }
        }
    }

    #[test]
    fn larger_margin_gives_a_subset(goal in (-0.5..0.5f64, 1.5..2.5f64), m1 in 0.0..0.2f64, extra in 0.0..0.2f64) {
        let arm = ArmParams::default();
        let target = single_target(Vec2::new(goal.0, goal.1));
        let wide = compute_corridor(&target, &arm, 0.05, m1, &[]).unwrap();
        if let Ok(narrow) = compute_corridor(&target, &arm, 0.05, m1 + extra, &[]) {
            prop_assert!(narrow.cells(0).iter().all(|&cell| wide.contains(0, cell)));
            prop_assert!(narrow.cells(0).len() <= wide.cells(0).len());
        }
    }
}

fn moving_obstacles() -> impl Strategy<Value = Vec<Obstacle>> {
    prop::collection::vec(
        ((-1.5..1.5f64, 0.5..2.0f64), 0.05..0.25f64, (-0.6..0.6f64, -0.6..0.6f64)).prop_map(|((x, y), radius, (vx, vy))| {
            Obstacle { center: Vec2::new(x, y), radius, velocity: Vec2::new(vx, vy) }
        }),
        1..4,
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Any plan the pipeline returns is safe by an independent check; an
    /// infeasibility report is an acceptable answer.
    #[test]
    fn returned_plans_are_safe(obstacles in moving_obstacles()) {
        let s = Scenario { obstacles, ..Scenario::default() };
        let Ok(a) = s.plan() else { return Ok(()) };
        let pts: Vec<Vec2> = a.plan.trajectory.points().collect();
        let dt = s.planner.dt;
        let grid = Grid { resolution: s.grid_resolution };
        for (i, &p) in pts.iter().enumerate() {
            let cell = Cell::new((p.x / grid.resolution).floor() as i64, (p.y / grid.resolution).floor() as i64);
            prop_assert!(a.corridor.contains(i, cell), "point {i} outside its set");
            let goal = a.target.point(i);
            prop_assert!(reachable_by_scan(&s.arm, [goal.x - p.x, goal.y - p.y]));
            let v = if i + 1 < pts.len() { (pts[i + 1] - p) * (1.0 / dt) } else { Vec2::ZERO };
            prop_assert!(v.norm() <= s.planner.v_max + 1e-9);
            let t = i as f64 * dt;
            for o in &s.obstacles {
                let c = o.center + o.velocity * t;
                let gap = closest_approach([p.x, p.y], [v.x, v.y], [c.x, c.y], [o.velocity.x, o.velocity.y], s.planner.ttc_threshold);
                prop_assert!(gap >= o.radius - 1e-9, "point {i} within {gap} of an obstacle");
            }
        }
    }
}
