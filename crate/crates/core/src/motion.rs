//! Text-to-motion on a lane map: crop, sector classification, placement,
//! destination planning, Bézier fitting, off-road refinement and tracking.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::math::{wrap_angle, Vec2, PI};
use crate::scene::{LaneMap, LaneNode, Pose2D, Pose6D, Trajectory, TrajectorySample};

pub const CROP_FRONT: f64 = 80.0;
pub const CROP_SIDE: f64 = 20.0;
pub const OFF_ROAD_THRESHOLD: f64 = 2.0;
pub const MAX_REFINE_ITERS: usize = 5;
pub const MAX_CURVATURE: f64 = 0.2;
pub const DEFAULT_DT: f64 = 0.1;
pub const CHASE_GAP: f64 = 10.0;
pub const LANE_WIDTH: f64 = 3.5;
pub const EGO_RADIUS: f64 = 3.5;
pub const TURN_OFFSET: (f64, f64) = (5.0, 30.0);
const PROBE_SPACING: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MotionError {
    #[error("no feasible placement: {0}")]
    NoFeasiblePlacement(String),
    #[error("no feasible destination: {0}")]
    NoFeasibleDestination(String),
    #[error("lane map has no centerline nodes")]
    EmptyMap,
    #[error("point coincides with the ego origin; sector undefined")]
    OriginSector,
    #[error("Bezier endpoints coincide")]
    CoincidentEndpoints,
    #[error("direction is not unit length")]
    NonUnitDirection,
    #[error("path has zero length")]
    DegeneratePath,
    #[error("{0} must be positive")]
    NonPositive(&'static str),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sector {
    Front,
    LeftFront,
    RightFront,
    Left,
    Right,
    Back,
}

impl Sector {
    pub fn name(self) -> &'static str {
        match self {
            Sector::Front => "front",
            Sector::LeftFront => "left_front",
            Sector::RightFront => "right_front",
            Sector::Left => "left",
            Sector::Right => "right",
            Sector::Back => "back",
        }
    }

    pub fn from_name(s: &str) -> Option<Sector> {
        [Sector::Front, Sector::LeftFront, Sector::RightFront, Sector::Left, Sector::Right, Sector::Back]
            .into_iter()
            .find(|x| x.name() == s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DrivingDirection {
    TowardEgo,
    AwayFromEgo,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MotionAction {
    Straightforward,
    TurnLeft,
    TurnRight,
    Park,
    Backward,
}

impl MotionAction {
    pub fn name(self) -> &'static str {
        match self {
            MotionAction::Straightforward => "straightforward",
            MotionAction::TurnLeft => "turn_left",
            MotionAction::TurnRight => "turn_right",
            MotionAction::Park => "park",
            MotionAction::Backward => "backward",
        }
    }

    pub fn from_name(s: &str) -> Option<MotionAction> {
        [
            MotionAction::Straightforward,
            MotionAction::TurnLeft,
            MotionAction::TurnRight,
            MotionAction::Park,
            MotionAction::Backward,
        ]
        .into_iter()
        .find(|x| x.name() == s)
    }
}

/// Placement and movement attributes of one added vehicle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MotionAttributes {
    pub distance_range: Option<(f64, f64)>,
    pub sector: Sector,
    /// `None` when the command does not say; unanchored placement then uses
    /// `AwayFromEgo`.
    pub driving_direction: Option<DrivingDirection>,
    pub crazy_mode: bool,
    pub speed: f64,
    pub action: MotionAction,
    pub duration: f64,
}

impl Default for MotionAttributes {
    fn default() -> Self {
        MotionAttributes {
            distance_range: None,
            sector: Sector::Front,
            driving_direction: None,
            crazy_mode: false,
            speed: 8.0,
            action: MotionAction::Straightforward,
            duration: 4.0,
        }
    }
}

impl MotionAttributes {
    pub fn effective_direction(&self) -> DrivingDirection {
        self.driving_direction.unwrap_or(DrivingDirection::AwayFromEgo)
    }
}

/// Keeps nodes whose midpoint lies in the ego-frame box `x ∈ [0, 80]`,
/// `|y| ≤ 20`.
pub fn crop_map(map: &LaneMap, ego: &Pose6D) -> LaneMap {
    let ego2 = Pose2D::new(ego.translation.x, ego.translation.y, ego.heading());
    LaneMap {
        nodes: map
            .nodes
            .iter()
            .filter(|n| {
                let p = ego2.to_local(n.midpoint());
                (0.0..=CROP_FRONT).contains(&p.x) && p.y.abs() <= CROP_SIDE
            })
            .copied()
            .collect(),
        frame: map.frame.clone(),
    }
}

/// Sector of an ego-frame point by bearing.
pub fn classify_sector(p: Vec2) -> Result<Sector, MotionError> {
    if p.x == 0.0 && p.y == 0.0 {
        return Err(MotionError::OriginSector);
    }
    let deg = p.y.atan2(p.x).to_degrees();
    let a = deg.abs();
    let left = deg > 0.0;
    Ok(if a <= 30.0 {
        Sector::Front
    } else if a <= 80.0 {
        if left { Sector::LeftFront } else { Sector::RightFront }
    } else if a <= 135.0 {
        if left { Sector::Left } else { Sector::Right }
    } else {
        Sector::Back
    })
}

/// A disc that new vehicles may not be placed in.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Occupancy {
    pub position: Vec2,
    pub radius: f64,
}

impl Occupancy {
    /// Occupied disc of a vehicle with the given body length.
    pub fn vehicle(position: Vec2, length: f64) -> Self {
        Occupancy { position, radius: length / 2.0 + 1.0 }
    }

    fn blocks(&self, p: Vec2, extra: f64) -> bool {
        self.position.distance(p) < self.radius + extra
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlacementQuery {
    pub attributes: MotionAttributes,
    pub occupied: Vec<Occupancy>,
    /// Half-length of the vehicle being placed, added to every exclusion radius.
    pub self_radius: f64,
    pub ego: Pose2D,
    pub seed: u64,
}

impl PlacementQuery {
    pub fn new(attributes: MotionAttributes, seed: u64) -> Self {
        PlacementQuery { attributes, occupied: Vec::new(), self_radius: 0.0, ego: Pose2D::new(0.0, 0.0, 0.0), seed }
    }
}

fn is_toward(ego: Vec2, node: &LaneNode) -> bool {
    node.direction().dot(ego - node.midpoint()) > 0.0
}

fn seeded_pick<T: Copy>(items: &[T], seed: u64) -> Option<T> {
    if items.is_empty() {
        return None;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Some(items[rng.gen_range(0..items.len())])
}

fn node_pose(n: &LaneNode) -> Pose2D {
    let m = n.midpoint();
    Pose2D::new(m.x, m.y, wrap_angle(n.heading()))
}

/// Lane map as driven by a vehicle: reversed in crazy mode.
pub fn driving_map(map: &LaneMap, crazy_mode: bool) -> LaneMap {
    if crazy_mode {
        map.reversed()
    } else {
        map.clone()
    }
}

/// Picks a seeded centerline-node midpoint satisfying the distance, sector,
/// direction and occupancy filters. `map` should already be cropped.
pub fn place_vehicle(query: &PlacementQuery, map: &LaneMap) -> Result<Pose2D, MotionError> {
    let a = &query.attributes;
    let map = driving_map(map, a.crazy_mode);
    if map.centerlines().next().is_none() {
        return Err(MotionError::EmptyMap);
    }
    let ego = query.ego.position();
    let want_toward = a.effective_direction() == DrivingDirection::TowardEgo;
    let candidates: Vec<LaneNode> = map
        .centerlines()
        .filter(|n| {
            let local = query.ego.to_local(n.midpoint());
            let d = local.norm();
            if let Some((lo, hi)) = a.distance_range {
                if d < lo || d > hi {
                    return false;
                }
            }
            classify_sector(local).map_or(false, |s| s == a.sector)
                && is_toward(ego, n) == want_toward
                && !query.occupied.iter().any(|o| o.blocks(n.midpoint(), query.self_radius))
        })
        .copied()
        .collect();
    seeded_pick(&candidates, query.seed).map(|n| node_pose(&n)).ok_or_else(|| {
        MotionError::NoFeasiblePlacement(format!(
            "no free {} lane in sector {}{}",
            if want_toward { "oncoming" } else { "outgoing" },
            a.sector.name(),
            a.distance_range.map_or(String::new(), |(lo, hi)| format!(" within {lo}-{hi} m")),
        ))
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    Front,
    Behind,
    Left,
    Right,
}

impl Relation {
    pub fn name(self) -> &'static str {
        match self {
            Relation::Front => "front",
            Relation::Behind => "behind",
            Relation::Left => "left",
            Relation::Right => "right",
        }
    }

    pub fn from_name(s: &str) -> Option<Relation> {
        [Relation::Front, Relation::Behind, Relation::Left, Relation::Right].into_iter().find(|r| r.name() == s)
    }
}

/// Places a vehicle next to `anchor`: `CHASE_GAP` ahead or behind, or one
/// lane width to the side, then snaps to the nearest free centerline node.
/// Front/behind placements keep the anchor's travel direction unless the
/// attributes name one.
pub fn place_relative(
    anchor: Pose2D,
    relation: Relation,
    query: &PlacementQuery,
    map: &LaneMap,
) -> Result<Pose2D, MotionError> {
    let a = &query.attributes;
    let map = driving_map(map, a.crazy_mode);
    let fwd = anchor.direction();
    let left = fwd.rotated(PI / 2.0);
    let target = anchor.position()
        + match relation {
            Relation::Front => fwd * CHASE_GAP,
            Relation::Behind => fwd * -CHASE_GAP,
            Relation::Left => left * LANE_WIDTH,
            Relation::Right => left * -LANE_WIDTH,
        };
    let ego = query.ego.position();
    let mut best: Option<(LaneNode, f64)> = None;
    for n in map.centerlines() {
        let ok_dir = match a.driving_direction {
            Some(d) => is_toward(ego, n) == (d == DrivingDirection::TowardEgo),
            None => match relation {
                Relation::Front | Relation::Behind => n.direction().dot(fwd) > 0.5,
                Relation::Left | Relation::Right => true,
            },
        };
        if !ok_dir || query.occupied.iter().any(|o| o.blocks(n.midpoint(), query.self_radius)) {
            continue;
        }
        let d = n.midpoint().distance(target);
        if best.map_or(true, |(_, bd)| d < bd) {
            best = Some((*n, d));
        }
    }
    match best {
        Some((n, d)) if d <= LANE_WIDTH => Ok(node_pose(&n)),
        _ => Err(MotionError::NoFeasiblePlacement(format!(
            "no free lane {} the referenced vehicle",
            match relation {
                Relation::Front => "in front of",
                Relation::Behind => "behind",
                Relation::Left => "left of",
                Relation::Right => "right of",
            }
        ))),
    }
}

fn nearest_node(map: &LaneMap, p: Vec2, aligned_with: Option<Vec2>) -> Option<LaneNode> {
    let pick = |filter: &dyn Fn(&LaneNode) -> bool| {
        map.centerlines().filter(|n| filter(n)).fold(None::<(LaneNode, f64)>, |best, n| {
            let d = n.midpoint().distance(p);
            match best {
                Some((_, bd)) if bd <= d => best,
                _ => Some((*n, d)),
            }
        })
    };
    let aligned = aligned_with.and_then(|dir| pick(&|n: &LaneNode| n.direction().dot(dir) > 0.5));
    aligned.or_else(|| pick(&|_: &LaneNode| true)).map(|(n, _)| n)
}

/// Destination pose for `start` under `attrs`. `map` is the driving map
/// (already reversed for crazy mode).
pub fn plan_destination(
    start: Pose2D,
    attrs: &MotionAttributes,
    map: &LaneMap,
    seed: u64,
) -> Result<Pose2D, MotionError> {
    if map.centerlines().next().is_none() {
        return Err(MotionError::EmptyMap);
    }
    let dir = start.direction();
    let travel = attrs.speed * attrs.duration;
    match attrs.action {
        MotionAction::Park => Ok(start),
        MotionAction::Straightforward | MotionAction::Backward => {
            let sign = if attrs.action == MotionAction::Backward { -1.0 } else { 1.0 };
            let raw = start.position() + dir * (sign * travel);
            let n = nearest_node(map, raw, Some(dir)).ok_or(MotionError::EmptyMap)?;
            Ok(node_pose(&n))
        }
        MotionAction::TurnLeft | MotionAction::TurnRight => {
            let left = attrs.action == MotionAction::TurnLeft;
            let candidates: Vec<LaneNode> = map
                .centerlines()
                .filter(|n| {
                    let local = start.to_local(n.midpoint());
                    let lateral = if left { local.y } else { -local.y };
                    let cross = dir.cross(n.direction());
                    let turning = if left { cross > 0.5 } else { cross < -0.5 };
                    local.x > 0.0
                        && (TURN_OFFSET.0..=TURN_OFFSET.1).contains(&lateral)
                        && n.direction().dot(n.midpoint() - start.position()) > 0.0
                        && turning
                })
                .copied()
                .collect();
            seeded_pick(&candidates, seed).map(|n| node_pose(&n)).ok_or_else(|| {
                MotionError::NoFeasibleDestination(format!(
                    "no lane to the {} within {}-{} m",
                    if left { "left" } else { "right" },
                    TURN_OFFSET.0,
                    TURN_OFFSET.1
                ))
            })
        }
    }
}

/// Cubic Bézier segment.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BezierSegment {
    pub p0: Vec2,
    pub p1: Vec2,
    pub p2: Vec2,
    pub p3: Vec2,
}

impl BezierSegment {
    pub fn eval(&self, t: f64) -> Vec2 {
        let s = 1.0 - t;
        self.p0 * (s * s * s) + self.p1 * (3.0 * s * s * t) + self.p2 * (3.0 * s * t * t) + self.p3 * (t * t * t)
    }

    pub fn derivative(&self, t: f64) -> Vec2 {
        let s = 1.0 - t;
        (self.p1 - self.p0) * (3.0 * s * s) + (self.p2 - self.p1) * (6.0 * s * t) + (self.p3 - self.p2) * (3.0 * t * t)
    }

    pub fn start_direction(&self) -> Vec2 {
        self.derivative(0.0).normalized()
    }

    pub fn end_direction(&self) -> Vec2 {
        self.derivative(1.0).normalized()
    }

    /// Upper bound on arc length: the control polygon length.
    pub fn hull_length(&self) -> f64 {
        self.p0.distance(self.p1) + self.p1.distance(self.p2) + self.p2.distance(self.p3)
    }

    fn probes(&self) -> impl Iterator<Item = Vec2> + '_ {
        let n = ((self.hull_length() / PROBE_SPACING).ceil() as usize).max(16);
        (0..=n).map(move |i| self.eval(i as f64 / n as f64))
    }
}

fn is_unit(v: Vec2) -> bool {
    (v.norm() - 1.0).abs() <= 1e-9
}

/// Cubic with tangent magnitude `L/3`, `L = ‖p_end − p_start‖`.
pub fn solve_bezier(p_start: Vec2, dir_start: Vec2, p_end: Vec2, dir_end: Vec2) -> Result<BezierSegment, MotionError> {
    if !is_unit(dir_start) || !is_unit(dir_end) {
        return Err(MotionError::NonUnitDirection);
    }
    let l = p_start.distance(p_end);
    if !(l > 0.0) {
        return Err(MotionError::CoincidentEndpoints);
    }
    Ok(BezierSegment {
        p0: p_start,
        p1: p_start + dir_start * (l / 3.0),
        p2: p_end - dir_end * (l / 3.0),
        p3: p_end,
    })
}

fn off_road_distance(map: &LaneMap, p: Vec2) -> f64 {
    map.nearest_midpoint(p).map_or(f64::INFINITY, |(_, d)| d)
}

/// Largest distance from a probe point on the segment to any node midpoint.
pub fn segment_off_road(seg: &BezierSegment, map: &LaneMap) -> f64 {
    seg.probes().map(|p| off_road_distance(map, p)).fold(0.0, f64::max)
}

/// Distance from `B(0.5)` to the nearest node midpoint.
pub fn midpoint_off_road(seg: &BezierSegment, map: &LaneMap) -> f64 {
    off_road_distance(map, seg.eval(0.5))
}

#[derive(Clone, Debug, PartialEq)]
pub struct RefineReport {
    pub segments: Vec<BezierSegment>,
    pub iterations: usize,
    /// Segments still farther than the threshold from the road.
    pub off_road: usize,
}

/// Splits off-road segments at a node midpoint: the one nearest `B(0.5)` or
/// one near the worst probe point, whichever keeps the children closest to
/// the road.
///
/// A segment is off-road when any probe point is farther than
/// [`OFF_ROAD_THRESHOLD`] from every node midpoint. A split is kept only if
/// the children's probe distance does not grow and the worst midpoint distance
/// over all segments does not grow past `max(threshold, current worst)`, so the
/// off-road excess of both never increases.
pub fn refine_on_road(segments: &[BezierSegment], map: &LaneMap, max_iters: usize) -> RefineReport {
    let mut segs = segments.to_vec();
    let mut iterations = 0;
    while iterations < max_iters {
        let worst_mid = segs.iter().map(|s| midpoint_off_road(s, map)).fold(OFF_ROAD_THRESHOLD, f64::max);
        let mut next = Vec::with_capacity(segs.len() * 2);
        let mut changed = false;
        for s in &segs {
            let parent = segment_off_road(s, map);
            if parent <= OFF_ROAD_THRESHOLD {
                next.push(*s);
                continue;
            }
            let accepted = split_candidates(s, map)
                .into_iter()
                .filter_map(|m| {
                    let [a, b] = split_at(s, m)?;
                    let child = segment_off_road(&a, map).max(segment_off_road(&b, map));
                    let mids = midpoint_off_road(&a, map).max(midpoint_off_road(&b, map));
                    (child <= parent && mids <= worst_mid).then_some((child, [a, b]))
                })
                .fold(None::<(f64, [BezierSegment; 2])>, |best, c| match best {
                    Some(b) if b.0 <= c.0 => Some(b),
                    _ => Some(c),
                })
                .map(|(_, split)| split);
            match accepted {
                Some([a, b]) => {
                    next.push(a);
                    next.push(b);
                    changed = true;
                }
                None => next.push(*s),
            }
        }
        if !changed {
            break;
        }
        segs = next;
        iterations += 1;
    }
    let off_road = segs.iter().filter(|s| segment_off_road(s, map) > OFF_ROAD_THRESHOLD).count();
    RefineReport { segments: segs, iterations, off_road }
}

/// Node midpoints a segment may be split at: the one nearest `B(0.5)` and
/// every midpoint within a lane width of the one nearest the worst probe.
fn split_candidates(s: &BezierSegment, map: &LaneMap) -> Vec<Vec2> {
    let worst = s
        .probes()
        .map(|p| (p, off_road_distance(map, p)))
        .fold((s.eval(0.5), f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });
    let mut out = Vec::new();
    if let Some((i, _)) = map.nearest_midpoint(s.eval(0.5)) {
        out.push(map.nodes[i].midpoint());
    }
    let reach = worst.1 + LANE_WIDTH;
    out.extend(map.centerlines().map(LaneNode::midpoint).filter(|m| m.distance(worst.0) <= reach));
    out
}

/// Splits `s` at `m` with the chord-average direction there.
fn split_at(s: &BezierSegment, m: Vec2) -> Option<[BezierSegment; 2]> {
    if m == s.p0 || m == s.p3 {
        return None;
    }
    let dm = ((m - s.p0).normalized() + (s.p3 - m).normalized()).normalized();
    if !dm.is_finite() || !is_unit(dm) {
        return None;
    }
    let a = solve_bezier(s.p0, s.start_direction(), m, dm).ok()?;
    let b = solve_bezier(m, dm, s.p3, s.end_direction()).ok()?;
    Some([a, b])
}

const DENSE_PER_SEGMENT: usize = 256;

struct DensePoint {
    s: f64,
    p: Vec2,
    tangent: Vec2,
}

fn densify(segments: &[BezierSegment]) -> Vec<DensePoint> {
    let mut out: Vec<DensePoint> = Vec::with_capacity(segments.len() * DENSE_PER_SEGMENT + 1);
    for (k, seg) in segments.iter().enumerate() {
        let first = if k == 0 { 0 } else { 1 };
        for i in first..=DENSE_PER_SEGMENT {
            let t = i as f64 / DENSE_PER_SEGMENT as f64;
            let p = seg.eval(t);
            let s = out.last().map_or(0.0, |q| q.s + q.p.distance(p));
            out.push(DensePoint { s, p, tangent: seg.derivative(t) });
        }
    }
    out
}

/// Resamples the path at arc-length spacing `L/n` with `n = round(L/(speed·dt))`,
/// assigns tangent headings (reversed when `reverse`), and limits the heading
/// change per step to `max_curvature · spacing`.
pub fn track_trajectory(
    segments: &[BezierSegment],
    speed: f64,
    dt: f64,
    max_curvature: f64,
    reverse: bool,
) -> Result<Trajectory, MotionError> {
    if !(speed > 0.0) {
        return Err(MotionError::NonPositive("speed"));
    }
    if !(dt > 0.0) {
        return Err(MotionError::NonPositive("dt"));
    }
    let dense = densify(segments);
    let total = dense.last().map_or(0.0, |d| d.s);
    if !(total > 0.0) {
        return Err(MotionError::DegeneratePath);
    }
    let n = ((total / (speed * dt)).round() as usize).max(1);
    let spacing = total / n as f64;
    let max_turn = max_curvature * spacing;

    let mut samples = Vec::with_capacity(n + 1);
    let mut j = 0;
    let mut prev_heading: Option<f64> = None;
    for i in 0..=n {
        let s = if i == n { total } else { i as f64 * spacing };
        while j + 2 < dense.len() && dense[j + 1].s < s {
            j += 1;
        }
        let (a, b) = (&dense[j], &dense[(j + 1).min(dense.len() - 1)]);
        let u = if b.s > a.s { ((s - a.s) / (b.s - a.s)).clamp(0.0, 1.0) } else { 0.0 };
        let p = if i == n { dense[dense.len() - 1].p } else { a.p.lerp(b.p, u) };
        let mut tangent = a.tangent.lerp(b.tangent, u);
        if reverse {
            tangent = -tangent;
        }
        let raw = tangent.angle();
        let heading = match prev_heading {
            None => wrap_angle(raw),
            Some(h) => wrap_angle(h + crate::math::angle_diff(h, raw).clamp(-max_turn, max_turn)),
        };
        prev_heading = Some(heading);
        samples.push(TrajectorySample { t: i as f64 * dt, x: p.x, y: p.y, heading });
    }
    Ok(Trajectory { samples, dt })
}

/// Constant pose held for `duration`.
pub fn park_trajectory(pose: Pose2D, duration: f64, dt: f64) -> Result<Trajectory, MotionError> {
    if !(dt > 0.0) {
        return Err(MotionError::NonPositive("dt"));
    }
    let n = ((duration / dt).round() as usize).max(1);
    Ok(Trajectory::stationary(pose, n + 1, dt))
}

/// Fraction of samples within [`OFF_ROAD_THRESHOLD`] of a node midpoint.
pub fn within_road_rate(traj: &Trajectory, map: &LaneMap) -> f64 {
    if traj.samples.is_empty() {
        return 0.0;
    }
    let on = traj
        .samples
        .iter()
        .filter(|s| off_road_distance(map, Vec2::new(s.x, s.y)) <= OFF_ROAD_THRESHOLD)
        .count();
    on as f64 / traj.samples.len() as f64
}

/// Planned motion of one vehicle.
#[derive(Clone, Debug, PartialEq)]
pub struct MotionPlan {
    pub destination: Pose2D,
    pub segments: Vec<BezierSegment>,
    pub trajectory: Trajectory,
    pub off_road_segments: usize,
}

/// Destination, curve fit, refinement and tracking for a vehicle starting at
/// `start`. `map` is the full (uncropped) lane map.
pub fn generate_motion(
    start: Pose2D,
    attrs: &MotionAttributes,
    map: &LaneMap,
    seed: u64,
    dt: f64,
) -> Result<MotionPlan, MotionError> {
    let driving = driving_map(map, attrs.crazy_mode);
    let destination = plan_destination(start, attrs, &driving, seed)?;
    let still = attrs.action == MotionAction::Park
        || attrs.speed <= 0.0
        || destination.position().distance(start.position()) < 1e-9;
    if still {
        return Ok(MotionPlan {
            destination: start,
            segments: Vec::new(),
            trajectory: park_trajectory(start, attrs.duration, dt)?,
            off_road_segments: 0,
        });
    }
    let reverse = attrs.action == MotionAction::Backward;
    let sign = if reverse { -1.0 } else { 1.0 };
    let seg = solve_bezier(
        start.position(),
        start.direction() * sign,
        destination.position(),
        destination.direction() * sign,
    )?;
    let refined = refine_on_road(&[seg], map, MAX_REFINE_ITERS);
    let trajectory = track_trajectory(&refined.segments, attrs.speed, dt, MAX_CURVATURE, reverse)?;
    Ok(MotionPlan { destination, segments: refined.segments, trajectory, off_road_segments: refined.off_road })
}
