//! Project-manager planning, dispatch to the editing agents and transactional
//! multi-round sessions.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use num_traits::Float;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::assets::{color_by_name, color_name, match_asset, recolor, AssetBank, AssetError, AssetRequest};
use crate::camera::ViewDelta;
use crate::dsl::attributes::merge_modifiers;
use crate::dsl::{extract_motion_attributes, parse_command, resolve_reference, DslError};
use crate::image::RgbImage;
use crate::math::{Vec2, Vec3};
use crate::motion::{
    classify_sector, crop_map, generate_motion, place_relative, place_vehicle, MotionError, Occupancy, PlacementQuery,
    Relation, Sector, EGO_RADIUS,
};
use crate::render::{FrameRenderer, RenderError};
use crate::scene::{
    ego_frame, validate_scene, EditAction, EditConfig, PlacedVehicle, Pose2D, SceneError, SceneState, Trajectory,
    TrajectorySample, Violation,
};

pub const JAM_DISTANCES: [f64; 3] = [10.0, 18.0, 26.0];
pub const JAM_SPEED: f64 = 0.5;
/// How far a lane node may sit from a jam slot's nominal distance.
pub const JAM_SLOT_TOLERANCE: f64 = 1.5;
pub const ABSTRACT_CATALOG: &[&str] = &["traffic jam"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentRole {
    ProjectManager,
    ViewAdjust,
    BackgroundRender,
    VehicleDelete,
    AssetManage,
    VehicleMotion,
    ForegroundRender,
}

impl AgentRole {
    pub const ALL: [AgentRole; 7] = [
        AgentRole::ProjectManager,
        AgentRole::ViewAdjust,
        AgentRole::BackgroundRender,
        AgentRole::VehicleDelete,
        AgentRole::AssetManage,
        AgentRole::VehicleMotion,
        AgentRole::ForegroundRender,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AgentRole::ProjectManager => "project_manager",
            AgentRole::ViewAdjust => "view_adjust",
            AgentRole::BackgroundRender => "background_render",
            AgentRole::VehicleDelete => "vehicle_delete",
            AgentRole::AssetManage => "asset_manage",
            AgentRole::VehicleMotion => "vehicle_motion",
            AgentRole::ForegroundRender => "foreground_render",
        }
    }

    /// Operation each role runs.
    pub fn handler(self) -> &'static str {
        match self {
            AgentRole::ProjectManager => "plan_round",
            AgentRole::ViewAdjust => "apply_view_delta",
            AgentRole::BackgroundRender => "render_background",
            AgentRole::VehicleDelete => "delete_vehicles",
            AgentRole::AssetManage => "match_asset",
            AgentRole::VehicleMotion => "generate_motion",
            AgentRole::ForegroundRender => "render_foreground",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OrchestratorError {
    #[error("parse failed: {0}")]
    Parse(#[from] DslError),
    #[error("unsupported abstraction '{0}'; known: traffic jam")]
    UnsupportedAbstraction(String),
    #[error("work order has a dependency cycle")]
    Cyclic,
    #[error("{role} failed{at}: {message}", role = .role.name(), at = config_label(*.index))]
    Role { role: AgentRole, index: Option<usize>, config: Option<EditConfig>, message: String },
}

fn config_label(index: Option<usize>) -> String {
    index.map_or_else(String::new, |i| format!(" on config {i}"))
}

impl OrchestratorError {
    fn role(role: AgentRole, index: Option<usize>, config: Option<&EditConfig>, e: impl ToString) -> Self {
        OrchestratorError::Role { role, index, config: config.cloned(), message: e.to_string() }
    }
}

/// One unit of work: a role applied to a config (or to the whole round).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub role: AgentRole,
    /// Index into [`WorkOrder::configs`].
    pub config: Option<usize>,
}

/// Dispatch plan of one round.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct WorkOrder {
    pub round: u32,
    /// Configs after abstract expansion, in execution order.
    pub configs: Vec<EditConfig>,
    pub steps: Vec<Step>,
    /// `(before, after)` pairs of step indices.
    pub edges: Vec<(usize, usize)>,
    pub warnings: Vec<String>,
}

impl WorkOrder {
    pub fn configs_by_role(&self) -> BTreeMap<AgentRole, Vec<EditConfig>> {
        let mut out: BTreeMap<AgentRole, Vec<EditConfig>> = BTreeMap::new();
        for s in &self.steps {
            let e = out.entry(s.role).or_default();
            if let Some(i) = s.config {
                e.push(self.configs[i].clone());
            }
        }
        out
    }

    pub fn roles(&self) -> Vec<AgentRole> {
        let mut r: Vec<AgentRole> = self.steps.iter().map(|s| s.role).collect();
        r.sort();
        r.dedup();
        r
    }

    pub fn is_empty(&self) -> bool {
        self.configs.is_empty()
    }

    /// Step indices in a dependency-respecting order.
    pub fn topological_order(&self) -> Result<Vec<usize>, OrchestratorError> {
        let n = self.steps.len();
        let mut indegree = alloc::vec![0usize; n];
        for &(a, b) in &self.edges {
            if a >= n || b >= n {
                return Err(OrchestratorError::Cyclic);
            }
            indegree[b] += 1;
        }
        let mut order = Vec::with_capacity(n);
        let mut ready: Vec<usize> = (0..n).filter(|i| indegree[*i] == 0).collect();
        while let Some(i) = ready.first().copied() {
            ready.remove(0);
            order.push(i);
            for &(a, b) in &self.edges {
                if a == i {
                    indegree[b] -= 1;
                    if indegree[b] == 0 {
                        let pos = ready.partition_point(|x| *x < b);
                        ready.insert(pos, b);
                    }
                }
            }
        }
        if order.len() != n {
            return Err(OrchestratorError::Cyclic);
        }
        Ok(order)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Start,
    End,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub step: usize,
    pub role: AgentRole,
    pub phase: Phase,
}

/// Outcome of a successful round.
#[derive(Clone, Debug, PartialEq)]
pub struct RoundResult {
    pub round: u32,
    /// Executed configs with their resolved parameters.
    pub configs: Vec<EditConfig>,
    pub configs_by_role: BTreeMap<AgentRole, Vec<EditConfig>>,
    pub trace: Vec<TraceEvent>,
    pub frames: Vec<RgbImage>,
    pub warnings: Vec<String>,
    pub violations: Vec<Violation>,
}

/// An editing session: the scene, its asset bank and the round counter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub id: String,
    pub state: SceneState,
    pub bank: AssetBank,
    pub seed: u64,
    /// Number of committed rounds.
    pub round_counter: u32,
    /// Commands of the committed rounds, for replay.
    pub log: Vec<String>,
}

impl Session {
    pub fn new(id: &str, state: SceneState, bank: AssetBank, seed: u64) -> Self {
        Session { id: id.to_string(), state, bank, seed, round_counter: 0, log: Vec::new() }
    }

    /// Parses, plans and executes one command.
    pub fn command<R: FrameRenderer + ?Sized>(&mut self, text: &str, renderer: &R) -> Result<RoundResult, OrchestratorError> {
        let order = plan_round(self, text)?;
        let result = execute_round(self, &order, renderer)?;
        self.log.push(text.to_string());
        Ok(result)
    }

    /// Executes configs obtained elsewhere (e.g. from a remote interpreter).
    pub fn apply_configs<R: FrameRenderer + ?Sized>(
        &mut self,
        configs: Vec<EditConfig>,
        label: &str,
        renderer: &R,
    ) -> Result<RoundResult, OrchestratorError> {
        let order = plan_configs(self, configs)?;
        let result = execute_round(self, &order, renderer)?;
        self.log.push(label.to_string());
        Ok(result)
    }
}

/// Deterministic seed for config `index` of `round`.
pub fn config_seed(session_seed: u64, round: u32, index: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(session_seed);
    rng.set_stream(((round as u64) << 32) | index as u64);
    rng.next_u64()
}

/// Parses `text` and builds the round's work order.
pub fn plan_round(session: &Session, text: &str) -> Result<WorkOrder, OrchestratorError> {
    let configs = parse_command(text, session.round_counter)?;
    plan_configs(session, configs)
}

/// Expands abstract configs and dispatches every config to its roles.
pub fn plan_configs(session: &Session, configs: Vec<EditConfig>) -> Result<WorkOrder, OrchestratorError> {
    let round = session.round_counter;
    let mut expanded = Vec::new();
    let mut warnings = Vec::new();
    for (i, cfg) in configs.into_iter().enumerate() {
        let mut cfg = cfg;
        cfg.round = round;
        if cfg.action == EditAction::AbstractExpand {
            let adds = expand_abstract(&cfg, &session.state, &session.bank, config_seed(session.seed, round, i))?;
            if adds.is_empty() {
                warnings.push(format!("'{}' expanded to nothing: no free slot", cfg.param_str("phrase").unwrap_or("")));
            }
            expanded.extend(adds);
        } else {
            expanded.push(cfg);
        }
    }
    Ok(dispatch(round, expanded, warnings))
}

fn dispatch(round: u32, configs: Vec<EditConfig>, warnings: Vec<String>) -> WorkOrder {
    let mut order = WorkOrder { round, configs, warnings, ..Default::default() };
    if order.configs.is_empty() {
        return order;
    }
    let push = |order: &mut WorkOrder, role, config| {
        order.steps.push(Step { role, config });
        order.steps.len() - 1
    };
    let pm = push(&mut order, AgentRole::ProjectManager, None);
    let mut prev = pm;
    let mut view_steps = Vec::new();
    let mut bg_inputs = Vec::new();
    let mut fg_inputs = Vec::new();
    for i in 0..order.configs.len() {
        let roles: &[AgentRole] = match order.configs[i].action {
            EditAction::Delete => &[AgentRole::VehicleDelete],
            EditAction::Add => &[AgentRole::AssetManage, AgentRole::VehicleMotion],
            EditAction::Revise => &[AgentRole::AssetManage, AgentRole::VehicleMotion],
            EditAction::ViewChange => &[AgentRole::ViewAdjust],
            EditAction::AbstractExpand => &[],
        };
        for role in roles {
            let s = push(&mut order, *role, Some(i));
            order.edges.push((prev, s));
            prev = s;
            match role {
                AgentRole::ViewAdjust => view_steps.push(s),
                AgentRole::VehicleDelete => bg_inputs.push(s),
                _ => fg_inputs.push(s),
            }
        }
    }
    let bg = push(&mut order, AgentRole::BackgroundRender, None);
    let fg = push(&mut order, AgentRole::ForegroundRender, None);
    for &v in &view_steps {
        order.edges.push((v, bg));
        order.edges.push((v, fg));
    }
    for &d in &bg_inputs {
        order.edges.push((d, bg));
    }
    for &a in &fg_inputs {
        order.edges.push((a, fg));
    }
    order.edges.push((prev, bg));
    order.edges.push((bg, fg));
    order.edges.sort();
    order.edges.dedup();
    order
}

/// Expands an abstract config into concrete add configs.
///
/// "traffic jam" fills every free slot `JAM_DISTANCES` ahead in each lane
/// that runs away from the ego, with slow vehicles of seeded types.
pub fn expand_abstract(
    cfg: &EditConfig,
    state: &SceneState,
    bank: &AssetBank,
    seed: u64,
) -> Result<Vec<EditConfig>, OrchestratorError> {
    let phrase = cfg.param_str("phrase").unwrap_or("").to_string();
    if !ABSTRACT_CATALOG.contains(&phrase.as_str()) {
        return Err(OrchestratorError::UnsupportedAbstraction(phrase));
    }
    let slots = jam_slots(state, bank).map_err(|e| OrchestratorError::role(AgentRole::ProjectManager, None, Some(cfg), e))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let types: Vec<String> = bank.records.iter().map(|r| r.asset_type.clone()).collect();
    Ok(slots
        .into_iter()
        .map(|p| {
            let mut c = EditConfig::new(EditAction::Add, cfg.round)
                .with("modifiers", json!(["front", "straight"]))
                .with("speed_mps", JAM_SPEED)
                .with("position", json!([p.x, p.y, p.heading]));
            if !types.is_empty() {
                c = c.with("type", types[rng.gen_range(0..types.len())].as_str());
            }
            c
        })
        .collect())
}

fn ego_pose2d(state: &SceneState) -> Result<Pose2D, SceneError> {
    let p = ego_frame(state, state.ego.start_time())?;
    Ok(Pose2D::new(p.translation.x, p.translation.y, p.heading()))
}

fn occupancy(state: &SceneState, bank: &AssetBank, skip: Option<&str>) -> Vec<Occupancy> {
    state
        .vehicles
        .iter()
        .filter(|v| Some(v.instance_id.as_str()) != skip)
        .map(|v| Occupancy::vehicle(v.pose.position(), bank.get(&v.asset_id).map_or(4.5, |a| a.length())))
        .collect()
}

/// Free jam slots: for each lane running away from the ego in its front
/// sector, the node nearest each of `JAM_DISTANCES` ahead.
pub fn jam_slots(state: &SceneState, bank: &AssetBank) -> Result<Vec<Pose2D>, SceneError> {
    let ego = ego_pose2d(state)?;
    let map = crop_map(&state.lane_map, &ego_frame(state, state.ego.start_time())?);
    let mut lanes: BTreeMap<i64, Vec<(Vec2, Pose2D)>> = BTreeMap::new();
    for n in map.centerlines() {
        let local = ego.to_local(n.midpoint());
        let along = n.direction().dot(ego.direction());
        if along < 0.9 || classify_sector(local).ok() != Some(Sector::Front) {
            continue;
        }
        let key = (local.y * 4.0).round() as i64;
        let m = n.midpoint();
        lanes.entry(key).or_default().push((local, Pose2D::new(m.x, m.y, crate::math::wrap_angle(n.heading()))));
    }
    let occupied = occupancy(state, bank, None);
    let self_radius = bank.records.iter().map(|r| r.length()).fold(0.0, f64::max) / 2.0;
    let mut out = Vec::new();
    for nodes in lanes.values() {
        for d in JAM_DISTANCES {
            let best = nodes
                .iter()
                .filter(|(l, _)| (l.x - d).abs() <= JAM_SLOT_TOLERANCE)
                .min_by(|a, b| (a.0.x - d).abs().total_cmp(&(b.0.x - d).abs()).then(a.0.x.total_cmp(&b.0.x)));
            if let Some((_, p)) = best {
                if !occupied.iter().any(|o| o.position.distance(p.position()) < o.radius + self_radius) {
                    out.push(*p);
                }
            }
        }
    }
    Ok(out)
}

/// Executes `order` against a copy of the session state and commits only if
/// every step succeeds.
pub fn execute_round<R: FrameRenderer + ?Sized>(
    session: &mut Session,
    order: &WorkOrder,
    renderer: &R,
) -> Result<RoundResult, OrchestratorError> {
    if order.is_empty() {
        // an advisory round changes nothing but still counts as processed
        session.round_counter += 1;
        return Ok(RoundResult {
            round: order.round,
            configs: Vec::new(),
            configs_by_role: BTreeMap::new(),
            trace: Vec::new(),
            frames: Vec::new(),
            warnings: order.warnings.clone(),
            violations: Vec::new(),
        });
    }
    let topo = order.topological_order()?;
    let mut ctx = RoundContext {
        state: session.state.clone(),
        bank: &session.bank,
        seed: session.seed,
        round: order.round,
        configs: order.configs.clone(),
        warnings: order.warnings.clone(),
    };
    let mut trace = Vec::new();
    let mut frames = Vec::new();
    for step_index in topo {
        let step = &order.steps[step_index];
        trace.push(TraceEvent { step: step_index, role: step.role, phase: Phase::Start });
        match (step.role, step.config) {
            (AgentRole::ProjectManager, _) => {}
            (AgentRole::BackgroundRender, _) => {}
            (AgentRole::ForegroundRender, _) => {
                let violations = validate_scene(&ctx.state);
                if !violations.is_empty() {
                    let msg = violations.iter().map(|v| format!("{}: {}", v.field, v.rule)).collect::<Vec<_>>().join("; ");
                    return Err(OrchestratorError::role(AgentRole::ProjectManager, None, None, msg));
                }
                frames = renderer
                    .render(&ctx.state, ctx.bank)
                    .map_err(|e: RenderError| OrchestratorError::role(AgentRole::ForegroundRender, None, None, e))?;
            }
            (role, Some(i)) => ctx.run(role, i)?,
            (role, None) => return Err(OrchestratorError::role(role, None, None, "step has no config")),
        }
        trace.push(TraceEvent { step: step_index, role: step.role, phase: Phase::End });
    }
    let by_role = WorkOrder { configs: ctx.configs.clone(), ..order.clone() }.configs_by_role();
    let mut state = ctx.state;
    state.history.extend(ctx.configs.iter().cloned());
    let violations = validate_scene(&state);
    let result = RoundResult {
        round: order.round,
        configs: ctx.configs,
        configs_by_role: by_role,
        trace,
        frames,
        warnings: ctx.warnings,
        violations,
    };
    session.state = state;
    session.round_counter += 1;
    Ok(result)
}

struct RoundContext<'a> {
    state: SceneState,
    bank: &'a AssetBank,
    seed: u64,
    round: u32,
    configs: Vec<EditConfig>,
    warnings: Vec<String>,
}

fn param_err(key: &str) -> DslError {
    DslError::BadParameter(key.to_string())
}

impl RoundContext<'_> {
    fn run(&mut self, role: AgentRole, i: usize) -> Result<(), OrchestratorError> {
        let cfg = self.configs[i].clone();
        let fail = |e: &dyn ToString| OrchestratorError::role(role, Some(i), Some(&cfg), e.to_string());
        let out = match (role, cfg.action) {
            (AgentRole::VehicleDelete, _) => self.delete(i).map_err(|e| fail(&e)),
            (AgentRole::AssetManage, EditAction::Add) => self.choose_asset(i).map_err(|e| fail(&e)),
            (AgentRole::AssetManage, EditAction::Revise) => self.revise_asset(i).map_err(|e| fail(&e)),
            (AgentRole::VehicleMotion, EditAction::Add) => self.add_vehicles(i).map_err(|e| fail(&e)),
            (AgentRole::VehicleMotion, EditAction::Revise) => self.revise_motion(i).map_err(|e| fail(&e)),
            (AgentRole::ViewAdjust, _) => self.view(i).map_err(|e| fail(&e)),
            _ => Err(fail(&"role cannot handle this action")),
        };
        out
    }

    fn resolve(&self, expr: &str) -> Result<String, DslError> {
        // configs of this round already executed are visible through history
        let mut probe = self.state.clone();
        probe.history.extend(self.executed());
        resolve_reference(expr, &probe)
    }

    fn executed(&self) -> Vec<EditConfig> {
        self.configs.iter().filter(|c| c.param_str("instance_id").is_some()).cloned().collect()
    }

    fn delete(&mut self, i: usize) -> Result<(), String> {
        let cfg = &self.configs[i];
        let ty = cfg.param_str("type").map(ToString::to_string);
        let color = cfg.param_str("color").map(ToString::to_string);
        let matches = |v: &PlacedVehicle| {
            ty.as_deref().map_or(true, |t| v.vehicle_type().is_some_and(|vt| vt.eq_ignore_ascii_case(t)))
                && color.as_deref().map_or(true, |c| vehicle_has_color(v, c))
        };
        let ids: Vec<String> = if cfg.param_str("scope") == Some("all") {
            self.state.vehicles.iter().filter(|v| matches(v)).map(|v| v.instance_id.clone()).collect()
        } else if let Some(target) = cfg.target.as_deref().filter(|t| t.contains("added")) {
            alloc::vec![self.resolve(target).map_err(|e| e.to_string())?]
        } else {
            let recent: Vec<String> = self
                .state
                .history
                .iter()
                .chain(self.configs.iter())
                .rev()
                .filter_map(|c| c.param_str("instance_id").map(ToString::to_string))
                .collect();
            let candidates: Vec<&PlacedVehicle> = self.state.vehicles.iter().filter(|v| matches(v)).collect();
            let ego = ego_pose2d(&self.state).map_err(|e| e.to_string())?.position();
            let pick = recent
                .iter()
                .find_map(|id| candidates.iter().find(|v| &v.instance_id == id))
                .or_else(|| {
                    candidates.iter().min_by(|a, b| {
                        a.pose.position().distance(ego).total_cmp(&b.pose.position().distance(ego)).then(a.instance_id.cmp(&b.instance_id))
                    })
                })
                .ok_or_else(|| {
                    format!(
                        "no vehicle matches{}{}",
                        color.as_deref().map_or(String::new(), |c| format!(" color {c}")),
                        ty.as_deref().map_or(String::new(), |t| format!(" type {t}"))
                    )
                })?;
            alloc::vec![pick.instance_id.clone()]
        };
        if ids.is_empty() {
            self.warnings.push("delete matched no vehicle".to_string());
        }
        self.state.vehicles.retain(|v| !ids.contains(&v.instance_id));
        self.state.deleted_ids.extend(ids.iter().cloned());
        self.configs[i].parameters.insert("deleted".to_string(), json!(ids));
        Ok(())
    }

    fn choose_asset(&mut self, i: usize) -> Result<(), String> {
        let cfg = &self.configs[i];
        let color = match cfg.param_str("color") {
            Some(c) => Some(color_by_name(c).ok_or_else(|| format!("unknown color '{c}'"))?),
            None => None,
        };
        let request = AssetRequest { asset_type: cfg.param_str("type").map(ToString::to_string), color };
        let m = match_asset(&request, &self.bank.records).map_err(|e| e.to_string())?;
        if let Some(t) = &request.asset_type {
            if !m.record.asset_type.eq_ignore_ascii_case(t) {
                self.warnings.push(format!("no '{t}' asset; using '{}'", m.record.id));
            }
        }
        let cfg = &mut self.configs[i];
        cfg.parameters.insert("asset_id".to_string(), json!(m.record.id));
        cfg.parameters.insert("asset_type".to_string(), json!(m.record.asset_type));
        Ok(())
    }

    fn revise_asset(&mut self, i: usize) -> Result<(), String> {
        let cfg = self.configs[i].clone();
        let target = cfg.target.as_deref().ok_or("revise needs a target")?;
        let id = self.resolve(target).map_err(|e| e.to_string())?;
        self.configs[i].parameters.insert("instance_id".to_string(), json!(id));
        let Some(name) = cfg.param_str("color") else { return Ok(()) };
        let rgb = color_by_name(name).ok_or_else(|| format!("unknown color '{name}'"))?;
        let v = self.state.vehicles.iter_mut().find(|v| v.instance_id == id).ok_or("vehicle vanished")?;
        let record = self.bank.get(&v.asset_id).ok_or_else(|| AssetError::Unknown(v.asset_id.clone()).to_string())?;
        recolor(record, rgb).map_err(|e| e.to_string())?;
        set_color(v, rgb);
        Ok(())
    }

    fn add_vehicles(&mut self, i: usize) -> Result<(), String> {
        let cfg = self.configs[i].clone();
        let asset_id = cfg.param_str("asset_id").ok_or("no asset chosen")?.to_string();
        let record = self.bank.get(&asset_id).ok_or_else(|| AssetError::Unknown(asset_id.clone()).to_string())?.clone();
        let color = match cfg.param_str("color") {
            Some(c) => color_by_name(c).ok_or_else(|| format!("unknown color '{c}'"))?,
            None => record.color,
        };
        let record = if color != record.color { recolor(&record, color).map_err(|e| e.to_string())? } else { record };
        let attrs = extract_motion_attributes(&cfg).map_err(|e| e.to_string())?;
        let count = cfg.parameters.get("count").map_or(Some(1), Value::as_u64).ok_or_else(|| param_err("count").to_string())?;
        let ego = ego_pose2d(&self.state).map_err(|e| e.to_string())?;
        let ego6 = ego_frame(&self.state, self.state.ego.start_time()).map_err(|e| e.to_string())?;
        let cropped = crop_map(&self.state.lane_map, &ego6);
        let mut ids = Vec::new();
        for k in 0..count as usize {
            let seed = config_seed(self.seed, self.round, i) ^ (k as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
            let relation = cfg.param_str("relation").map(|r| Relation::from_name(r).ok_or_else(|| param_err("relation").to_string())).transpose()?;
            let anchor = match (relation, cfg.target.as_deref()) {
                (Some(_), Some(t)) => Some(self.resolve(t).map_err(|e| e.to_string())?),
                (Some(_), None) => return Err("relation without a reference".to_string()),
                _ => None,
            };
            let lateral = matches!(relation, Some(Relation::Left | Relation::Right));
            let mut query = PlacementQuery::new(attrs.clone(), seed);
            query.ego = ego;
            query.self_radius = record.length() / 2.0;
            query.occupied = occupancy(&self.state, self.bank, if lateral { anchor.as_deref() } else { None });
            query.occupied.push(Occupancy { position: ego.position(), radius: EGO_RADIUS });
            let start = if let Some(p) = cfg.parameters.get("position") {
                let a: Vec<f64> = p.as_array().map(|a| a.iter().filter_map(Value::as_f64).collect()).unwrap_or_default();
                match a.as_slice() {
                    [x, y, h] => Pose2D::new(*x, *y, *h),
                    _ => return Err(param_err("position").to_string()),
                }
            } else if let (Some(rel), Some(anchor_id)) = (relation, anchor.as_deref()) {
                let anchor_pose = self.state.vehicle(anchor_id).ok_or("anchor vanished")?.pose;
                place_relative(anchor_pose, rel, &query, &self.state.lane_map).map_err(|e: MotionError| e.to_string())?
            } else {
                place_vehicle(&query, &cropped).map_err(|e| e.to_string())?
            };
            let plan = generate_motion(start, &attrs, &self.state.lane_map, seed, self.state.ego.dt).map_err(|e| e.to_string())?;
            let id = if count == 1 { format!("r{}_{}", self.round, i) } else { format!("r{}_{}_{}", self.round, i, k) };
            let mut attributes = BTreeMap::new();
            attributes.insert("type".to_string(), json!(record.asset_type));
            attributes.insert("origin".to_string(), json!("added"));
            attributes.insert("action".to_string(), json!(attrs.action.name()));
            attributes.insert("speed_mps".to_string(), json!(attrs.speed));
            attributes.insert("crazy_mode".to_string(), json!(attrs.crazy_mode));
            if let Some(a) = &anchor {
                attributes.insert("anchor".to_string(), json!(a));
            }
            let mut v = PlacedVehicle { instance_id: id.clone(), asset_id: record.id.clone(), pose: start, trajectory: Some(plan.trajectory), attributes };
            set_color(&mut v, color);
            self.state.vehicles.push(v);
            ids.push(id);
        }
        let cfg = &mut self.configs[i];
        if let [only] = ids.as_slice() {
            cfg.parameters.insert("instance_id".to_string(), json!(only));
        } else {
            cfg.parameters.insert("instance_id".to_string(), json!(ids.first().cloned().unwrap_or_default()));
        }
        Ok(())
    }

    fn revise_motion(&mut self, i: usize) -> Result<(), String> {
        let cfg = self.configs[i].clone();
        let id = match cfg.param_str("instance_id") {
            Some(id) => id.to_string(),
            None => self.resolve(cfg.target.as_deref().ok_or("revise needs a target")?).map_err(|e| e.to_string())?,
        };
        let touches_motion = ["modifiers", "speed_mps", "duration_s", "distance"].iter().any(|k| cfg.parameters.contains_key(*k));
        if !touches_motion {
            return Ok(());
        }
        let original = self
            .state
            .history
            .iter()
            .chain(self.configs[..i].iter())
            .rev()
            .find(|c| c.param_str("instance_id") == Some(id.as_str()) && matches!(c.action, EditAction::Add | EditAction::Revise))
            .cloned()
            .unwrap_or_else(|| EditConfig::new(EditAction::Add, self.round));
        let mut merged = EditConfig::new(EditAction::Add, self.round);
        let mods = merge_modifiers(&original.param_strings("modifiers"), &cfg.param_strings("modifiers"));
        if !mods.is_empty() {
            merged = merged.with("modifiers", json!(mods));
        }
        for key in ["speed_mps", "duration_s", "distance"] {
            if let Some(v) = cfg.parameters.get(key).or(original.parameters.get(key)) {
                merged.parameters.insert(key.to_string(), v.clone());
            }
        }
        let attrs = extract_motion_attributes(&merged).map_err(|e| e.to_string())?;
        let seed = config_seed(self.seed, self.round, i);
        let dt = self.state.ego.dt;
        let map = self.state.lane_map.clone();
        let v = self.state.vehicles.iter_mut().find(|v| v.instance_id == id).ok_or("vehicle vanished")?;
        let plan = generate_motion(v.pose, &attrs, &map, seed, dt).map_err(|e| e.to_string())?;
        v.trajectory = Some(plan.trajectory);
        v.attributes.insert("action".to_string(), json!(attrs.action.name()));
        v.attributes.insert("speed_mps".to_string(), json!(attrs.speed));
        let c = &mut self.configs[i];
        c.parameters.insert("instance_id".to_string(), json!(id));
        c.parameters.insert("modifiers".to_string(), json!(mods));
        Ok(())
    }

    fn view(&mut self, i: usize) -> Result<(), String> {
        let cfg = &self.configs[i];
        if let Some(m) = cfg.param_str("ego_motion") {
            let speed = cfg.param_f64("speed_mps").unwrap_or(0.0);
            let sign = match m {
                "straight" => 1.0,
                "backward" => -1.0,
                "park" => 0.0,
                other => return Err(format!("unknown ego motion '{other}'")),
            };
            self.state.ego = ego_trajectory(&self.state.ego, sign * speed);
        }
        let get = |k: &str| cfg.param_f64(k).unwrap_or(0.0);
        let delta = ViewDelta {
            translation: Vec3::new(get("forward_m"), get("left_m"), get("up_m")),
            yaw: get("yaw_deg").to_radians(),
            pitch: get("pitch_deg").to_radians(),
            roll: get("roll_deg").to_radians(),
        };
        if !delta.is_finite() {
            return Err("view delta must be finite".to_string());
        }
        if delta != ViewDelta::default() {
            self.state.view = self.state.view.then(&delta);
        }
        Ok(())
    }
}

/// Ego clip of the same length and rate moving straight at `speed` (negative
/// for reversing) from its first pose.
pub fn ego_trajectory(current: &Trajectory, speed: f64) -> Trajectory {
    let Some(first) = current.samples.first() else { return current.clone() };
    let dir = first.pose().direction();
    let samples = current
        .samples
        .iter()
        .map(|s| {
            let dt = s.t - first.t;
            TrajectorySample { t: s.t, x: first.x + dir.x * speed * dt, y: first.y + dir.y * speed * dt, heading: first.heading }
        })
        .collect();
    Trajectory { samples, dt: current.dt }
}

fn set_color(v: &mut PlacedVehicle, c: crate::image::Rgb) {
    v.attributes.insert("color".to_string(), serde_json::to_value(c).unwrap_or_default());
    v.attributes.insert("color_name".to_string(), json!(color_name(c)));
}

fn vehicle_has_color(v: &PlacedVehicle, name: &str) -> bool {
    let by_name = v.attributes.get("color_name").and_then(Value::as_str) == Some(name);
    let by_value = match (color_by_name(name), v.color()) {
        (Some(a), Some(b)) => crate::assets::color_distance(a, b) <= crate::assets::COLOR_TOLERANCE,
        _ => false,
    };
    by_name || by_value
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::demo::{demo_bank, demo_scene, empty_scene};
    use crate::render::NoRender;

    fn session() -> Session {
        Session::new("t", demo_scene(), demo_bank(), 7)
    }

    #[test]
    fn roles_registered_once() {
        let mut names: Vec<&str> = AgentRole::ALL.iter().map(|r| r.name()).collect();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), 7);
    }

    #[test]
    fn pure_view_round_roles() {
        let o = plan_round(&session(), "Move the camera 2 meters to the left.").unwrap();
        assert_eq!(o.roles(), [AgentRole::ProjectManager, AgentRole::ViewAdjust, AgentRole::BackgroundRender, AgentRole::ForegroundRender]);
    }

    #[test]
    fn empty_order_is_identity() {
        let mut s = session();
        let before = s.state.clone();
        let r = execute_round(&mut s, &WorkOrder::default(), &NoRender).unwrap();
        assert!(r.frames.is_empty());
        assert_eq!(s.state, before);
    }

    #[test]
    fn add_round_grows_vehicles() {
        let mut s = Session::new("t", empty_scene(), demo_bank(), 7);
        s.command("Add a car to the close front. Add a Porsche on the left front driving toward me.", &NoRender).unwrap();
        assert_eq!(s.state.vehicles.len(), 2);
        assert_eq!(s.state.history.len(), 2);
    }

    #[test]
    fn unknown_abstraction() {
        assert!(matches!(
            plan_round(&session(), "Make it rain."),
            Err(OrchestratorError::UnsupportedAbstraction(p)) if p == "it rain"
        ));
    }
}
