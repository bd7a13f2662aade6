//! Datasets and environments: the two-moons generator, the grid-world
//! navigation environment with Dijkstra-labeled demonstrations and a rollout
//! simulator, and CSV ingestion for external regression data.

use crate::error::{Error, Result};
use crate::nn::{mlp_forward, MlpParams};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BinaryHeap;
use std::path::Path;

/// Learning task carried by a dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    /// Binary classification with ±1 labels on a scalar output.
    ClassificationPm1,
    /// Vector regression under squared error.
    Regression,
}

/// A point cloud with a labeled prefix.
///
/// Points are stored row-major (`n_labeled + n_unlabeled` rows of `dim`
/// coordinates, labeled rows first); `labels` holds one `label_dim`-vector
/// per labeled row.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    /// All points, labeled first, row-major.
    pub points: Vec<f64>,
    /// Ambient dimension of each point.
    pub dim: usize,
    /// Targets for the labeled prefix, row-major.
    pub labels: Vec<f64>,
    /// Dimension of each target vector.
    pub label_dim: usize,
    /// Number of labeled points (the prefix).
    pub n_labeled: usize,
    /// Number of unlabeled points (the suffix).
    pub n_unlabeled: usize,
    /// What the labels mean.
    pub task: Task,
    /// Ground-truth class per point, when known (used for evaluation only).
    pub class_of_point: Option<Vec<usize>>,
}

impl Dataset {
    /// Total point count.
    pub fn n(&self) -> usize {
        self.n_labeled + self.n_unlabeled
    }

    /// Point `i` as a coordinate slice.
    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    /// The labeled prefix of the point buffer.
    pub fn labeled_points(&self) -> &[f64] {
        &self.points[..self.n_labeled * self.dim]
    }

    /// Target vector of labeled point `i`.
    pub fn label(&self, i: usize) -> &[f64] {
        &self.labels[i * self.label_dim..(i + 1) * self.label_dim]
    }

    fn validate(&self) -> Result<()> {
        if self.dim == 0 || self.points.len() != self.n() * self.dim {
            return Err(Error::invalid("point buffer does not match counts × dim"));
        }
        if self.label_dim == 0 || self.labels.len() != self.n_labeled * self.label_dim {
            return Err(Error::invalid("label buffer does not match n_labeled × label_dim"));
        }
        if let Some(c) = &self.class_of_point {
            if c.len() != self.n() {
                return Err(Error::invalid("class vector length does not match point count"));
            }
        }
        Ok(())
    }
}

/// Two interleaved half-circle classes ("two moons").
///
/// Each class lays `n_labeled_per_class + n_unlabeled_per_class` points on a
/// uniform parameter grid `u ∈ [0, π]` — moon A at `(cos u, sin u)` with
/// label +1, moon B at `(1 − cos u, 1/2 − sin u)` with label −1 — then adds
/// i.i.d. Gaussian noise of scale σ to every coordinate. The labeled points
/// are taken at evenly spaced positions along each arc (the arc middle when
/// one per class); labeled rows come first. Deterministic per seed.
pub fn two_moons(
    n_labeled_per_class: usize,
    n_unlabeled_per_class: usize,
    sigma: f64,
    seed: u64,
) -> Result<Dataset> {
    let n_per = n_labeled_per_class + n_unlabeled_per_class;
    if n_labeled_per_class == 0 {
        return Err(Error::invalid("need at least one labeled point per class"));
    }
    if !(sigma >= 0.0) {
        return Err(Error::invalid(format!("noise scale must be nonnegative, got {sigma}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Arc parameters and the two noiseless moons, class A then class B.
    let us: Vec<f64> = if n_per == 1 {
        vec![std::f64::consts::FRAC_PI_2]
    } else {
        (0..n_per)
            .map(|i| std::f64::consts::PI * i as f64 / (n_per - 1) as f64)
            .collect()
    };
    let mut raw = Vec::with_capacity(2 * n_per * 2);
    for &u in &us {
        raw.push(u.cos());
        raw.push(u.sin());
    }
    for &u in &us {
        raw.push(1.0 - u.cos());
        raw.push(0.5 - u.sin());
    }
    // Box–Muller noise, two uniforms per point, in storage order.
    for p in 0..2 * n_per {
        let u1: f64 = 1.0 - rng.gen::<f64>();
        let u2: f64 = rng.gen();
        let r = (-2.0 * u1.ln()).sqrt();
        let angle = 2.0 * std::f64::consts::PI * u2;
        raw[2 * p] += sigma * r * angle.cos();
        raw[2 * p + 1] += sigma * r * angle.sin();
    }
    // Labeled indices per class: midpoints of equal arc segments.
    let labeled_local: Vec<usize> = (0..n_labeled_per_class)
        .map(|i| ((2 * i + 1) * n_per) / (2 * n_labeled_per_class))
        .collect();
    let mut order: Vec<usize> = Vec::with_capacity(2 * n_per);
    for class in 0..2 {
        for &i in &labeled_local {
            order.push(class * n_per + i);
        }
    }
    for class in 0..2 {
        for i in 0..n_per {
            if !labeled_local.contains(&i) {
                order.push(class * n_per + i);
            }
        }
    }
    let mut points = Vec::with_capacity(raw.len());
    let mut class_of_point = Vec::with_capacity(2 * n_per);
    for &idx in &order {
        points.push(raw[2 * idx]);
        points.push(raw[2 * idx + 1]);
        class_of_point.push(idx / n_per);
    }
    let labels: Vec<f64> = (0..2 * n_labeled_per_class)
        .map(|i| if class_of_point[i] == 0 { 1.0 } else { -1.0 })
        .collect();
    let ds = Dataset {
        points,
        dim: 2,
        labels,
        label_dim: 1,
        n_labeled: 2 * n_labeled_per_class,
        n_unlabeled: 2 * n_unlabeled_per_class,
        task: Task::ClassificationPm1,
        class_of_point: Some(class_of_point),
    };
    ds.validate()?;
    Ok(ds)
}

/// Axis-aligned rectangle `[x_min, x_max] × [y_min, y_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Rect {
    /// True when the point lies inside or on the boundary.
    pub fn contains(&self, p: [f64; 2]) -> bool {
        p[0] >= self.x_min && p[0] <= self.x_max && p[1] >= self.y_min && p[1] <= self.y_max
    }

    fn well_formed(&self) -> bool {
        self.x_min < self.x_max && self.y_min < self.y_max
    }
}

/// Planar navigation environment: a rectangular domain with rectangular
/// obstacles, a goal disc, first-order dynamics `s' = s + v·Ts`, and a
/// square sampling grid over the free space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NavEnv {
    /// The state-space box.
    pub domain: Rect,
    /// Impassable closed rectangles.
    pub obstacles: Vec<Rect>,
    /// Goal position.
    pub goal: [f64; 2],
    /// Success radius around the goal.
    pub goal_radius: f64,
    /// Integration step (seconds).
    pub ts: f64,
    /// Maximum speed; actions are clamped to this magnitude.
    pub v_max: f64,
    /// Rollout step budget.
    pub max_steps: usize,
    /// Lattice spacing of the sampling grid.
    pub grid_spacing: f64,
}

impl Default for NavEnv {
    fn default() -> Self {
        NavEnv {
            domain: Rect {
                x_min: 0.0,
                x_max: 20.0,
                y_min: 0.0,
                y_max: 10.0,
            },
            // Two walls forming an S-shaped detour: a horizontal arm from the
            // left boundary and a vertical arm from the bottom boundary.
            obstacles: vec![
                Rect {
                    x_min: 0.0,
                    x_max: 12.0,
                    y_min: 4.5,
                    y_max: 5.5,
                },
                Rect {
                    x_min: 15.0,
                    x_max: 16.0,
                    y_min: 0.0,
                    y_max: 7.0,
                },
            ],
            goal: [19.0, 1.0],
            goal_radius: 0.5,
            ts: 0.1,
            v_max: 2.0,
            max_steps: 600,
            grid_spacing: 0.5,
        }
    }
}

impl NavEnv {
    /// True when `p` is inside the domain and outside every obstacle.
    pub fn is_free(&self, p: [f64; 2]) -> bool {
        self.domain.contains(p) && !self.obstacles.iter().any(|o| o.contains(p))
    }

    /// Check the environment's own consistency.
    pub fn validate(&self) -> Result<()> {
        if !self.domain.well_formed() || self.obstacles.iter().any(|o| !o.well_formed()) {
            return Err(Error::invalid("degenerate rectangle in environment"));
        }
        if !(self.ts > 0.0) || !(self.v_max > 0.0) || !(self.grid_spacing > 0.0) {
            return Err(Error::invalid("ts, v_max, and grid_spacing must be positive"));
        }
        if !(self.goal_radius > 0.0) || self.max_steps == 0 {
            return Err(Error::invalid("goal_radius must be positive and max_steps ≥ 1"));
        }
        if !self.is_free(self.goal) {
            return Err(Error::invalid("goal must lie in free space"));
        }
        Ok(())
    }
}

/// The free-space sampling lattice of an environment.
#[derive(Debug, Clone)]
pub struct NavGrid {
    /// Lattice width (number of x-steps).
    pub nx: usize,
    /// Lattice height (number of y-steps).
    pub ny: usize,
    /// Lattice spacing.
    pub spacing: f64,
    /// Domain origin.
    pub origin: [f64; 2],
    /// Free-space mask per lattice site (row-major by y then x).
    pub free: Vec<bool>,
}

impl NavGrid {
    /// World position of lattice site `(ix, iy)`.
    pub fn point(&self, ix: usize, iy: usize) -> [f64; 2] {
        [
            self.origin[0] + ix as f64 * self.spacing,
            self.origin[1] + iy as f64 * self.spacing,
        ]
    }

    /// Flat site id of `(ix, iy)`.
    pub fn id(&self, ix: usize, iy: usize) -> usize {
        iy * self.nx + ix
    }

    /// Whether site `(ix, iy)` is in free space.
    pub fn is_free(&self, ix: usize, iy: usize) -> bool {
        self.free[self.id(ix, iy)]
    }

    /// All free sites as `(ix, iy)` pairs, in flat-id order.
    pub fn free_sites(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for iy in 0..self.ny {
            for ix in 0..self.nx {
                if self.is_free(ix, iy) {
                    out.push((ix, iy));
                }
            }
        }
        out
    }

    /// Snap a world point to the nearest lattice site.
    pub fn snap(&self, p: [f64; 2]) -> (usize, usize) {
        let ix = ((p[0] - self.origin[0]) / self.spacing).round().max(0.0) as usize;
        let iy = ((p[1] - self.origin[1]) / self.spacing).round().max(0.0) as usize;
        (ix.min(self.nx - 1), iy.min(self.ny - 1))
    }
}

/// Build the square free-space grid of an environment.
pub fn nav_grid(env: &NavEnv) -> Result<NavGrid> {
    env.validate()?;
    let nx = ((env.domain.x_max - env.domain.x_min) / env.grid_spacing).floor() as usize + 1;
    let ny = ((env.domain.y_max - env.domain.y_min) / env.grid_spacing).floor() as usize + 1;
    let origin = [env.domain.x_min, env.domain.y_min];
    let mut grid = NavGrid {
        nx,
        ny,
        spacing: env.grid_spacing,
        origin,
        free: vec![false; nx * ny],
    };
    for iy in 0..ny {
        for ix in 0..nx {
            let id = grid.id(ix, iy);
            grid.free[id] = env.is_free(grid.point(ix, iy));
        }
    }
    Ok(grid)
}

/// Grid connectivity for shortest paths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Connectivity {
    /// Orthogonal moves only.
    Four,
    /// Orthogonal and diagonal moves.
    #[default]
    Eight,
}

#[derive(PartialEq)]
struct HeapEntry {
    cost: f64,
    node: usize,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        // Reversed for a min-heap; ties broken by node id for determinism.
        other
            .cost
            .partial_cmp(&self.cost)
            .expect("finite costs")
            .then(other.node.cmp(&self.node))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// Shortest free-grid path between two world points (snapped to the lattice),
/// under Euclidean edge weights. Returns the path in world coordinates,
/// start and goal included.
pub fn dijkstra_grid(
    env: &NavEnv,
    start: [f64; 2],
    goal: [f64; 2],
    conn: Connectivity,
) -> Result<Vec<[f64; 2]>> {
    let grid = nav_grid(env)?;
    let s = grid.snap(start);
    let g = grid.snap(goal);
    if !grid.is_free(s.0, s.1) {
        return Err(Error::invalid(format!("start site {s:?} is not free")));
    }
    if !grid.is_free(g.0, g.1) {
        return Err(Error::invalid(format!("goal site {g:?} is not free")));
    }
    let moves: &[(isize, isize, f64)] = match conn {
        Connectivity::Four => &[(1, 0, 1.0), (-1, 0, 1.0), (0, 1, 1.0), (0, -1, 1.0)],
        Connectivity::Eight => &[
            (1, 0, 1.0),
            (-1, 0, 1.0),
            (0, 1, 1.0),
            (0, -1, 1.0),
            (1, 1, std::f64::consts::SQRT_2),
            (1, -1, std::f64::consts::SQRT_2),
            (-1, 1, std::f64::consts::SQRT_2),
            (-1, -1, std::f64::consts::SQRT_2),
        ],
    };
    let n = grid.nx * grid.ny;
    let mut dist = vec![f64::INFINITY; n];
    let mut prev = vec![usize::MAX; n];
    let mut heap = BinaryHeap::new();
    let start_id = grid.id(s.0, s.1);
    let goal_id = grid.id(g.0, g.1);
    dist[start_id] = 0.0;
    heap.push(HeapEntry {
        cost: 0.0,
        node: start_id,
    });
    while let Some(HeapEntry { cost, node }) = heap.pop() {
        if cost > dist[node] {
            continue;
        }
        if node == goal_id {
            break;
        }
        let (ix, iy) = (node % grid.nx, node / grid.nx);
        for &(dx, dy, w) in moves {
            let jx = ix as isize + dx;
            let jy = iy as isize + dy;
            if jx < 0 || jy < 0 || jx as usize >= grid.nx || jy as usize >= grid.ny {
                continue;
            }
            let (jx, jy) = (jx as usize, jy as usize);
            if !grid.is_free(jx, jy) {
                continue;
            }
            let next = grid.id(jx, jy);
            let cand = cost + w * grid.spacing;
            if cand < dist[next] {
                dist[next] = cand;
                prev[next] = node;
                heap.push(HeapEntry {
                    cost: cand,
                    node: next,
                });
            }
        }
    }
    if dist[goal_id].is_infinite() {
        return Err(Error::NoPath { start: s, goal: g });
    }
    let mut ids = vec![goal_id];
    while *ids.last().unwrap() != start_id {
        ids.push(prev[*ids.last().unwrap()]);
    }
    ids.reverse();
    Ok(ids
        .into_iter()
        .map(|id| {
            let (ix, iy) = (id % grid.nx, id / grid.nx);
            grid.point(ix, iy)
        })
        .collect())
}

/// Clamp a velocity to magnitude `v_max`, preserving direction.
pub fn clamp_speed(v: [f64; 2], v_max: f64) -> [f64; 2] {
    let mag = (v[0] * v[0] + v[1] * v[1]).sqrt();
    if mag > v_max && mag > 0.0 {
        let s = v_max / mag;
        [v[0] * s, v[1] * s]
    } else {
        v
    }
}

/// Demonstration pairs along a path: at each waypoint (except the last), the
/// velocity `(next − current)/Ts` clamped to the speed limit.
pub fn label_actions(path: &[[f64; 2]], env: &NavEnv) -> Result<Vec<([f64; 2], [f64; 2])>> {
    if path.len() < 2 {
        return Err(Error::invalid("need a path with at least 2 waypoints"));
    }
    Ok(path
        .windows(2)
        .map(|w| {
            let raw = [(w[1][0] - w[0][0]) / env.ts, (w[1][1] - w[0][1]) / env.ts];
            (w[0], clamp_speed(raw, env.v_max))
        })
        .collect())
}

/// How a rollout ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    /// Entered the goal disc without ever leaving free space.
    Success,
    /// Left the domain or entered an obstacle.
    Collision,
    /// Exhausted the step budget.
    Timeout,
}

/// Roll out an arbitrary velocity policy from `start`.
///
/// Each step applies `s ← s + clamp(policy(s))·Ts`; the trajectory records
/// every visited state. Collision is checked before goal attainment, so a
/// state can never count as both.
pub fn rollout_with<F>(policy: F, env: &NavEnv, start: [f64; 2]) -> Result<(Vec<[f64; 2]>, Outcome)>
where
    F: Fn([f64; 2]) -> [f64; 2],
{
    env.validate()?;
    if !env.is_free(start) {
        return Err(Error::invalid(format!("start {start:?} is not in free space")));
    }
    let goal_dist = |p: [f64; 2]| ((p[0] - env.goal[0]).powi(2) + (p[1] - env.goal[1]).powi(2)).sqrt();
    let mut traj = vec![start];
    if goal_dist(start) <= env.goal_radius {
        return Ok((traj, Outcome::Success));
    }
    let mut s = start;
    for _ in 0..env.max_steps {
        let v = clamp_speed(policy(s), env.v_max);
        s = [s[0] + v[0] * env.ts, s[1] + v[1] * env.ts];
        traj.push(s);
        if !env.is_free(s) {
            return Ok((traj, Outcome::Collision));
        }
        if goal_dist(s) <= env.goal_radius {
            return Ok((traj, Outcome::Success));
        }
    }
    Ok((traj, Outcome::Timeout))
}

/// Roll out a trained 2-in/2-out network as the velocity policy.
pub fn rollout(model: &MlpParams, env: &NavEnv, start: [f64; 2]) -> Result<(Vec<[f64; 2]>, Outcome)> {
    if model.d_in != 2 || model.d_out != 2 {
        return Err(Error::invalid(format!(
            "navigation policy must map R²→R², got {}→{}",
            model.d_in, model.d_out
        )));
    }
    rollout_with(
        |s| {
            let out = mlp_forward(model, &s).expect("2-dim input");
            [out[0], out[1]]
        },
        env,
        start,
    )
}

/// Column schema for CSV ingestion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvSchema {
    /// Feature column names, in output order.
    pub feature_cols: Vec<String>,
    /// Target column names, in output order.
    pub target_cols: Vec<String>,
    /// Optional 0/1 (or false/true) column marking unlabeled rows.
    pub unlabeled_flag_col: Option<String>,
}

/// Load a regression dataset from a headered CSV file.
///
/// Rows flagged unlabeled keep their features but carry no targets (their
/// target cells are ignored and may be empty); the returned dataset has the
/// labeled rows first.
pub fn load_csv(path: &Path, schema: &CsvSchema) -> Result<Dataset> {
    if schema.feature_cols.is_empty() || schema.target_cols.is_empty() {
        return Err(Error::invalid("schema needs at least one feature and one target column"));
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    let headers = reader
        .headers()
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?
        .clone();
    let col_index = |name: &String| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Parse(format!("missing column '{name}'")))
    };
    let feat_idx: Vec<usize> = schema.feature_cols.iter().map(col_index).collect::<Result<_>>()?;
    let targ_idx: Vec<usize> = schema.target_cols.iter().map(col_index).collect::<Result<_>>()?;
    let flag_idx = match &schema.unlabeled_flag_col {
        Some(name) => Some(col_index(name)?),
        None => None,
    };
    let mut labeled: Vec<(Vec<f64>, Vec<f64>)> = Vec::new();
    let mut unlabeled: Vec<Vec<f64>> = Vec::new();
    for (row_no, record) in reader.records().enumerate() {
        let line = row_no + 2; // 1-based, after the header line
        let record = record.map_err(|e| Error::Parse(format!("line {line}: {e}")))?;
        let parse_cell = |idx: usize| -> Result<f64> {
            let cell = record
                .get(idx)
                .ok_or_else(|| Error::Parse(format!("line {line}: missing field {idx}")))?;
            cell.trim()
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("line {line}: non-numeric cell '{cell}'")))
        };
        let features: Vec<f64> = feat_idx.iter().map(|&i| parse_cell(i)).collect::<Result<_>>()?;
        let is_unlabeled = match flag_idx {
            Some(i) => {
                let cell = record
                    .get(i)
                    .ok_or_else(|| Error::Parse(format!("line {line}: missing field {i}")))?
                    .trim()
                    .to_ascii_lowercase();
                matches!(cell.as_str(), "1" | "true" | "yes")
            }
            None => false,
        };
        if is_unlabeled {
            unlabeled.push(features);
        } else {
            let targets: Vec<f64> = targ_idx.iter().map(|&i| parse_cell(i)).collect::<Result<_>>()?;
            labeled.push((features, targets));
        }
    }
    if labeled.is_empty() && unlabeled.is_empty() {
        return Err(Error::invalid(format!("{}: no data rows", path.display())));
    }
    if labeled.is_empty() {
        return Err(Error::invalid(format!("{}: every row is flagged unlabeled", path.display())));
    }
    let dim = schema.feature_cols.len();
    let label_dim = schema.target_cols.len();
    let mut points = Vec::with_capacity((labeled.len() + unlabeled.len()) * dim);
    let mut labels = Vec::with_capacity(labeled.len() * label_dim);
    for (f, t) in &labeled {
        points.extend_from_slice(f);
        labels.extend_from_slice(t);
    }
    for f in &unlabeled {
        points.extend_from_slice(f);
    }
    let ds = Dataset {
        points,
        dim,
        labels,
        label_dim,
        n_labeled: labeled.len(),
        n_unlabeled: unlabeled.len(),
        task: Task::Regression,
        class_of_point: None,
    };
    ds.validate()?;
    Ok(ds)
}
