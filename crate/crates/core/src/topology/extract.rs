use super::{bind::bind_all, skeleton::skeleton_neighbors, skeletonize, NodeKind, TopoEdge, TopoNode, TopologyError, TopologyGraph};
use crate::ingest::ProductRecord;
use crate::spatial::{line_of_sight, normalize_angle, GridPoint, OccupancyGrid};
use crate::SCHEMA_VERSION;
use serde::{Deserialize, Serialize};
use std::collections::hash_map::Entry;
use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TopologyConfig {
    /// Heading change (degrees) above which a skeleton point becomes a turn.
    pub turn_threshold_deg: f64,
    /// Pixels on each side of the point used to measure heading.
    pub turn_window: usize,
    /// Nodes closer than this (meters) are merged.
    pub merge_radius: f64,
    /// Dead-end branches shorter than this (meters) are pruned.
    pub spur_length: f64,
}

impl Default for TopologyConfig {
    fn default() -> Self {
        Self { turn_threshold_deg: 60.0, turn_window: 5, merge_radius: 0.3, spur_length: 0.5 }
    }
}

impl TopologyConfig {
    pub fn validate(&self) -> Result<(), TopologyError> {
        let ok = self.turn_threshold_deg > 0.0
            && self.turn_threshold_deg < 180.0
            && self.turn_window >= 1
            && self.merge_radius >= 0.0
            && self.spur_length >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(TopologyError::InvalidParameter(format!("{self:?}")))
        }
    }
}

/// Skeletonize, extract the graph and bind every product.
pub fn build_topology(
    grid: &OccupancyGrid,
    products: &[ProductRecord],
    cfg: &TopologyConfig,
) -> Result<TopologyGraph, TopologyError> {
    let skeleton = skeletonize(grid)?;
    let mut graph = extract_graph(&skeleton, grid, cfg)?;
    if !graph.edges.is_empty() {
        bind_all(&mut graph, grid, products)?;
    }
    Ok(graph)
}

struct Node {
    pixel: GridPoint,
    /// Survives degree-2 dissolution.
    turn: bool,
    junction: bool,
    alive: bool,
}

struct Chain {
    a: usize,
    b: usize,
    /// Contiguous 8-connected pixel path from node `a` to node `b`.
    px: Vec<GridPoint>,
    alive: bool,
}

struct Work<'g> {
    grid: &'g OccupancyGrid,
    width: i32,
    height: i32,
    skel: Vec<bool>,
    nodes: Vec<Node>,
    chains: Vec<Chain>,
    at: HashMap<GridPoint, usize>,
}

fn polyline_len(px: &[GridPoint]) -> f64 {
    px.windows(2).map(|w| (w[0].dist2(w[1]) as f64).sqrt()).sum()
}

fn heading(from: GridPoint, to: GridPoint) -> f64 {
    ((to.row - from.row) as f64).atan2((to.col - from.col) as f64)
}

fn turn_angle(a: GridPoint, b: GridPoint, c: GridPoint) -> f64 {
    normalize_angle(heading(b, c) - heading(a, b)).abs()
}

impl<'g> Work<'g> {
    fn contains(&self, p: GridPoint) -> bool {
        p.col >= 0 && p.row >= 0 && p.col < self.width && p.row < self.height && self.skel[(p.row * self.width + p.col) as usize]
    }

    fn neighbors(&self, p: GridPoint) -> Vec<GridPoint> {
        skeleton_neighbors(|q| self.contains(q), p)
    }

    fn add_node(&mut self, pixel: GridPoint, turn: bool) -> usize {
        if let Some(&id) = self.at.get(&pixel) {
            self.nodes[id].turn |= turn;
            return id;
        }
        self.nodes.push(Node { pixel, turn, junction: false, alive: true });
        self.at.insert(pixel, self.nodes.len() - 1);
        self.nodes.len() - 1
    }

    fn kill_node(&mut self, id: usize) {
        self.nodes[id].alive = false;
        self.at.remove(&self.nodes[id].pixel);
    }

    fn add_chain(&mut self, a: usize, b: usize, px: Vec<GridPoint>) -> usize {
        debug_assert!(px.len() >= 2);
        self.chains.push(Chain { a, b, px, alive: true });
        self.chains.len() - 1
    }

    fn live_chains(&self) -> Vec<usize> {
        (0..self.chains.len()).filter(|&c| self.chains[c].alive).collect()
    }

    fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.nodes.len()];
        for c in self.chains.iter().filter(|c| c.alive) {
            deg[c.a] += 1;
            deg[c.b] += 1;
        }
        deg
    }

    /// Splits a chain at the given interior indices (ascending) and returns
    /// the new chain ids. Pieces that start and end on the same node are
    /// discarded.
    fn split(&mut self, ci: usize, cuts: &[usize], turn: bool) -> Vec<usize> {
        let (a, b, px) = {
            let c = &mut self.chains[ci];
            c.alive = false;
            (c.a, c.b, std::mem::take(&mut c.px))
        };
        let mut out = Vec::new();
        let mut start = 0;
        let mut from = a;
        for &k in cuts.iter().chain(std::iter::once(&(px.len() - 1))) {
            let to = if k == px.len() - 1 { b } else { self.add_node(px[k], turn) };
            if to != from && k > start {
                out.push(self.add_chain(from, to, px[start..=k].to_vec()));
            }
            start = k;
            from = to;
        }
        out
    }

    /// Chains that start and end at the same node are either dropped (when
    /// they never stray beyond `keep_beyond` pixels) or split in thirds.
    fn fix_self_loop(&mut self, ci: usize, keep_beyond: f64) {
        let c = &self.chains[ci];
        let origin = self.nodes[c.a].pixel;
        let reach = c.px.iter().map(|p| p.dist2(origin)).max().unwrap_or(0) as f64;
        let n = c.px.len() - 1;
        if reach.sqrt() <= keep_beyond || n < 3 {
            self.chains[ci].alive = false;
            return;
        }
        let mut cuts = Vec::new();
        for target in [n / 3, 2 * n / 3] {
            let k = (target..n).find(|&k| c.px[k] != origin && cuts.last().is_none_or(|&l| k > l));
            if let Some(k) = k {
                cuts.push(k);
            }
        }
        self.split(ci, &cuts, true);
    }

    fn trace(&mut self, order: &[GridPoint]) {
        let degree: HashMap<GridPoint, usize> = order.iter().map(|&p| (p, self.neighbors(p).len())).collect();
        for &p in order {
            if degree[&p] != 2 {
                self.add_node(p, false);
                let id = self.at[&p];
                self.nodes[id].junction = degree[&p] >= 3;
            }
        }
        let mut visited: HashSet<GridPoint> = HashSet::new();
        let mut used: HashSet<(GridPoint, GridPoint)> = HashSet::new();
        let mut loops = Vec::new();
        for n in 0..self.nodes.len() {
            let p = self.nodes[n].pixel;
            for q in self.neighbors(p) {
                if used.contains(&(p, q)) {
                    continue;
                }
                let mut path = vec![p, q];
                let (mut prev, mut cur) = (p, q);
                while !self.at.contains_key(&cur) {
                    visited.insert(cur);
                    let next = self.neighbors(cur).into_iter().find(|&x| x != prev).expect("degree-2 pixel");
                    path.push(next);
                    prev = cur;
                    cur = next;
                }
                used.insert((p, q));
                used.insert((cur, path[path.len() - 2]));
                let m = self.at[&cur];
                let ci = self.add_chain(n, m, path);
                if n == m {
                    loops.push(ci);
                }
            }
        }
        // cycles made only of degree-2 pixels
        for &p in order {
            if degree[&p] != 2 || visited.contains(&p) {
                continue;
            }
            let mut path = vec![p];
            let (mut prev, mut cur) = (p, self.neighbors(p)[0]);
            visited.insert(p);
            while cur != p {
                visited.insert(cur);
                path.push(cur);
                let next = self.neighbors(cur).into_iter().find(|&x| x != prev).expect("degree-2 pixel");
                prev = cur;
                cur = next;
            }
            path.push(p);
            let n = self.add_node(p, true);
            loops.push(self.add_chain(n, n, path));
        }
        for ci in loops {
            self.fix_self_loop(ci, 0.0);
        }
    }

    fn detect_turns(&mut self, window: usize, threshold: f64) {
        for ci in self.live_chains() {
            let px = &self.chains[ci].px;
            let len = px.len();
            let w = window.min((len.saturating_sub(1)) / 2);
            if w < window.min(2) || w == 0 {
                continue;
            }
            let change: Vec<f64> = (0..len)
                .map(|i| if i < w || i + w >= len { 0.0 } else { turn_angle(px[i - w], px[i], px[i + w]) })
                .collect();
            let mut cuts = Vec::new();
            let mut i = 0;
            while i < len {
                if change[i] <= threshold {
                    i += 1;
                    continue;
                }
                let mut best = i;
                while i < len && change[i] > threshold {
                    if change[i] > change[best] {
                        best = i;
                    }
                    i += 1;
                }
                cuts.push(best);
            }
            if !cuts.is_empty() {
                self.split(ci, &cuts, true);
            }
        }
    }

    fn component_labels(&self, order: &[GridPoint]) -> HashMap<GridPoint, usize> {
        let mut label = HashMap::with_capacity(order.len());
        let mut next = 0;
        for &p in order {
            if label.contains_key(&p) {
                continue;
            }
            let mut queue = VecDeque::from([p]);
            label.insert(p, next);
            while let Some(c) = queue.pop_front() {
                for q in self.neighbors(c) {
                    if let Entry::Vacant(e) = label.entry(q) {
                        e.insert(next);
                        queue.push_back(q);
                    }
                }
            }
            next += 1;
        }
        label
    }

    /// Shortest skeleton paths from `from` to each target, first step
    /// deterministic by neighbor order.
    fn paths_from(&self, from: GridPoint, targets: &[GridPoint]) -> HashMap<GridPoint, Vec<GridPoint>> {
        let mut parent: HashMap<GridPoint, GridPoint> = HashMap::from([(from, from)]);
        let mut remaining: HashSet<GridPoint> = targets.iter().copied().filter(|&t| t != from).collect();
        let mut queue = VecDeque::from([from]);
        while let Some(c) = queue.pop_front() {
            if remaining.is_empty() {
                break;
            }
            for q in self.neighbors(c) {
                if let Entry::Vacant(e) = parent.entry(q) {
                    e.insert(c);
                    remaining.remove(&q);
                    queue.push_back(q);
                }
            }
        }
        let mut out = HashMap::new();
        for &t in targets {
            let mut path = vec![t];
            let mut cur = t;
            while cur != from {
                cur = parent[&cur];
                path.push(cur);
            }
            path.reverse();
            out.insert(t, path);
        }
        out
    }

    /// Single-linkage clustering of nodes closer than `radius` pixels that
    /// lie on the same skeleton component and see each other.
    fn merge(&mut self, order: &[GridPoint], radius: f64) {
        let labels = self.component_labels(order);
        let mut live: Vec<usize> = (0..self.nodes.len()).filter(|&n| self.nodes[n].alive).collect();
        live.sort_by_key(|&n| self.nodes[n].pixel.row_major());
        let mut parent: Vec<usize> = (0..live.len()).collect();
        fn find(parent: &mut [usize], i: usize) -> usize {
            let mut r = i;
            while parent[r] != r {
                r = parent[r];
            }
            let mut c = i;
            while parent[c] != r {
                let next = parent[c];
                parent[c] = r;
                c = next;
            }
            r
        }
        let r2 = radius * radius + 1e-9;
        for i in 0..live.len() {
            let pi = self.nodes[live[i]].pixel;
            for j in i + 1..live.len() {
                let pj = self.nodes[live[j]].pixel;
                if (pj.row - pi.row) as f64 > radius {
                    break;
                }
                if pi.dist2(pj) as f64 <= r2 && labels[&pi] == labels[&pj] && line_of_sight(self.grid, pi, pj) {
                    let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                    if a != b {
                        parent[a.max(b)] = a.min(b);
                    }
                }
            }
        }
        let mut clusters: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for i in 0..live.len() {
            let root = find(&mut parent, i);
            clusters.entry(root).or_default().push(live[i]);
        }
        let mut touched = Vec::new();
        for members in clusters.into_values().filter(|m| m.len() > 1) {
            let k = members.len() as f64;
            let cx = members.iter().map(|&m| self.nodes[m].pixel.col as f64).sum::<f64>() / k;
            let cy = members.iter().map(|&m| self.nodes[m].pixel.row as f64).sum::<f64>() / k;
            let comp = labels[&self.nodes[members[0]].pixel];
            let reach = members
                .iter()
                .map(|&m| {
                    let p = self.nodes[m].pixel;
                    ((p.col as f64 - cx).powi(2) + (p.row as f64 - cy).powi(2)).sqrt()
                })
                .fold(0.0, f64::max)
                .ceil() as i32
                + 1;
            let member_set: HashSet<usize> = members.iter().copied().collect();
            let mut rep: Option<(f64, (i32, i32), GridPoint)> = None;
            for row in (cy.floor() as i32 - reach)..=(cy.ceil() as i32 + reach) {
                for col in (cx.floor() as i32 - reach)..=(cx.ceil() as i32 + reach) {
                    let p = GridPoint::new(col, row);
                    if !self.contains(p) || labels[&p] != comp {
                        continue;
                    }
                    if self.at.get(&p).is_some_and(|id| !member_set.contains(id)) {
                        continue;
                    }
                    let d = (col as f64 - cx).powi(2) + (row as f64 - cy).powi(2);
                    let key = (d, p.row_major(), p);
                    if rep.is_none_or(|r| (key.0, key.1) < (r.0, r.1)) {
                        rep = Some(key);
                    }
                }
            }
            let rep = rep.expect("cluster members are candidates").2;
            let junction = members.iter().any(|&m| self.nodes[m].junction);
            let turn = !junction && members.iter().any(|&m| self.nodes[m].turn);
            let pixels: Vec<GridPoint> = members.iter().map(|&m| self.nodes[m].pixel).collect();
            let paths = self.paths_from(rep, &pixels);
            for &m in &members {
                self.kill_node(m);
            }
            let id = self.add_node(rep, turn);
            self.nodes[id].junction = junction;
            self.nodes[id].turn = turn;
            for ci in 0..self.chains.len() {
                if !self.chains[ci].alive {
                    continue;
                }
                let (a, b) = (self.chains[ci].a, self.chains[ci].b);
                if member_set.contains(&a) && a != id {
                    let lead = &paths[&self.nodes[a].pixel];
                    let c = &mut self.chains[ci];
                    let mut px = lead.clone();
                    px.extend_from_slice(&c.px[1..]);
                    c.px = px;
                    c.a = id;
                }
                if member_set.contains(&b) && b != id {
                    let tail = &paths[&self.nodes[b].pixel];
                    let c = &mut self.chains[ci];
                    c.px.extend(tail.iter().rev().skip(1));
                    c.b = id;
                }
                if member_set.contains(&a) || member_set.contains(&b) {
                    touched.push(ci);
                }
            }
        }
        touched.sort_unstable();
        touched.dedup();
        for ci in touched {
            if self.chains[ci].alive && self.chains[ci].a == self.chains[ci].b {
                self.fix_self_loop(ci, radius);
            }
        }
    }

    fn prune_and_dissolve(&mut self, spur_px: f64, threshold: f64) {
        loop {
            let mut changed = false;
            let mut deg = self.degrees();
            for ci in self.live_chains() {
                let (a, b) = (self.chains[ci].a, self.chains[ci].b);
                let (leaf, other) = if deg[a] == 1 && deg[b] >= 3 {
                    (a, b)
                } else if deg[b] == 1 && deg[a] >= 3 {
                    (b, a)
                } else {
                    continue;
                };
                if polyline_len(&self.chains[ci].px) < spur_px {
                    self.chains[ci].alive = false;
                    self.kill_node(leaf);
                    deg[leaf] = 0;
                    deg[other] -= 1;
                    changed = true;
                }
            }

            let mut incident: Vec<Vec<usize>> = vec![Vec::new(); self.nodes.len()];
            for ci in self.live_chains() {
                incident[self.chains[ci].a].push(ci);
                incident[self.chains[ci].b].push(ci);
            }
            for n in 0..self.nodes.len() {
                if !self.nodes[n].alive || self.nodes[n].turn || incident[n].len() != 2 {
                    continue;
                }
                let (c1, c2) = (incident[n][0], incident[n][1]);
                if c1 == c2 || !self.chains[c1].alive || !self.chains[c2].alive {
                    continue;
                }
                let o1 = self.chains[c1].a + self.chains[c1].b - n;
                let o2 = self.chains[c2].a + self.chains[c2].b - n;
                if o1 == o2 || o1 == n || o2 == n {
                    continue;
                }
                let p = self.nodes[n].pixel;
                if turn_angle(self.nodes[o1].pixel, p, self.nodes[o2].pixel) > threshold {
                    self.nodes[n].turn = true;
                    continue;
                }
                let mut first = self.chains[c1].px.clone();
                if self.chains[c1].a == n {
                    first.reverse();
                }
                let mut second = self.chains[c2].px.clone();
                if self.chains[c2].b == n {
                    second.reverse();
                }
                first.extend_from_slice(&second[1..]);
                self.chains[c1].alive = false;
                self.chains[c2].alive = false;
                self.kill_node(n);
                let new = self.add_chain(o1, o2, first);
                for o in [o1, o2] {
                    for c in incident[o].iter_mut() {
                        if *c == c1 || *c == c2 {
                            *c = new;
                        }
                    }
                }
                changed = true;
            }
            if !changed {
                break;
            }
        }
    }

    /// Splits every chain whose straight chord is blocked at the pixel
    /// farthest from the chord, until all chords see through.
    fn enforce_line_of_sight(&mut self) {
        let mut stack = self.live_chains();
        stack.reverse();
        while let Some(ci) = stack.pop() {
            let c = &self.chains[ci];
            let (first, last) = (c.px[0], *c.px.last().expect("non-empty"));
            if line_of_sight(self.grid, first, last) {
                continue;
            }
            let (dx, dy) = ((last.col - first.col) as f64, (last.row - first.row) as f64);
            let norm = (dx * dx + dy * dy).sqrt();
            let score = |p: GridPoint| {
                let (vx, vy) = ((p.col - first.col) as f64, (p.row - first.row) as f64);
                if norm > 0.0 {
                    (dx * vy - dy * vx).abs() / norm
                } else {
                    (vx * vx + vy * vy).sqrt()
                }
            };
            let mut best: Option<(usize, f64)> = None;
            for k in 1..c.px.len() - 1 {
                if c.px[k] == first || c.px[k] == last {
                    continue;
                }
                let s = score(c.px[k]);
                if best.is_none_or(|(_, b)| s > b + 1e-12) {
                    best = Some((k, s));
                }
            }
            match best {
                Some((k, _)) => {
                    let pieces = self.split(ci, &[k], true);
                    stack.extend(pieces.into_iter().rev());
                }
                None => self.chains[ci].alive = false,
            }
        }
    }

    fn finish(self) -> TopologyGraph {
        let mut live: Vec<usize> = (0..self.nodes.len()).filter(|&n| self.nodes[n].alive).collect();
        live.sort_by_key(|&n| self.nodes[n].pixel.row_major());
        let mut id_of = vec![usize::MAX; self.nodes.len()];
        for (id, &n) in live.iter().enumerate() {
            id_of[n] = id;
        }
        let mut keys: Vec<(usize, usize)> = self
            .chains
            .iter()
            .filter(|c| c.alive && c.a != c.b)
            .map(|c| {
                let (a, b) = (id_of[c.a], id_of[c.b]);
                (a.min(b), a.max(b))
            })
            .collect();
        keys.sort_unstable();
        keys.dedup();
        let mut degree = vec![0; live.len()];
        for &(a, b) in &keys {
            degree[a] += 1;
            degree[b] += 1;
        }
        let nodes: Vec<TopoNode> = live
            .iter()
            .enumerate()
            .map(|(id, &n)| {
                let p = self.grid.grid_to_world(self.nodes[n].pixel);
                let kind = match degree[id] {
                    0 | 1 => NodeKind::Endpoint,
                    2 => NodeKind::Turn,
                    _ => NodeKind::Junction,
                };
                TopoNode { id, x: p.x, y: p.y, kind }
            })
            .collect();
        let edges = keys
            .into_iter()
            .map(|(a, b)| TopoEdge { a, b, length: nodes[a].position().distance(nodes[b].position()) })
            .collect();
        TopologyGraph { schema_version: SCHEMA_VERSION, nodes, edges, bindings: BTreeMap::new() }
    }
}

/// Turns a skeleton into a navigation graph.
///
/// Steps: node pixels (degree != 2), chain tracing, sliding-window turn
/// detection, single-linkage node merging, spur pruning with collinear
/// degree-2 dissolution, and line-of-sight subdivision. Node kinds are
/// assigned from the final degree (1 endpoint, 2 turn, 3+ junction) and ids
/// follow row-major pixel order.
pub fn extract_graph(
    skeleton: &[GridPoint],
    grid: &OccupancyGrid,
    cfg: &TopologyConfig,
) -> Result<TopologyGraph, TopologyError> {
    cfg.validate()?;
    if skeleton.is_empty() {
        return Err(TopologyError::EmptySkeleton);
    }
    let mut order = skeleton.to_vec();
    order.sort_by_key(|p| p.row_major());
    order.dedup();
    let (width, height) = (grid.width() as i32, grid.height() as i32);
    let mut skel = vec![false; grid.width() * grid.height()];
    for &p in &order {
        if !grid.is_free(p) {
            return Err(TopologyError::InvalidParameter(format!("skeleton pixel ({}, {}) is not free", p.col, p.row)));
        }
        skel[grid.index(p).expect("free implies in bounds")] = true;
    }
    let mut work = Work { grid, width, height, skel, nodes: Vec::new(), chains: Vec::new(), at: HashMap::new() };
    let threshold = cfg.turn_threshold_deg.to_radians();
    let res = grid.resolution();

    work.trace(&order);
    work.detect_turns(cfg.turn_window, threshold);
    work.merge(&order, cfg.merge_radius / res);
    work.prune_and_dissolve(cfg.spur_length / res, threshold);
    work.enforce_line_of_sight();
    Ok(work.finish())
}
