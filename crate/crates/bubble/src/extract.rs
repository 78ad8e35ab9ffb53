use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::neck::certify_neck;
use crate::scenario::{dist, AtomField, Ball, Point, Scenario};
use crate::tree::{BubbleNode, BubbleTree, NodeKind};
use crate::{BubbleError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Ratios judged by their exponent in `eps`.
    Limit,
    /// Ratios judged against `sep_threshold` at the scenario's `eps`.
    Numeric,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtractionConfig {
    pub delta: f64,
    /// Energy bound on a neck annulus.
    pub delta0: f64,
    /// Halo multiplier `K`: an extracted bubble removes `B_{K lambda}(p)`.
    pub halo_k: f64,
    pub sep_threshold: f64,
    pub mode: Mode,
    /// Outer neck radius towards a parent of scale `mu` is `mu / neck_divisor`.
    pub neck_divisor: f64,
    /// Outer neck radius towards the ambient manifold.
    pub sigma: f64,
    /// Fixed scale against which the final roots are grouped.
    pub ambient_scale: f64,
    /// Annulus atoms closer than `edge_factor * r2` are adjacent.
    pub edge_factor: f64,
    /// Annulus components lighter than this are not counted as separate
    /// pieces of the neck.
    pub component_min_energy: f64,
    /// Largest atom count allowed in the shell `[r1, 100 r1]` of a neck.
    pub shell_atom_bound: usize,
}

impl Default for ExtractionConfig {
    fn default() -> Self {
        ExtractionConfig {
            delta: 0.1,
            delta0: 0.1,
            halo_k: 10.0,
            sep_threshold: 100.0,
            mode: Mode::Limit,
            neck_divisor: 2.0,
            sigma: 0.25,
            ambient_scale: 1.0,
            edge_factor: 1.0,
            component_min_energy: 0.01,
            shell_atom_bound: 64,
        }
    }
}

impl ExtractionConfig {
    pub fn with_mode(mode: Mode) -> Self {
        ExtractionConfig { mode, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(BubbleError::InvalidConfig(m));
        if !(self.delta0 > 0.0 && self.delta0 <= self.delta) {
            return bad(format!("needs 0 < delta0 <= delta, got delta0 = {}, delta = {}", self.delta0, self.delta));
        }
        if !(self.sep_threshold > 1.0) {
            return bad(format!("sep_threshold = {} must exceed 1", self.sep_threshold));
        }
        if !(self.halo_k >= 1.0) {
            return bad(format!("halo_k = {} must be at least 1", self.halo_k));
        }
        if !(self.neck_divisor >= 1.0) || !(self.sigma > 0.0) || !(self.ambient_scale > 0.0) || !(self.edge_factor > 0.0)
            || !(self.component_min_energy >= 0.0)
        {
            return bad("neck_divisor >= 1, positive sigma, ambient_scale, edge_factor and component_min_energy >= 0 required".into());
        }
        Ok(())
    }
}

/// Mass of the atoms in `B_r(p)` that lie outside every exclusion ball.
pub fn ball_energy(field: &AtomField, p: &Point, r: f64, exclusion: &[Ball]) -> f64 {
    field
        .atoms
        .iter()
        .filter(|a| dist(&a.pos, p) <= r && !exclusion.iter().any(|b| b.contains(&a.pos)))
        .fold(0.0, |s, a| s + a.mass)
}

/// Atoms left after the exclusions.
struct Remaining {
    pos: Vec<Point>,
    mass: Vec<f64>,
    total: f64,
}

impl Remaining {
    fn new(field: &AtomField, exclusion: &[Ball]) -> Self {
        let (pos, mass): (Vec<Point>, Vec<f64>) = field
            .atoms
            .iter()
            .filter(|a| !exclusion.iter().any(|b| b.contains(&a.pos)))
            .map(|a| (a.pos, a.mass))
            .unzip();
        let total = mass.iter().sum();
        Remaining { pos, mass, total }
    }

    fn within(&self, p: &Point, r: f64) -> f64 {
        self.pos.iter().zip(&self.mass).filter(|(x, _)| dist(x, p) <= r).map(|(_, m)| m).sum()
    }

    fn scale(&self, p: &Point, target: f64) -> f64 {
        if self.total < target {
            return f64::INFINITY;
        }
        let mut d: Vec<(f64, f64)> = self.pos.iter().zip(&self.mass).map(|(x, m)| (dist(x, p), *m)).collect();
        d.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut acc = 0.0;
        for (r, m) in d {
            acc += m;
            if acc >= target {
                return r;
            }
        }
        f64::INFINITY
    }
}

/// Half of `delta`, less a rounding allowance for sums of equal atom masses.
fn half(delta: f64) -> f64 {
    0.5 * delta * (1.0 - 1e-12)
}

/// Smallest `r` with `ball_energy(p, r) >= delta/2`; infinite when the
/// remaining energy is below `delta/2`.
pub fn concentration_scale(field: &AtomField, p: &Point, exclusion: &[Ball], delta: f64) -> f64 {
    Remaining::new(field, exclusion).scale(p, half(delta))
}

fn lex(a: &Point, b: &Point) -> Ordering {
    a.iter().zip(b).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(Ordering::Equal)
}

/// Candidate outside the exclusion with the smallest concentration scale;
/// ties go to the lexicographically smallest point.
pub fn select_center(field: &AtomField, exclusion: &[Ball], delta: f64) -> Result<(Point, f64)> {
    let rem = Remaining::new(field, exclusion);
    let target = half(delta);
    if rem.total < target {
        return Err(BubbleError::NoConcentration);
    }
    let mut best: Option<(f64, Point)> = None;
    for p in field.candidates.iter().filter(|p| !exclusion.iter().any(|b| b.contains(p))) {
        if let Some((s, q)) = &best {
            // cheap rejection: s(p) > s unless B_s(p) already holds delta/2
            if rem.within(p, *s) < target {
                continue;
            }
            let sp = rem.scale(p, target);
            if sp < *s || (sp == *s && lex(p, q).is_lt()) {
                best = Some((sp, *p));
            }
        } else {
            best = Some((rem.scale(p, target), *p));
        }
    }
    match best {
        Some((s, p)) if s.is_finite() => Ok((p, s)),
        _ => Err(BubbleError::NoConcentration),
    }
}

/// A center and scale, with the planted bubble it is attributed to and the
/// exponent of its scale (needed in limit mode).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Bubble {
    pub center: Point,
    pub scale: f64,
    pub anchor: Option<usize>,
    pub scale_exp: Option<f64>,
}

impl Bubble {
    pub fn numeric(center: Point, scale: f64) -> Self {
        Bubble { center, scale, anchor: None, scale_exp: None }
    }

    /// Exact center and scale of planted bubble `i`.
    pub fn planted(scenario: &Scenario, i: usize) -> Self {
        Bubble {
            center: scenario.center(i),
            scale: scenario.scale(i),
            anchor: Some(i),
            scale_exp: Some(scenario.planted[i].beta),
        }
    }
}

/// Behaviour of a ratio as `eps -> 0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Trend {
    Zero,
    Bounded,
    Infinite,
}

impl Trend {
    pub fn bounded(self) -> bool {
        self != Trend::Infinite
    }
}

/// Relation of the second bubble of a pair to the first.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    Separable,
    ParentOf,
    ChildOf,
}

const EXP_TOL: f64 = 1e-9;

/// Decides limits of ratios, by exponents or by thresholds.
#[derive(Clone, Copy)]
pub struct Judge<'a> {
    pub mode: Mode,
    pub scenario: &'a Scenario,
    pub threshold: f64,
}

impl<'a> Judge<'a> {
    pub fn new(mode: Mode, scenario: &'a Scenario, threshold: f64) -> Self {
        Judge { mode, scenario, threshold }
    }

    fn by_value(&self, v: f64) -> Trend {
        if v > self.threshold {
            Trend::Infinite
        } else if v < 1.0 / self.threshold {
            Trend::Zero
        } else {
            Trend::Bounded
        }
    }

    /// Ratio `~ eps^x`.
    fn by_exponent(x: f64) -> Trend {
        if x < -EXP_TOL {
            Trend::Infinite
        } else if x > EXP_TOL {
            Trend::Zero
        } else {
            Trend::Bounded
        }
    }

    fn missing(what: &str) -> BubbleError {
        BubbleError::InconsistentFamily(format!("limit mode needs exponent data for {what}"))
    }

    fn dist_exponent(&self, a: &Bubble, b: &Bubble) -> Result<f64> {
        match (a.anchor, b.anchor) {
            (Some(x), Some(y)) => Ok(self.scenario.distance_exponent(x, y)),
            _ => Err(Self::missing("a distance")),
        }
    }

    /// `dist(a, b) / scale` where the scale has exponent `scale_exp`.
    pub fn dist_over(&self, a: &Bubble, b: &Bubble, scale: f64, scale_exp: Option<f64>) -> Result<Trend> {
        match self.mode {
            Mode::Numeric => Ok(self.by_value(dist(&a.center, &b.center) / scale)),
            Mode::Limit => {
                let e = scale_exp.ok_or_else(|| Self::missing("a scale"))?;
                let d = self.dist_exponent(a, b)?;
                Ok(if d.is_infinite() { Trend::Zero } else { Self::by_exponent(d - e) })
            }
        }
    }

    /// `lambda_num / lambda_den`.
    pub fn scale_over(&self, num: &Bubble, den: &Bubble) -> Result<Trend> {
        match self.mode {
            Mode::Numeric => Ok(self.by_value(num.scale / den.scale)),
            Mode::Limit => match (num.scale_exp, den.scale_exp) {
                (Some(x), Some(y)) => Ok(Self::by_exponent(x - y)),
                _ => Err(Self::missing("a scale")),
            },
        }
    }
}

/// Case split for a pair: separable when `dist / lambda` diverges for both
/// scales, otherwise the bubble with the much larger scale is the parent.
pub fn classify_pair(a: &Bubble, b: &Bubble, judge: &Judge) -> Result<Relation> {
    let da = judge.dist_over(a, b, a.scale, a.scale_exp)?;
    let db = judge.dist_over(a, b, b.scale, b.scale_exp)?;
    if da == Trend::Infinite && db == Trend::Infinite {
        return Ok(Relation::Separable);
    }
    if db.bounded() && judge.scale_over(b, a)? == Trend::Infinite {
        return Ok(Relation::ParentOf);
    }
    if da.bounded() && judge.scale_over(a, b)? == Trend::Infinite {
        return Ok(Relation::ChildOf);
    }
    Err(BubbleError::InconsistentFamily(format!(
        "bubbles at {:?} and {:?} are neither separable nor nested (dist/lambda: {da:?}, {db:?})",
        a.center, b.center
    )))
}

/// `lambda2 / lambda1 + dist(p1, p2) / lambda1 -> infinity` for a bubble
/// found after excluding the halo of the first.
pub fn lemma42_check(prev: &Bubble, next: &Bubble, judge: &Judge) -> bool {
    match judge.mode {
        Mode::Numeric => (next.scale + dist(&prev.center, &next.center)) / prev.scale > judge.threshold,
        Mode::Limit => {
            let a = judge.scale_over(next, prev);
            let b = judge.dist_over(prev, next, prev.scale, prev.scale_exp);
            matches!(a, Ok(Trend::Infinite)) || matches!(b, Ok(Trend::Infinite))
        }
    }
}

/// Result of exotic grouping: members by index, or new exotic nodes.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Group {
    Member(usize),
    Exotic { bubble: Bubble, children: Vec<Group> },
}

/// Repeatedly merges the closest pair whose distance is negligible against
/// `scale`: with `mu` that distance, every bubble within a bounded multiple
/// of `mu` of the first of the pair joins one exotic node centered there at
/// scale `mu`. Stops once all remaining distances are comparable to
/// `scale`.
pub fn group_exotic(members: &[Bubble], scale: f64, scale_exp: Option<f64>, judge: &Judge) -> Result<Vec<Group>> {
    let mut items: Vec<(Bubble, Group)> = members.iter().cloned().enumerate().map(|(i, b)| (b, Group::Member(i))).collect();
    loop {
        // closest collapsing pair; limit mode ranks by exponent first
        let mut pick: Option<(f64, f64, usize, usize)> = None;
        for i in 0..items.len() {
            for j in i + 1..items.len() {
                let (a, b) = (&items[i].0, &items[j].0);
                if judge.dist_over(a, b, scale, scale_exp)? != Trend::Zero {
                    continue;
                }
                let d = dist(&a.center, &b.center);
                let key = match judge.mode {
                    Mode::Limit => -judge.dist_exponent(a, b)?,
                    Mode::Numeric => 0.0,
                };
                if pick.map_or(true, |(k, pd, _, _)| (key, d) < (k, pd)) {
                    pick = Some((key, d, i, j));
                }
            }
        }
        let Some((_, mu, i1, i2)) = pick else { break };
        let mu_exp = match judge.mode {
            Mode::Limit => Some(judge.dist_exponent(&items[i1].0, &items[i2].0)?),
            Mode::Numeric => None,
        };
        if !(mu > 0.0) || mu_exp.is_some_and(f64::is_infinite) {
            return Err(BubbleError::InconsistentFamily("two bubbles share a center".into()));
        }
        let head = items[i1].0.clone();
        let mut joined = Vec::new();
        for k in 0..items.len() {
            if k == i1 || k == i2 || judge.dist_over(&head, &items[k].0, mu, mu_exp)?.bounded() {
                joined.push(k);
            }
        }
        let bubble = Bubble { center: head.center, scale: mu, anchor: head.anchor, scale_exp: mu_exp };
        let children = joined.iter().map(|&k| items[k].1.clone()).collect();
        let node = (bubble.clone(), Group::Exotic { bubble, children });
        let at = i1 - joined.iter().filter(|&&k| k < i1).count();
        for &k in joined.iter().rev() {
            items.remove(k);
        }
        items.insert(at, node);
    }
    Ok(items.into_iter().map(|(_, g)| g).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum TraceEvent {
    Extracted {
        node: usize,
        center: Point,
        scale: f64,
        planted: Option<String>,
        /// Energy removed by the halo `B_{K lambda}(p)`.
        captured: f64,
        /// The halo holds at least `e - delta/4` of the attributed bubble.
        halo_ok: Option<bool>,
        /// Divergence of `lambda/lambda_j + dist/lambda_j` against every
        /// earlier extraction.
        lemma42_ok: bool,
    },
    NewRoot { node: usize },
    Adopted { parent: usize, children: Vec<usize>, lemma42_ok: bool },
    Exotic { node: usize, scale: f64, children: Vec<usize>, parent_scale_ratio: Trend },
    Stopped { remaining: f64, extractions: usize },
}

struct Builder<'a> {
    scenario: &'a Scenario,
    nodes: Vec<BubbleNode>,
    bubbles: Vec<Bubble>,
    trace: Vec<TraceEvent>,
}

impl Builder<'_> {
    fn push(&mut self, b: Bubble, kind: NodeKind, energy: f64) -> usize {
        let id = self.nodes.len();
        self.nodes.push(BubbleNode {
            id,
            kind,
            center: b.center,
            scale: b.scale,
            energy,
            planted: if kind == NodeKind::Exotic { None } else { b.anchor.map(|a| self.scenario.planted[a].id.clone()) },
            parent: None,
            children: Vec::new(),
            certificate: None,
        });
        self.bubbles.push(b);
        id
    }

    /// Turns a grouping into nodes; `ids[i]` is the node of member `i`.
    fn materialize(&mut self, g: &Group, ids: &[usize], outer: &Bubble, judge: &Judge) -> Result<usize> {
        match g {
            Group::Member(i) => Ok(ids[*i]),
            Group::Exotic { bubble, children } => {
                let mut kids = Vec::new();
                for c in children {
                    kids.push(self.materialize(c, ids, bubble, judge)?);
                }
                let id = self.push(bubble.clone(), NodeKind::Exotic, 0.0);
                for &k in &kids {
                    self.nodes[k].parent = Some(id);
                }
                self.nodes[id].children = kids.clone();
                let ratio = judge.scale_over(outer, bubble)?;
                self.trace.push(TraceEvent::Exotic { node: id, scale: bubble.scale, children: kids, parent_scale_ratio: ratio });
                Ok(id)
            }
        }
    }
}

/// The extraction loop: pick the smallest concentration scale outside all
/// halos, attach it as a new root or as the parent of the roots it
/// dominates (grouping collapsing ones into exotic nodes first), and stop
/// when less than `delta/2` remains. Final roots are grouped against the
/// fixed ambient scale, and every edge gets a neck certificate.
pub fn build_tree(scenario: &Scenario, config: &ExtractionConfig) -> Result<BubbleTree> {
    config.validate()?;
    scenario.validate()?;
    scenario.check_energies(config.delta)?;
    let judge = Judge::new(config.mode, scenario, config.sep_threshold);
    let field = scenario.field();
    let bound = 2.0 * scenario.lambda_total / config.delta;
    let mut bld = Builder { scenario, nodes: Vec::new(), bubbles: Vec::new(), trace: Vec::new() };
    let mut halos: Vec<Ball> = Vec::new();
    let mut extracted: Vec<usize> = Vec::new();
    let mut roots: Vec<usize> = Vec::new();

    loop {
        let (p, lambda) = match select_center(&field, &halos, config.delta) {
            Ok(x) => x,
            Err(BubbleError::NoConcentration) => break,
            Err(e) => return Err(e),
        };
        if extracted.len() + 1 > bound.floor() as usize + 1 {
            return Err(BubbleError::IterationBoundExceeded { count: extracted.len() + 1, bound });
        }
        let halo = Ball { center: p, radius: config.halo_k * lambda };
        let active = |pos: &Point| !halos.iter().any(|h| h.contains(pos));

        // attribute to the planted bubble owning most of the mass in B_lambda(p)
        let mut by_owner = vec![0.0; scenario.planted.len()];
        let mut captured = 0.0;
        for a in field.atoms.iter().filter(|a| active(&a.pos)) {
            if halo.contains(&a.pos) {
                captured += a.mass;
            }
            if let (Some(o), true) = (a.owner, dist(&a.pos, &p) <= lambda) {
                by_owner[o] += a.mass;
            }
        }
        let owner = (0..by_owner.len())
            .filter(|&o| by_owner[o] > 0.0)
            .fold(None, |best: Option<usize>, o| match best {
                Some(b) if by_owner[b] >= by_owner[o] => Some(b),
                _ => Some(o),
            });
        let halo_ok = owner.map(|o| {
            let held: f64 = field.atoms.iter().filter(|a| a.owner == Some(o) && halo.contains(&a.pos)).map(|a| a.mass).sum();
            held >= scenario.planted[o].energy - 0.25 * config.delta
        });
        let bubble = Bubble { center: p, scale: lambda, anchor: owner, scale_exp: owner.map(|o| scenario.planted[o].beta) };
        let lemma42_ok = extracted.iter().all(|&j| lemma42_check(&bld.bubbles[j], &bubble, &judge));
        let k = bld.push(bubble.clone(), NodeKind::Leaf, captured);
        bld.trace.push(TraceEvent::Extracted {
            node: k,
            center: p,
            scale: lambda,
            planted: bld.nodes[k].planted.clone(),
            captured,
            halo_ok,
            lemma42_ok,
        });

        let mut adopted = Vec::new();
        for &r in &roots {
            match classify_pair(&bld.bubbles[r], &bubble, &judge)? {
                Relation::Separable => {}
                Relation::ParentOf => adopted.push(r),
                Relation::ChildOf => {
                    return Err(BubbleError::InconsistentFamily(format!(
                        "bubble {k} lies inside the scale of the earlier root {r}; smallest-first order is broken"
                    )))
                }
            }
        }
        if adopted.is_empty() {
            roots.push(k);
            bld.trace.push(TraceEvent::NewRoot { node: k });
        } else {
            let members: Vec<Bubble> = adopted.iter().map(|&r| bld.bubbles[r].clone()).collect();
            let lemma42_ok = members.iter().all(|m| lemma42_check(m, &bubble, &judge));
            let groups = group_exotic(&members, lambda, bubble.scale_exp, &judge)?;
            let mut kids = Vec::new();
            for g in &groups {
                kids.push(bld.materialize(g, &adopted, &bubble, &judge)?);
            }
            for &c in &kids {
                bld.nodes[c].parent = Some(k);
            }
            bld.nodes[k].children = kids.clone();
            roots.retain(|r| !adopted.contains(r));
            roots.push(k);
            bld.trace.push(TraceEvent::Adopted { parent: k, children: kids, lemma42_ok });
        }
        extracted.push(k);
        halos.push(halo);
    }
    let remaining = field.atoms.iter().filter(|a| !halos.iter().any(|h| h.contains(&a.pos))).map(|a| a.mass).sum();
    bld.trace.push(TraceEvent::Stopped { remaining, extractions: extracted.len() });

    // roots whose centers still collapse at the fixed ambient scale
    let ambient = Bubble { center: [0.0; 4], scale: config.ambient_scale, anchor: None, scale_exp: Some(0.0) };
    let members: Vec<Bubble> = roots.iter().map(|&r| bld.bubbles[r].clone()).collect();
    let groups = group_exotic(&members, ambient.scale, ambient.scale_exp, &judge)?;
    let mut top = Vec::new();
    for g in &groups {
        top.push(bld.materialize(g, &roots, &ambient, &judge)?);
    }

    let mut nodes = bld.nodes;
    for i in 0..nodes.len() {
        let n = &nodes[i];
        let kind = if n.kind == NodeKind::Exotic {
            NodeKind::Exotic
        } else if n.children.is_empty() {
            NodeKind::Leaf
        } else if n.parent.is_none() {
            NodeKind::Root
        } else {
            NodeKind::Intermediate
        };
        let r1 = config.halo_k * n.scale;
        let r2 = match n.parent {
            Some(q) => nodes[q].scale / config.neck_divisor,
            None => config.sigma,
        };
        let cert = certify_neck(&field, &n.center, r1, r2, config);
        nodes[i].kind = kind;
        nodes[i].certificate = Some(cert);
    }
    Ok(BubbleTree {
        mode: config.mode,
        epsilon: scenario.epsilon,
        delta: config.delta,
        lambda_total: scenario.lambda_total,
        extractions: extracted.len(),
        count_bound: bound,
        nodes,
        roots: top,
        trace: bld.trace,
    })
}
