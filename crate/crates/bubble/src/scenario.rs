use std::collections::{HashMap, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{BubbleError, Result};

pub type Point = [f64; 4];

pub fn dist(a: &Point, b: &Point) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Closed ball `|x - center| <= radius`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: Point,
    pub radius: f64,
}

impl Ball {
    pub fn contains(&self, x: &Point) -> bool {
        dist(&self.center, x) <= self.radius
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyAtom {
    pub pos: Point,
    pub mass: f64,
    /// Index of the planted bubble the atom belongs to; `None` for background.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub owner: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlantedBubble {
    pub id: String,
    pub parent: Option<String>,
    pub offset_dir: Point,
    pub gamma: f64,
    pub d0: f64,
    pub lambda0: f64,
    pub beta: f64,
    pub energy: f64,
    /// A grouping node without energy of its own; `beta` is then the
    /// exponent of the smallest distance between its children.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub exotic: bool,
}

/// Diffuse atoms spread uniformly over a ball about the origin.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Background {
    pub count: usize,
    pub total_mass: f64,
    pub radius: f64,
}

fn default_atoms() -> usize {
    256
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    #[serde(rename = "Lambda")]
    pub lambda_total: f64,
    pub epsilon: f64,
    pub seed: u64,
    #[serde(default = "default_atoms")]
    pub atoms_per_bubble: usize,
    #[serde(default)]
    pub background: Option<Background>,
    pub planted: Vec<PlantedBubble>,
}

const EXP_TOL: f64 = 1e-9;

impl Scenario {
    pub fn from_json(s: &str) -> Result<Self> {
        let sc: Scenario = serde_json::from_str(s)?;
        sc.validate()?;
        Ok(sc)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serialises") + "\n"
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.planted.iter().position(|b| b.id == id)
    }

    pub fn parent_index(&self, i: usize) -> Option<usize> {
        self.planted[i].parent.as_deref().and_then(|p| self.index_of(p))
    }

    pub fn children(&self, i: usize) -> Vec<usize> {
        (0..self.planted.len()).filter(|&j| self.parent_index(j) == Some(i)).collect()
    }

    /// `i` followed by its ancestors up to the root.
    fn chain(&self, i: usize) -> Vec<usize> {
        let mut out = vec![i];
        let mut cur = i;
        while let Some(p) = self.parent_index(cur) {
            if out.len() > self.planted.len() {
                break;
            }
            out.push(p);
            cur = p;
        }
        out
    }

    pub fn is_ancestor(&self, a: usize, b: usize) -> bool {
        a != b && self.chain(b).contains(&a)
    }

    pub fn center(&self, i: usize) -> Point {
        let mut c = [0.0; 4];
        for k in self.chain(i) {
            let b = &self.planted[k];
            let s = b.d0 * self.epsilon.powf(b.gamma);
            for (ci, di) in c.iter_mut().zip(&b.offset_dir) {
                *ci += s * di;
            }
        }
        c
    }

    pub fn scale(&self, i: usize) -> f64 {
        let b = &self.planted[i];
        b.lambda0 * self.epsilon.powf(b.beta)
    }

    /// Exponent `x` with `|c_a(eps) - c_b(eps)| ~ eps^x`; infinite when the
    /// two centers coincide identically.
    pub fn distance_exponent(&self, a: usize, b: usize) -> f64 {
        let (ca, cb) = (self.chain(a), self.chain(b));
        let mut terms: Vec<(f64, Point)> = Vec::new();
        for (chain, other, sign) in [(&ca, &cb, 1.0), (&cb, &ca, -1.0)] {
            for &k in chain.iter().filter(|k| !other.contains(k)) {
                let p = &self.planted[k];
                terms.push((p.gamma, p.offset_dir.map(|d| sign * p.d0 * d)));
            }
        }
        terms.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut i = 0;
        while i < terms.len() {
            let g = terms[i].0;
            let mut sum = [0.0; 4];
            let mut size = 0.0;
            while i < terms.len() && terms[i].0 - g <= EXP_TOL {
                for (s, v) in sum.iter_mut().zip(&terms[i].1) {
                    *s += v;
                }
                size += dist(&terms[i].1, &[0.0; 4]);
                i += 1;
            }
            if dist(&sum, &[0.0; 4]) > 1e-12 * size {
                return g;
            }
        }
        f64::INFINITY
    }

    pub fn total_energy(&self) -> f64 {
        self.planted.iter().map(|b| b.energy).sum::<f64>() + self.background.map_or(0.0, |b| b.total_mass)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(BubbleError::InvalidScenario(m));
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return bad(format!("epsilon = {} must lie in (0, 1)", self.epsilon));
        }
        if self.atoms_per_bubble < 32 {
            return bad(format!("atoms_per_bubble = {} is below 32", self.atoms_per_bubble));
        }
        let mut ids = HashSet::new();
        for b in &self.planted {
            if !ids.insert(b.id.as_str()) {
                return bad(format!("duplicate id {:?}", b.id));
            }
        }
        for (i, b) in self.planted.iter().enumerate() {
            if let Some(p) = &b.parent {
                if self.index_of(p).is_none() {
                    return bad(format!("{:?} names the unknown parent {p:?}", b.id));
                }
            }
            if self.chain(i).len() > self.planted.len() {
                return bad(format!("{:?} sits on a parent cycle", b.id));
            }
            if ((b.offset_dir.iter().map(|x| x * x).sum::<f64>()).sqrt() - 1.0).abs() > 1e-9 {
                return bad(format!("{:?}: offset_dir is not a unit vector", b.id));
            }
            if !(b.gamma >= 0.0) || !(b.d0 > 0.0) || !(b.lambda0 > 0.0) || !b.beta.is_finite() {
                return bad(format!("{:?}: needs gamma >= 0, d0 > 0, lambda0 > 0", b.id));
            }
            if b.parent.is_some() && !(b.beta > b.gamma) {
                return bad(format!("{:?}: a nested bubble needs beta > gamma ({} <= {})", b.id, b.beta, b.gamma));
            }
            if b.exotic {
                if b.energy != 0.0 {
                    return bad(format!("exotic node {:?} carries energy", b.id));
                }
                let kids = self.children(i);
                if kids.len() < 2 {
                    return bad(format!("exotic node {:?} has fewer than two children", b.id));
                }
                let mu = kids
                    .iter()
                    .enumerate()
                    .flat_map(|(n, &x)| kids[n + 1..].iter().map(move |&y| (x, y)))
                    .map(|(x, y)| self.distance_exponent(x, y))
                    .fold(f64::NEG_INFINITY, f64::max);
                if (mu - b.beta).abs() > EXP_TOL {
                    return bad(format!(
                        "exotic node {:?}: beta = {} differs from the closest-children exponent {mu}",
                        b.id, b.beta
                    ));
                }
            } else if !(b.energy > 0.0 && b.energy.is_finite()) {
                return bad(format!("{:?}: energy must be positive", b.id));
            }
        }
        if let Some(bg) = &self.background {
            if bg.count == 0 || !(bg.total_mass >= 0.0) || !(bg.radius > 0.0) {
                return bad("background needs count > 0, total_mass >= 0, radius > 0".into());
            }
        }
        let total = self.total_energy();
        if total > self.lambda_total * (1.0 + 1e-12) {
            return bad(format!("total energy {total} exceeds Lambda = {}", self.lambda_total));
        }
        let solid: Vec<usize> = (0..self.planted.len()).filter(|&i| !self.planted[i].exotic).collect();
        let centers: HashMap<usize, Point> = solid.iter().map(|&i| (i, self.center(i))).collect();
        for (n, &a) in solid.iter().enumerate() {
            for &b in &solid[n + 1..] {
                if self.is_ancestor(a, b) || self.is_ancestor(b, a) {
                    continue;
                }
                if dist(&centers[&a], &centers[&b]) <= self.scale(a) + self.scale(b) {
                    return bad(format!(
                        "atom clouds of {:?} and {:?} overlap at eps = {}",
                        self.planted[a].id, self.planted[b].id, self.epsilon
                    ));
                }
            }
        }
        Ok(())
    }

    /// Every solid bubble carries at least `delta`, so that it triggers
    /// extraction.
    pub fn check_energies(&self, delta: f64) -> Result<()> {
        for b in self.planted.iter().filter(|b| !b.exotic) {
            if b.energy < delta {
                return Err(BubbleError::InvalidScenario(format!(
                    "{:?}: energy {} is below delta = {delta}",
                    b.id, b.energy
                )));
            }
        }
        Ok(())
    }

    /// Atoms at the scenario's `eps`, bubble by bubble in file order, then
    /// the background.
    pub fn atoms(&self) -> Vec<EnergyAtom> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut out = Vec::new();
        for (i, b) in self.planted.iter().enumerate().filter(|(_, b)| !b.exotic) {
            let (c, r) = (self.center(i), self.scale(i));
            let n = self.atoms_per_bubble;
            for _ in 0..n {
                let u = unit_ball(&mut rng);
                let pos = std::array::from_fn(|k| c[k] + r * u[k]);
                out.push(EnergyAtom { pos, mass: b.energy / n as f64, owner: Some(i) });
            }
        }
        if let Some(bg) = &self.background {
            for _ in 0..bg.count {
                let u = unit_ball(&mut rng);
                out.push(EnergyAtom { pos: u.map(|x| bg.radius * x), mass: bg.total_mass / bg.count as f64, owner: None });
            }
        }
        out
    }

    pub fn field(&self) -> AtomField {
        let centers = (0..self.planted.len()).map(|i| self.center(i)).collect();
        AtomField::new(self.atoms(), centers)
    }
}

/// Uniform point of the open unit 4-ball, kept off the boundary so that
/// rounding cannot push an atom outside its bubble radius.
fn unit_ball(rng: &mut ChaCha8Rng) -> Point {
    loop {
        let u: Point = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
        if u.iter().map(|x| x * x).sum::<f64>() < 1.0 {
            return u.map(|x| x * (1.0 - 1e-9));
        }
    }
}

/// Atoms plus the candidate set for the center search: atom positions and
/// extra points (the planted centers).
#[derive(Clone, Debug)]
pub struct AtomField {
    pub atoms: Vec<EnergyAtom>,
    pub candidates: Vec<Point>,
}

impl AtomField {
    pub fn new(atoms: Vec<EnergyAtom>, extra: Vec<Point>) -> Self {
        let candidates = atoms.iter().map(|a| a.pos).chain(extra).collect();
        AtomField { atoms, candidates }
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.mass).sum()
    }
}
