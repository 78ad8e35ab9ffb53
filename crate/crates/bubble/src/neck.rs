use serde::Serialize;

use crate::extract::ExtractionConfig;
use crate::scenario::{dist, AtomField, Point};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NeckCertificate {
    pub r1: f64,
    pub r2: f64,
    pub annulus_energy: f64,
    pub ratio: f64,
    /// Components of the annulus atom graph that reach the outer half
    /// `[r2/2, r2]` and carry at least `component_min_energy`; an annulus
    /// with no such component counts as one.
    pub component_count: usize,
    /// Lighter components reaching the outer half (isolated diffuse atoms).
    pub minor_components: usize,
    /// Atoms in `[r1, min(100 r1, r2)]`, standing in for the area bound on
    /// geodesic spheres (atoms carry no area).
    pub shell_atoms: usize,
    pub shell_bound: usize,
    pub shell_ok: bool,
    /// Energy, ratio and component checks together.
    pub passed: bool,
    pub reasons: Vec<String>,
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// Neck hypotheses on the annulus `r1 < |x - p| <= r2`.
pub fn certify_neck(field: &AtomField, p: &Point, r1: f64, r2: f64, config: &ExtractionConfig) -> NeckCertificate {
    let inside: Vec<(Point, f64, f64)> = field
        .atoms
        .iter()
        .map(|a| (a.pos, a.mass, dist(&a.pos, p)))
        .filter(|&(_, _, d)| d > r1 && d <= r2)
        .collect();
    let annulus_energy: f64 = inside.iter().fold(0.0, |s, a| s + a.1);

    let edge = config.edge_factor * r2;
    let mut parent: Vec<usize> = (0..inside.len()).collect();
    for i in 0..inside.len() {
        for j in i + 1..inside.len() {
            if dist(&inside[i].0, &inside[j].0) <= edge {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut mass = vec![0.0; inside.len()];
    for i in 0..inside.len() {
        let r = find(&mut parent, i);
        mass[r] += inside[i].1;
    }
    let mut outer: Vec<usize> = (0..inside.len()).filter(|&i| inside[i].2 >= 0.5 * r2).map(|i| find(&mut parent, i)).collect();
    outer.sort_unstable();
    outer.dedup();
    let heavy = outer.iter().filter(|&&r| mass[r] >= config.component_min_energy).count();
    let component_count = heavy.max(1);
    let minor_components = outer.len() - heavy;

    let shell_top = (100.0 * r1).min(r2);
    let shell_atoms = field
        .atoms
        .iter()
        .filter(|a| {
            let d = dist(&a.pos, p);
            d >= r1 && d <= shell_top
        })
        .count();

    let ratio = r1 / r2;
    let mut reasons = Vec::new();
    if annulus_energy > config.delta0 {
        reasons.push(format!("annulus energy {annulus_energy:.4e} exceeds delta0 = {}", config.delta0));
    }
    if !(r1 <= config.delta0 * r2) {
        reasons.push(format!("r1/r2 = {ratio:.4e} exceeds delta0 = {}", config.delta0));
    }
    if component_count != 1 {
        reasons.push(format!("{component_count} components reach the outer shell"));
    }
    NeckCertificate {
        r1,
        r2,
        annulus_energy,
        ratio,
        component_count,
        minor_components,
        shell_atoms,
        shell_bound: config.shell_atom_bound,
        shell_ok: shell_atoms <= config.shell_atom_bound,
        passed: reasons.is_empty(),
        reasons,
    }
}
