use std::f64::consts::FRAC_1_SQRT_2;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::extract::{build_tree, ExtractionConfig, Mode};
use crate::scenario::{Background, PlantedBubble, Point, Scenario};
use crate::tree::{planted_shape, tree_isomorphic};

pub const SUITE_EPSILON: f64 = 1e-3;

fn axis(k: usize) -> Point {
    let mut p = [0.0; 4];
    p[k % 4] = if k < 4 { 1.0 } else { -1.0 };
    p
}

fn diag(i: usize, j: usize) -> Point {
    let mut p = [0.0; 4];
    p[i] = FRAC_1_SQRT_2;
    p[j] = FRAC_1_SQRT_2;
    p
}

#[allow(clippy::too_many_arguments)]
fn solid(id: &str, parent: Option<&str>, dir: Point, gamma: f64, d0: f64, beta: f64, energy: f64) -> PlantedBubble {
    PlantedBubble {
        id: id.into(),
        parent: parent.map(Into::into),
        offset_dir: dir,
        gamma,
        d0,
        lambda0: 1.0,
        beta,
        energy,
        exotic: false,
    }
}

fn exotic(id: &str, parent: Option<&str>, dir: Point, gamma: f64, d0: f64, beta: f64) -> PlantedBubble {
    PlantedBubble { exotic: true, ..solid(id, parent, dir, gamma, d0, beta, 0.0) }
}

/// Root at fixed distance from the origin, scale `eps`.
fn root(id: &str, dir: Point, energy: f64) -> PlantedBubble {
    solid(id, None, dir, 0.0, 0.5, 1.0, energy)
}

/// Child sitting at half its parent's scale from the parent's center.
fn child(id: &str, parent: &str, parent_beta: f64, dir: Point, energy: f64) -> PlantedBubble {
    solid(id, Some(parent), dir, parent_beta, 0.5, parent_beta + 1.0, energy)
}

fn finish(planted: Vec<PlantedBubble>, seed: u64, background: Option<Background>) -> Scenario {
    let mut s = Scenario { lambda_total: 0.0, epsilon: SUITE_EPSILON, seed, atoms_per_bubble: 256, background, planted };
    s.lambda_total = ((s.total_energy() + 0.5) * 10.0).ceil() / 10.0;
    s
}

fn faint() -> Option<Background> {
    Some(Background { count: 200, total_mass: 0.02, radius: 2.0 })
}

pub fn single() -> Scenario {
    finish(vec![root("a", axis(0), 0.2)], 1, None)
}

pub fn separable_pair() -> Scenario {
    finish(vec![root("a", axis(0), 0.15), root("b", axis(4), 0.2)], 2, None)
}

/// Root at scale `eps`, child at `eps^2`, grandchild at `eps^3`.
pub fn nested_chain() -> Scenario {
    finish(
        vec![root("r", axis(0), 0.2), child("c", "r", 1.0, axis(1), 0.15), child("g", "c", 2.0, axis(2), 0.15)],
        3,
        None,
    )
}

/// Two leaves at distance `eps^2` and a third at distance `eps` from them,
/// with no energy between: two nested exotic groupings at the root.
pub fn exotic_triple() -> Scenario {
    finish(
        vec![
            exotic("outer", None, axis(0), 0.0, 0.5, 1.0),
            exotic("inner", Some("outer"), axis(1), 1.0, 0.5, 2.0),
            solid("t", Some("outer"), axis(5), 1.0, 0.5, 2.0, 0.15),
            solid("a", Some("inner"), axis(2), 2.0, 0.5, 3.0, 0.15),
            solid("b", Some("inner"), axis(6), 2.0, 0.5, 3.0, 0.15),
        ],
        4,
        None,
    )
}

/// Random forest of `n` solid bubbles: roots at distance 1 from the origin
/// and scale `eps`, each child at half its parent's scale from the parent
/// center and one power of `eps` smaller, depth at most two.
pub fn random_scenario(n: usize, seed: u64) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut planted: Vec<PlantedBubble> = Vec::new();
    let mut used: Vec<Vec<usize>> = Vec::new();
    let mut root_dirs: Vec<usize> = Vec::new();
    let mut depth: Vec<usize> = Vec::new();
    for k in 0..n {
        let energy = (rng.gen_range(0.1..0.2) * 1000.0_f64).round() / 1000.0;
        let open: Vec<usize> = (0..planted.len()).filter(|&i| depth[i] < 2 && used[i].len() < 3).collect();
        let new_root = root_dirs.len() < 8 && (open.is_empty() || rng.gen_bool(0.35));
        let id = format!("b{k}");
        if new_root {
            let d = (0..8).filter(|d| !root_dirs.contains(d)).nth(rng.gen_range(0..8 - root_dirs.len())).unwrap();
            root_dirs.push(d);
            planted.push(solid(&id, None, axis(d), 0.0, 1.0, 1.0, energy));
            depth.push(0);
        } else {
            let p = open[rng.gen_range(0..open.len())];
            let d = (0..8).filter(|d| !used[p].contains(d)).nth(rng.gen_range(0..8 - used[p].len())).unwrap();
            used[p].push(d);
            let pb = planted[p].beta;
            let pid = planted[p].id.clone();
            planted.push(child(&id, &pid, pb, axis(d), energy));
            depth.push(depth[p] + 1);
        }
        used.push(Vec::new());
    }
    finish(planted, seed, None)
}

/// Planted scenarios covering single bubbles, separable forests, nested
/// chains and exotic groupings, all at `eps = 1e-3`.
pub fn planted_suite() -> Vec<(String, &'static str, Scenario)> {
    let mut out: Vec<(String, &'static str, Scenario)> = Vec::new();
    let mut add = |name: &str, cat: &'static str, s: Scenario| out.push((name.to_string(), cat, s));

    add("single", "single", single());
    add("single_heavy", "single", finish(vec![root("a", axis(1), 0.3)], 11, None));
    add("single_background", "single", finish(vec![root("a", axis(2), 0.15)], 12, faint()));

    add("separable_pair", "separable", separable_pair());
    add(
        "separable_triple",
        "separable",
        finish(vec![root("a", axis(0), 0.15), root("b", axis(1), 0.15), root("c", axis(6), 0.2)], 13, None),
    );
    add(
        "separable_mixed_scales",
        "separable",
        finish(vec![root("a", axis(0), 0.2), solid("b", None, axis(4), 0.0, 0.5, 2.0, 0.15)], 14, None),
    );
    add(
        "separable_four",
        "separable",
        finish((0..4).map(|k| root(&format!("r{k}"), axis(2 * k), 0.12 + 0.02 * k as f64)).collect(), 15, faint()),
    );

    add("nested_chain", "nested", nested_chain());
    add(
        "nested_chain_depth4",
        "nested",
        finish(
            vec![
                root("r", axis(0), 0.2),
                child("c", "r", 1.0, axis(1), 0.15),
                child("g", "c", 2.0, axis(2), 0.15),
                child("h", "g", 3.0, axis(3), 0.12),
            ],
            16,
            None,
        ),
    );
    add(
        "nested_two_children",
        "nested",
        finish(vec![root("p", axis(0), 0.2), child("c1", "p", 1.0, axis(1), 0.15), child("c2", "p", 1.0, axis(5), 0.15)], 17, None),
    );
    add(
        "nested_three_children",
        "nested",
        finish(
            vec![
                root("p", axis(0), 0.25),
                child("c1", "p", 1.0, axis(1), 0.12),
                child("c2", "p", 1.0, axis(2), 0.12),
                child("c3", "p", 1.0, axis(7), 0.12),
            ],
            18,
            None,
        ),
    );
    add(
        "nested_branching_chain",
        "nested",
        finish(
            vec![
                root("r", axis(4), 0.2),
                child("c", "r", 1.0, axis(1), 0.15),
                child("g1", "c", 2.0, axis(2), 0.12),
                child("g2", "c", 2.0, axis(6), 0.12),
            ],
            19,
            None,
        ),
    );
    add(
        "nested_two_trees",
        "nested",
        finish(
            vec![
                root("p", axis(0), 0.2),
                child("c", "p", 1.0, axis(1), 0.15),
                root("q", axis(4), 0.2),
                child("d", "q", 1.0, axis(2), 0.15),
                child("e", "d", 2.0, axis(3), 0.12),
            ],
            20,
            faint(),
        ),
    );
    add(
        "nested_chain_and_root",
        "nested",
        finish(
            vec![
                root("r", axis(0), 0.2),
                child("c", "r", 1.0, diag(1, 2), 0.15),
                child("g", "c", 2.0, diag(2, 3), 0.15),
                root("s", axis(5), 0.15),
            ],
            21,
            None,
        ),
    );

    add("exotic_triple", "exotic", exotic_triple());
    add(
        "exotic_pair_root",
        "exotic",
        finish(
            vec![
                exotic("x", None, axis(0), 0.0, 0.5, 1.0),
                solid("a", Some("x"), axis(1), 1.0, 0.5, 2.0, 0.15),
                solid("b", Some("x"), axis(5), 1.0, 0.5, 2.0, 0.15),
            ],
            22,
            None,
        ),
    );
    add(
        "exotic_pair_under_parent",
        "exotic",
        finish(
            vec![
                root("p", axis(0), 0.2),
                exotic("x", Some("p"), axis(1), 1.0, 0.5, 2.0),
                solid("a", Some("x"), axis(2), 2.0, 0.5, 3.0, 0.15),
                solid("b", Some("x"), axis(6), 2.0, 0.5, 3.0, 0.15),
            ],
            23,
            None,
        ),
    );
    add(
        "exotic_triple_under_parent",
        "exotic",
        finish(
            vec![
                root("p", axis(0), 0.2),
                exotic("outer", Some("p"), axis(1), 1.0, 0.5, 2.0),
                exotic("inner", Some("outer"), axis(2), 2.0, 0.5, 3.0),
                solid("t", Some("outer"), axis(6), 2.0, 0.5, 3.0, 0.12),
                solid("a", Some("inner"), axis(3), 3.0, 0.5, 4.0, 0.12),
                solid("b", Some("inner"), axis(7), 3.0, 0.5, 4.0, 0.12),
            ],
            24,
            None,
        ),
    );
    add(
        "exotic_pair_and_child",
        "exotic",
        finish(
            vec![
                root("p", axis(0), 0.2),
                exotic("x", Some("p"), axis(1), 1.0, 0.5, 2.0),
                solid("a", Some("x"), axis(2), 2.0, 0.5, 3.0, 0.12),
                solid("b", Some("x"), axis(6), 2.0, 0.5, 3.0, 0.12),
                child("c", "p", 1.0, axis(5), 0.15),
            ],
            25,
            None,
        ),
    );
    add(
        "exotic_pair_and_root",
        "exotic",
        finish(
            vec![
                exotic("x", None, axis(0), 0.0, 0.5, 1.0),
                solid("a", Some("x"), axis(1), 1.0, 0.5, 2.0, 0.15),
                solid("b", Some("x"), axis(5), 1.0, 0.5, 2.0, 0.15),
                root("s", axis(4), 0.2),
            ],
            26,
            faint(),
        ),
    );
    add(
        "exotic_inside_chain",
        "exotic",
        finish(
            vec![
                root("r", axis(0), 0.2),
                child("c", "r", 1.0, axis(1), 0.15),
                exotic("x", Some("c"), axis(2), 2.0, 0.5, 3.0),
                solid("a", Some("x"), axis(3), 3.0, 0.5, 4.0, 0.12),
                solid("b", Some("x"), axis(7), 3.0, 0.5, 4.0, 0.12),
            ],
            27,
            None,
        ),
    );

    add("random_5_1", "mixed", random_scenario(5, 1));
    add("random_6_2", "mixed", random_scenario(6, 2));
    add("random_8_7", "mixed", random_scenario(8, 7));
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteCase {
    pub name: String,
    pub category: String,
    pub isomorphic_limit: bool,
    pub isomorphic_numeric: bool,
    /// Both modes return the same nodes, centers, scales and certificates.
    pub identical: bool,
    pub within_count_bound: bool,
    pub necks_pass: bool,
    pub error: Option<String>,
}

impl SuiteCase {
    pub fn passed(&self) -> bool {
        self.error.is_none() && self.isomorphic_limit && self.isomorphic_numeric && self.identical && self.within_count_bound
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub cases: Vec<SuiteCase>,
    pub recovered: usize,
    pub seconds: f64,
}

impl SuiteReport {
    pub fn all_passed(&self) -> bool {
        self.recovered == self.cases.len()
    }
}

/// Extracts every planted scenario in both modes and compares with the
/// planted forest.
pub fn run_suite(base: &ExtractionConfig) -> SuiteReport {
    let start = Instant::now();
    let mut cases = Vec::new();
    for (name, category, sc) in planted_suite() {
        let shape = planted_shape(&sc);
        let limit = build_tree(&sc, &ExtractionConfig { mode: Mode::Limit, ..base.clone() });
        let numeric = build_tree(&sc, &ExtractionConfig { mode: Mode::Numeric, ..base.clone() });
        let case = match (limit, numeric) {
            (Ok(l), Ok(n)) => SuiteCase {
                name,
                category: category.into(),
                isomorphic_limit: tree_isomorphic(&l.shape(), &shape),
                isomorphic_numeric: tree_isomorphic(&n.shape(), &shape),
                identical: l.same_result(&n),
                within_count_bound: l.within_count_bound() && n.within_count_bound(),
                necks_pass: l.all_necks_pass() && n.all_necks_pass(),
                error: None,
            },
            (l, n) => SuiteCase {
                name,
                category: category.into(),
                isomorphic_limit: false,
                isomorphic_numeric: false,
                identical: false,
                within_count_bound: false,
                necks_pass: false,
                error: Some(format!("limit: {:?}; numeric: {:?}", l.err(), n.err())),
            },
        };
        cases.push(case);
    }
    let recovered = cases.iter().filter(|c| c.passed()).count();
    SuiteReport { cases, recovered, seconds: start.elapsed().as_secs_f64() }
}
