use std::fmt::Write;

use serde::Serialize;
use serde_json::{json, Value};

use crate::extract::{Mode, TraceEvent};
use crate::neck::NeckCertificate;
use crate::scenario::{Point, Scenario};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Leaf,
    Intermediate,
    Exotic,
    /// A parentless node with children; a parentless node without children
    /// is a leaf.
    Root,
}

impl NodeKind {
    pub fn name(self) -> &'static str {
        match self {
            NodeKind::Leaf => "leaf",
            NodeKind::Intermediate => "intermediate",
            NodeKind::Exotic => "exotic",
            NodeKind::Root => "root",
        }
    }

    fn of(exotic: bool, has_children: bool, has_parent: bool) -> Self {
        match (exotic, has_children, has_parent) {
            (true, _, _) => NodeKind::Exotic,
            (false, false, _) => NodeKind::Leaf,
            (false, true, false) => NodeKind::Root,
            (false, true, true) => NodeKind::Intermediate,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BubbleNode {
    pub id: usize,
    pub kind: NodeKind,
    pub center: Point,
    pub scale: f64,
    /// Energy removed by the node's halo at extraction; zero for exotic nodes.
    pub energy: f64,
    pub planted: Option<String>,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    /// Neck towards the parent, or towards the ambient manifold for a root.
    pub certificate: Option<NeckCertificate>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BubbleTree {
    pub mode: Mode,
    pub epsilon: f64,
    pub delta: f64,
    #[serde(rename = "Lambda")]
    pub lambda_total: f64,
    pub extractions: usize,
    pub count_bound: f64,
    pub nodes: Vec<BubbleNode>,
    pub roots: Vec<usize>,
    pub trace: Vec<TraceEvent>,
}

impl BubbleTree {
    pub fn within_count_bound(&self) -> bool {
        self.extractions as f64 <= self.count_bound
    }

    pub fn all_necks_pass(&self) -> bool {
        self.nodes.iter().all(|n| n.certificate.as_ref().is_some_and(|c| c.passed))
    }

    /// Same nodes, scales, centers and certificates; mode and trace aside.
    pub fn same_result(&self, other: &BubbleTree) -> bool {
        self.nodes == other.nodes && self.roots == other.roots && self.extractions == other.extractions
    }

    pub fn shape(&self) -> Shape {
        Shape {
            kinds: self.nodes.iter().map(|n| n.kind).collect(),
            children: self.nodes.iter().map(|n| n.children.clone()).collect(),
            roots: self.roots.clone(),
        }
    }

    fn node_json(&self, i: usize) -> Value {
        let n = &self.nodes[i];
        json!({
            "id": n.id,
            "kind": n.kind,
            "planted": n.planted,
            "center": n.center,
            "scale": n.scale,
            "energy": n.energy,
            "certificate": n.certificate,
            "children": n.children.iter().map(|&c| self.node_json(c)).collect::<Vec<_>>(),
        })
    }

    /// Nested tree: roots with their subtrees.
    pub fn to_json(&self) -> Value {
        json!({
            "mode": self.mode,
            "epsilon": self.epsilon,
            "delta": self.delta,
            "Lambda": self.lambda_total,
            "extractions": self.extractions,
            "count_bound": self.count_bound,
            "roots": self.roots.iter().map(|&r| self.node_json(r)).collect::<Vec<_>>(),
        })
    }

    pub fn trace_json(&self) -> Value {
        serde_json::to_value(&self.trace).expect("trace serialises")
    }

    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph bubble_tree {\n  ambient [shape=box, label=\"ambient\"];\n");
        for n in &self.nodes {
            let _ = writeln!(s, "  n{} [label=\"{}\\nlambda={:.3e}\"];", n.id, n.kind.name(), n.scale);
        }
        for n in &self.nodes {
            let from = n.parent.map_or("ambient".to_string(), |p| format!("n{p}"));
            let label = match &n.certificate {
                Some(c) if c.passed => "pass",
                Some(_) => "fail",
                None => "none",
            };
            let _ = writeln!(s, "  {from} -> n{} [label=\"{label}\"];", n.id);
        }
        s.push_str("}\n");
        s
    }
}

/// A rooted forest with labelled nodes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Shape {
    pub kinds: Vec<NodeKind>,
    pub children: Vec<Vec<usize>>,
    pub roots: Vec<usize>,
}

impl Shape {
    /// Kinds derived from the structure, with the given exotic flags.
    pub fn from_parents(parents: &[Option<usize>], exotic: &[bool]) -> Self {
        let n = parents.len();
        let mut children = vec![Vec::new(); n];
        let mut roots = Vec::new();
        for (i, p) in parents.iter().enumerate() {
            match p {
                Some(p) => children[*p].push(i),
                None => roots.push(i),
            }
        }
        let kinds = (0..n).map(|i| NodeKind::of(exotic[i], !children[i].is_empty(), parents[i].is_some())).collect();
        Shape { kinds, children, roots }
    }

    fn encode(&self, i: usize) -> String {
        let mut kids: Vec<String> = self.children[i].iter().map(|&c| self.encode(c)).collect();
        kids.sort();
        format!("{}({})", self.kinds[i].name(), kids.concat())
    }

    /// Canonical string: equal exactly for isomorphic labelled forests.
    pub fn canonical(&self) -> String {
        let mut r: Vec<String> = self.roots.iter().map(|&i| self.encode(i)).collect();
        r.sort();
        r.join(",")
    }
}

/// The planted forest of a scenario, exotic nodes included.
pub fn planted_shape(scenario: &Scenario) -> Shape {
    let parents: Vec<Option<usize>> = (0..scenario.planted.len()).map(|i| scenario.parent_index(i)).collect();
    let exotic: Vec<bool> = scenario.planted.iter().map(|b| b.exotic).collect();
    Shape::from_parents(&parents, &exotic)
}

/// Rooted-forest isomorphism respecting node kinds.
pub fn tree_isomorphic(a: &Shape, b: &Shape) -> bool {
    a.kinds.len() == b.kinds.len() && a.canonical() == b.canonical()
}
