//! CNN computation graphs: loading, topology classification, and
//! independence / ready-queue queries.
//!
//! Convolution nodes reference an algorithm menu in the profile database;
//! every other op carries a single fixed runtime and no workspace. Graphs
//! are immutable after load; reachability is computed exactly.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// What a node is, and the fields that only make sense for that kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OpKind {
    /// Convolution with a selectable algorithm; `menu` names the profile
    /// database op id carrying its menu.
    Conv { menu: String },
    /// Any non-convolution layer: fixed runtime, zero workspace,
    /// schedulable but never co-located.
    Other {
        #[serde(default)]
        runtime_ms: f64,
    },
}

/// One graph node. `fixed_bytes` is the input+output+filter tensor memory
/// the op holds while it runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpNode {
    pub op_id: String,
    #[serde(default)]
    pub fixed_bytes: u64,
    #[serde(flatten)]
    pub kind: OpKind,
}

impl OpNode {
    pub fn is_conv(&self) -> bool {
        matches!(self.kind, OpKind::Conv { .. })
    }
}

#[derive(Debug, Deserialize)]
struct RawGraph {
    #[serde(default)]
    name: Option<String>,
    nodes: Vec<OpNode>,
    edges: Vec<(String, String)>,
}

/// Directed acyclic graph of network operations.
#[derive(Debug, Clone)]
pub struct NetworkGraph {
    name: String,
    nodes: Vec<OpNode>,
    index: BTreeMap<String, usize>,
    succs: Vec<Vec<usize>>,
    preds: Vec<Vec<usize>>,
    topo: Vec<usize>,
    /// reach[u] contains v iff there is a directed path u -> v.
    reach: Vec<BTreeSet<usize>>,
}

impl NetworkGraph {
    /// Build and validate a graph from parts.
    pub fn new(
        name: impl Into<String>,
        nodes: Vec<OpNode>,
        edges: &[(String, String)],
    ) -> Result<Self> {
        let name = name.into();
        let mut index = BTreeMap::new();
        for (i, node) in nodes.iter().enumerate() {
            if index.insert(node.op_id.clone(), i).is_some() {
                return Err(Error::DuplicateOp {
                    graph: name,
                    op_id: node.op_id.clone(),
                });
            }
        }

        let n = nodes.len();
        let mut succs = vec![Vec::new(); n];
        let mut preds = vec![Vec::new(); n];
        for (src, dst) in edges {
            let lookup = |id: &String| {
                index.get(id).copied().ok_or_else(|| Error::DanglingEdge {
                    graph: name.clone(),
                    op_id: id.clone(),
                })
            };
            let (u, v) = (lookup(src)?, lookup(dst)?);
            succs[u].push(v);
            preds[v].push(u);
        }
        for adj in succs.iter_mut().chain(preds.iter_mut()) {
            adj.sort_unstable();
            adj.dedup();
        }

        // Kahn's algorithm; smallest declaration index first for a stable order.
        let mut indegree: Vec<usize> = preds.iter().map(Vec::len).collect();
        let mut frontier: BTreeSet<usize> = indegree
            .iter()
            .enumerate()
            .filter(|(_, &d)| d == 0)
            .map(|(i, _)| i)
            .collect();
        let mut topo = Vec::with_capacity(n);
        while let Some(&u) = frontier.iter().next() {
            frontier.remove(&u);
            topo.push(u);
            for &v in &succs[u] {
                indegree[v] -= 1;
                if indegree[v] == 0 {
                    frontier.insert(v);
                }
            }
        }
        if topo.len() != n {
            let stuck = indegree.iter().position(|&d| d > 0).unwrap();
            return Err(Error::CycleDetected {
                graph: name,
                op_id: nodes[stuck].op_id.clone(),
            });
        }

        // Transitive closure in reverse topological order.
        let mut reach: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
        for &u in topo.iter().rev() {
            let mut set = BTreeSet::new();
            for &v in &succs[u] {
                set.insert(v);
                set.extend(reach[v].iter().copied());
            }
            reach[u] = set;
        }

        Ok(NetworkGraph {
            name,
            nodes,
            index,
            succs,
            preds,
            topo,
            reach,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[OpNode] {
        &self.nodes
    }

    pub fn node(&self, op_id: &str) -> Result<&OpNode> {
        let i = self.index_of(op_id)?;
        Ok(&self.nodes[i])
    }

    fn index_of(&self, op_id: &str) -> Result<usize> {
        self.index
            .get(op_id)
            .copied()
            .ok_or_else(|| Error::UnknownOp {
                op_id: op_id.to_string(),
            })
    }

    /// Nodes in a deterministic topological order; among simultaneously
    /// ready nodes the smallest declaration index goes first.
    pub fn topo_order(&self) -> impl Iterator<Item = &OpNode> {
        self.topo.iter().map(|&i| &self.nodes[i])
    }

    pub fn predecessors(&self, op_id: &str) -> Result<Vec<&str>> {
        let i = self.index_of(op_id)?;
        Ok(self.preds[i]
            .iter()
            .map(|&p| self.nodes[p].op_id.as_str())
            .collect())
    }

    /// True iff neither op can reach the other. Irreflexive: an op is
    /// never independent of itself.
    pub fn independent(&self, a: &str, b: &str) -> Result<bool> {
        let (u, v) = (self.index_of(a)?, self.index_of(b)?);
        if u == v {
            return Ok(false);
        }
        Ok(!self.reach[u].contains(&v) && !self.reach[v].contains(&u))
    }

    /// Ops whose predecessors are all in `completed`, excluding `completed`
    /// itself. `completed` must be downward-closed and name known ops.
    pub fn ready_set(&self, completed: &BTreeSet<String>) -> Result<BTreeSet<String>> {
        let mut done = BTreeSet::new();
        for op in completed {
            done.insert(self.index_of(op)?);
        }
        for &i in &done {
            for &p in &self.preds[i] {
                if !done.contains(&p) {
                    return Err(Error::NotDownwardClosed {
                        op_id: self.nodes[i].op_id.clone(),
                        missing_pred: self.nodes[p].op_id.clone(),
                    });
                }
            }
        }
        Ok(self
            .nodes
            .iter()
            .enumerate()
            .filter(|(i, _)| !done.contains(i))
            .filter(|(i, _)| self.preds[*i].iter().all(|p| done.contains(p)))
            .map(|(_, node)| node.op_id.clone())
            .collect())
    }

    /// Linear networks have no fork/join structure: every node has at most
    /// one predecessor and at most one successor.
    pub fn is_linear(&self) -> bool {
        self.nodes
            .iter()
            .enumerate()
            .all(|(i, _)| self.preds[i].len() <= 1 && self.succs[i].len() <= 1)
    }

    /// All unordered pairs of independent convolution ops, each pair in
    /// declaration order, listed deterministically.
    pub fn independent_conv_pairs(&self) -> Vec<(&OpNode, &OpNode)> {
        let convs: Vec<usize> = (0..self.nodes.len())
            .filter(|&i| self.nodes[i].is_conv())
            .collect();
        let mut pairs = Vec::new();
        for (k, &u) in convs.iter().enumerate() {
            for &v in &convs[k + 1..] {
                if !self.reach[u].contains(&v) && !self.reach[v].contains(&u) {
                    pairs.push((&self.nodes[u], &self.nodes[v]));
                }
            }
        }
        pairs
    }
}

/// Load and validate a graph from a JSON reader.
pub fn load_graph<R: Read>(reader: R, path: &str) -> Result<NetworkGraph> {
    let raw: RawGraph = serde_json::from_reader(reader).map_err(|source| Error::Json {
        path: path.to_string(),
        source,
    })?;
    let name = raw.name.unwrap_or_else(|| path.to_string());
    NetworkGraph::new(name, raw.nodes, &raw.edges)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn other(op_id: &str) -> OpNode {
        OpNode {
            op_id: op_id.to_string(),
            fixed_bytes: 0,
            kind: OpKind::Other { runtime_ms: 1.0 },
        }
    }

    fn conv(op_id: &str, menu: &str) -> OpNode {
        OpNode {
            op_id: op_id.to_string(),
            fixed_bytes: 0,
            kind: OpKind::Conv {
                menu: menu.to_string(),
            },
        }
    }

    fn edges(list: &[(&str, &str)]) -> Vec<(String, String)> {
        list.iter()
            .map(|(a, b)| (a.to_string(), b.to_string()))
            .collect()
    }

    fn fork_join() -> NetworkGraph {
        NetworkGraph::new(
            "fork",
            vec![
                other("in"),
                conv("c3", "m3"),
                conv("c5", "m5"),
                other("join"),
            ],
            &edges(&[("in", "c3"), ("in", "c5"), ("c3", "join"), ("c5", "join")]),
        )
        .unwrap()
    }

    #[test]
    fn rejects_cycle() {
        let err = NetworkGraph::new(
            "g",
            vec![other("a"), other("b")],
            &edges(&[("a", "b"), ("b", "a")]),
        )
        .unwrap_err();
        assert!(matches!(err, Error::CycleDetected { .. }));
    }

    #[test]
    fn rejects_dangling_edge() {
        let err = NetworkGraph::new("g", vec![other("a")], &edges(&[("a", "ghost")])).unwrap_err();
        assert!(matches!(err, Error::DanglingEdge { ref op_id, .. } if op_id == "ghost"));
    }

    #[test]
    fn rejects_duplicate_op_id() {
        let err = NetworkGraph::new("g", vec![other("a"), other("a")], &[]).unwrap_err();
        assert!(matches!(err, Error::DuplicateOp { .. }));
    }

    #[test]
    fn branches_are_independent_chain_is_not() {
        let g = fork_join();
        assert!(g.independent("c3", "c5").unwrap());
        assert!(!g.independent("in", "c3").unwrap());
        assert!(!g.independent("in", "join").unwrap());
        assert!(!g.independent("c3", "c3").unwrap());
    }

    #[test]
    fn independent_unknown_op_errors() {
        let g = fork_join();
        assert!(matches!(
            g.independent("c3", "ghost").unwrap_err(),
            Error::UnknownOp { .. }
        ));
    }

    #[test]
    fn ready_set_after_fork_is_both_branches() {
        let g = fork_join();
        let completed: BTreeSet<String> = ["in".to_string()].into();
        let ready = g.ready_set(&completed).unwrap();
        assert_eq!(
            ready,
            ["c3".to_string(), "c5".to_string()].into_iter().collect()
        );
    }

    #[test]
    fn ready_set_of_nothing_is_sources() {
        let g = fork_join();
        let ready = g.ready_set(&BTreeSet::new()).unwrap();
        assert_eq!(ready, ["in".to_string()].into_iter().collect());
    }

    #[test]
    fn ready_set_when_all_done_is_empty() {
        let g = fork_join();
        let completed: BTreeSet<String> = g.nodes().iter().map(|n| n.op_id.clone()).collect();
        assert!(g.ready_set(&completed).unwrap().is_empty());
    }

    #[test]
    fn ready_set_rejects_non_downward_closed_input() {
        let g = fork_join();
        let completed: BTreeSet<String> = ["c3".to_string()].into();
        assert!(matches!(
            g.ready_set(&completed).unwrap_err(),
            Error::NotDownwardClosed { .. }
        ));
    }

    #[test]
    fn chain_is_linear_fork_is_not() {
        let chain = NetworkGraph::new(
            "chain",
            vec![other("a"), other("b"), other("c")],
            &edges(&[("a", "b"), ("b", "c")]),
        )
        .unwrap();
        assert!(chain.is_linear());
        assert!(!fork_join().is_linear());
    }

    #[test]
    fn single_node_is_linear() {
        let g = NetworkGraph::new("one", vec![other("a")], &[]).unwrap();
        assert!(g.is_linear());
    }

    #[test]
    fn conv_pairs_on_linear_graph_empty() {
        let chain = NetworkGraph::new(
            "chain",
            vec![conv("a", "m"), conv("b", "m")],
            &edges(&[("a", "b")]),
        )
        .unwrap();
        assert!(chain.independent_conv_pairs().is_empty());
    }

    #[test]
    fn loads_bundled_graphs() {
        let root = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data");
        let inception = load_graph(
            std::fs::File::open(root.join("inception1.json")).unwrap(),
            "inception1.json",
        )
        .unwrap();
        assert!(!inception.is_linear());
        assert!(inception.independent("b2_conv3x3", "b3_conv5x5").unwrap());
        let heads: BTreeSet<String> = ["input".to_string()].into();
        let ready = inception.ready_set(&heads).unwrap();
        assert_eq!(
            ready,
            ["b1_conv1x1", "b2_reduce1x1", "b3_reduce1x1", "b4_pool"]
                .iter()
                .map(|s| s.to_string())
                .collect()
        );

        let alexnet = load_graph(
            std::fs::File::open(root.join("alexnet_linear.json")).unwrap(),
            "alexnet_linear.json",
        )
        .unwrap();
        assert_eq!(alexnet.len(), 8);
        assert!(alexnet.is_linear());
        assert!(alexnet.independent_conv_pairs().is_empty());
    }

    /// Random DAG: nodes 0..n with edges only from lower to higher index.
    fn arb_dag() -> impl Strategy<Value = NetworkGraph> {
        (2usize..8).prop_flat_map(|n| {
            let nodes: Vec<OpNode> = (0..n).map(|i| other(&format!("n{i}"))).collect();
            proptest::collection::vec(proptest::bool::ANY, n * (n - 1) / 2).prop_map(
                move |mask| {
                    let mut es = Vec::new();
                    let mut k = 0;
                    for i in 0..n {
                        for j in i + 1..n {
                            if mask[k] {
                                es.push((format!("n{i}"), format!("n{j}")));
                            }
                            k += 1;
                        }
                    }
                    NetworkGraph::new("rand", nodes.clone(), &es).unwrap()
                },
            )
        })
    }

    proptest! {
        #[test]
        fn independence_is_symmetric_and_irreflexive(g in arb_dag(), a in 0usize..8, b in 0usize..8) {
            let ids: Vec<&str> = g.nodes().iter().map(|n| n.op_id.as_str()).collect();
            let a = ids[a % ids.len()];
            let b = ids[b % ids.len()];
            prop_assert_eq!(g.independent(a, b).unwrap(), g.independent(b, a).unwrap());
            prop_assert!(!g.independent(a, a).unwrap());
        }

        /// Completing one ready op never removes another op from readiness.
        #[test]
        fn readiness_grows_monotonically(g in arb_dag()) {
            let mut completed = BTreeSet::new();
            loop {
                let ready = g.ready_set(&completed).unwrap();
                if ready.is_empty() {
                    break;
                }
                let pick = ready.iter().next().unwrap().clone();
                completed.insert(pick.clone());
                let after = g.ready_set(&completed).unwrap();
                for op in &ready {
                    if op != &pick {
                        prop_assert!(after.contains(op));
                    }
                }
            }
        }
    }
}
