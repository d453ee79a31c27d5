//! Directed acyclic graphs and the purely graphical algorithms built on them:
//! ancestral subgraphs, moralisation, separation, skeletons, immoralities and
//! Markov equivalence.
//!
//! Graphs are immutable values. Nodes are kept sorted by name, so every
//! iteration order (and therefore every rendered output) is deterministic.

use std::borrow::Borrow;
use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use crate::error::{Error, Result};

/// Name of a variable: a nonempty token of ASCII letters, digits and `_`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VariableId(String);

impl VariableId {
    pub fn new(name: impl Into<String>) -> Result<Self> {
        let name = name.into();
        let valid = !name.is_empty()
            && name
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || c == '_');
        if valid {
            Ok(VariableId(name))
        } else {
            Err(Error::InvalidName(name))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for VariableId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl Borrow<str> for VariableId {
    fn borrow(&self) -> &str {
        &self.0
    }
}

impl std::str::FromStr for VariableId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        VariableId::new(s)
    }
}

pub type VarSet = BTreeSet<VariableId>;

/// Builds a [`VarSet`] from names, validating each one.
pub fn var_set<I, S>(names: I) -> Result<VarSet>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    names
        .into_iter()
        .map(|n| VariableId::new(n.as_ref()))
        .collect()
}

/// Renders a set as `A,B,C` (or `{}` when empty).
pub fn fmt_set(set: &VarSet) -> String {
    if set.is_empty() {
        "{}".to_string()
    } else {
        set.iter().map(VariableId::as_str).collect::<Vec<_>>().join(",")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Dag {
    names: Vec<VariableId>,
    parents: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
}

impl Dag {
    /// Builds a DAG. Repeated edges collapse into one; self-loops, unknown
    /// endpoints and directed cycles are rejected.
    pub fn new<N, E>(nodes: N, edges: E) -> Result<Self>
    where
        N: IntoIterator<Item = VariableId>,
        E: IntoIterator<Item = (VariableId, VariableId)>,
    {
        let names: Vec<VariableId> = nodes.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
        let n = names.len();
        let mut parents = vec![BTreeSet::new(); n];
        let mut children = vec![BTreeSet::new(); n];
        for (from, to) in edges {
            let i = index_in(&names, &from)?;
            let j = index_in(&names, &to)?;
            if i == j {
                return Err(Error::SelfLoop(from.0));
            }
            parents[j].insert(i);
            children[i].insert(j);
        }
        let dag = Dag {
            names,
            parents: parents.into_iter().map(|s| s.into_iter().collect()).collect(),
            children: children.into_iter().map(|s| s.into_iter().collect()).collect(),
        };
        if let Some(cycle) = dag.find_cycle() {
            return Err(Error::Cycle(
                cycle.into_iter().map(|i| dag.names[i].0.clone()).collect(),
            ));
        }
        Ok(dag)
    }

    /// Convenience constructor from string names, for tests and fixtures.
    pub fn from_names(nodes: &[&str], edges: &[(&str, &str)]) -> Result<Self> {
        let nodes = nodes
            .iter()
            .map(|n| VariableId::new(*n))
            .collect::<Result<Vec<_>>>()?;
        let edges = edges
            .iter()
            .map(|(a, b)| Ok((VariableId::new(*a)?, VariableId::new(*b)?)))
            .collect::<Result<Vec<_>>>()?;
        Dag::new(nodes, edges)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn nodes(&self) -> &[VariableId] {
        &self.names
    }

    pub fn node_set(&self) -> VarSet {
        self.names.iter().cloned().collect()
    }

    pub fn contains(&self, v: &str) -> bool {
        self.index(v).is_some()
    }

    pub(crate) fn index(&self, v: &str) -> Option<usize> {
        self.names.binary_search_by(|n| n.as_str().cmp(v)).ok()
    }

    pub(crate) fn require(&self, v: &str) -> Result<usize> {
        self.index(v)
            .ok_or_else(|| Error::UnknownVariable(v.to_string()))
    }

    pub(crate) fn name(&self, i: usize) -> &VariableId {
        &self.names[i]
    }

    /// Edges sorted by (parent, child).
    pub fn edges(&self) -> Vec<(VariableId, VariableId)> {
        let mut out = Vec::new();
        for (i, ch) in self.children.iter().enumerate() {
            for &j in ch {
                out.push((self.names[i].clone(), self.names[j].clone()));
            }
        }
        out
    }

    pub fn edge_count(&self) -> usize {
        self.children.iter().map(Vec::len).sum()
    }

    pub fn has_edge(&self, from: &str, to: &str) -> bool {
        match (self.index(from), self.index(to)) {
            (Some(i), Some(j)) => self.children[i].binary_search(&j).is_ok(),
            _ => false,
        }
    }

    pub fn adjacent(&self, a: &str, b: &str) -> bool {
        self.has_edge(a, b) || self.has_edge(b, a)
    }

    pub fn parents(&self, v: &str) -> Result<VarSet> {
        let i = self.require(v)?;
        Ok(self.parents[i].iter().map(|&p| self.names[p].clone()).collect())
    }

    pub fn children(&self, v: &str) -> Result<VarSet> {
        let i = self.require(v)?;
        Ok(self.children[i].iter().map(|&c| self.names[c].clone()).collect())
    }

    /// Ancestors of `set`, each node counted as its own ancestor.
    pub fn ancestors(&self, set: &VarSet) -> Result<VarSet> {
        let mask = self.ancestor_mask(&self.mask_of(set)?);
        Ok(self.set_of(&mask))
    }

    /// Descendants of `v`, including `v` itself.
    pub fn descendants(&self, v: &str) -> Result<VarSet> {
        let start = self.require(v)?;
        let mut seen = vec![false; self.len()];
        let mut stack = vec![start];
        while let Some(i) = stack.pop() {
            if !std::mem::replace(&mut seen[i], true) {
                stack.extend(self.children[i].iter().copied());
            }
        }
        Ok(self.set_of(&seen))
    }

    /// Nodes in a topological order; ties are broken by name.
    pub fn topological_order(&self) -> Vec<VariableId> {
        self.topo_indices()
            .into_iter()
            .map(|i| self.names[i].clone())
            .collect()
    }

    pub(crate) fn topo_indices(&self) -> Vec<usize> {
        let mut indeg: Vec<usize> = self.parents.iter().map(Vec::len).collect();
        let mut ready: BTreeSet<usize> = (0..self.len()).filter(|&i| indeg[i] == 0).collect();
        let mut order = Vec::with_capacity(self.len());
        while let Some(i) = ready.pop_first() {
            order.push(i);
            for &c in &self.children[i] {
                indeg[c] -= 1;
                if indeg[c] == 0 {
                    ready.insert(c);
                }
            }
        }
        order
    }

    /// Induced subgraph on `keep`.
    pub fn induced(&self, keep: &VarSet) -> Result<Dag> {
        let mask = self.mask_of(keep)?;
        Ok(self.induced_mask(&mask))
    }

    /// Returns a copy with the given edges deleted. Edges that are absent are
    /// ignored.
    pub fn without_edges(&self, remove: &[(VariableId, VariableId)]) -> Dag {
        let removed: BTreeSet<(&str, &str)> =
            remove.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
        let edges = self
            .edges()
            .into_iter()
            .filter(|(a, b)| !removed.contains(&(a.as_str(), b.as_str())));
        Dag::new(self.names.iter().cloned(), edges).expect("edge deletion keeps a DAG valid")
    }

    /// Returns a copy with extra nodes and edges.
    pub fn extended<N, E>(&self, nodes: N, edges: E) -> Result<Dag>
    where
        N: IntoIterator<Item = VariableId>,
        E: IntoIterator<Item = (VariableId, VariableId)>,
    {
        Dag::new(
            self.names.iter().cloned().chain(nodes),
            self.edges().into_iter().chain(edges),
        )
    }

    pub(crate) fn mask_of(&self, set: &VarSet) -> Result<Vec<bool>> {
        let mut mask = vec![false; self.len()];
        for v in set {
            mask[self.require(v.as_str())?] = true;
        }
        Ok(mask)
    }

    pub(crate) fn set_of(&self, mask: &[bool]) -> VarSet {
        mask.iter()
            .enumerate()
            .filter(|(_, &m)| m)
            .map(|(i, _)| self.names[i].clone())
            .collect()
    }

    pub(crate) fn ancestor_mask(&self, seed: &[bool]) -> Vec<bool> {
        let mut seen = vec![false; self.len()];
        let mut stack: Vec<usize> = (0..self.len()).filter(|&i| seed[i]).collect();
        while let Some(i) = stack.pop() {
            if !std::mem::replace(&mut seen[i], true) {
                stack.extend(self.parents[i].iter().copied());
            }
        }
        seen
    }

    fn induced_mask(&self, keep: &[bool]) -> Dag {
        let nodes = self.set_of(keep);
        let edges = self
            .edges()
            .into_iter()
            .filter(|(a, b)| nodes.contains(a) && nodes.contains(b))
            .collect::<Vec<_>>();
        Dag::new(nodes, edges).expect("induced subgraph of a DAG is a DAG")
    }

    fn find_cycle(&self) -> Option<Vec<usize>> {
        // 0 = unvisited, 1 = on stack, 2 = done
        let mut state = vec![0u8; self.len()];
        let mut path = Vec::new();
        for root in 0..self.len() {
            if state[root] == 0 {
                if let Some(c) = self.cycle_from(root, &mut state, &mut path) {
                    return Some(c);
                }
            }
        }
        None
    }

    fn cycle_from(&self, v: usize, state: &mut [u8], path: &mut Vec<usize>) -> Option<Vec<usize>> {
        state[v] = 1;
        path.push(v);
        for &c in &self.children[v] {
            if state[c] == 1 {
                let start = path.iter().position(|&p| p == c).unwrap();
                let mut cycle = path[start..].to_vec();
                cycle.push(c);
                return Some(cycle);
            }
            if state[c] == 0 {
                if let Some(found) = self.cycle_from(c, state, path) {
                    return Some(found);
                }
            }
        }
        path.pop();
        state[v] = 2;
        None
    }
}

fn index_in(names: &[VariableId], v: &VariableId) -> Result<usize> {
    names
        .binary_search(v)
        .map_err(|_| Error::UnknownVariable(v.0.clone()))
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct UndirectedGraph {
    names: Vec<VariableId>,
    adjacency: Vec<BTreeSet<usize>>,
}

impl UndirectedGraph {
    fn with_nodes(names: Vec<VariableId>) -> Self {
        let n = names.len();
        UndirectedGraph {
            names,
            adjacency: vec![BTreeSet::new(); n],
        }
    }

    fn link(&mut self, a: usize, b: usize) {
        if a != b {
            self.adjacency[a].insert(b);
            self.adjacency[b].insert(a);
        }
    }

    pub fn nodes(&self) -> &[VariableId] {
        &self.names
    }

    /// Edges as `(a, b)` with `a < b`, sorted.
    pub fn edges(&self) -> Vec<(VariableId, VariableId)> {
        let mut out = Vec::new();
        for (i, adj) in self.adjacency.iter().enumerate() {
            for &j in adj.range(i + 1..) {
                out.push((self.names[i].clone(), self.names[j].clone()));
            }
        }
        out
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(BTreeSet::len).sum::<usize>() / 2
    }

    pub fn has_edge(&self, a: &str, b: &str) -> bool {
        let find = |v: &str| self.names.binary_search_by(|n| n.as_str().cmp(v)).ok();
        match (find(a), find(b)) {
            (Some(i), Some(j)) => self.adjacency[i].contains(&j),
            _ => false,
        }
    }

    /// Breadth-first search for a path from `from` to `to` avoiding `blocked`.
    /// Returns the shortest such path, endpoints included.
    fn path_avoiding(&self, from: &[bool], to: &[bool], blocked: &[bool]) -> Option<Vec<usize>> {
        let n = self.names.len();
        let mut prev = vec![usize::MAX; n];
        let mut seen = vec![false; n];
        let mut queue = VecDeque::new();
        for i in (0..n).filter(|&i| from[i]) {
            seen[i] = true;
            queue.push_back(i);
        }
        while let Some(i) = queue.pop_front() {
            if to[i] {
                let mut path = vec![i];
                let mut cur = i;
                while prev[cur] != usize::MAX {
                    cur = prev[cur];
                    path.push(cur);
                }
                path.reverse();
                return Some(path);
            }
            for &j in &self.adjacency[i] {
                if !seen[j] && !blocked[j] {
                    seen[j] = true;
                    prev[j] = i;
                    queue.push_back(j);
                }
            }
        }
        None
    }
}

/// Induced subgraph on `s` together with all ancestors of `s`.
pub fn ancestral_subgraph(g: &Dag, s: &VarSet) -> Result<Dag> {
    let mask = g.ancestor_mask(&g.mask_of(s)?);
    Ok(g.induced_mask(&mask))
}

/// Marries every pair of parents with a common child, then drops
/// arrowheads.
pub fn moralize(g: &Dag) -> UndirectedGraph {
    let mut ug = UndirectedGraph::with_nodes(g.names.clone());
    for (child, parents) in g.parents.iter().enumerate() {
        for (k, &p) in parents.iter().enumerate() {
            ug.link(p, child);
            for &q in &parents[k + 1..] {
                ug.link(p, q);
            }
        }
    }
    ug
}

pub fn skeleton(g: &Dag) -> UndirectedGraph {
    let mut ug = UndirectedGraph::with_nodes(g.names.clone());
    for (child, parents) in g.parents.iter().enumerate() {
        for &p in parents {
            ug.link(p, child);
        }
    }
    ug
}

/// Unmarried parent pairs `(a, b, c)` with `a -> c <- b`, `a < b`, sorted.
pub fn immoralities(g: &Dag) -> BTreeSet<(VariableId, VariableId, VariableId)> {
    let mut out = BTreeSet::new();
    for (c, parents) in g.parents.iter().enumerate() {
        for (k, &a) in parents.iter().enumerate() {
            for &b in &parents[k + 1..] {
                if !g.children[a].contains(&b) && !g.children[b].contains(&a) {
                    out.insert((g.names[a].clone(), g.names[b].clone(), g.names[c].clone()));
                }
            }
        }
    }
    out
}

pub fn markov_equivalent(g1: &Dag, g2: &Dag) -> Result<bool> {
    if g1.names != g2.names {
        return Err(Error::NodeSetMismatch);
    }
    Ok(skeleton(g1) == skeleton(g2) && immoralities(g1) == immoralities(g2))
}

/// Outcome of the moralisation criterion, with enough detail to explain it.
#[derive(Debug, Clone, PartialEq)]
pub struct Separation {
    pub separated: bool,
    /// Nodes of the ancestral subgraph of `a ∪ b ∪ c`.
    pub ancestral: VarSet,
    /// The moralised ancestral graph.
    pub moral: UndirectedGraph,
    /// A connecting path that avoids `c`, when one exists.
    pub witness: Option<Vec<VariableId>>,
}

/// Runs the moralisation criterion for `a ⫫ b | c` and keeps the
/// intermediate graphs.
pub fn separation(g: &Dag, a: &VarSet, b: &VarSet, c: &VarSet) -> Result<Separation> {
    check_disjoint(g, a, b, c)?;
    if a.is_empty() {
        return Err(Error::EmptySet("first separated set"));
    }
    if b.is_empty() {
        return Err(Error::EmptySet("second separated set"));
    }
    let mut seed = g.mask_of(a)?;
    for v in b.iter().chain(c) {
        seed[g.require(v.as_str())?] = true;
    }
    let anc = ancestral_subgraph(g, &g.set_of(&seed))?;
    let moral = moralize(&anc);
    let from = anc.mask_of(a)?;
    let to = anc.mask_of(b)?;
    let blocked = anc.mask_of(c)?;
    let witness = moral
        .path_avoiding(&from, &to, &blocked)
        .map(|p| p.into_iter().map(|i| moral.names[i].clone()).collect());
    Ok(Separation {
        separated: witness.is_none(),
        ancestral: anc.node_set(),
        moral,
        witness,
    })
}

/// True iff `c` separates `a` from `b` in the moralised ancestral graph of
/// `a ∪ b ∪ c`.
pub fn d_separated(g: &Dag, a: &VarSet, b: &VarSet, c: &VarSet) -> Result<bool> {
    Ok(separation(g, a, b, c)?.separated)
}

fn check_disjoint(g: &Dag, a: &VarSet, b: &VarSet, c: &VarSet) -> Result<()> {
    for v in a.iter().chain(b).chain(c) {
        g.require(v.as_str())?;
    }
    if let Some(v) = a.intersection(b).chain(a.intersection(c)).chain(b.intersection(c)).next() {
        return Err(Error::Overlap(v.to_string()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(names: &[&str]) -> VarSet {
        var_set(names).unwrap()
    }

    fn chain() -> Dag {
        Dag::from_names(&["A", "B", "C"], &[("A", "B"), ("B", "C")]).unwrap()
    }

    fn collider() -> Dag {
        Dag::from_names(&["A", "B", "C"], &[("A", "B"), ("C", "B")]).unwrap()
    }

    #[test]
    fn names_are_validated() {
        assert!(VariableId::new("F_X1").is_ok());
        assert!(VariableId::new("").is_err());
        assert!(VariableId::new("a-b").is_err());
        assert!(VariableId::new("x y").is_err());
    }

    #[test]
    fn cycle_is_rejected_and_named() {
        let err = Dag::from_names(&["A", "B", "C"], &[("A", "B"), ("B", "C"), ("C", "A")]).unwrap_err();
        match err {
            Error::Cycle(path) => {
                assert_eq!(path.first(), path.last());
                assert_eq!(path.len(), 4);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            Dag::from_names(&["A"], &[("A", "A")]),
            Err(Error::SelfLoop(_))
        ));
        assert!(matches!(
            Dag::from_names(&["A"], &[("A", "B")]),
            Err(Error::UnknownVariable(_))
        ));
    }

    #[test]
    fn ancestral_subgraph_examples() {
        let g = chain();
        assert_eq!(ancestral_subgraph(&g, &set(&["C"])).unwrap(), g);
        let only_a = ancestral_subgraph(&g, &set(&["A"])).unwrap();
        assert_eq!(only_a.nodes(), &set(&["A"]).into_iter().collect::<Vec<_>>()[..]);
        assert_eq!(only_a.edge_count(), 0);
        assert!(ancestral_subgraph(&g, &set(&["Q"])).is_err());
    }

    #[test]
    fn ancestral_subgraph_of_long_chain() {
        let g = Dag::from_names(
            &["X1", "X2", "X3", "X4", "X5", "Z"],
            &[("X1", "X2"), ("X2", "X3"), ("X3", "X4"), ("X4", "X5")],
        )
        .unwrap();
        let sub = ancestral_subgraph(&g, &set(&["X3"])).unwrap();
        let expected = Dag::from_names(&["X1", "X2", "X3"], &[("X1", "X2"), ("X2", "X3")]).unwrap();
        assert_eq!(sub, expected);
    }

    #[test]
    fn moralize_examples() {
        let m = moralize(&collider());
        assert_eq!(m.edge_count(), 3);
        assert!(m.has_edge("A", "C"));
        let m = moralize(&chain());
        assert_eq!(m.edge_count(), 2);
        assert!(!m.has_edge("A", "C"));
        let married = Dag::from_names(&["A", "B", "C"], &[("A", "C"), ("B", "C"), ("A", "B")]).unwrap();
        let m = moralize(&married);
        assert_eq!(m.edge_count(), 3);
        assert_eq!(m.nodes(), married.nodes());
    }

    #[test]
    fn separation_examples() {
        let g = chain();
        assert!(d_separated(&g, &set(&["A"]), &set(&["C"]), &set(&["B"])).unwrap());
        assert!(!d_separated(&g, &set(&["A"]), &set(&["C"]), &set(&[])).unwrap());
        let g = collider();
        assert!(d_separated(&g, &set(&["A"]), &set(&["C"]), &set(&[])).unwrap());
        let s = separation(&g, &set(&["A"]), &set(&["C"]), &set(&["B"])).unwrap();
        assert!(!s.separated);
        assert_eq!(s.witness.unwrap().len(), 2);
    }

    #[test]
    fn separation_rejects_bad_arguments() {
        let g = chain();
        assert!(matches!(
            d_separated(&g, &set(&["A"]), &set(&["A"]), &set(&[])),
            Err(Error::Overlap(_))
        ));
        assert!(matches!(
            d_separated(&g, &set(&["A"]), &set(&["C"]), &set(&["C"])),
            Err(Error::Overlap(_))
        ));
        assert!(matches!(
            d_separated(&g, &set(&["A"]), &set(&["Q"]), &set(&[])),
            Err(Error::UnknownVariable(_))
        ));
        assert!(d_separated(&g, &set(&[]), &set(&["C"]), &set(&[])).is_err());
    }

    #[test]
    fn skeleton_and_immoralities() {
        let single = Dag::from_names(&["A", "B"], &[("A", "B")]).unwrap();
        assert_eq!(skeleton(&single).edges().len(), 1);
        let sk = skeleton(&collider());
        assert_eq!(sk.edge_count(), 2);
        assert!(!sk.has_edge("A", "C"));
        let empty = Dag::from_names(&[], &[]).unwrap();
        assert_eq!(skeleton(&empty).edge_count(), 0);

        let imm = immoralities(&collider());
        assert_eq!(imm.len(), 1);
        let (a, b, c) = imm.into_iter().next().unwrap();
        assert_eq!((a.as_str(), b.as_str(), c.as_str()), ("A", "C", "B"));
        let married = Dag::from_names(&["A", "B", "C"], &[("A", "C"), ("B", "C"), ("A", "B")]).unwrap();
        assert!(immoralities(&married).is_empty());
        assert!(immoralities(&chain()).is_empty());
    }

    #[test]
    fn markov_equivalence_examples() {
        let ab = Dag::from_names(&["A", "B"], &[("A", "B")]).unwrap();
        let ba = Dag::from_names(&["A", "B"], &[("B", "A")]).unwrap();
        let none = Dag::from_names(&["A", "B"], &[]).unwrap();
        assert!(markov_equivalent(&ab, &ba).unwrap());
        assert!(!markov_equivalent(&ab, &none).unwrap());
        assert!(!markov_equivalent(&chain(), &collider()).unwrap());
        let fork = Dag::from_names(&["A", "B", "C"], &[("B", "A"), ("B", "C")]).unwrap();
        assert!(markov_equivalent(&chain(), &fork).unwrap());
        let other = Dag::from_names(&["A", "B", "D"], &[]).unwrap();
        assert_eq!(markov_equivalent(&chain(), &other), Err(Error::NodeSetMismatch));
    }

    #[test]
    fn topological_order_respects_edges() {
        let g = Dag::from_names(&["C", "B", "A"], &[("C", "B"), ("B", "A")]).unwrap();
        let order: Vec<_> = g.topological_order().into_iter().map(|v| v.0).collect();
        assert_eq!(order, vec!["C", "B", "A"]);
    }
}
