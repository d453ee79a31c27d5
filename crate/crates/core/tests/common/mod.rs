//! Independent oracles and generators shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;

use dtcausal::dist::{Cpt, StateSpace};
use dtcausal::graph::{Dag, VarSet, VariableId};
use dtcausal::scm::{dirichlet, DiscreteScm};
use rand::seq::SliceRandom;
use rand::Rng;

pub fn v(name: &str) -> VariableId {
    VariableId::new(name).unwrap()
}

pub fn set(names: &[&str]) -> VarSet {
    names.iter().map(|n| v(n)).collect()
}

/// Path-blocking d-separation: `a ⫫ b | c` iff every simple path in the
/// skeleton between an `a` node and a `b` node is blocked, i.e. has a
/// non-collider in `c` or a collider with no descendant (itself included)
/// in `c`.
pub fn d_separated_by_paths(g: &Dag, a: &VarSet, b: &VarSet, c: &VarSet) -> bool {
    let names: Vec<VariableId> = g.nodes().to_vec();
    let n = names.len();
    let idx = |x: &VariableId| names.iter().position(|y| y == x).unwrap();
    let edge = |i: usize, j: usize| g.has_edge(names[i].as_str(), names[j].as_str());
    let in_c: Vec<bool> = names.iter().map(|x| c.contains(x)).collect();
    let opens: Vec<bool> = names
        .iter()
        .map(|x| g.descendants(x.as_str()).unwrap().iter().any(|d| c.contains(d)))
        .collect();
    let targets: Vec<bool> = names.iter().map(|x| b.contains(x)).collect();

    fn walk(
        path: &mut Vec<usize>,
        on_path: &mut Vec<bool>,
        n: usize,
        edge: &dyn Fn(usize, usize) -> bool,
        in_c: &[bool],
        opens: &[bool],
        targets: &[bool],
    ) -> bool {
        let last = *path.last().unwrap();
        if path.len() >= 3 {
            let (p, m) = (path[path.len() - 3], path[path.len() - 2]);
            let collider = edge(p, m) && edge(last, m);
            let blocked = if collider { !opens[m] } else { in_c[m] };
            if blocked {
                return false;
            }
        }
        if path.len() >= 2 && targets[last] {
            return true;
        }
        for next in 0..n {
            if on_path[next] || !(edge(last, next) || edge(next, last)) {
                continue;
            }
            path.push(next);
            on_path[next] = true;
            let found = walk(path, on_path, n, edge, in_c, opens, targets);
            path.pop();
            on_path[next] = false;
            if found {
                return true;
            }
        }
        false
    }

    for start in a {
        let s = idx(start);
        let mut path = vec![s];
        let mut on_path = vec![false; n];
        on_path[s] = true;
        if walk(&mut path, &mut on_path, n, &edge, &in_c, &opens, &targets) {
            return false;
        }
    }
    true
}

/// Every DAG on nodes `N0..N{n-1}`.
pub fn all_dags(n: usize) -> Vec<Dag> {
    let names: Vec<String> = (0..n).map(|i| format!("N{i}")).collect();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let mut out = Vec::new();
    let total = 3usize.pow(pairs.len() as u32);
    for code in 0..total {
        let mut c = code;
        let mut edges = Vec::new();
        for &(i, j) in &pairs {
            match c % 3 {
                1 => edges.push((names[i].as_str(), names[j].as_str())),
                2 => edges.push((names[j].as_str(), names[i].as_str())),
                _ => {}
            }
            c /= 3;
        }
        let nodes: Vec<&str> = names.iter().map(String::as_str).collect();
        if let Ok(g) = Dag::from_names(&nodes, &edges) {
            out.push(g);
        }
    }
    out
}

/// Every assignment of nodes to (a, b, c, neither) with `a` and `b` nonempty.
pub fn all_triples(nodes: &[VariableId]) -> Vec<(VarSet, VarSet, VarSet)> {
    let n = nodes.len();
    let mut out = Vec::new();
    for code in 0..4usize.pow(n as u32) {
        let (mut a, mut b, mut c) = (VarSet::new(), VarSet::new(), VarSet::new());
        let mut k = code;
        for x in nodes {
            match k % 4 {
                0 => {
                    a.insert(x.clone());
                }
                1 => {
                    b.insert(x.clone());
                }
                2 => {
                    c.insert(x.clone());
                }
                _ => {}
            }
            k /= 4;
        }
        if !a.is_empty() && !b.is_empty() {
            out.push((a, b, c));
        }
    }
    out
}

/// A random DAG on `n` nodes whose topological order is a random
/// permutation of the names, so name order says nothing about structure.
pub fn random_dag<R: Rng>(n: usize, density: f64, rng: &mut R) -> Dag {
    let mut names: Vec<String> = (0..n).map(|i| format!("N{i}")).collect();
    names.shuffle(rng);
    let mut edges = Vec::new();
    for j in 0..n {
        for i in 0..j {
            if rng.random::<f64>() < density {
                edges.push((names[i].as_str(), names[j].as_str()));
            }
        }
    }
    let nodes: Vec<&str> = names.iter().map(String::as_str).collect();
    Dag::from_names(&nodes, &edges).unwrap()
}

/// A random disjoint triple with nonempty `a` and `b`.
pub fn random_triple<R: Rng>(g: &Dag, rng: &mut R) -> (VarSet, VarSet, VarSet) {
    loop {
        let (mut a, mut b, mut c) = (VarSet::new(), VarSet::new(), VarSet::new());
        for x in g.nodes() {
            match rng.random_range(0..5) {
                0 => {
                    a.insert(x.clone());
                }
                1 => {
                    b.insert(x.clone());
                }
                2 | 3 => {
                    c.insert(x.clone());
                }
                _ => {}
            }
        }
        if !a.is_empty() && !b.is_empty() {
            return (a, b, c);
        }
    }
}

/// Random CPTs on `g`; `cards` fixes some cardinalities, others are drawn
/// from 2..=max_states.
pub fn random_model<R: Rng>(g: &Dag, cards: &BTreeMap<&str, usize>, max_states: usize, rng: &mut R) -> DiscreteScm {
    let mut space = StateSpace::new();
    for x in g.nodes() {
        let k = cards.get(x.as_str()).copied().unwrap_or_else(|| rng.random_range(2..=max_states));
        space.with_cardinality(x.clone(), k).unwrap();
    }
    let mut cpts = BTreeMap::new();
    for x in g.nodes() {
        let parents: Vec<VariableId> = g.parents(x.as_str()).unwrap().into_iter().collect();
        let rows: usize = parents.iter().map(|p| space.cardinality(p.as_str()).unwrap()).product();
        let k = space.cardinality(x.as_str()).unwrap();
        let table = (0..rows).map(|_| dirichlet(k, 1.0, rng)).collect();
        cpts.insert(x.clone(), Cpt::new(x.clone(), parents, table, &space).unwrap());
    }
    DiscreteScm::from_cpts(g.clone(), space, cpts).unwrap()
}

/// All label configurations of `vars` in `m`'s state space.
pub fn configurations(m: &DiscreteScm, vars: &[VariableId]) -> Vec<Vec<(VariableId, String)>> {
    let mut out = vec![Vec::new()];
    for x in vars {
        let labels = m.space().states(x.as_str()).unwrap();
        out = out
            .into_iter()
            .flat_map(|prefix: Vec<(VariableId, String)>| {
                labels.iter().map(move |l| {
                    let mut p = prefix.clone();
                    p.push((x.clone(), l.clone()));
                    p
                })
            })
            .collect();
    }
    out
}
