//! Influence diagrams: DAGs carrying non-stochastic regime indicators, and
//! the causal conditions that become separation statements on them.
//!
//! A regime node `F_X` has no parents and points only at its target `X`.
//! A strategy node (such as `sigma` for a dynamic treatment plan) is a
//! regime node with several targets. Regime values are never stored in the
//! graph; they are supplied per query through [`RegimeAssignment`].

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::ci::{Universe, VarKind};
use crate::dist::StateSpace;
use crate::error::{Error, Result};
use crate::graph::{d_separated, Dag, VarSet, VariableId};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InfluenceDiagram {
    dag: Dag,
    regimes: BTreeMap<VariableId, VarSet>,
    latent: VarSet,
    functions: BTreeMap<VariableId, VarSet>,
}

/// Conventional name of the regime indicator for `target`.
pub fn regime_name(target: &VariableId) -> VariableId {
    VariableId::new(format!("F_{target}")).expect("prefixing keeps the name valid")
}

impl InfluenceDiagram {
    /// Builds and validates a diagram.
    ///
    /// `regimes` maps each regime node to its targets, `latent` lists
    /// unobserved stochastic nodes and `functions` records nodes that are
    /// deterministic functions of the listed arguments.
    pub fn new(
        dag: Dag,
        regimes: BTreeMap<VariableId, VarSet>,
        latent: VarSet,
        functions: BTreeMap<VariableId, VarSet>,
    ) -> Result<Self> {
        let mut claimed: BTreeMap<&VariableId, &VariableId> = BTreeMap::new();
        for (r, targets) in &regimes {
            if !dag.parents(r.as_str())?.is_empty() {
                return Err(Error::Regime(format!("regime node `{r}` has parents")));
            }
            if targets.is_empty() {
                return Err(Error::Regime(format!("regime node `{r}` has no target")));
            }
            if &dag.children(r.as_str())? != targets {
                return Err(Error::Regime(format!(
                    "regime node `{r}` must point exactly at its targets"
                )));
            }
            for t in targets {
                if regimes.contains_key(t) {
                    return Err(Error::Regime(format!("regime node `{r}` targets regime node `{t}`")));
                }
                if let Some(other) = claimed.insert(t, r) {
                    return Err(Error::Regime(format!(
                        "`{t}` has two regime nodes, `{other}` and `{r}`"
                    )));
                }
            }
        }
        for v in latent.iter().chain(functions.keys()) {
            dag.require(v.as_str())?;
            if regimes.contains_key(v) {
                return Err(Error::Regime(format!("regime node `{v}` cannot be latent or functional")));
            }
        }
        for (v, args) in &functions {
            for a in args {
                dag.require(a.as_str())?;
            }
            if args.contains(v) {
                return Err(Error::Regime(format!("`{v}` cannot be a function of itself")));
            }
        }
        Ok(InfluenceDiagram {
            dag,
            regimes,
            latent,
            functions,
        })
    }

    /// A diagram with no regime nodes.
    pub fn from_dag(dag: Dag) -> Self {
        InfluenceDiagram {
            dag,
            regimes: BTreeMap::new(),
            latent: VarSet::new(),
            functions: BTreeMap::new(),
        }
    }

    pub fn dag(&self) -> &Dag {
        &self.dag
    }

    pub fn is_regime(&self, v: &str) -> bool {
        self.regimes.contains_key(v)
    }

    pub fn is_latent(&self, v: &str) -> bool {
        self.latent.contains(v)
    }

    pub fn latent(&self) -> &VarSet {
        &self.latent
    }

    pub fn regime_nodes(&self) -> impl Iterator<Item = (&VariableId, &VarSet)> {
        self.regimes.iter()
    }

    pub fn stochastic_nodes(&self) -> VarSet {
        self.dag
            .nodes()
            .iter()
            .filter(|v| !self.is_regime(v.as_str()))
            .cloned()
            .collect()
    }

    /// Stochastic nodes that are not latent.
    pub fn observed_nodes(&self) -> VarSet {
        self.stochastic_nodes()
            .into_iter()
            .filter(|v| !self.is_latent(v.as_str()))
            .collect()
    }

    /// The regime node pointing at `target`, if any.
    pub fn regime_for(&self, target: &str) -> Option<&VariableId> {
        self.regimes
            .iter()
            .find(|(_, ts)| ts.contains(target))
            .map(|(r, _)| r)
    }

    pub(crate) fn require_regime(&self, target: &VariableId) -> Result<&VariableId> {
        self.dag.require(target.as_str())?;
        self.regime_for(target.as_str())
            .ok_or_else(|| Error::MissingRegime(target.to_string()))
    }

    /// Arguments of `v` when it is recorded as a deterministic function.
    pub fn function_args(&self, v: &str) -> Option<&VarSet> {
        self.functions.get(v)
    }

    pub fn functions(&self) -> &BTreeMap<VariableId, VarSet> {
        &self.functions
    }

    /// Variable declarations for the CI engine.
    pub fn universe(&self) -> Universe {
        let mut u = Universe::new();
        for v in self.dag.nodes() {
            let kind = if self.is_regime(v.as_str()) {
                VarKind::Regime
            } else {
                VarKind::Stochastic
            };
            u.declare(v.clone(), kind);
        }
        u
    }

    /// The underlying DAG with every regime node removed.
    pub fn without_regimes(&self) -> Dag {
        self.dag
            .induced(&self.stochastic_nodes())
            .expect("stochastic nodes belong to the graph")
    }

    pub fn d_separated(&self, a: &VarSet, b: &VarSet, c: &VarSet) -> Result<bool> {
        d_separated(&self.dag, a, b, c)
    }

    /// Adds a regime node `F_v -> v` for each target that does not already
    /// have one.
    pub fn augmented(&self, targets: &VarSet) -> Result<InfluenceDiagram> {
        let mut regimes = self.regimes.clone();
        let mut new_nodes = Vec::new();
        let mut new_edges = Vec::new();
        for t in targets {
            self.dag.require(t.as_str())?;
            if self.is_regime(t.as_str()) {
                return Err(Error::Regime(format!("cannot augment regime node `{t}`")));
            }
            if self.regime_for(t.as_str()).is_some() {
                continue;
            }
            let f = regime_name(t);
            if self.dag.contains(f.as_str()) {
                return Err(Error::Duplicate(format!("node `{f}` (name collision while augmenting)")));
            }
            regimes.insert(f.clone(), [t.clone()].into());
            new_nodes.push(f.clone());
            new_edges.push((f, t.clone()));
        }
        let dag = self.dag.extended(new_nodes, new_edges)?;
        InfluenceDiagram::new(dag, regimes, self.latent.clone(), self.functions.clone())
    }

    /// Every stochastic node gets its own regime node.
    pub fn fully_augmented(&self) -> Result<InfluenceDiagram> {
        self.augmented(&self.stochastic_nodes())
    }
}

/// Adds `F_v -> v` for every target.
pub fn augment(g: &Dag, targets: &VarSet) -> Result<InfluenceDiagram> {
    InfluenceDiagram::from_dag(g.clone()).augmented(targets)
}

/// Deletes every edge into an intervened node except the one from its
/// regime node: the graph read under `F_v ≠ idle`.
pub fn surgery(id: &InfluenceDiagram, intervened: &VarSet) -> Result<InfluenceDiagram> {
    let mut remove = Vec::new();
    for v in intervened {
        let f = id.require_regime(v)?;
        for p in id.dag.parents(v.as_str())? {
            if &p != f {
                remove.push((p, v.clone()));
            }
        }
    }
    if remove.is_empty() {
        return Ok(id.clone());
    }
    Ok(InfluenceDiagram {
        dag: id.dag.without_edges(&remove),
        ..id.clone()
    })
}

fn single(v: &VariableId) -> VarSet {
    [v.clone()].into()
}

fn with(set: &VarSet, extra: &[&VariableId]) -> VarSet {
    set.iter().cloned().chain(extra.iter().map(|v| (*v).clone())).collect()
}

/// `Y ⫫ F_T | T`: no confounding.
pub fn check_no_confounding(id: &InfluenceDiagram, t: &VariableId, y: &VariableId) -> Result<bool> {
    let f = id.require_regime(t)?;
    id.d_separated(&single(y), &single(f), &single(t))
}

/// `U ⫫ F_T` and `Y ⫫ F_T | (U, T)`: `u` is a sufficient covariate.
pub fn check_sufficient_covariate(
    id: &InfluenceDiagram,
    t: &VariableId,
    y: &VariableId,
    u: &VarSet,
) -> Result<bool> {
    let f = id.require_regime(t)?;
    if u.contains(t) || u.contains(y) {
        return Err(Error::Overlap(if u.contains(t) { t } else { y }.to_string()));
    }
    let covariate = u.is_empty() || id.d_separated(u, &single(f), &VarSet::new())?;
    Ok(covariate && id.d_separated(&single(y), &single(f), &with(u, &[t]))?)
}

/// `T ⫫ U | (V, F_T)` where `v` is a deterministic reduction of `u`.
pub fn check_treatment_sufficient_reduction(
    id: &InfluenceDiagram,
    t: &VariableId,
    u: &VarSet,
    v: &VarSet,
) -> Result<bool> {
    let f = id.require_regime(t)?;
    for var in v {
        if u.contains(var) {
            continue;
        }
        match id.function_args(var.as_str()) {
            Some(args) if args.is_subset(u) => {}
            _ => {
                return Err(Error::Precondition(format!(
                    "`{var}` is not declared as a function of {}",
                    crate::graph::fmt_set(u)
                )))
            }
        }
    }
    let rest: VarSet = u.difference(v).cloned().collect();
    if rest.is_empty() {
        return Ok(true);
    }
    id.d_separated(&single(t), &rest, &with(v, &[f]))
}

/// Instrumental-variable conditions with a regime node on `x`:
/// `U ⫫ Z | F_X`, `Y ⫫ Z | (X, U, F_X)`, `U` sufficient for the effect of
/// `X` on `Y`, and `Z` adjacent to `X`.
///
/// Dependence of `X` on `Z` cannot be read off a graph without assuming
/// faithfulness; adjacency is checked in its place.
pub fn check_iv_assumptions(
    id: &InfluenceDiagram,
    z: &VariableId,
    x: &VariableId,
    u: &VarSet,
    y: &VariableId,
) -> Result<bool> {
    for v in [z, x, y].into_iter().chain(u) {
        id.dag.require(v.as_str())?;
    }
    let f = id.require_regime(x)?;
    let z_set = single(z);
    let instr1 = u.is_empty() || id.d_separated(u, &z_set, &single(f))?;
    let instr2 = id.d_separated(&single(y), &z_set, &with(u, &[x, f]))?;
    let sufficient = check_sufficient_covariate(id, x, y, u)?;
    let relevant = id.dag.adjacent(z.as_str(), x.as_str());
    Ok(instr1 && instr2 && sufficient && relevant)
}

/// Stage-wise no-residual-confounding for a strategy node pointing at every
/// treatment: `L_k ⫫ σ | history before L_k` and `Y ⫫ σ | full history`.
///
/// `covariates[k]` is the (possibly empty) set observed just before
/// `treatments[k]`.
pub fn check_sequential_ignorability(
    id: &InfluenceDiagram,
    covariates: &[VarSet],
    treatments: &[VariableId],
    y: &VariableId,
) -> Result<bool> {
    if covariates.len() != treatments.len() || treatments.is_empty() {
        return Err(Error::InvalidArgument(
            "need one covariate set per treatment and at least one stage".into(),
        ));
    }
    let sigma = id
        .regimes
        .iter()
        .find(|(_, ts)| treatments.iter().all(|t| ts.contains(t)))
        .map(|(r, _)| r.clone())
        .ok_or_else(|| Error::MissingRegime(format!("strategy node for {treatments:?}")))?;

    // Position of each variable in the sequence L1, T1, L2, T2, ..., Y.
    let mut block: BTreeMap<&VariableId, usize> = BTreeMap::new();
    for (k, (ls, t)) in covariates.iter().zip(treatments).enumerate() {
        for l in ls {
            if block.insert(l, 2 * k).is_some() {
                return Err(Error::Duplicate(format!("`{l}` in the stage sequence")));
            }
        }
        if block.insert(t, 2 * k + 1).is_some() {
            return Err(Error::Duplicate(format!("`{t}` in the stage sequence")));
        }
    }
    if block.insert(y, 2 * treatments.len()).is_some() {
        return Err(Error::Duplicate(format!("`{y}` in the stage sequence")));
    }
    for v in block.keys() {
        id.dag.require(v.as_str())?;
    }
    for (a, b) in id.dag.edges() {
        if let (Some(ba), Some(bb)) = (block.get(&a), block.get(&b)) {
            if ba > bb {
                return Err(Error::InvalidArgument(format!(
                    "edge {a} -> {b} contradicts the stage ordering"
                )));
            }
        }
    }

    let sigma_set = single(&sigma);
    let mut history = VarSet::new();
    for (ls, t) in covariates.iter().zip(treatments) {
        if !ls.is_empty() && !id.d_separated(ls, &sigma_set, &history)? {
            return Ok(false);
        }
        history.extend(ls.iter().cloned());
        history.insert(t.clone());
    }
    id.d_separated(&single(y), &sigma_set, &history)
}

/// Value of one regime indicator.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RegimeValue {
    Idle,
    Set(String),
}

/// Values for the regime indicators of a model, keyed by target variable.
/// Targets that are not mentioned are idle.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RegimeAssignment {
    settings: BTreeMap<VariableId, String>,
}

impl RegimeAssignment {
    pub fn idle() -> Self {
        Self::default()
    }

    pub fn set(mut self, target: VariableId, state: impl Into<String>) -> Self {
        self.settings.insert(target, state.into());
        self
    }

    pub fn value(&self, target: &str) -> RegimeValue {
        self.settings
            .get(target)
            .map_or(RegimeValue::Idle, |s| RegimeValue::Set(s.clone()))
    }

    pub fn is_idle(&self) -> bool {
        self.settings.is_empty()
    }

    /// `(target, state)` pairs of the non-idle indicators.
    pub fn interventions(&self) -> impl Iterator<Item = (&VariableId, &String)> {
        self.settings.iter()
    }

    pub fn intervened(&self) -> VarSet {
        self.settings.keys().cloned().collect()
    }

    /// Checks every setting against the declared state sets.
    pub fn validate(&self, space: &StateSpace) -> Result<()> {
        for (v, s) in &self.settings {
            space.state_index(v.as_str(), s)?;
        }
        Ok(())
    }

    /// Parses `idle`, or one or more `F_X=x` / `X=x` items separated by
    /// commas or whitespace.
    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        let mut out = RegimeAssignment::idle();
        if text.is_empty() || text == "idle" {
            return Ok(out);
        }
        for item in text.split(|c: char| c == ',' || c.is_whitespace()).filter(|s| !s.is_empty()) {
            let (lhs, state) = item
                .split_once('=')
                .ok_or_else(|| Error::InvalidArgument(format!("regime item `{item}` needs `=`")))?;
            let target = lhs.strip_prefix("F_").unwrap_or(lhs);
            let target = VariableId::new(target)?;
            if state == "idle" {
                continue;
            }
            if out.settings.insert(target.clone(), state.to_string()).is_some() {
                return Err(Error::Duplicate(format!("regime setting for `{target}`")));
            }
        }
        Ok(out)
    }
}

impl fmt::Display for RegimeAssignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.settings.is_empty() {
            return f.write_str("idle");
        }
        let parts: Vec<String> = self.settings.iter().map(|(v, s)| format!("F_{v}={s}")).collect();
        f.write_str(&parts.join(","))
    }
}

/// The node set a strategy node points at, sorted; used by the CLI when
/// building the sequential-ignorability diagram.
pub fn strategy_diagram(dag: &Dag, name: &str, treatments: &[VariableId]) -> Result<InfluenceDiagram> {
    let sigma = VariableId::new(name)?;
    if dag.contains(sigma.as_str()) {
        return Err(Error::Duplicate(format!("node `{sigma}`")));
    }
    let targets: BTreeSet<VariableId> = treatments.iter().cloned().collect();
    let edges: Vec<_> = targets.iter().map(|t| (sigma.clone(), t.clone())).collect();
    let extended = dag.extended([sigma.clone()], edges)?;
    InfluenceDiagram::new(extended, [(sigma, targets)].into(), VarSet::new(), BTreeMap::new())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::var_set;

    fn v(n: &str) -> VariableId {
        VariableId::new(n).unwrap()
    }

    fn set(names: &[&str]) -> VarSet {
        var_set(names).unwrap()
    }

    fn id_with(nodes: &[&str], edges: &[(&str, &str)], targets: &[&str]) -> InfluenceDiagram {
        augment(&Dag::from_names(nodes, edges).unwrap(), &set(targets)).unwrap()
    }

    /// U -> T, U -> Y, T -> Y with F_T -> T.
    fn confounded() -> InfluenceDiagram {
        id_with(&["U", "T", "Y"], &[("U", "T"), ("U", "Y"), ("T", "Y")], &["T"])
    }

    #[test]
    fn augment_adds_regime_edges() {
        let id = id_with(&["X", "Y"], &[("X", "Y")], &["X"]);
        assert!(id.dag().has_edge("F_X", "X"));
        assert_eq!(id.dag().edge_count(), 2);
        assert_eq!(id.regime_for("X").unwrap().as_str(), "F_X");
        let none = id_with(&["X", "Y"], &[("X", "Y")], &[]);
        assert_eq!(none.dag(), &Dag::from_names(&["X", "Y"], &[("X", "Y")]).unwrap());
        let clash = Dag::from_names(&["X", "F_X"], &[]).unwrap();
        assert!(matches!(augment(&clash, &set(&["X"])), Err(Error::Duplicate(_))));
        assert!(augment(&clash, &set(&["Q"])).is_err());
    }

    #[test]
    fn augmented_dag_of_five_nodes() {
        // A -> C <- B, C -> E <- D, each node with its own regime indicator.
        let g = Dag::from_names(
            &["A", "B", "C", "D", "E"],
            &[("A", "C"), ("B", "C"), ("C", "E"), ("D", "E")],
        )
        .unwrap();
        let id = augment(&g, &g.node_set()).unwrap();
        assert_eq!(id.dag().len(), 10);
        assert_eq!(id.dag().edge_count(), 9);
        assert_eq!(id.without_regimes(), g);
        // C ⫫ (D, F_A, F_B, F_D, F_E) | (A, B, F_C)
        assert!(id
            .d_separated(&set(&["C"]), &set(&["D", "F_A", "F_B", "F_D", "F_E"]), &set(&["A", "B", "F_C"]))
            .unwrap());
    }

    #[test]
    fn surgery_cuts_incoming_edges() {
        let id = confounded();
        let cut = surgery(&id, &set(&["T"])).unwrap();
        assert!(!cut.dag().has_edge("U", "T"));
        assert!(cut.dag().has_edge("F_T", "T"));
        assert!(cut.dag().has_edge("U", "Y"));
        assert_eq!(surgery(&id, &set(&[])).unwrap(), id);
        let root = id_with(&["X", "Y"], &[("X", "Y")], &["X"]);
        assert_eq!(surgery(&root, &set(&["X"])).unwrap(), root);
        assert!(matches!(surgery(&id, &set(&["Y"])), Err(Error::MissingRegime(_))));
    }

    #[test]
    fn no_confounding_examples() {
        let x2y = id_with(&["X", "Y"], &[("X", "Y")], &["X"]);
        assert!(check_no_confounding(&x2y, &v("X"), &v("Y")).unwrap());
        let y2x = id_with(&["X", "Y"], &[("Y", "X")], &["X"]);
        assert!(y2x.d_separated(&set(&["Y"]), &set(&["F_X"]), &set(&[])).unwrap());
        // X is a collider on Y -> X <- F_X, so conditioning on it connects them.
        assert!(!check_no_confounding(&y2x, &v("X"), &v("Y")).unwrap());
        assert!(!check_no_confounding(&confounded(), &v("T"), &v("Y")).unwrap());
        assert!(matches!(
            check_no_confounding(&confounded(), &v("Y"), &v("T")),
            Err(Error::MissingRegime(_))
        ));
    }

    #[test]
    fn sufficient_covariate_examples() {
        assert!(check_sufficient_covariate(&confounded(), &v("T"), &v("Y"), &set(&["U"])).unwrap());
        let with_leak = InfluenceDiagram::new(
            confounded().dag().extended([], [(v("F_T"), v("U"))]).unwrap(),
            [(v("F_T"), set(&["T", "U"]))].into(),
            VarSet::new(),
            BTreeMap::new(),
        )
        .unwrap();
        assert!(!check_sufficient_covariate(&with_leak, &v("T"), &v("Y"), &set(&["U"])).unwrap());
        let mediator = id_with(&["T", "M", "Y"], &[("T", "M"), ("M", "Y")], &["T"]);
        assert!(!check_sufficient_covariate(&mediator, &v("T"), &v("Y"), &set(&["M"])).unwrap());
    }

    #[test]
    fn non_confounding_special_cases() {
        // Arrow a (U -> T) or arrow b (U -> Y) absent.
        let no_a = id_with(&["U", "T", "Y"], &[("U", "Y"), ("T", "Y")], &["T"]);
        let no_b = id_with(&["U", "T", "Y"], &[("U", "T"), ("T", "Y")], &["T"]);
        assert!(check_no_confounding(&no_a, &v("T"), &v("Y")).unwrap());
        assert!(check_no_confounding(&no_b, &v("T"), &v("Y")).unwrap());
    }

    fn reduction_diagram(extra: &[(&str, &str)]) -> InfluenceDiagram {
        let mut edges = vec![("U", "V"), ("V", "T"), ("T", "Y"), ("U", "Y"), ("F_T", "T")];
        edges.extend_from_slice(extra);
        let dag = Dag::from_names(&["U", "V", "T", "Y", "F_T"], &edges).unwrap();
        InfluenceDiagram::new(
            dag,
            [(v("F_T"), set(&["T"]))].into(),
            VarSet::new(),
            [(v("V"), set(&["U"]))].into(),
        )
        .unwrap()
    }

    #[test]
    fn treatment_sufficient_reduction_examples() {
        let id = reduction_diagram(&[]);
        assert!(check_treatment_sufficient_reduction(&id, &v("T"), &set(&["U"]), &set(&["V"])).unwrap());
        assert!(check_treatment_sufficient_reduction(&id, &v("T"), &set(&["U"]), &set(&["U"])).unwrap());
        let leaky = reduction_diagram(&[("U", "T")]);
        assert!(!check_treatment_sufficient_reduction(&leaky, &v("T"), &set(&["U"]), &set(&["V"])).unwrap());
        assert!(matches!(
            check_treatment_sufficient_reduction(&id, &v("T"), &set(&["U"]), &set(&["Y"])),
            Err(Error::Precondition(_))
        ));
    }

    fn iv_diagram(extra: &[(&str, &str)], drop_zx: bool) -> InfluenceDiagram {
        let mut edges = vec![("U", "X"), ("U", "Y"), ("X", "Y")];
        if !drop_zx {
            edges.push(("Z", "X"));
        }
        edges.extend_from_slice(extra);
        id_with(&["Z", "X", "U", "Y"], &edges, &["X"])
    }

    #[test]
    fn iv_assumption_examples() {
        let u = set(&["U"]);
        assert!(check_iv_assumptions(&iv_diagram(&[], false), &v("Z"), &v("X"), &u, &v("Y")).unwrap());
        assert!(!check_iv_assumptions(&iv_diagram(&[("Z", "Y")], false), &v("Z"), &v("X"), &u, &v("Y")).unwrap());
        assert!(!check_iv_assumptions(&iv_diagram(&[], true), &v("Z"), &v("X"), &u, &v("Y")).unwrap());
        assert!(check_iv_assumptions(&iv_diagram(&[], false), &v("Q"), &v("X"), &u, &v("Y")).is_err());
    }

    fn two_stage_diagram(extra_nodes: &[&str], extra: &[(&str, &str)]) -> InfluenceDiagram {
        let order = ["L1", "T1", "L2", "T2", "Y"];
        let mut edges: Vec<(&str, &str)> = Vec::new();
        for i in 0..order.len() {
            for j in i + 1..order.len() {
                edges.push((order[i], order[j]));
            }
        }
        edges.extend_from_slice(extra);
        let mut nodes = order.to_vec();
        nodes.extend_from_slice(extra_nodes);
        let dag = Dag::from_names(&nodes, &edges).unwrap();
        strategy_diagram(&dag, "sigma", &[v("T1"), v("T2")]).unwrap()
    }

    #[test]
    fn sequential_ignorability_examples() {
        let ls = [set(&["L1"]), set(&["L2"])];
        let ts = [v("T1"), v("T2")];
        assert!(check_sequential_ignorability(&two_stage_diagram(&[], &[]), &ls, &ts, &v("Y")).unwrap());
        let hidden = two_stage_diagram(&["H"], &[("H", "T1"), ("H", "Y")]);
        assert!(!check_sequential_ignorability(&hidden, &ls, &ts, &v("Y")).unwrap());
        let swapped = [set(&["L2"]), set(&["L1"])];
        assert!(check_sequential_ignorability(&two_stage_diagram(&[], &[]), &swapped, &ts, &v("Y")).is_err());
    }

    #[test]
    fn single_stage_matches_no_confounding_with_covariate() {
        let dag = Dag::from_names(&["L1", "T1", "Y"], &[("L1", "T1"), ("L1", "Y"), ("T1", "Y")]).unwrap();
        let sid = strategy_diagram(&dag, "sigma", &[v("T1")]).unwrap();
        let fid = augment(&dag, &set(&["T1"])).unwrap();
        assert_eq!(
            check_sequential_ignorability(&sid, &[set(&["L1"])], &[v("T1")], &v("Y")).unwrap(),
            check_sufficient_covariate(&fid, &v("T1"), &v("Y"), &set(&["L1"])).unwrap()
        );
    }

    #[test]
    fn regime_assignment_parsing() {
        let r = RegimeAssignment::parse("F_X=1").unwrap();
        assert_eq!(r.value("X"), RegimeValue::Set("1".into()));
        assert_eq!(r.value("Y"), RegimeValue::Idle);
        assert_eq!(r.to_string(), "F_X=1");
        assert!(RegimeAssignment::parse("idle").unwrap().is_idle());
        let both = RegimeAssignment::parse("X=0, T=1").unwrap();
        assert_eq!(both.intervened(), set(&["T", "X"]));
        assert!(RegimeAssignment::parse("X").is_err());
        let mut space = StateSpace::new();
        space.with_cardinality(v("X"), 2).unwrap();
        assert!(RegimeAssignment::parse("X=1").unwrap().validate(&space).is_ok());
        assert!(RegimeAssignment::parse("X=7").unwrap().validate(&space).is_err());
    }

    #[test]
    fn invalid_diagrams_are_rejected() {
        let dag = Dag::from_names(&["F_X", "X", "Y"], &[("F_X", "X"), ("F_X", "Y")]).unwrap();
        let r = InfluenceDiagram::new(dag, [(v("F_X"), set(&["X"]))].into(), VarSet::new(), BTreeMap::new());
        assert!(r.is_err());
        let dag = Dag::from_names(&["F_X", "X", "Y"], &[("Y", "F_X"), ("F_X", "X")]).unwrap();
        let r = InfluenceDiagram::new(dag, [(v("F_X"), set(&["X"]))].into(), VarSet::new(), BTreeMap::new());
        assert!(r.is_err());
    }
}
