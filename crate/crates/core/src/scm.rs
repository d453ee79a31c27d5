//! Ground-truth models.
//!
//! [`DiscreteScm`] is a finite structural model that can be executed under
//! any regime by surgery followed by exact enumeration; every oracle value
//! in the test suites comes from it. The Gaussian constructions cover the
//! two-arm experiment (with its error-correlation parameter that no data
//! can reveal) and the linear instrumental-variable model.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Normal};

use crate::data::{Dataset, RegimeSource};
use crate::dist::{joint_from_cpts, Cpt, JointTable, StateSpace};
use crate::error::{Error, Result};
use crate::graph::{Dag, VarSet, VariableId};
use crate::regimes::{InfluenceDiagram, RegimeAssignment};

/// How a node's value is produced from its parents.
#[derive(Debug, Clone, PartialEq)]
pub enum Mechanism {
    Table(Cpt),
    /// `v = f(parents, e)` with private noise `e ~ noise`; `map[row][e]` is
    /// the state of `v` for parent configuration `row` (lexicographic).
    Functional {
        parents: Vec<VariableId>,
        noise: Vec<f64>,
        map: Vec<Vec<usize>>,
    },
}

impl Mechanism {
    /// Potential-response form: the noise is the tuple of responses, one per
    /// parent configuration, with the given joint distribution over tuples
    /// (lexicographic, first configuration slowest). The node takes the
    /// component selected by its parents.
    pub fn potential_responses(
        parents: Vec<VariableId>,
        rows: usize,
        child_states: usize,
        joint: Vec<f64>,
    ) -> Result<Self> {
        let tuples = child_states
            .checked_pow(rows as u32)
            .ok_or_else(|| Error::InvalidArgument("too many response tuples".into()))?;
        if joint.len() != tuples {
            return Err(Error::Table(format!(
                "response distribution has {} entries, expected {tuples}",
                joint.len()
            )));
        }
        let map = (0..rows)
            .map(|row| {
                (0..tuples)
                    .map(|e| (e / child_states.pow((rows - 1 - row) as u32)) % child_states)
                    .collect()
            })
            .collect();
        Ok(Mechanism::Functional {
            parents,
            noise: joint,
            map,
        })
    }

    pub fn parents(&self) -> &[VariableId] {
        match self {
            Mechanism::Table(c) => &c.parents,
            Mechanism::Functional { parents, .. } => parents,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteScm {
    dag: Dag,
    space: StateSpace,
    mechanisms: BTreeMap<VariableId, Mechanism>,
    latent: VarSet,
}

impl DiscreteScm {
    pub fn new(
        dag: Dag,
        space: StateSpace,
        mechanisms: BTreeMap<VariableId, Mechanism>,
        latent: VarSet,
    ) -> Result<Self> {
        for v in dag.nodes() {
            let m = mechanisms
                .get(v)
                .ok_or_else(|| Error::Table(format!("missing mechanism for `{v}`")))?;
            let declared: VarSet = m.parents().iter().cloned().collect();
            if declared != dag.parents(v.as_str())? || declared.len() != m.parents().len() {
                return Err(Error::Table(format!("mechanism parents of `{v}` do not match the graph")));
            }
            if let Mechanism::Functional { noise, map, parents } = m {
                let rows: usize = parents
                    .iter()
                    .map(|p| space.cardinality(p.as_str()))
                    .product::<Result<usize>>()?;
                let k = space.cardinality(v.as_str())?;
                let total: f64 = noise.iter().sum();
                if noise.iter().any(|p| *p < 0.0) || (total - 1.0).abs() > 1e-9 {
                    return Err(Error::Table(format!("noise distribution of `{v}` is invalid")));
                }
                if map.len() != rows || map.iter().any(|r| r.len() != noise.len() || r.iter().any(|&s| s >= k)) {
                    return Err(Error::Table(format!("structural map of `{v}` has the wrong shape")));
                }
            }
        }
        for v in mechanisms.keys().chain(&latent) {
            dag.require(v.as_str())?;
        }
        Ok(DiscreteScm {
            dag,
            space,
            mechanisms,
            latent,
        })
    }

    pub fn from_cpts(dag: Dag, space: StateSpace, cpts: BTreeMap<VariableId, Cpt>) -> Result<Self> {
        let mechanisms = cpts.into_iter().map(|(v, c)| (v, Mechanism::Table(c))).collect();
        DiscreteScm::new(dag, space, mechanisms, VarSet::new())
    }

    pub fn with_latent(mut self, latent: VarSet) -> Result<Self> {
        for v in &latent {
            self.dag.require(v.as_str())?;
        }
        self.latent = latent;
        Ok(self)
    }

    pub fn dag(&self) -> &Dag {
        &self.dag
    }

    pub fn space(&self) -> &StateSpace {
        &self.space
    }

    pub fn latent(&self) -> &VarSet {
        &self.latent
    }

    pub fn mechanism(&self, v: &str) -> Result<&Mechanism> {
        self.mechanisms
            .get(v)
            .ok_or_else(|| Error::UnknownVariable(v.to_string()))
    }

    pub fn observed(&self) -> Vec<VariableId> {
        self.dag
            .nodes()
            .iter()
            .filter(|v| !self.latent.contains(*v))
            .cloned()
            .collect()
    }

    /// The conditional distribution a mechanism induces on its node.
    pub fn induced_cpt(&self, v: &str) -> Result<Cpt> {
        let var = self.dag.name(self.dag.require(v)?).clone();
        match self.mechanism(v)? {
            Mechanism::Table(c) => Ok(c.clone()),
            Mechanism::Functional { parents, noise, map } => {
                let k = self.space.cardinality(v)?;
                let rows = map
                    .iter()
                    .map(|row| {
                        let mut probs = vec![0.0; k];
                        for (e, &s) in row.iter().enumerate() {
                            probs[s] += noise[e];
                        }
                        probs
                    })
                    .collect();
                Cpt::new(var, parents.clone(), rows, &self.space)
            }
        }
    }

    pub fn cpts(&self) -> Result<BTreeMap<VariableId, Cpt>> {
        self.dag
            .nodes()
            .iter()
            .map(|v| Ok((v.clone(), self.induced_cpt(v.as_str())?)))
            .collect()
    }

    /// Exact joint of every node under `regime`: intervened nodes become
    /// point masses with no parents, everything else keeps its mechanism.
    pub fn exact_joint(&self, regime: &RegimeAssignment) -> Result<JointTable> {
        regime.validate(&self.space)?;
        let mut replacements = BTreeMap::new();
        for (v, state) in regime.interventions() {
            let k = self.space.cardinality(v.as_str())?;
            let s = self.space.state_index(v.as_str(), state)?;
            let mut probs = vec![0.0; k];
            probs[s] = 1.0;
            replacements.insert(v.clone(), Cpt::root(v.clone(), probs, &self.space)?);
        }
        self.exact_joint_with(&replacements)
    }

    /// Exact joint after replacing the mechanisms of some nodes by new
    /// conditional tables (whose parents may differ from the originals, as
    /// for a treatment strategy that reads the history). The modified graph
    /// must stay acyclic.
    pub fn exact_joint_with(&self, replacements: &BTreeMap<VariableId, Cpt>) -> Result<JointTable> {
        let mut cpts = self.cpts()?;
        let mut remove = Vec::new();
        let mut add = Vec::new();
        for (v, cpt) in replacements {
            if &cpt.child != v {
                return Err(Error::InvalidArgument(format!("replacement for `{v}` describes `{}`", cpt.child)));
            }
            for p in self.dag.parents(v.as_str())? {
                remove.push((p, v.clone()));
            }
            for p in &cpt.parents {
                self.dag.require(p.as_str())?;
                add.push((p.clone(), v.clone()));
            }
            cpts.insert(v.clone(), cpt.clone());
        }
        let pruned = self.dag.without_edges(&remove);
        let dag = pruned.extended([], add)?;
        joint_from_cpts(&dag, &self.space, &cpts)
    }

    /// Exact joint of the observed (non-latent) nodes under `regime`.
    pub fn observed_joint(&self, regime: &RegimeAssignment) -> Result<JointTable> {
        self.exact_joint(regime)?.marginal(&self.observed())
    }

    /// The equivalent model in which every functional node's noise is an
    /// explicit root node `E_<v>`, so that noise distributions can be read
    /// off the joint.
    pub fn with_explicit_noise(&self) -> Result<DiscreteScm> {
        let mut space = self.space.clone();
        let mut mechanisms = BTreeMap::new();
        let mut nodes: Vec<VariableId> = self.dag.nodes().to_vec();
        let mut edges = self.dag.edges();
        for v in self.dag.nodes() {
            match &self.mechanisms[v] {
                Mechanism::Table(c) => {
                    mechanisms.insert(v.clone(), Mechanism::Table(c.clone()));
                }
                Mechanism::Functional { parents, noise, map } => {
                    let e = VariableId::new(format!("E_{v}"))?;
                    if self.dag.contains(e.as_str()) {
                        return Err(Error::Duplicate(format!("node `{e}` (noise name collision)")));
                    }
                    space.with_cardinality(e.clone(), noise.len())?;
                    mechanisms.insert(e.clone(), Mechanism::Table(Cpt::root(e.clone(), noise.clone(), &space)?));
                    let k = self.space.cardinality(v.as_str())?;
                    let mut rows = Vec::new();
                    for row in map {
                        for &s in row {
                            let mut probs = vec![0.0; k];
                            probs[s] = 1.0;
                            rows.push(probs);
                        }
                    }
                    let mut ps = parents.clone();
                    ps.push(e.clone());
                    mechanisms.insert(v.clone(), Mechanism::Table(Cpt::new(v.clone(), ps, rows, &space)?));
                    edges.push((e.clone(), v.clone()));
                    nodes.push(e);
                }
            }
        }
        let mut latent = self.latent.clone();
        for v in &nodes {
            if !self.dag.contains(v.as_str()) {
                latent.insert(v.clone());
            }
        }
        DiscreteScm::new(Dag::new(nodes, edges)?, space, mechanisms, latent)
    }

    /// The fully augmented influence diagram of the model.
    pub fn influence_diagram(&self) -> Result<InfluenceDiagram> {
        InfluenceDiagram::new(self.dag.clone(), BTreeMap::new(), self.latent.clone(), BTreeMap::new())?
            .fully_augmented()
    }

    /// Draws `n` rows of the observed variables under `regime`.
    pub fn simulate(&self, regime: &RegimeAssignment, n: usize, seed: u64) -> Result<Dataset> {
        let joint = self.observed_joint(regime)?;
        let samples = joint.sample(n, seed);
        let mut data = Dataset::new(self.observed())?;
        data.extend_from_samples(&joint, &samples, regime)?;
        Ok(data)
    }
}

/// Exact tables of the model, marginalised to whatever is asked for.
impl RegimeSource for DiscreteScm {
    fn table(&self, vars: &[VariableId], regime: &RegimeAssignment) -> Result<JointTable> {
        self.exact_joint(regime)?.marginal(vars)
    }
}

/// Draws a probability vector from a symmetric Dirichlet distribution.
pub fn dirichlet<R: Rng>(k: usize, alpha: f64, rng: &mut R) -> Vec<f64> {
    let gamma = Gamma::new(alpha, 1.0).expect("positive concentration");
    loop {
        let draws: Vec<f64> = (0..k).map(|_| gamma.sample(rng)).collect();
        let total: f64 = draws.iter().sum();
        if total > 0.0 {
            return draws.into_iter().map(|g| g / total).collect();
        }
    }
}

/// Random CPTs for every node of `dag`, rows from a symmetric Dirichlet.
pub fn random_cpts<R: Rng>(dag: &Dag, space: &StateSpace, alpha: f64, rng: &mut R) -> Result<BTreeMap<VariableId, Cpt>> {
    let mut out = BTreeMap::new();
    for v in dag.nodes() {
        let parents: Vec<VariableId> = dag.parents(v.as_str())?.into_iter().collect();
        let rows: usize = parents
            .iter()
            .map(|p| space.cardinality(p.as_str()))
            .product::<Result<usize>>()?;
        let k = space.cardinality(v.as_str())?;
        let table = (0..rows).map(|_| dirichlet(k, alpha, rng)).collect();
        out.insert(v.clone(), Cpt::new(v.clone(), parents, table, space)?);
    }
    Ok(out)
}

/// Parameters for [`random_scm`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomScmShape {
    pub nodes: usize,
    /// Each node gets between 2 and `max_states` states (1 if this is 1).
    pub max_states: usize,
    /// Probability of each forward edge `V_i -> V_j`, `i < j`.
    pub edge_density: f64,
    pub seed: u64,
}

/// A random model on nodes `V0, V1, ...` in that topological order, with
/// uniform-Dirichlet CPT rows. Deterministic for a given shape.
pub fn random_scm(shape: RandomScmShape) -> Result<DiscreteScm> {
    if shape.nodes == 0 || shape.max_states == 0 || !(0.0..=1.0).contains(&shape.edge_density) {
        return Err(Error::InvalidArgument("random model bounds must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(shape.seed);
    let names: Vec<VariableId> = (0..shape.nodes)
        .map(|i| VariableId::new(format!("V{i}")))
        .collect::<Result<_>>()?;
    let mut edges = Vec::new();
    for j in 0..shape.nodes {
        for i in 0..j {
            if rng.random::<f64>() < shape.edge_density {
                edges.push((names[i].clone(), names[j].clone()));
            }
        }
    }
    let mut space = StateSpace::new();
    for v in &names {
        let k = if shape.max_states <= 2 {
            shape.max_states
        } else {
            rng.random_range(2..=shape.max_states)
        };
        space.with_cardinality(v.clone(), k)?;
    }
    let dag = Dag::new(names, edges)?;
    let cpts = random_cpts(&dag, &space, 1.0, &mut rng)?;
    DiscreteScm::from_cpts(dag, space, cpts)
}

/// `Y_x ~ N(mu_x, sigma2)` for `x = 0, 1`, with the two potential errors
/// correlated at `rho` when read as a structural model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianTwoArmModel {
    pub mu0: f64,
    pub mu1: f64,
    pub sigma2: f64,
    pub rho: f64,
}

/// What the two-arm model implies about observable responses, plus the
/// moments of the individual causal effect `Y_1 − Y_0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InducedResponses {
    /// `(mean, variance)` of the response under treatment 0.
    pub p0: (f64, f64),
    /// `(mean, variance)` of the response under treatment 1.
    pub p1: (f64, f64),
    pub ice_mean: f64,
    /// Depends on `rho`, which the responses never reveal.
    pub ice_variance: f64,
}

impl GaussianTwoArmModel {
    pub fn new(mu0: f64, mu1: f64, sigma2: f64, rho: f64) -> Result<Self> {
        if !(sigma2 > 0.0 && sigma2.is_finite()) {
            return Err(Error::InvalidArgument("variance must be positive".into()));
        }
        if !(-1.0..=1.0).contains(&rho) {
            return Err(Error::InvalidArgument(format!("correlation {rho} is outside [-1, 1]")));
        }
        if !mu0.is_finite() || !mu1.is_finite() {
            return Err(Error::InvalidArgument("means must be finite".into()));
        }
        Ok(GaussianTwoArmModel { mu0, mu1, sigma2, rho })
    }

    pub fn induced_responses(&self) -> InducedResponses {
        InducedResponses {
            p0: (self.mu0, self.sigma2),
            p1: (self.mu1, self.sigma2),
            ice_mean: self.mu1 - self.mu0,
            ice_variance: 2.0 * (1.0 - self.rho) * self.sigma2,
        }
    }

    /// The same model for a population whose means are all shifted by
    /// `gamma`; contrasts between arms are unchanged.
    pub fn shifted(&self, gamma: f64) -> Self {
        GaussianTwoArmModel {
            mu0: self.mu0 + gamma,
            mu1: self.mu1 + gamma,
            ..*self
        }
    }

    /// A randomised experiment with `n_per_arm` units in each arm: columns
    /// `T` (0/1) and `Y`. Each unit's error pair is drawn jointly but only
    /// the response to the assigned arm is recorded.
    pub fn sample_experiment(&self, n_per_arm: usize, seed: u64) -> Result<Dataset> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let std = Normal::new(0.0, 1.0).expect("unit normal");
        let sd = self.sigma2.sqrt();
        let mut data = Dataset::new(vec![VariableId::new("T")?, VariableId::new("Y")?])?;
        for arm in [0usize, 1] {
            for _ in 0..n_per_arm {
                let z0: f64 = std.sample(&mut rng);
                let z1: f64 = std.sample(&mut rng);
                let e0 = sd * z0;
                let e1 = sd * (self.rho * z0 + (1.0 - self.rho * self.rho).max(0.0).sqrt() * z1);
                let y = if arm == 0 { self.mu0 + e0 } else { self.mu1 + e1 };
                data.push(vec![arm.to_string(), y.to_string()], RegimeAssignment::idle())?;
            }
        }
        Ok(data)
    }
}

/// `Z, U ~ N(0, 1)`, `X = aZ + bU + e_X`, `Y = beta X + cU + e_Y` with unit
/// normal errors; `U` is the unobserved confounder.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearGaussianIv {
    pub beta: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

/// Closed-form second moments of [`LinearGaussianIv`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IvMoments {
    pub var_z: f64,
    pub var_x: f64,
    pub var_y: f64,
    pub cov_xz: f64,
    pub cov_yz: f64,
    pub cov_xy: f64,
}

impl LinearGaussianIv {
    pub fn new(beta: f64, a: f64, b: f64, c: f64) -> Result<Self> {
        if ![beta, a, b, c].iter().all(|x| x.is_finite()) {
            return Err(Error::InvalidArgument("coefficients must be finite".into()));
        }
        Ok(LinearGaussianIv { beta, a, b, c })
    }

    /// False when `a = 0`: the instrument does not move the treatment.
    pub fn instrument_relevant(&self) -> bool {
        self.a != 0.0
    }

    pub fn moments(&self) -> IvMoments {
        let LinearGaussianIv { beta, a, b, c } = *self;
        let var_x = a * a + b * b + 1.0;
        IvMoments {
            var_z: 1.0,
            var_x,
            var_y: beta * beta * var_x + c * c + 2.0 * beta * b * c + 1.0,
            cov_xz: a,
            cov_yz: beta * a,
            cov_xy: beta * var_x + b * c,
        }
    }

    pub fn sample(&self, n: usize, seed: u64) -> Result<Dataset> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let std = Normal::new(0.0, 1.0).expect("unit normal");
        let names = ["Z", "U", "X", "Y"];
        let mut data = Dataset::new(names.iter().map(|n| VariableId::new(*n)).collect::<Result<_>>()?)?;
        for _ in 0..n {
            let z: f64 = std.sample(&mut rng);
            let u: f64 = std.sample(&mut rng);
            let x = self.a * z + self.b * u + std.sample(&mut rng);
            let y = self.beta * x + self.c * u + std.sample(&mut rng);
            data.push(
                vec![z.to_string(), u.to_string(), x.to_string(), y.to_string()],
                RegimeAssignment::idle(),
            )?;
        }
        Ok(data)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::var_set;

    fn v(n: &str) -> VariableId {
        VariableId::new(n).unwrap()
    }

    fn confounded() -> DiscreteScm {
        let dag = Dag::from_names(&["U", "X", "Y"], &[("U", "X"), ("U", "Y"), ("X", "Y")]).unwrap();
        let mut space = StateSpace::new();
        for n in ["U", "X", "Y"] {
            space.with_cardinality(v(n), 2).unwrap();
        }
        let mut cpts = BTreeMap::new();
        cpts.insert(v("U"), Cpt::root(v("U"), vec![0.5, 0.5], &space).unwrap());
        cpts.insert(v("X"), Cpt::new(v("X"), vec![v("U")], vec![vec![0.9, 0.1], vec![0.2, 0.8]], &space).unwrap());
        cpts.insert(
            v("Y"),
            Cpt::new(
                v("Y"),
                vec![v("U"), v("X")],
                vec![vec![0.9, 0.1], vec![0.6, 0.4], vec![0.5, 0.5], vec![0.1, 0.9]],
                &space,
            )
            .unwrap(),
        );
        DiscreteScm::from_cpts(dag, space, cpts).unwrap()
    }

    #[test]
    fn intervention_is_a_point_mass() {
        let m = confounded();
        let r = RegimeAssignment::idle().set(v("X"), "1");
        let t = m.exact_joint(&r).unwrap();
        assert_eq!(t.query(&[v("X")], &[]).unwrap(), vec![0.0, 1.0]);
        assert!(m.exact_joint(&RegimeAssignment::idle().set(v("X"), "5")).is_err());
    }

    #[test]
    fn idle_regime_matches_cpt_product() {
        let m = confounded();
        let direct = joint_from_cpts(m.dag(), m.space(), &m.cpts().unwrap()).unwrap();
        assert_eq!(m.exact_joint(&RegimeAssignment::idle()).unwrap(), direct);
    }

    #[test]
    fn interventional_differs_from_observational_under_confounding() {
        let m = confounded();
        let idle = m.exact_joint(&RegimeAssignment::idle()).unwrap();
        let obs = idle.query(&[v("Y")], &[("X", "1")]).unwrap()[1];
        let done = m.exact_joint(&RegimeAssignment::idle().set(v("X"), "1")).unwrap();
        let int = done.query(&[v("Y")], &[]).unwrap()[1];
        // P(Y=1 | do(X=1)) = 0.5 * 0.4 + 0.5 * 0.9
        assert!((int - 0.65).abs() < 1e-12);
        assert!((obs - int).abs() > 0.05);
    }

    #[test]
    fn random_models_are_reproducible() {
        let shape = RandomScmShape {
            nodes: 5,
            max_states: 3,
            edge_density: 0.5,
            seed: 11,
        };
        assert_eq!(random_scm(shape).unwrap(), random_scm(shape).unwrap());
        let empty = random_scm(RandomScmShape { edge_density: 0.0, ..shape }).unwrap();
        assert_eq!(empty.dag().edge_count(), 0);
        assert!(random_scm(RandomScmShape { nodes: 0, ..shape }).is_err());
    }

    #[test]
    fn potential_responses_with_different_couplings_agree_on_every_regime() {
        // Y = Y_X with (Y_0, Y_1) comonotone versus independent, same margins.
        let dag = Dag::from_names(&["X", "Y"], &[("X", "Y")]).unwrap();
        let mut space = StateSpace::new();
        space.with_cardinality(v("X"), 2).unwrap();
        space.with_cardinality(v("Y"), 2).unwrap();
        let (p0, p1) = (0.3, 0.6);
        let coupled = vec![1.0 - p1, p1 - p0, 0.0, p0];
        let independent = vec![(1.0 - p0) * (1.0 - p1), (1.0 - p0) * p1, p0 * (1.0 - p1), p0 * p1];
        let build = |joint: Vec<f64>| {
            let mut mech = BTreeMap::new();
            mech.insert(v("X"), Mechanism::Table(Cpt::root(v("X"), vec![0.4, 0.6], &space).unwrap()));
            mech.insert(v("Y"), Mechanism::potential_responses(vec![v("X")], 2, 2, joint).unwrap());
            DiscreteScm::new(dag.clone(), space.clone(), mech, VarSet::new()).unwrap()
        };
        let (a, b) = (build(coupled), build(independent));
        for r in ["idle", "X=0", "X=1"] {
            let r = RegimeAssignment::parse(r).unwrap();
            let (ta, tb) = (a.exact_joint(&r).unwrap(), b.exact_joint(&r).unwrap());
            for (x, y) in ta.cells().iter().zip(tb.cells()) {
                assert!((x - y).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn explicit_noise_is_regime_invariant() {
        let dag = Dag::from_names(&["X", "Y"], &[("X", "Y")]).unwrap();
        let mut space = StateSpace::new();
        space.with_cardinality(v("X"), 2).unwrap();
        space.with_cardinality(v("Y"), 2).unwrap();
        let mut mech = BTreeMap::new();
        mech.insert(v("X"), Mechanism::Table(Cpt::root(v("X"), vec![0.4, 0.6], &space).unwrap()));
        mech.insert(v("Y"), Mechanism::potential_responses(vec![v("X")], 2, 2, vec![0.1, 0.2, 0.3, 0.4]).unwrap());
        let m = DiscreteScm::new(dag, space, mech, VarSet::new()).unwrap().with_explicit_noise().unwrap();
        assert_eq!(m.latent(), &var_set(["E_Y"]).unwrap());
        let noise = |r: &str| {
            m.exact_joint(&RegimeAssignment::parse(r).unwrap())
                .unwrap()
                .query(&[v("E_Y")], &[])
                .unwrap()
        };
        let base = noise("idle");
        assert_eq!(base, noise("X=0"));
        assert_eq!(base, noise("X=1"));
        assert!((base[3] - 0.4).abs() < 1e-15);
    }

    #[test]
    fn two_arm_model_validation_and_moments() {
        assert!(GaussianTwoArmModel::new(0.0, 1.0, 0.0, 0.5).is_err());
        assert!(GaussianTwoArmModel::new(0.0, 1.0, 1.0, 1.5).is_err());
        let sse = GaussianTwoArmModel::new(0.0, 1.0, 2.0, 1.0).unwrap().induced_responses();
        assert_eq!(sse.ice_variance, 0.0);
        let indep = GaussianTwoArmModel::new(0.0, 1.0, 2.0, 0.0).unwrap().induced_responses();
        assert_eq!(indep.ice_variance, 4.0);
        let shifted = GaussianTwoArmModel::new(0.0, 1.0, 2.0, 0.0).unwrap().shifted(3.0);
        assert_eq!(shifted.induced_responses().ice_mean, 1.0);
    }

    #[test]
    fn iv_moments() {
        let m = LinearGaussianIv::new(2.0, 1.0, 1.0, 1.0).unwrap();
        let mo = m.moments();
        assert_eq!(mo.cov_yz / mo.cov_xz, 2.0);
        let unconf = LinearGaussianIv::new(2.0, 1.0, 1.0, 0.0).unwrap().moments();
        assert!((unconf.cov_xy / unconf.var_x - 2.0).abs() < 1e-15);
        assert!(!LinearGaussianIv::new(2.0, 0.0, 1.0, 1.0).unwrap().instrument_relevant());
    }
}
