//! Conditional-independence statements and the axioms P1–P5.
//!
//! Statements are plain data. [`apply_axiom`] performs one rewrite exactly as
//! the axiom reads; [`closure`] saturates a premise set under all five
//! axioms (with `W ⪯ Y` read as `W ⊆ Y`) and keeps a derivation for every
//! statement it finds.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use crate::dist::JointTable;
use crate::error::{Error, Result};
use crate::graph::{fmt_set, Dag, VarSet, VariableId};

/// Default cap on the number of statements a closure may hold.
pub const DEFAULT_CLOSURE_BOUND: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum VarKind {
    Stochastic,
    Regime,
}

/// The declared variables a statement may mention, with their kinds.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Universe {
    vars: BTreeMap<VariableId, VarKind>,
}

impl Universe {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn declare(&mut self, var: VariableId, kind: VarKind) {
        self.vars.insert(var, kind);
    }

    pub fn stochastic<I, S>(names: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut u = Universe::new();
        for n in names {
            u.declare(VariableId::new(n.as_ref())?, VarKind::Stochastic);
        }
        Ok(u)
    }

    pub fn kind(&self, var: &str) -> Result<VarKind> {
        self.vars
            .get(var)
            .copied()
            .ok_or_else(|| Error::UnknownVariable(var.to_string()))
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    pub fn variables(&self) -> impl Iterator<Item = (&VariableId, VarKind)> {
        self.vars.iter().map(|(v, k)| (v, *k))
    }
}

/// `left ⫫ right | given`.
///
/// Construction does not enforce disjointness: axiom conclusions such as
/// weak union are stated with overlapping sets, and [`is_well_formed`]
/// decides whether a statement is acceptable as a final assertion.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CiStatement {
    pub left: VarSet,
    pub right: VarSet,
    pub given: VarSet,
}

impl CiStatement {
    pub fn new(left: VarSet, right: VarSet, given: VarSet) -> Self {
        CiStatement { left, right, given }
    }

    /// Parses `A,B _||_ C | D,E`; the `| ...` part is optional.
    pub fn parse(text: &str) -> Result<Self> {
        let bad = |m: &str| Error::InvalidArgument(format!("statement `{text}`: {m}"));
        let (lhs, rest) = text.split_once("_||_").ok_or_else(|| bad("missing `_||_`"))?;
        let (rhs, given) = match rest.split_once('|') {
            Some((r, g)) => (r, g),
            None => (rest, ""),
        };
        let parse_set = |s: &str| -> Result<VarSet> {
            let s = s.trim().trim_start_matches('(').trim_end_matches(')');
            s.split(',')
                .map(str::trim)
                .filter(|t| !t.is_empty() && *t != "{}")
                .map(VariableId::new)
                .collect()
        };
        let st = CiStatement::new(parse_set(lhs)?, parse_set(rhs)?, parse_set(given)?);
        if st.left.is_empty() || st.right.is_empty() {
            return Err(bad("both sides of `_||_` need a variable"));
        }
        Ok(st)
    }

    /// Strips conditioning variables from both sides. A statement whose left
    /// or right side becomes empty is an instance of P2 (or of the trivial
    /// `X ⫫ ∅ | Z`), and yields `None`.
    pub fn canonical(&self) -> Option<CiStatement> {
        let left: VarSet = self.left.difference(&self.given).cloned().collect();
        let right: VarSet = self.right.difference(&self.given).cloned().collect();
        if left.is_empty() || right.is_empty() {
            None
        } else {
            Some(CiStatement::new(left, right, self.given.clone()))
        }
    }

    pub fn is_trivial(&self) -> bool {
        self.canonical().is_none()
    }

    pub fn variables(&self) -> impl Iterator<Item = &VariableId> {
        self.left.iter().chain(&self.right).chain(&self.given)
    }

    pub fn is_disjoint(&self) -> bool {
        self.left.is_disjoint(&self.right)
            && self.left.is_disjoint(&self.given)
            && self.right.is_disjoint(&self.given)
    }
}

impl fmt::Display for CiStatement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} _||_ {}", fmt_set(&self.left), fmt_set(&self.right))?;
        if !self.given.is_empty() {
            write!(f, " | {}", fmt_set(&self.given))?;
        }
        Ok(())
    }
}

/// True iff the sets are pairwise disjoint and the left side holds only
/// stochastic variables.
pub fn is_well_formed(s: &CiStatement, universe: &Universe) -> Result<bool> {
    for v in s.variables() {
        universe.kind(v.as_str())?;
    }
    if !s.is_disjoint() || s.left.is_empty() {
        return Ok(false);
    }
    for v in &s.left {
        if universe.kind(v.as_str())? == VarKind::Regime {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Axiom {
    /// Symmetry.
    P1,
    /// `X ⫫ Y | X`.
    P2,
    /// Decomposition.
    P3,
    /// Weak union.
    P4,
    /// Contraction.
    P5,
}

impl Axiom {
    pub fn tag(self) -> &'static str {
        match self {
            Axiom::P1 => "P1",
            Axiom::P2 => "P2",
            Axiom::P3 => "P3",
            Axiom::P4 => "P4",
            Axiom::P5 => "P5",
        }
    }
}

impl fmt::Display for Axiom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl std::str::FromStr for Axiom {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "P1" => Ok(Axiom::P1),
            "P2" => Ok(Axiom::P2),
            "P3" => Ok(Axiom::P3),
            "P4" => Ok(Axiom::P4),
            "P5" => Ok(Axiom::P5),
            other => Err(Error::InvalidArgument(format!("unknown axiom `{other}`"))),
        }
    }
}

/// Applies one axiom and returns its conclusion exactly as the axiom states
/// it (no canonicalisation).
///
/// P2 has no premises; pass a single statement whose left and right sides
/// supply `X` and `Y` (its conditioning set is ignored). P3 and P4 need `w`,
/// a subset of the premise's right side. P5 takes `X ⫫ Y | Z` and
/// `X ⫫ W | (Y,Z)` in that order.
pub fn apply_axiom(axiom: Axiom, premises: &[CiStatement], w: Option<&VarSet>) -> Result<CiStatement> {
    let shape = |reason: &str| Error::AxiomShape {
        axiom: axiom.tag(),
        reason: reason.to_string(),
    };
    let expect = |n: usize| {
        if premises.len() == n {
            Ok(())
        } else {
            Err(shape(&format!("expected {n} premise(s), got {}", premises.len())))
        }
    };
    match axiom {
        Axiom::P1 => {
            expect(1)?;
            let s = &premises[0];
            Ok(CiStatement::new(s.right.clone(), s.left.clone(), s.given.clone()))
        }
        Axiom::P2 => {
            expect(1)?;
            let s = &premises[0];
            Ok(CiStatement::new(s.left.clone(), s.right.clone(), s.left.clone()))
        }
        Axiom::P3 | Axiom::P4 => {
            expect(1)?;
            let s = &premises[0];
            let w = w.ok_or_else(|| shape("missing subset parameter w"))?;
            if !w.is_subset(&s.right) {
                return Err(shape("w is not a subset of the right-hand set"));
            }
            if axiom == Axiom::P3 {
                Ok(CiStatement::new(s.left.clone(), w.clone(), s.given.clone()))
            } else {
                let given = w.union(&s.given).cloned().collect();
                Ok(CiStatement::new(s.left.clone(), s.right.clone(), given))
            }
        }
        Axiom::P5 => {
            expect(2)?;
            let (first, second) = (&premises[0], &premises[1]);
            if first.left != second.left {
                return Err(shape("premises have different left-hand sets"));
            }
            let yz: VarSet = first.right.union(&first.given).cloned().collect();
            if second.given != yz {
                return Err(shape("second premise must condition on (Y, Z) of the first"));
            }
            let right = first.right.union(&second.right).cloned().collect();
            Ok(CiStatement::new(first.left.clone(), right, first.given.clone()))
        }
    }
}

/// How a closure entry was obtained.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Justification {
    Premise,
    Axiom {
        axiom: Axiom,
        /// Indices of earlier entries (of the closure, or of the derivation
        /// when extracted with [`Closure::derivation`]).
        premises: Vec<usize>,
        w: Option<VarSet>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DerivationStep {
    pub statement: CiStatement,
    pub justification: Justification,
}

/// A self-contained proof: every step's premises refer to earlier steps and
/// the last step is the conclusion.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Derivation {
    pub conclusion: CiStatement,
    pub steps: Vec<DerivationStep>,
}

impl fmt::Display for Derivation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, step) in self.steps.iter().enumerate() {
            match &step.justification {
                Justification::Premise => writeln!(f, "[{i}] {}  (premise)", step.statement)?,
                Justification::Axiom { axiom, premises, w } => {
                    let refs: Vec<String> = premises.iter().map(|p| format!("[{p}]")).collect();
                    write!(f, "[{i}] {}  ({axiom} on {}", step.statement, refs.join(", "))?;
                    if let Some(w) = w {
                        write!(f, ", w={}", fmt_set(w))?;
                    }
                    writeln!(f, ")")?;
                }
            }
        }
        Ok(())
    }
}

/// Packed statement over a universe of at most 64 variables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
struct Packed {
    left: u64,
    right: u64,
    given: u64,
}

/// Saturation of a premise set under P1–P5.
///
/// Entries are kept in canonical form. Statements that become trivial
/// after canonicalisation (instances of P2) are never stored but are
/// reported as entailed.
#[derive(Debug, Clone)]
pub struct Closure {
    order: Vec<VariableId>,
    regime_mask: u64,
    entries: Vec<(Packed, Justification)>,
    index: HashMap<Packed, usize>,
    truncated: bool,
}

impl Closure {
    /// True when the bound stopped saturation early.
    pub fn truncated(&self) -> bool {
        self.truncated
    }

    /// Number of stored statements, including intermediate ones whose left
    /// side mentions a regime variable.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Well-formed conclusions, in derivation order.
    pub fn statements(&self) -> Vec<CiStatement> {
        self.entries
            .iter()
            .filter(|(p, _)| p.left & self.regime_mask == 0)
            .map(|(p, _)| self.unpack(*p))
            .collect()
    }

    /// True if `s` is a P2 instance or its canonical form was derived.
    pub fn entails(&self, s: &CiStatement) -> bool {
        match s.canonical() {
            None => true,
            Some(c) => self.pack(&c).is_some_and(|p| self.index.contains_key(&p)),
        }
    }

    /// Extracts the derivation of `s` (canonicalised), renumbered so that it
    /// stands on its own.
    pub fn derivation(&self, s: &CiStatement) -> Option<Derivation> {
        let conclusion = s.canonical()?;
        let target = *self.index.get(&self.pack(&conclusion)?)?;
        let mut needed = vec![false; self.entries.len()];
        let mut stack = vec![target];
        while let Some(i) = stack.pop() {
            if !std::mem::replace(&mut needed[i], true) {
                if let Justification::Axiom { premises, .. } = &self.entries[i].1 {
                    stack.extend(premises.iter().copied());
                }
            }
        }
        let mut renumber = HashMap::new();
        let mut steps = Vec::new();
        for (i, (packed, just)) in self.entries.iter().enumerate() {
            if !needed[i] {
                continue;
            }
            renumber.insert(i, steps.len());
            let justification = match just {
                Justification::Premise => Justification::Premise,
                Justification::Axiom { axiom, premises, w } => Justification::Axiom {
                    axiom: *axiom,
                    premises: premises.iter().map(|p| renumber[p]).collect(),
                    w: w.clone(),
                },
            };
            steps.push(DerivationStep {
                statement: self.unpack(*packed),
                justification,
            });
        }
        Some(Derivation { conclusion, steps })
    }

    fn pack(&self, s: &CiStatement) -> Option<Packed> {
        let mask = |set: &VarSet| -> Option<u64> {
            set.iter().try_fold(0u64, |acc, v| {
                self.order.binary_search(v).ok().map(|i| acc | (1u64 << i))
            })
        };
        Some(Packed {
            left: mask(&s.left)?,
            right: mask(&s.right)?,
            given: mask(&s.given)?,
        })
    }

    fn unpack(&self, p: Packed) -> CiStatement {
        let set = |m: u64| -> VarSet {
            (0..self.order.len())
                .filter(|i| m & (1u64 << i) != 0)
                .map(|i| self.order[i].clone())
                .collect()
        };
        CiStatement::new(set(p.left), set(p.right), set(p.given))
    }
}

fn canonical_packed(left: u64, right: u64, given: u64) -> Option<Packed> {
    let left = left & !given;
    let right = right & !given;
    if left == 0 || right == 0 {
        None
    } else {
        Some(Packed { left, right, given })
    }
}

/// Proper nonempty subsets of `mask`, in increasing numeric order.
fn proper_subsets(mask: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut sub = mask.wrapping_sub(1) & mask;
    while sub != 0 {
        out.push(sub);
        sub = sub.wrapping_sub(1) & mask;
    }
    out.reverse();
    out
}

struct Saturation {
    closure: Closure,
    by_left_given: HashMap<(u64, u64), Vec<usize>>,
    by_left: HashMap<u64, Vec<usize>>,
    bound: usize,
}

impl Saturation {
    /// Adds a statement if new. Returns false once the bound is hit.
    fn add(&mut self, p: Packed, just: Justification) -> bool {
        if self.closure.index.contains_key(&p) {
            return true;
        }
        if self.closure.entries.len() >= self.bound {
            self.closure.truncated = true;
            return false;
        }
        let i = self.closure.entries.len();
        self.closure.entries.push((p, just));
        self.closure.index.insert(p, i);
        self.by_left_given.entry((p.left, p.given)).or_default().push(i);
        self.by_left.entry(p.left).or_default().push(i);
        true
    }

    fn derive(&mut self, axiom: Axiom, premises: Vec<usize>, w: Option<u64>, conclusion: Option<Packed>) -> bool {
        let Some(c) = conclusion else { return true };
        let w = w.map(|m| self.closure.unpack(Packed { left: 0, right: m, given: 0 }).right);
        self.add(c, Justification::Axiom { axiom, premises, w })
    }

    fn run(&mut self) {
        let mut next = 0;
        while next < self.closure.entries.len() {
            let i = next;
            next += 1;
            let s = self.closure.entries[i].0;
            if !self.derive(Axiom::P1, vec![i], None, canonical_packed(s.right, s.left, s.given)) {
                return;
            }
            for w in proper_subsets(s.right) {
                if !self.derive(Axiom::P3, vec![i], Some(w), canonical_packed(s.left, w, s.given)) {
                    return;
                }
                if !self.derive(Axiom::P4, vec![i], Some(w), canonical_packed(s.left, s.right, s.given | w)) {
                    return;
                }
            }
            // s as the first premise of P5: X ⫫ Y | Z with X ⫫ W | (Y,Z).
            let partners = self
                .by_left_given
                .get(&(s.left, s.right | s.given))
                .cloned()
                .unwrap_or_default();
            for j in partners {
                let t = self.closure.entries[j].0;
                let c = canonical_packed(s.left, s.right | t.right, s.given);
                if !self.derive(Axiom::P5, vec![i, j], None, c) {
                    return;
                }
            }
            // s as the second premise: X ⫫ W | G with X ⫫ Y | Z, Y ∪ Z = G.
            let partners = self.by_left.get(&s.left).cloned().unwrap_or_default();
            for j in partners {
                let t = self.closure.entries[j].0;
                if t.right | t.given == s.given {
                    let c = canonical_packed(s.left, t.right | s.right, t.given);
                    if !self.derive(Axiom::P5, vec![j, i], None, c) {
                        return;
                    }
                }
            }
        }
    }
}

/// `v ⫫ nd(v) \ pa(v) | pa(v)` for every node with non-parent
/// non-descendants: the local directed Markov property of `g`.
pub fn local_markov(g: &Dag) -> Result<Vec<CiStatement>> {
    let mut out = Vec::new();
    for v in g.nodes() {
        let parents = g.parents(v.as_str())?;
        let descendants = g.descendants(v.as_str())?;
        let rest: VarSet = g
            .nodes()
            .iter()
            .filter(|u| *u != v && !descendants.contains(*u) && !parents.contains(*u))
            .cloned()
            .collect();
        if !rest.is_empty() {
            out.push(CiStatement::new([v.clone()].into(), rest, parents));
        }
    }
    Ok(out)
}

/// Saturates `premises` under P1–P5 over `universe`, stopping (and flagging
/// truncation) once `bound` statements are stored.
pub fn closure(premises: &[CiStatement], universe: &Universe, bound: usize) -> Result<Closure> {
    if bound == 0 {
        return Err(Error::InvalidArgument("closure bound must be positive".into()));
    }
    if universe.len() > 64 {
        return Err(Error::InvalidArgument("closure supports at most 64 variables".into()));
    }
    let order: Vec<VariableId> = universe.variables().map(|(v, _)| v.clone()).collect();
    let regime_mask = universe
        .variables()
        .enumerate()
        .filter(|(_, (_, k))| *k == VarKind::Regime)
        .fold(0u64, |m, (i, _)| m | (1u64 << i));
    let mut sat = Saturation {
        closure: Closure {
            order,
            regime_mask,
            entries: Vec::new(),
            index: HashMap::new(),
            truncated: false,
        },
        by_left_given: HashMap::new(),
        by_left: HashMap::new(),
        bound,
    };
    for s in premises {
        for v in s.variables() {
            universe.kind(v.as_str())?;
        }
        if let Some(c) = s.canonical() {
            let p = sat.closure.pack(&c).expect("declared variables pack");
            if !sat.add(p, Justification::Premise) {
                return Ok(sat.closure);
            }
        }
    }
    sat.run();
    Ok(sat.closure)
}

/// Numeric check of `s` in `t`: for every cell with positive conditioning
/// probability, `|P(l | r, g) − P(l | g)| ≤ eps`.
pub fn ci_holds_numeric(t: &JointTable, s: &CiStatement, eps: f64) -> Result<bool> {
    if !s.is_disjoint() {
        return Err(Error::Overlap(
            s.left
                .intersection(&s.right)
                .chain(s.left.intersection(&s.given))
                .chain(s.right.intersection(&s.given))
                .next()
                .map(ToString::to_string)
                .unwrap_or_default(),
        ));
    }
    let vars: Vec<VariableId> = s.left.iter().chain(&s.right).chain(&s.given).cloned().collect();
    let m = t.marginal(&vars)?;
    let (nl, nr) = (s.left.len(), s.right.len());
    let cards = m.cardinalities();
    let n = vars.len();
    // P(l, r, g), P(r, g), P(l, g), P(g) by accumulation.
    let flat = |config: &[usize], keep: &dyn Fn(usize) -> bool| -> usize {
        let mut f = 0;
        for i in 0..n {
            f = f * cards[i] + if keep(i) { config[i] } else { 0 };
        }
        f
    };
    let in_r = |i: usize| i >= nl && i < nl + nr;
    let in_l = |i: usize| i < nl;
    let not_l = |i: usize| !in_l(i);
    let not_r = |i: usize| !in_r(i);
    let given_only = |i: usize| i >= nl + nr;
    let size = m.cells().len();
    let (mut p_rg, mut p_lg, mut p_g) = (vec![0.0; size], vec![0.0; size], vec![0.0; size]);
    let cells: Vec<(Vec<usize>, f64)> = m.iter_cells().collect();
    for (config, p) in &cells {
        p_rg[flat(config, &not_l)] += p;
        p_lg[flat(config, &not_r)] += p;
        p_g[flat(config, &given_only)] += p;
    }
    for (config, p) in &cells {
        let rg = p_rg[flat(config, &not_l)];
        if rg <= 0.0 {
            continue;
        }
        let g = p_g[flat(config, &given_only)];
        let lhs = p / rg;
        let rhs = p_lg[flat(config, &not_r)] / g;
        if (lhs - rhs).abs() > eps {
            return Ok(false);
        }
    }
    Ok(true)
}
