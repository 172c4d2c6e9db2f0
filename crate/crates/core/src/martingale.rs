//! Doob martingales of `f(X)` along decision trees that reveal one variable at a time.
//!
//! The adaptive tree picks, at each node, the smallest unrevealed index whose variable is
//! deterministic or whose influence sum is at most 1. Under negative regression this keeps
//! every step inside an interval of width 2 (width 1 for monotone `f`). The fixed-order
//! tree reveals variables in a prescribed order and carries no such guarantee.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::bits;
use crate::error::{Error, Result};
use crate::limits;
use crate::measure::{Assignment, ExplicitMeasure, TestFunction};
use crate::rational::{int, scale_to_integers, serde_rational, serde_rational_opt};

/// Outcome of the index selection rule at one node.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PickResult {
    pub index: usize,
    pub deterministic: bool,
    /// `sum_l E[X_l | node, X_i = 0] - E[X_l | node, X_i = 1]` over the other unrevealed `l`.
    #[serde(
        with = "serde_rational_opt",
        default,
        skip_serializing_if = "Option::is_none"
    )]
    pub influence_sum: Option<BigRational>,
}

/// Atoms consistent with a node, as unnormalized integer weights.
type Atoms = Vec<(u32, BigInt)>;

fn scaled_atoms(m: &ExplicitMeasure) -> Atoms {
    let masses: Vec<BigRational> = m.atoms().map(|(_, p)| p.clone()).collect();
    let (ints, _) = scale_to_integers(&masses);
    m.atoms().map(|(x, _)| x).zip(ints).collect()
}

/// Eligibility of variable `i` given atoms restricted to a node with revealed set `mask`.
fn eligibility(
    n: usize,
    mask: u32,
    atoms: &[(u32, BigInt)],
    i: usize,
) -> (bool, Option<BigRational>) {
    let b = bits::var_bit(n, i);
    let others = bits::full_mask(n) & !mask & !b;
    let (mut s0, mut s1, mut w0, mut w1) = (
        BigInt::zero(),
        BigInt::zero(),
        BigInt::zero(),
        BigInt::zero(),
    );
    for (x, w) in atoms {
        let c = BigInt::from((x & others).count_ones());
        if x & b != 0 {
            w1 += w * &c;
            s1 += w;
        } else {
            w0 += w * &c;
            s0 += w;
        }
    }
    if s0.is_zero() || s1.is_zero() {
        return (true, None);
    }
    let infl = BigRational::new(w0, s0) - BigRational::new(w1, s1);
    (false, Some(infl))
}

fn pick_among(n: usize, mask: u32, atoms: &[(u32, BigInt)]) -> Result<PickResult> {
    let free = bits::full_mask(n) & !mask;
    for i in bits::indices_of(n, free) {
        let (deterministic, influence_sum) = eligibility(n, mask, atoms, i);
        let ok = deterministic
            || influence_sum
                .as_ref()
                .is_some_and(|s| *s <= BigRational::one());
        if ok {
            return Ok(PickResult {
                index: i,
                deterministic,
                influence_sum,
            });
        }
    }
    Err(Error::NoEligibleIndex)
}

fn node_atoms(m: &ExplicitMeasure, revealed: &Assignment) -> Result<(u32, Atoms)> {
    revealed.validate(m.n())?;
    let (mask, vals) = revealed.masks(m.n());
    let atoms: Atoms = scaled_atoms(m)
        .into_iter()
        .filter(|(x, _)| x & mask == vals)
        .collect();
    if atoms.is_empty() {
        return Err(Error::ZeroProbabilityEvent);
    }
    Ok((mask, atoms))
}

/// The minimum unrevealed index that is deterministic or has influence sum at most 1.
pub fn pick_index(m: &ExplicitMeasure, revealed: &Assignment) -> Result<PickResult> {
    let (mask, atoms) = node_atoms(m, revealed)?;
    if mask == bits::full_mask(m.n()) {
        return Err(Error::InvalidParameter(
            "every variable is already revealed".into(),
        ));
    }
    pick_among(m.n(), mask, &atoms)
}

/// One row of the variance identity behind the pick rule.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PickLemmaEntry {
    pub index: usize,
    #[serde(with = "serde_rational")]
    pub pi: BigRational,
    /// `Var[X_i | node] + sum_j Cov[X_i, X_j | node]`.
    #[serde(with = "serde_rational")]
    pub quantity: BigRational,
    #[serde(
        with = "serde_rational_opt",
        default,
        skip_serializing_if = "Option::is_none"
    )]
    pub influence_sum: Option<BigRational>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PickLemmaReport {
    pub revealed: Assignment,
    pub entries: Vec<PickLemmaEntry>,
    pub pick: PickResult,
}

/// Recomputes the variance identity at a node from the conditional law and cross-checks
/// it against the influence sums used by [`pick_index`].
pub fn verify_pick_lemma(m: &ExplicitMeasure, revealed: &Assignment) -> Result<PickLemmaReport> {
    let n = m.n();
    let cond = m.condition(revealed)?;
    let (mask, atoms) = node_atoms(m, revealed)?;
    let remaining = bits::indices_of(n, bits::full_mask(n) & !mask);
    let k = remaining.len();
    let means: Vec<BigRational> = (1..=k).map(|l| cond.mean(l)).collect();
    let mut entries = Vec::with_capacity(k);
    for a in 1..=k {
        let ba = bits::var_bit(k, a);
        let pi = &means[a - 1];
        let var = pi * (BigRational::one() - pi);
        let mut quantity = var.clone();
        for b in (1..=k).filter(|&b| b != a) {
            let bb = bits::var_bit(k, b);
            let joint: BigRational = cond
                .atoms()
                .filter(|(x, _)| x & ba != 0 && x & bb != 0)
                .map(|(_, p)| p)
                .sum();
            quantity += joint - pi * &means[b - 1];
        }
        let global = remaining[a - 1];
        let (deterministic, influence_sum) = eligibility(n, mask, &atoms, global);
        if deterministic {
            if !var.is_zero() || !quantity.is_zero() {
                return Err(Error::LemmaViolated(format!(
                    "x{global} is deterministic at {revealed} but the identity gives {quantity}"
                )));
            }
        } else {
            let infl = influence_sum
                .as_ref()
                .expect("nondeterministic variables have an influence sum");
            if &quantity / &var != BigRational::one() - infl {
                return Err(Error::LemmaViolated(format!(
                    "x{global} at {revealed}: identity {quantity} does not match influence sum {infl}"
                )));
            }
        }
        entries.push(PickLemmaEntry {
            index: global,
            pi: pi.clone(),
            quantity,
            influence_sum,
        });
    }
    let first_nonneg = entries
        .iter()
        .find(|e| !e.quantity.is_negative())
        .map(|e| e.index);
    let Some(expected) = first_nonneg else {
        return Err(Error::LemmaViolated(format!(
            "every variance term is negative at {revealed}"
        )));
    };
    let pick = pick_among(n, mask, &atoms)?;
    if pick.index != expected {
        return Err(Error::LemmaViolated(format!(
            "pick rule chose x{} at {revealed} but the first nonnegative term is x{expected}",
            pick.index
        )));
    }
    Ok(PickLemmaReport {
        revealed: revealed.clone(),
        entries,
        pick,
    })
}

/// Node of a martingale tree. Branches of probability zero are not materialized.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Node {
    pub revealed: Assignment,
    pub depth: usize,
    /// Variable revealed next; `None` at leaves.
    pub pick: Option<usize>,
    /// Selection details, adaptive trees only.
    pub selection: Option<PickResult>,
    pub probability: BigRational,
    /// Conditional probabilities of the two branches.
    pub p0: Option<BigRational>,
    pub p1: Option<BigRational>,
    pub y: BigRational,
    pub children: [Option<usize>; 2],
    pub alpha: BigRational,
    pub beta: BigRational,
    mask: u32,
    vals: u32,
}

impl Node {
    pub fn is_leaf(&self) -> bool {
        self.pick.is_none()
    }

    pub fn live_branches(&self) -> usize {
        self.children.iter().flatten().count()
    }

    pub fn gap(&self) -> BigRational {
        &self.beta - &self.alpha
    }

    /// The node as a partial bitstring, `*` marking unrevealed variables.
    pub fn pattern(&self, n: usize) -> String {
        (1..=n)
            .map(|i| {
                let b = bits::var_bit(n, i);
                match (self.mask & b != 0, self.vals & b != 0) {
                    (false, _) => '*',
                    (true, false) => '0',
                    (true, true) => '1',
                }
            })
            .collect()
    }
}

/// A node where `beta - alpha` exceeds the bound for the function class.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntervalViolation {
    pub revealed: Assignment,
    pub pick: usize,
    #[serde(with = "serde_rational")]
    pub y: BigRational,
    #[serde(with = "serde_rational")]
    pub y0: BigRational,
    #[serde(with = "serde_rational")]
    pub y1: BigRational,
    #[serde(with = "serde_rational")]
    pub alpha: BigRational,
    #[serde(with = "serde_rational")]
    pub beta: BigRational,
    #[serde(with = "serde_rational")]
    pub bound: BigRational,
}

impl fmt::Display for IntervalViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "at {} revealing x{}: children {} and {} give beta - alpha = {} > {}",
            self.revealed,
            self.pick,
            self.y0,
            self.y1,
            &self.beta - &self.alpha,
            self.bound
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
struct Shape {
    revealed: Assignment,
    depth: usize,
    mask: u32,
    vals: u32,
    weight: BigInt,
    pick: Option<usize>,
    selection: Option<PickResult>,
    children: [Option<usize>; 2],
}

/// Tree skeleton without function values: picks, branch weights and node layout.
///
/// The adaptive order depends only on the measure, so one schedule serves any number of
/// test functions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AdaptiveSchedule {
    n: usize,
    adaptive: bool,
    total: BigInt,
    shapes: Vec<Shape>,
}

enum Order<'a> {
    Adaptive,
    Fixed(&'a [usize]),
}

impl AdaptiveSchedule {
    pub fn new(m: &ExplicitMeasure) -> Result<Self> {
        Self::build(m, Order::Adaptive)
    }

    fn build(m: &ExplicitMeasure, order: Order<'_>) -> Result<Self> {
        let n = m.n();
        limits::ensure("martingale tree", n, limits::TREE)?;
        let atoms = scaled_atoms(m);
        let total: BigInt = atoms.iter().map(|(_, w)| w).sum();
        let mut schedule = AdaptiveSchedule {
            n,
            adaptive: matches!(order, Order::Adaptive),
            total,
            shapes: Vec::new(),
        };
        schedule.grow(Assignment::empty(), 0, 0, atoms, &order)?;
        Ok(schedule)
    }

    fn grow(
        &mut self,
        revealed: Assignment,
        mask: u32,
        vals: u32,
        atoms: Atoms,
        order: &Order<'_>,
    ) -> Result<usize> {
        let n = self.n;
        let id = self.shapes.len();
        let weight: BigInt = atoms.iter().map(|(_, w)| w).sum();
        let depth = revealed.len();
        self.shapes.push(Shape {
            revealed: revealed.clone(),
            depth,
            mask,
            vals,
            weight,
            pick: None,
            selection: None,
            children: [None, None],
        });
        if depth == n {
            return Ok(id);
        }
        let (index, selection) = match order {
            Order::Adaptive => {
                let p = pick_among(n, mask, &atoms)?;
                (p.index, Some(p))
            }
            Order::Fixed(perm) => (perm[depth], None),
        };
        let b = bits::var_bit(n, index);
        let (ones, zeros): (Atoms, Atoms) = atoms.into_iter().partition(|(x, _)| x & b != 0);
        let mut children = [None, None];
        for (value, part) in [(false, zeros), (true, ones)] {
            if part.is_empty() {
                continue;
            }
            let child_vals = if value { vals | b } else { vals };
            let child = self.grow(
                revealed.with(index, value)?,
                mask | b,
                child_vals,
                part,
                order,
            )?;
            children[usize::from(value)] = Some(child);
        }
        let shape = &mut self.shapes[id];
        shape.pick = Some(index);
        shape.selection = selection;
        shape.children = children;
        Ok(id)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.shapes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shapes.is_empty()
    }

    /// Revealed assignments of the internal nodes, in preorder.
    pub fn internal_nodes(&self) -> impl Iterator<Item = &Assignment> + '_ {
        self.shapes
            .iter()
            .filter(|s| s.pick.is_some())
            .map(|s| &s.revealed)
    }

    fn evaluate(&self, f: &TestFunction) -> Result<MartingaleTree> {
        if f.n() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: f.n(),
            });
        }
        let mut ys: Vec<BigRational> = vec![BigRational::zero(); self.shapes.len()];
        // children always follow their parent in preorder
        for id in (0..self.shapes.len()).rev() {
            let s = &self.shapes[id];
            ys[id] = if s.pick.is_none() {
                f.value(s.vals).clone()
            } else {
                s.children
                    .iter()
                    .flatten()
                    .map(|&c| {
                        BigRational::new(self.shapes[c].weight.clone(), s.weight.clone()) * &ys[c]
                    })
                    .sum()
            };
        }
        let nodes = self
            .shapes
            .iter()
            .enumerate()
            .map(|(id, s)| {
                let branch_p = |c: Option<usize>| {
                    let w = c.map(|c| self.shapes[c].weight.clone()).unwrap_or_default();
                    BigRational::new(w, s.weight.clone())
                };
                let (p0, p1) = if s.pick.is_some() {
                    (Some(branch_p(s.children[0])), Some(branch_p(s.children[1])))
                } else {
                    (None, None)
                };
                let (alpha, beta) = match s.children {
                    [Some(c0), Some(c1)] => {
                        let d0 = &ys[c0] - &ys[id];
                        let d1 = &ys[c1] - &ys[id];
                        if d0 <= d1 {
                            (d0, d1)
                        } else {
                            (d1, d0)
                        }
                    }
                    _ => (BigRational::zero(), BigRational::zero()),
                };
                Node {
                    revealed: s.revealed.clone(),
                    depth: s.depth,
                    pick: s.pick,
                    selection: s.selection.clone(),
                    probability: BigRational::new(s.weight.clone(), self.total.clone()),
                    p0,
                    p1,
                    y: ys[id].clone(),
                    children: s.children,
                    alpha,
                    beta,
                    mask: s.mask,
                    vals: s.vals,
                }
            })
            .collect();
        Ok(MartingaleTree {
            n: self.n,
            adaptive: self.adaptive,
            monotone: f.is_monotone(),
            nodes,
        })
    }
}

/// A fully expanded martingale tree; node 0 is the root and nodes are stored in preorder.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MartingaleTree {
    n: usize,
    adaptive: bool,
    monotone: bool,
    nodes: Vec<Node>,
}

/// Which per-node quantity [`max_step`] maximizes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepMode {
    /// `max(|y1 - y|, |y0 - y|)` over live branches.
    Increment,
    /// `beta - alpha`.
    Gap,
}

/// Width bound of the step interval: 1 for monotone `f`, 2 otherwise.
pub fn interval_bound(monotone: bool) -> BigRational {
    if monotone {
        int(1)
    } else {
        int(2)
    }
}

/// Adaptive tree for `f`; fails with the first node (in preorder) whose interval is too wide.
pub fn build_adaptive_tree(m: &ExplicitMeasure, f: &TestFunction) -> Result<MartingaleTree> {
    build_adaptive_tree_with(&AdaptiveSchedule::new(m)?, f)
}

/// As [`build_adaptive_tree`], reusing a precomputed schedule.
pub fn build_adaptive_tree_with(
    schedule: &AdaptiveSchedule,
    f: &TestFunction,
) -> Result<MartingaleTree> {
    if !schedule.adaptive {
        return Err(Error::InvalidParameter(
            "schedule was built for a fixed order".into(),
        ));
    }
    let tree = schedule.evaluate(f)?;
    let bound = interval_bound(f.is_monotone());
    for node in &tree.nodes {
        if node.gap() > bound {
            let [Some(c0), Some(c1)] = node.children else {
                unreachable!("single branches have zero gap")
            };
            return Err(Error::IntervalViolation(Box::new(IntervalViolation {
                revealed: node.revealed.clone(),
                pick: node.pick.expect("internal node"),
                y: node.y.clone(),
                y0: tree.nodes[c0].y.clone(),
                y1: tree.nodes[c1].y.clone(),
                alpha: node.alpha.clone(),
                beta: node.beta.clone(),
                bound,
            })));
        }
    }
    Ok(tree)
}

/// Tree revealing variables in `order`, a permutation of `1..=n`. Intervals are recorded
/// but not bounded.
pub fn fixed_order_tree(
    m: &ExplicitMeasure,
    f: &TestFunction,
    order: &[usize],
) -> Result<MartingaleTree> {
    let n = m.n();
    let mut sorted = order.to_vec();
    sorted.sort_unstable();
    if sorted != (1..=n).collect::<Vec<_>>() {
        return Err(Error::InvalidParameter(format!(
            "{order:?} is not a permutation of 1..={n}"
        )));
    }
    if f.n() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: f.n(),
        });
    }
    AdaptiveSchedule::build(m, Order::Fixed(order))?.evaluate(f)
}

/// Largest step over all nodes, in the chosen mode.
pub fn max_step(tree: &MartingaleTree, mode: StepMode) -> BigRational {
    tree.nodes
        .iter()
        .map(|node| match mode {
            StepMode::Gap => node.gap(),
            StepMode::Increment => node
                .children
                .iter()
                .flatten()
                .map(|&c| (&tree.nodes[c].y - &node.y).abs())
                .max()
                .unwrap_or_else(BigRational::zero),
        })
        .max()
        .unwrap_or_else(BigRational::zero)
}

/// Largest `|Y_1 - Y_0|`, the step at the root only.
pub fn first_step(tree: &MartingaleTree) -> BigRational {
    let root = tree.root();
    root.children
        .iter()
        .flatten()
        .map(|&c| (&tree.nodes[c].y - &root.y).abs())
        .max()
        .unwrap_or_else(BigRational::zero)
}

impl MartingaleTree {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_adaptive(&self) -> bool {
        self.adaptive
    }

    pub fn is_monotone(&self) -> bool {
        self.monotone
    }

    pub fn root(&self) -> &Node {
        &self.nodes[0]
    }

    pub fn node(&self, id: usize) -> &Node {
        &self.nodes[id]
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn leaves(&self) -> impl Iterator<Item = &Node> + '_ {
        self.nodes.iter().filter(|node| node.is_leaf())
    }

    /// Point of a leaf.
    pub fn leaf_point(&self, node: &Node) -> Option<u32> {
        node.is_leaf().then_some(node.vals)
    }

    /// Checks the structural invariants: the martingale identity at each internal node,
    /// leaf depth `n` and each variable revealed once per path.
    pub fn check_invariants(&self, f: &TestFunction) -> std::result::Result<(), String> {
        for (id, node) in self.nodes.iter().enumerate() {
            if node.revealed.len() != node.depth {
                return Err(format!(
                    "node {id}: depth {} but {} revealed",
                    node.depth,
                    node.revealed.len()
                ));
            }
            match node.pick {
                None => {
                    if node.depth != self.n {
                        return Err(format!("leaf {id} at depth {}", node.depth));
                    }
                    if &node.y != f.value(node.vals) {
                        return Err(format!(
                            "leaf {id}: y = {} but f = {}",
                            node.y,
                            f.value(node.vals)
                        ));
                    }
                }
                Some(i) => {
                    if node.revealed.value_of(i).is_some() {
                        return Err(format!("node {id} reveals x{i} twice"));
                    }
                    let mut mean = BigRational::zero();
                    let mut mass = BigRational::zero();
                    for (c, p) in node.children.iter().zip([&node.p0, &node.p1]) {
                        let p = p.clone().unwrap_or_default();
                        mass += &p;
                        if let Some(c) = c {
                            mean += &p * &self.nodes[*c].y;
                        } else if !p.is_zero() {
                            return Err(format!("node {id}: missing branch of probability {p}"));
                        }
                    }
                    if !mass.is_one() || mean != node.y {
                        return Err(format!(
                            "node {id}: martingale identity fails ({mean} vs {})",
                            node.y
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    fn node_file(&self, id: usize, branch: Option<bool>) -> NodeFile {
        let node = &self.nodes[id];
        NodeFile {
            branch: branch.map(u8::from),
            node: node.pattern(self.n),
            probability: node.probability.to_string(),
            pick: node.pick,
            deterministic: node.selection.as_ref().map(|s| s.deterministic),
            influence_sum: node
                .selection
                .as_ref()
                .and_then(|s| s.influence_sum.as_ref())
                .map(|s| s.to_string()),
            p0: node.p0.as_ref().map(|p| p.to_string()),
            p1: node.p1.as_ref().map(|p| p.to_string()),
            y: node.y.to_string(),
            alpha: node.alpha.to_string(),
            beta: node.beta.to_string(),
            children: node
                .children
                .iter()
                .enumerate()
                .filter_map(|(v, c)| c.map(|c| self.node_file(c, Some(v == 1))))
                .collect(),
        }
    }

    pub fn to_file(&self) -> TreeFile {
        TreeFile {
            n: self.n,
            adaptive: self.adaptive,
            monotone: self.monotone,
            root: self.node_file(0, None),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("tree serializes")
    }

    /// One row per node in preorder.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("id,depth,node,pick,probability,p0,p1,y,alpha,beta\n");
        let opt = |v: &Option<BigRational>| v.as_ref().map(|p| p.to_string()).unwrap_or_default();
        for (id, node) in self.nodes.iter().enumerate() {
            out.push_str(&format!(
                "{id},{},{},{},{},{},{},{},{},{}\n",
                node.depth,
                node.pattern(self.n),
                node.pick.map(|i| i.to_string()).unwrap_or_default(),
                node.probability,
                opt(&node.p0),
                opt(&node.p1),
                node.y,
                node.alpha,
                node.beta
            ));
        }
        out
    }
}

/// JSON layout of a tree.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TreeFile {
    pub n: usize,
    pub adaptive: bool,
    pub monotone: bool,
    pub root: NodeFile,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NodeFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub branch: Option<u8>,
    pub node: String,
    pub probability: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pick: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deterministic: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub influence_sum: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p0: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p1: Option<String>,
    pub y: String,
    pub alpha: String,
    pub beta: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<NodeFile>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{family_anti_pair, family_independent, family_nand, family_pos_pair};
    use crate::rational::rat;

    #[test]
    fn nand3_root_pick_skips_x1() {
        let m = family_nand(3).unwrap();
        let p = pick_index(&m, &Assignment::empty()).unwrap();
        assert_eq!(
            p,
            PickResult {
                index: 2,
                deterministic: false,
                influence_sum: Some(rat(1, 2))
            }
        );
        let (mask, atoms) = node_atoms(&m, &Assignment::empty()).unwrap();
        assert_eq!(eligibility(3, mask, &atoms, 1), (false, Some(rat(4, 3))));
    }

    #[test]
    fn nand3_after_x1_zero_is_deterministic() {
        let m = family_nand(3).unwrap();
        let p = pick_index(&m, &Assignment::single(1, false)).unwrap();
        assert_eq!(
            p,
            PickResult {
                index: 2,
                deterministic: true,
                influence_sum: None
            }
        );
    }

    #[test]
    fn independent_picks_first_index() {
        let m = family_independent(&[rat(1, 3), rat(1, 2), rat(3, 4)]).unwrap();
        let p = pick_index(&m, &Assignment::empty()).unwrap();
        assert_eq!(
            p,
            PickResult {
                index: 1,
                deterministic: false,
                influence_sum: Some(int(0))
            }
        );
    }

    #[test]
    fn pick_preconditions() {
        let m = family_nand(3).unwrap();
        let everything = Assignment::new(vec![1, 2, 3], vec![true, true, false]).unwrap();
        assert!(matches!(
            pick_index(&m, &everything),
            Err(Error::InvalidParameter(_))
        ));
        let impossible = Assignment::new(vec![1, 2, 3], vec![false, false, false]).unwrap();
        assert!(matches!(
            pick_index(&m, &impossible),
            Err(Error::ZeroProbabilityEvent)
        ));
    }

    #[test]
    fn lemma_identity_at_nand3_root() {
        let m = family_nand(3).unwrap();
        let r = verify_pick_lemma(&m, &Assignment::empty()).unwrap();
        assert_eq!(r.entries[1].quantity, rat(1, 8));
        assert_eq!(r.entries[1].pi, rat(1, 2));
        assert!(r.entries[0].quantity.is_negative());
        assert_eq!(r.pick.index, 2);
    }

    #[test]
    fn lemma_identity_for_independent_and_last_variable() {
        let m = family_independent(&[rat(1, 3), rat(1, 2)]).unwrap();
        for e in verify_pick_lemma(&m, &Assignment::empty()).unwrap().entries {
            assert_eq!(e.quantity, &e.pi * (BigRational::one() - &e.pi));
        }
        let m = family_nand(3).unwrap();
        let r = verify_pick_lemma(&m, &Assignment::new(vec![1, 2], vec![true, false]).unwrap())
            .unwrap();
        assert_eq!(r.entries.len(), 1);
        assert_eq!(r.entries[0].quantity, rat(1, 4));
    }

    #[test]
    fn adaptive_nand3_sum() {
        let m = family_nand(3).unwrap();
        let f = TestFunction::sum(3);
        let tree = build_adaptive_tree(&m, &f).unwrap();
        assert_eq!(tree.root().pick, Some(2));
        assert_eq!(tree.root().y, rat(7, 4));
        assert!(max_step(&tree, StepMode::Gap) <= int(1));
        tree.check_invariants(&f).unwrap();
        assert_eq!(tree.leaves().count(), 4);
    }

    #[test]
    fn xor_on_fair_coins_has_gap_at_most_two() {
        let m = family_independent(&[rat(1, 2), rat(1, 2)]).unwrap();
        let f = TestFunction::parity(2);
        let tree = build_adaptive_tree(&m, &f).unwrap();
        assert!(max_step(&tree, StepMode::Gap) <= int(2));
        tree.check_invariants(&f).unwrap();
    }

    #[test]
    fn constant_function_is_flat() {
        let m = family_nand(4).unwrap();
        let f = TestFunction::constant(4, int(0));
        let tree = build_adaptive_tree(&m, &f).unwrap();
        assert!(tree
            .nodes()
            .iter()
            .all(|node| node.y.is_zero() && node.gap().is_zero()));
        assert!(max_step(&tree, StepMode::Increment).is_zero());
    }

    #[test]
    fn fixed_order_nand3_root_step() {
        let m = family_nand(3).unwrap();
        let tree = fixed_order_tree(&m, &TestFunction::sum(3), &[1, 2, 3]).unwrap();
        assert_eq!(first_step(&tree), rat(1, 4));
        // given x1 = 1, x2 = 0 the last coordinate is a fair coin
        assert_eq!(max_step(&tree, StepMode::Increment), rat(1, 2));
    }

    #[test]
    fn fixed_order_nand10_separation() {
        let m = family_nand(10).unwrap();
        let f = TestFunction::sum(10);
        let fixed = fixed_order_tree(&m, &f, &(1..=10).collect::<Vec<_>>()).unwrap();
        assert_eq!(
            max_step(&fixed, StepMode::Increment),
            rat(7, 2) + rat(1, 512)
        );
        let adaptive = build_adaptive_tree(&m, &f).unwrap();
        assert!(max_step(&adaptive, StepMode::Gap) <= int(1));
    }

    #[test]
    fn pos_pair_interval_is_a_violation() {
        let m = family_pos_pair();
        let f = TestFunction::sum(2);
        let tree = fixed_order_tree(&m, &f, &[1, 2]).unwrap();
        assert_eq!(tree.root().gap(), int(2));
        match build_adaptive_tree(&m, &f) {
            Err(Error::IntervalViolation(v)) => {
                assert_eq!(v.bound, int(1));
                assert!(v.revealed.is_empty());
            }
            other => panic!("expected a violation, got {other:?}"),
        }
    }

    #[test]
    fn bad_order_rejected() {
        let m = family_anti_pair();
        assert!(fixed_order_tree(&m, &TestFunction::sum(2), &[1, 1]).is_err());
        assert!(fixed_order_tree(&m, &TestFunction::sum(3), &[1, 2]).is_err());
    }

    #[test]
    fn exports() {
        let m = family_nand(3).unwrap();
        let tree = build_adaptive_tree(&m, &TestFunction::sum(3)).unwrap();
        let json: serde_json::Value = serde_json::from_str(&tree.to_json()).unwrap();
        assert_eq!(json["root"]["pick"], 2);
        assert_eq!(json["root"]["y"], "7/4");
        assert_eq!(json["root"]["node"], "***");
        let csv = tree.to_csv();
        assert_eq!(csv.lines().count(), tree.len() + 1);
        assert!(csv.lines().nth(1).unwrap().starts_with("0,0,***,2,1,"));
    }
}
