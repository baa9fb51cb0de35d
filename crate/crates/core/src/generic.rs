//! Extension axioms, their finite instances, a staged approximation of the
//! generic model, isolating formulas, and bounded-rank type equivalence.

use std::collections::{HashMap, HashSet};
use std::ops::ControlFlow;

use crate::budget::Budget;
use crate::canon::canonical_form_colored;
use crate::closure::{Formula, Literal};
use crate::completion::{complete_with, CompletionOptions};
use crate::embed::{find_embedding, for_each_embedding};
use crate::error::{Error, Result};
use crate::free::{Magma, RawTerm};
use crate::system::{PartialSts, PointId};

/// A partial system `outer` with a relatively closed subset `inner`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DeltaInstance {
    pub outer: PartialSts,
    /// Sorted point ids of `outer`.
    pub inner: Vec<PointId>,
}

impl DeltaInstance {
    pub fn new(outer: PartialSts, inner: Vec<PointId>) -> Result<Self> {
        let mut inner = inner;
        inner.sort_unstable();
        inner.dedup();
        if let Some((a, b, c)) = outer.escaping_product(&inner) {
            return Err(Error::NotRelativelyClosed(
                outer.name(a).into(),
                outer.name(b).into(),
                outer.name(c).into(),
            ));
        }
        Ok(Self { outer, inner })
    }

    pub fn from_names<S: AsRef<str>>(outer: PartialSts, inner: &[S]) -> Result<Self> {
        let ids = outer.require_all(inner)?;
        Self::new(outer, ids)
    }

    pub fn inner_system(&self) -> PartialSts {
        self.outer.restrict(&self.inner)
    }

    pub fn is_inner(&self, p: PointId) -> bool {
        self.inner.binary_search(&p).is_ok()
    }

    /// Outer points not in `inner`, in id order.
    pub fn extra(&self) -> Vec<PointId> {
        self.outer.points().filter(|&p| !self.is_inner(p)).collect()
    }

    /// Canonical label of the pair, with inner points colored 1.
    pub fn canonical_label(&self) -> Result<String> {
        let colors: Vec<u32> = self.outer.points().map(|p| u32::from(self.is_inner(p))).collect();
        Ok(canonical_form_colored(&self.outer, &colors, &mut Budget::default())?.label)
    }

    /// Variable names: `x1..xn` for inner points, `y1..ym` for the rest.
    pub fn variable_names(&self) -> HashMap<PointId, String> {
        let mut names = HashMap::new();
        for (i, &p) in self.inner.iter().enumerate() {
            names.insert(p, format!("x{}", i + 1));
        }
        for (i, p) in self.extra().into_iter().enumerate() {
            names.insert(p, format!("y{}", i + 1));
        }
        names
    }
}

fn diagram(s: &PartialSts, points: &[PointId], names: &HashMap<PointId, String>) -> Formula {
    let inside: HashSet<PointId> = points.iter().copied().collect();
    let mut literals = Vec::new();
    for (i, &p) in points.iter().enumerate() {
        for &q in &points[i + 1..] {
            literals.push(Literal::neq(
                RawTerm::leaf(names[&p].clone()),
                RawTerm::leaf(names[&q].clone()),
            ));
        }
    }
    for b in s.blocks() {
        if b.iter().all(|p| inside.contains(p)) {
            literals.push(Literal::eq(
                RawTerm::node(
                    RawTerm::leaf(names[&b[0]].clone()),
                    RawTerm::leaf(names[&b[1]].clone()),
                ),
                RawTerm::leaf(names[&b[2]].clone()),
            ));
        }
    }
    Formula {
        variables: points.iter().map(|p| names[p].clone()).collect(),
        literals,
    }
}

/// `(delta_A, delta_B)`: inequalities between distinct variables plus one
/// equality `x * y = z` per block, stored as (min, mid) -> max.
pub fn delta_formulas(inst: &DeltaInstance) -> (Formula, Formula) {
    let names = inst.variable_names();
    let mut all = inst.inner.clone();
    all.extend(inst.extra());
    (
        diagram(&inst.outer, &inst.inner, &names),
        diagram(&inst.outer, &all, &names),
    )
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DeltaCheck {
    pub holds: bool,
    /// An inner assignment (inner name, model point name) with no extension.
    pub counterexample: Option<Vec<(String, String)>>,
    pub assignments_checked: u64,
}

/// Whether every realization of `delta_A` in `m` extends to one of `delta_B`.
pub fn check_delta(m: &PartialSts, inst: &DeltaInstance, budget: &mut Budget) -> Result<DeltaCheck> {
    let all: Vec<PointId> = m.points().collect();
    check_delta_from(m, &all, inst, budget)
}

/// As [`check_delta`], but only for inner assignments into `domain`, which
/// must induce a total subsystem of `m`; extensions may use all of `m`.
pub fn check_delta_from(
    m: &PartialSts,
    domain: &[PointId],
    inst: &DeltaInstance,
    budget: &mut Budget,
) -> Result<DeltaCheck> {
    if !m.is_total() {
        return Err(Error::NotTotal);
    }
    let sub = m.restrict(domain);
    let inner = inst.inner_system();
    // Inner ids of `inst.outer` in the order of `inner`'s points.
    let inner_in_outer: Vec<PointId> = inner
        .names()
        .iter()
        .map(|n| inst.outer.point(n).unwrap())
        .collect();
    let mut checked = 0u64;
    let mut failure: Option<Vec<(String, String)>> = None;
    let mut inner_err: Option<Error> = None;
    for_each_embedding(&inner, &sub, &[], false, budget, |f| {
        checked += 1;
        let base: Vec<(PointId, PointId)> = f
            .iter()
            .enumerate()
            .map(|(i, &y)| (inner_in_outer[i], m.point(sub.name(y)).unwrap()))
            .collect();
        match find_embedding(&inst.outer, m, &base, false, &mut Budget::default()) {
            Ok(Some(_)) => ControlFlow::Continue(()),
            Ok(None) => {
                failure = Some(
                    base.iter()
                        .map(|&(x, y)| (inst.outer.name(x).to_string(), m.name(y).to_string()))
                        .collect(),
                );
                ControlFlow::Break(())
            }
            Err(e) => {
                inner_err = Some(e);
                ControlFlow::Break(())
            }
        }
    })?;
    if let Some(e) = inner_err {
        return Err(e);
    }
    Ok(DeltaCheck {
        holds: failure.is_none(),
        counterexample: failure,
        assignments_checked: checked,
    })
}

/// All partial systems on `n` points named `p0..`, one per isomorphism class,
/// in canonical-label order.
pub fn partial_systems_up_to_iso(n: usize) -> Result<Vec<PartialSts>> {
    let names: Vec<String> = (0..n).map(|i| format!("p{i}")).collect();
    let mut triples = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            for c in b + 1..n {
                triples.push([a, b, c]);
            }
        }
    }
    let mut classes: HashMap<String, PartialSts> = HashMap::new();
    let mut used = vec![vec![false; n]; n];
    let mut chosen: Vec<[usize; 3]> = Vec::new();
    fn rec(
        start: usize,
        triples: &[[usize; 3]],
        used: &mut Vec<Vec<bool>>,
        chosen: &mut Vec<[usize; 3]>,
        names: &[String],
        classes: &mut HashMap<String, PartialSts>,
    ) -> Result<()> {
        let s = PartialSts::from_indexed(names.to_vec(), chosen)?;
        let label = canonical_form_colored(&s, &vec![0; names.len()], &mut Budget::default())?.label;
        classes.entry(label).or_insert(s);
        for (i, &[a, b, c]) in triples.iter().enumerate().skip(start) {
            if used[a][b] || used[a][c] || used[b][c] {
                continue;
            }
            for (x, y) in [(a, b), (a, c), (b, c)] {
                used[x][y] = true;
            }
            chosen.push([a, b, c]);
            rec(i + 1, triples, used, chosen, names, classes)?;
            chosen.pop();
            for (x, y) in [(a, b), (a, c), (b, c)] {
                used[x][y] = false;
            }
        }
        Ok(())
    }
    rec(0, &triples, &mut used, &mut chosen, &names, &mut classes)?;
    let mut out: Vec<(String, PartialSts)> = classes.into_iter().collect();
    out.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(out.into_iter().map(|(_, s)| s).collect())
}

/// One instance per isomorphism class of (outer, inner) with
/// `1 <= |outer| <= max_outer_size`, sorted by (|outer|, canonical label).
pub fn enumerate_delta(max_outer_size: usize) -> Result<Vec<DeltaInstance>> {
    let mut out = Vec::new();
    for n in 1..=max_outer_size {
        let mut classes: HashMap<String, DeltaInstance> = HashMap::new();
        for outer in partial_systems_up_to_iso(n)? {
            for mask in 0u32..(1 << n) {
                let inner: Vec<PointId> =
                    (0..n as u32).filter(|i| mask >> i & 1 == 1).map(PointId).collect();
                if !outer.is_relatively_closed(&inner) {
                    continue;
                }
                let inst = DeltaInstance::new(outer.clone(), inner)?;
                let label = inst.canonical_label()?;
                classes.entry(label).or_insert(inst);
            }
        }
        let mut level: Vec<(String, DeltaInstance)> = classes.into_iter().collect();
        level.sort_by(|a, b| a.0.cmp(&b.0));
        out.extend(level.into_iter().map(|(_, i)| i));
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct StageLog {
    pub stage: usize,
    /// (instance index, inner assignment) pairs that needed new points.
    pub repaired: usize,
    pub order: usize,
}

/// A chain `M_0 ⊆ M_1 ⊆ ...` of total systems where every inner assignment
/// into `M_i` of every instance with at most `bound` outer points extends
/// inside `M_{i+1}`.
pub fn generic_build(
    seed_system: &PartialSts,
    stages: usize,
    bound: usize,
    rng_seed: u64,
) -> Result<(Vec<PartialSts>, Vec<StageLog>)> {
    if !seed_system.is_total() {
        return Err(Error::NotTotal);
    }
    let instances = enumerate_delta(bound)?;
    let mut chain = vec![seed_system.clone()];
    let mut logs = Vec::new();
    for stage in 1..=stages {
        let m = chain.last().unwrap().clone();
        let mut new_points: Vec<String> = Vec::new();
        let mut new_blocks: Vec<[String; 3]> = Vec::new();
        let mut repaired = 0usize;
        for (ii, inst) in instances.iter().enumerate() {
            let inner = inst.inner_system();
            let inner_in_outer: Vec<PointId> = inner
                .names()
                .iter()
                .map(|n| inst.outer.point(n).unwrap())
                .collect();
            let mut pending: Vec<Vec<(PointId, PointId)>> = Vec::new();
            for f in crate::embed::find_embeddings(&inner, &m, &[], false, None, &mut Budget::default())? {
                let base: Vec<(PointId, PointId)> = f
                    .iter()
                    .enumerate()
                    .map(|(i, &y)| (inner_in_outer[i], y))
                    .collect();
                if find_embedding(&inst.outer, &m, &base, false, &mut Budget::default())?.is_none() {
                    pending.push(base);
                }
            }
            for base in pending {
                let image: HashMap<PointId, String> = base
                    .iter()
                    .map(|&(x, y)| (x, m.name(y).to_string()))
                    .collect();
                let name_of = |p: PointId| -> String {
                    image.get(&p).cloned().unwrap_or_else(|| {
                        format!("g{stage}_{repaired}_{ii}_{}", inst.outer.name(p))
                    })
                };
                for p in inst.extra() {
                    new_points.push(name_of(p));
                }
                for b in inst.outer.blocks() {
                    if b.iter().all(|p| inst.is_inner(*p)) {
                        continue;
                    }
                    new_blocks.push(b.map(name_of));
                }
                repaired += 1;
            }
        }
        let next = if new_points.is_empty() {
            m.clone()
        } else {
            let partial = m.extend(&new_points, &new_blocks)?;
            let mut opts = CompletionOptions::new(4 * partial.len() + 9, crate::seed::derive_indexed(rng_seed, "generic-stage", stage as u64));
            opts.substructure = false;
            opts.fresh_prefix = format!("m{stage}~");
            complete_with(&partial, &opts)?
        };
        if !next.has_substructure(&m) {
            return Err(Error::VerificationFailed(format!(
                "stage {stage} does not extend its predecessor"
            )));
        }
        logs.push(StageLog {
            stage,
            repaired,
            order: next.len(),
        });
        chain.push(next);
    }
    Ok((chain, logs))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IsolatingFormula {
    pub formula: Formula,
    /// The first `free` variables stand for the tuple.
    pub free: usize,
    /// The remaining variables are existentially quantified.
    pub existential: usize,
    /// Model points enumerated by the variables, in variable order.
    pub points: Vec<String>,
}

/// The formula `exists x_{n+1}..x_{n+m}. phi` describing the closure of the
/// tuple in the finite total system `m`: all inequalities, idempotence for
/// each variable, and one equality per block of the closure.
pub fn isolating_formula<S: AsRef<str>>(tuple: &[S], m: &PartialSts) -> Result<IsolatingFormula> {
    let ids = m.require_all(tuple)?;
    let closure = m.close(&ids);
    let mut order: Vec<PointId> = Vec::new();
    for &p in &ids {
        if !order.contains(&p) {
            order.push(p);
        }
    }
    let free = order.len();
    for &p in &closure {
        if !order.contains(&p) {
            order.push(p);
        }
    }
    let names: HashMap<PointId, String> = order
        .iter()
        .enumerate()
        .map(|(i, &p)| (p, format!("x{}", i + 1)))
        .collect();
    let mut formula = diagram(m, &order, &names);
    let idem: Vec<Literal> = order
        .iter()
        .map(|p| {
            let v = RawTerm::leaf(names[p].clone());
            Literal::eq(RawTerm::node(v.clone(), v.clone()), v)
        })
        .collect();
    let mut literals = idem;
    literals.append(&mut formula.literals);
    formula.literals = literals;
    Ok(IsolatingFormula {
        formula,
        free,
        existential: order.len() - free,
        points: order.iter().map(|&p| m.name(p).to_string()).collect(),
    })
}

/// Whether `tuple` satisfies the isolating formula inside `m`, with the
/// existential variables witnessed in `m`.
pub fn satisfies_isolating<S: AsRef<str>>(
    iso: &IsolatingFormula,
    source: &PartialSts,
    m: &PartialSts,
    tuple: &[S],
) -> Result<bool> {
    let ids = m.require_all(tuple)?;
    if ids.len() != iso.free {
        return Ok(false);
    }
    let src_ids = source.require_all(&iso.points)?;
    let closure = source.restrict(&src_ids);
    let base: Vec<(PointId, PointId)> = iso.points[..iso.free]
        .iter()
        .zip(&ids)
        .map(|(n, &y)| (closure.point(n).unwrap(), y))
        .collect();
    Ok(find_embedding(&closure, m, &base, false, &mut Budget::default())?.is_some())
}

/// Whether the index map between `t1` and `t2` extends to an isomorphism of
/// the partial systems induced on `<t1>_m` and `<t2>_m`.
pub fn qf_equiv_m<A: Magma, B: Magma>(
    ma: &mut A,
    t1: &[A::Elem],
    mb: &mut B,
    t2: &[B::Elem],
    m: usize,
) -> bool {
    if t1.len() != t2.len() {
        return false;
    }
    let mut fwd: HashMap<A::Elem, B::Elem> = HashMap::new();
    let mut bwd: HashMap<B::Elem, A::Elem> = HashMap::new();
    let mut layers: Vec<Vec<(A::Elem, B::Elem)>> = vec![Vec::new()];
    for (&x, &y) in t1.iter().zip(t2) {
        match (fwd.get(&x), bwd.get(&y)) {
            (None, None) => {
                fwd.insert(x, y);
                bwd.insert(y, x);
                layers[0].push((x, y));
            }
            (Some(&y0), Some(&x0)) if y0 == y && x0 == x => {}
            _ => return false,
        }
    }
    for r in 2..=m {
        let mut layer = Vec::new();
        for i in 1..=r / 2 {
            let j = r - i;
            let (li, lj) = (layers[i - 1].clone(), layers[j - 1].clone());
            for (pi, &(x1, y1)) in li.iter().enumerate() {
                let rest: &[(A::Elem, B::Elem)] = if i == j { &lj[pi + 1..] } else { &lj };
                for &(x2, y2) in rest {
                    let z1 = ma.op(x1, x2);
                    let z2 = mb.op(y1, y2);
                    match (fwd.get(&z1), bwd.get(&z2)) {
                        (None, None) => {
                            fwd.insert(z1, z2);
                            bwd.insert(z2, z1);
                            layer.push((z1, z2));
                        }
                        (Some(&w2), Some(&w1)) if w2 == z2 && w1 == z1 => {}
                        _ => return false,
                    }
                }
            }
        }
        layers.push(layer);
    }
    // Products that land back inside the closures must correspond too.
    let pairs: Vec<(A::Elem, B::Elem)> = layers.into_iter().flatten().collect();
    for i in 0..pairs.len() {
        for j in i + 1..pairs.len() {
            let z1 = ma.op(pairs[i].0, pairs[j].0);
            let z2 = mb.op(pairs[i].1, pairs[j].1);
            match (fwd.get(&z1), bwd.get(&z2)) {
                (None, None) => {}
                (Some(&w2), _) if w2 == z2 => {}
                _ => return false,
            }
        }
    }
    true
}
