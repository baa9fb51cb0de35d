//! Joint embedding and amalgamation of finite Steiner quasigroups, the
//! merge constructions producing a common realization of several types over
//! different parameter sets, and free independence.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::hash::Hash;

use crate::completion::{complete_with, CompletionOptions};
use crate::error::{Error, Result};
use crate::free::{parent_chain, FreeUniverse, Magma, Term};
use crate::generic::qf_equiv_m;
use crate::system::{PartialSts, PointId};

/// A completed system with the embeddings of both inputs, indexed by input id.
#[derive(Clone, Debug)]
pub struct Amalgam {
    pub system: PartialSts,
    pub left: Vec<PointId>,
    pub right: Vec<PointId>,
}

fn tagged(tag: &str, name: &str) -> String {
    format!("{tag}:{name}")
}

fn embed_by_name(s: &PartialSts, t: &PartialSts, name: impl Fn(&str) -> String) -> Vec<PointId> {
    s.names().iter().map(|n| t.point(&name(n)).expect("point kept")).collect()
}

/// A total system containing disjoint copies of `q1` and `q2` as
/// substructures.
pub fn joint_embed(q1: &PartialSts, q2: &PartialSts, opts: &CompletionOptions) -> Result<Amalgam> {
    amalgamate::<&str>(q1, q2, &[], opts)
}

/// A total system containing `q1` and `q2` as substructures, glued along the
/// shared subquasigroup given as pairs (point of `q1`, point of `q2`).
pub fn amalgamate<S: AsRef<str>>(
    q1: &PartialSts,
    q2: &PartialSts,
    shared: &[(S, S)],
    opts: &CompletionOptions,
) -> Result<Amalgam> {
    if !q1.is_total() || !q2.is_total() {
        return Err(Error::NotTotal);
    }
    let left: Vec<&str> = shared.iter().map(|(a, _)| a.as_ref()).collect();
    let right: Vec<&str> = shared.iter().map(|(_, b)| b.as_ref()).collect();
    let c1 = q1.require_all(&left)?;
    let c2 = q2.require_all(&right)?;
    for (q, c) in [(q1, &c1), (q2, &c2)] {
        if let Some((a, b, x)) = q.escaping_product(c) {
            return Err(Error::NotASubquasigroup(format!(
                "{} * {} = {} leaves the shared set",
                q.name(a),
                q.name(b),
                q.name(x)
            )));
        }
    }
    let to_shared: HashMap<&str, &str> = right.iter().copied().zip(left.iter().copied()).collect();
    let from_left: HashSet<&str> = left.iter().copied().collect();
    let name1 = |n: &str| {
        if from_left.contains(n) {
            tagged("c", n)
        } else {
            tagged("0", n)
        }
    };
    let name2 = |n: &str| match to_shared.get(n) {
        Some(m) => tagged("c", m),
        None => tagged("1", n),
    };
    let r1 = q1.rename(|n| name1(n))?;
    let r2 = q2.rename(|n| name2(n))?;
    let union = r1.union(&r2).map_err(|e| match e {
        Error::IncompatibleSystems { a, b } => {
            Error::NotASubquasigroup(format!("the shared points {a}, {b} multiply differently"))
        }
        e => e,
    })?;
    let system = complete_with(&union, opts)?;
    Ok(Amalgam {
        left: embed_by_name(q1, &system, name1),
        right: embed_by_name(q2, &system, name2),
        system,
    })
}

/// Extends the index map `left[i] -> right[i]` to an isomorphism between the
/// generated subquasigroups. `Ok(None)` if no such isomorphism exists;
/// `DepthExceeded` once more than `cap` elements are generated.
pub fn closure_iso<A: Magma, B: Magma>(
    ma: &mut A,
    left: &[A::Elem],
    mb: &mut B,
    right: &[B::Elem],
    cap: usize,
) -> Result<Option<Vec<(A::Elem, B::Elem)>>> {
    lockstep(left, right, cap, |(a, b), (c, d)| (ma.op(a, b), mb.op(c, d)))
}

/// As [`closure_iso`], with both tuples in the same magma.
pub fn closure_iso_in<M: Magma>(
    m: &mut M,
    left: &[M::Elem],
    right: &[M::Elem],
    cap: usize,
) -> Result<Option<Vec<(M::Elem, M::Elem)>>> {
    lockstep(left, right, cap, |(a, b), (c, d)| (m.op(a, b), m.op(c, d)))
}

fn lockstep<X: Copy + Eq + Hash, Y: Copy + Eq + Hash>(
    left: &[X],
    right: &[Y],
    cap: usize,
    mut mul: impl FnMut((X, X), (Y, Y)) -> (X, Y),
) -> Result<Option<Vec<(X, Y)>>> {
    if left.len() != right.len() {
        return Ok(None);
    }
    let mut fwd: HashMap<X, Y> = HashMap::new();
    let mut bwd: HashMap<Y, X> = HashMap::new();
    let mut pairs: Vec<(X, Y)> = Vec::new();
    let mut add = |x: X, y: Y, pairs: &mut Vec<(X, Y)>| -> bool {
        match (fwd.get(&x), bwd.get(&y)) {
            (None, None) => {
                fwd.insert(x, y);
                bwd.insert(y, x);
                pairs.push((x, y));
                true
            }
            (Some(&y0), Some(&x0)) => y0 == y && x0 == x,
            _ => false,
        }
    };
    for (&x, &y) in left.iter().zip(right) {
        if !add(x, y, &mut pairs) {
            return Ok(None);
        }
    }
    let mut i = 0;
    while i < pairs.len() {
        for j in 0..i {
            let (x, y) = mul((pairs[i].0, pairs[j].0), (pairs[i].1, pairs[j].1));
            if !add(x, y, &mut pairs) {
                return Ok(None);
            }
            if pairs.len() > cap {
                return Err(Error::DepthExceeded(cap));
            }
        }
        i += 1;
    }
    Ok(Some(pairs))
}

/// Result of a merge: an extension of the input universe and the realization
/// `a` of the merged type, enumerated like `A_0`.
#[derive(Clone, Debug)]
pub struct Merge {
    pub universe: FreeUniverse,
    /// The base of `universe`.
    pub system: PartialSts,
    pub a: Vec<Term>,
    /// Images of the parameter sets `B_i` in `universe`.
    pub b: Vec<Vec<Term>>,
    /// Sizes of the fresh sets: the new part of `A`, `W`, and each `U_i`.
    pub fresh_a: usize,
    pub fresh_w: usize,
    pub fresh_u: Vec<usize>,
    /// Depth at which both rank-bounded equivalences were re-checked.
    pub certified_depth: usize,
}

impl Merge {
    pub fn a_names(&self) -> Vec<String> {
        self.a.iter().map(|&t| self.universe.display(t)).collect()
    }
}

/// Limits for a merge: `cap` bounds each generated closure, and outputs are
/// re-certified at rank `depth`.
#[derive(Clone, Copy, Debug)]
pub struct MergeLimits {
    pub cap: usize,
    pub depth: usize,
}

impl Default for MergeLimits {
    fn default() -> Self {
        Self { cap: 4096, depth: 3 }
    }
}

fn violated(msg: impl Into<String>) -> Error {
    Error::HypothesisViolated(msg.into())
}

fn set(xs: &[Term]) -> BTreeSet<Term> {
    xs.iter().copied().collect()
}

/// Closure of `xs` under products, abandoned once it exceeds `cap` elements.
fn bounded_closure(u: &mut FreeUniverse, xs: &[Term], cap: usize) -> (Vec<Term>, bool) {
    let mut seen: HashSet<Term> = HashSet::new();
    let mut out: Vec<Term> = Vec::new();
    for &x in xs {
        if seen.insert(x) {
            out.push(x);
        }
    }
    let mut i = 0;
    while i < out.len() {
        for j in 0..i {
            let z = u.mul(out[i], out[j]);
            if seen.insert(z) {
                out.push(z);
                if out.len() > cap {
                    return (out, false);
                }
            }
        }
        i += 1;
    }
    u.sort_terms(&mut out);
    (out, true)
}

fn closed_in(u: &mut FreeUniverse, xs: &[Term], cap: usize) -> Result<Vec<Term>> {
    match bounded_closure(u, xs, cap) {
        (elems, true) => Ok(elems),
        _ => Err(Error::DepthExceeded(cap)),
    }
}

fn subterm_closure(u: &FreeUniverse, roots: impl IntoIterator<Item = Term>) -> Vec<Term> {
    let mut seen = HashSet::new();
    let mut stack: Vec<Term> = roots.into_iter().collect();
    let mut out = Vec::new();
    while let Some(t) = stack.pop() {
        if !seen.insert(t) {
            continue;
        }
        out.push(t);
        if let Some((l, r)) = u.children(t) {
            stack.push(l);
            stack.push(r);
        }
    }
    u.sort_terms(&mut out);
    out
}

struct FreshNames {
    taken: HashSet<String>,
}

impl FreshNames {
    fn take(&mut self, stem: &str) -> String {
        let mut name = stem.to_string();
        while !self.taken.insert(name.clone()) {
            name.push('\'');
        }
        name
    }
}

/// The construction behind [`merge_al1`] and [`merge_al25`], for any number
/// of pairs `(A_i, B_i)` with pairwise intersection `E = B_i ∩ B_j`.
///
/// Each closure `<A_i B_i>` is transported to fresh points: `A_i \ F` onto a
/// shared set `A`, `<A_i E> \ A_i E` onto a shared set `W`, and the rest onto
/// a private set `U_i`, where `F = A_i ∩ B_i`. The union of the transported
/// systems with the materialized parameters is the base of a new universe.
pub fn merge_family(
    u: &mut FreeUniverse,
    pairs: &[(Vec<Term>, Vec<Term>)],
    limits: MergeLimits,
) -> Result<Merge> {
    let t = pairs.len();
    if t == 0 {
        return Err(violated("the family is empty"));
    }
    for (i, (a, b)) in pairs.iter().enumerate() {
        if !u.is_closed(a) {
            return Err(violated(format!("A{i} is not closed")));
        }
        if !u.is_closed(b) {
            return Err(violated(format!("B{i} is not closed")));
        }
        if a.len() != set(a).len() || b.len() != set(b).len() {
            return Err(violated(format!("A{i} or B{i} lists an element twice")));
        }
    }
    if t == 1 {
        return Ok(Merge {
            universe: u.clone(),
            system: u.base().clone(),
            a: pairs[0].0.clone(),
            b: vec![pairs[0].1.clone()],
            fresh_a: 0,
            fresh_w: 0,
            fresh_u: vec![0],
            certified_depth: limits.depth,
        });
    }
    let f_set: BTreeSet<Term> = set(&pairs[0].0).intersection(&set(&pairs[0].1)).copied().collect();
    let e_set: BTreeSet<Term> = set(&pairs[0].1).intersection(&set(&pairs[1].1)).copied().collect();
    for (i, (a, b)) in pairs.iter().enumerate() {
        if set(a).intersection(&set(b)).copied().collect::<BTreeSet<_>>() != f_set {
            return Err(violated(format!("A{i} ∩ B{i} differs from A0 ∩ B0")));
        }
        for (j, (_, b2)) in pairs.iter().enumerate().skip(i + 1) {
            if set(b).intersection(&set(b2)).copied().collect::<BTreeSet<_>>() != e_set {
                return Err(violated(format!("B{i} ∩ B{j} differs from E")));
            }
        }
    }
    let e: Vec<Term> = e_set.iter().copied().collect();

    // Closures, the isomorphisms f_i: <A_0 B_0> -> <A_i B_i>, and <A_i E>.
    let mut g_sets = Vec::new();
    let mut f_maps: Vec<HashMap<Term, Term>> = Vec::new();
    let mut h_sets = Vec::new();
    let tuple0: Vec<Term> = pairs[0].0.iter().chain(&pairs[0].1).copied().collect();
    for (i, (a, b)) in pairs.iter().enumerate() {
        let (explored, _) = bounded_closure(u, &[a.clone(), e.clone()].concat(), limits.cap);
        if !set(&explored).intersection(&set(b)).all(|x| e_set.contains(x)) {
            return Err(violated(format!("<A{i}E> ∩ B{i} differs from E")));
        }
    }
    for (i, (a, b)) in pairs.iter().enumerate() {
        let g = closed_in(u, &[a.clone(), b.clone()].concat(), limits.cap)?;
        let tuple: Vec<Term> = a.iter().chain(b).copied().collect();
        let iso = closure_iso_in(u, &tuple0, &tuple, limits.cap)?
            .ok_or_else(|| violated(format!("A0B0 and A{i}B{i} are not equivalent")))?;
        let f: HashMap<Term, Term> = iso.into_iter().collect();
        for &x in &e {
            if f.get(&x) != Some(&x) {
                return Err(violated(format!("the map A0B0 -> A{i}B{i} moves {}", u.display(x))));
            }
        }
        let h = closed_in(u, &[a.clone(), e.clone()].concat(), limits.cap)?;
        let hb: BTreeSet<Term> = set(&h).intersection(&set(b)).copied().collect();
        if hb != e_set {
            return Err(violated(format!("<A{i}E> ∩ B{i} differs from E")));
        }
        g_sets.push(g);
        f_maps.push(f);
        h_sets.push(h);
    }

    // Materialized parameters: base points, the B_i, and their subterms.
    let mut roots: Vec<Term> = u.base_leaves();
    for (_, b) in pairs {
        roots.extend(b);
    }
    let materialized = subterm_closure(u, roots);
    let mut names = FreshNames {
        taken: materialized.iter().map(|&x| u.point_name(x)).collect(),
    };
    for p in u.base().names() {
        names.taken.insert(p.clone());
    }

    // g_0, then g_i = g_0 ∘ f_i^{-1} on <A_i E>.
    let (a0, b0) = &pairs[0];
    let b0_set = set(b0);
    let mut g0: HashMap<Term, String> = HashMap::new();
    for &x in b0 {
        g0.insert(x, u.point_name(x));
    }
    let mut fresh_a = 0;
    for &x in a0 {
        if !f_set.contains(&x) {
            g0.insert(x, names.take(&format!("A~{fresh_a}")));
            fresh_a += 1;
        }
    }
    let mut fresh_w = 0;
    for &x in &h_sets[0] {
        if let std::collections::hash_map::Entry::Vacant(e) = g0.entry(x) {
            e.insert(names.take(&format!("W~{fresh_w}")));
            fresh_w += 1;
        }
    }
    let mut fresh_u = Vec::new();
    let mut g_maps: Vec<HashMap<Term, String>> = Vec::new();
    for i in 0..t {
        let mut g: HashMap<Term, String> = if i == 0 { g0.clone() } else { HashMap::new() };
        if i > 0 {
            let inv: HashMap<Term, Term> = f_maps[i].iter().map(|(&x, &y)| (y, x)).collect();
            for &x in &pairs[i].1 {
                g.insert(x, u.point_name(x));
            }
            for &x in &h_sets[i] {
                let v = g0[&inv[&x]].clone();
                if let Some(old) = g.get(&x) {
                    if *old != v {
                        return Err(Error::CompatibilityCheckFailed(1));
                    }
                }
                g.insert(x, v);
            }
        }
        let mut k = 0;
        for &x in &g_sets[i] {
            if let std::collections::hash_map::Entry::Vacant(e) = g.entry(x) {
                e.insert(names.take(&format!("U{i}~{k}")));
                k += 1;
            }
        }
        fresh_u.push(k);
        g_maps.push(g);
    }
    debug_assert!(b0_set.iter().all(|x| g_maps[0][x] == u.point_name(*x)));

    // The transported systems R_i on g_i(<A_i B_i>).
    let mut transported = Vec::new();
    for i in 0..t {
        let elems = &g_sets[i];
        let mut blocks = Vec::new();
        let members: HashSet<Term> = elems.iter().copied().collect();
        for (p, &x) in elems.iter().enumerate() {
            for &y in &elems[p + 1..] {
                let z = u.mul(x, y);
                debug_assert!(members.contains(&z));
                if z != x && z != y && x < z && y < z {
                    blocks.push(vec![g_maps[i][&x].clone(), g_maps[i][&y].clone(), g_maps[i][&z].clone()]);
                }
            }
        }
        let points = elems.iter().map(|x| g_maps[i][x].clone()).collect();
        transported.push(PartialSts::from_raw(points, blocks).map_err(|_| Error::CompatibilityCheckFailed(1))?);
    }

    // Claim 1: the transported systems agree on AEW = g_0(<A_0 E>).
    let aew: Vec<String> = h_sets[0].iter().map(|x| g0[x].clone()).collect();
    for i in 1..t {
        let r0 = transported[0].restrict(&transported[0].require_all(&aew)?);
        let ri = transported[i]
            .require_all(&aew)
            .map(|ids| transported[i].restrict(&ids))
            .map_err(|_| Error::CompatibilityCheckFailed(1))?;
        if r0 != ri {
            return Err(Error::CompatibilityCheckFailed(1));
        }
    }
    // Claim 2: the transported systems form a partial STS together.
    PartialSts::family_union(&transported).map_err(|_| Error::CompatibilityCheckFailed(2))?;
    // Claim 3: each is compatible with the parameters' system.
    let params = u.induced_system(&materialized);
    for r in &transported {
        params.union(r).map_err(|_| Error::CompatibilityCheckFailed(3))?;
    }
    let mut family = vec![params];
    family.extend(transported);
    let system = PartialSts::family_union(&family).map_err(|e| match e {
        Error::IncompatibleFamily { i: 0, .. } => Error::CompatibilityCheckFailed(3),
        _ => Error::CompatibilityCheckFailed(2),
    })?;

    let mut universe = FreeUniverse::new(system.clone());
    let leaf = |universe: &FreeUniverse, n: &str| universe.leaf(n).expect("materialized point");
    let a: Vec<Term> = a0.iter().map(|x| leaf(&universe, &g0[x])).collect();
    let b: Vec<Vec<Term>> = pairs
        .iter()
        .map(|(_, bi)| bi.iter().map(|&x| leaf(&universe, &u.point_name(x))).collect())
        .collect();

    // Certify A ≡_{B_i} A_i for every i.
    for (i, (ai, bi)) in pairs.iter().enumerate() {
        let old: Vec<Term> = ai.iter().chain(bi).copied().collect();
        let new: Vec<Term> = a.iter().chain(&b[i]).copied().collect();
        if closure_iso(u, &old, &mut universe, &new, limits.cap)?.is_none()
            || !qf_equiv_m(u, &old, &mut universe, &new, limits.depth)
        {
            return Err(Error::VerificationFailed(format!(
                "the merged set is not equivalent to A{i} over B{i}"
            )));
        }
    }
    Ok(Merge {
        universe,
        system,
        a,
        b,
        fresh_a,
        fresh_w,
        fresh_u,
        certified_depth: limits.depth,
    })
}

/// A set `A` with `A ≡_{B0} A0` and `A ≡_{B1} A1`, for closed sets with
/// `A0 ∩ B0 = A1 ∩ B1 = B0 ∩ B1 = ∅` and `A0 B0 ≡ A1 B1` by enumeration.
pub fn merge_al1(
    u: &mut FreeUniverse,
    a0: &[Term],
    b0: &[Term],
    a1: &[Term],
    b1: &[Term],
    limits: MergeLimits,
) -> Result<Merge> {
    for (what, x, y) in [("A0 ∩ B0", a0, b0), ("A1 ∩ B1", a1, b1), ("B0 ∩ B1", b0, b1)] {
        if !set(x).is_disjoint(&set(y)) {
            return Err(violated(format!("{what} is not empty")));
        }
    }
    merge_family(u, &[(a0.to_vec(), b0.to_vec()), (a1.to_vec(), b1.to_vec())], limits)
}

/// As [`merge_al1`] over `E = B0 ∩ B1`, assuming `A0 ∩ B0 = A1 ∩ B1`,
/// `A0 B0 ≡_E A1 B1` by enumeration and `<A_i E> ∩ B_i = E`.
pub fn merge_al25(
    u: &mut FreeUniverse,
    a0: &[Term],
    b0: &[Term],
    a1: &[Term],
    b1: &[Term],
    limits: MergeLimits,
) -> Result<Merge> {
    merge_family(u, &[(a0.to_vec(), b0.to_vec()), (a1.to_vec(), b1.to_vec())], limits)
}

#[derive(Clone, Debug)]
pub struct Al3Report {
    /// Whether the hypotheses on `D` hold.
    pub hypotheses: bool,
    pub merge: Option<Merge>,
}

/// Checks `A0 ∩ B0 = A1 ∩ B1`, `A0 B0 ≡_E A1 B1`, `D ≡_{E A0} B0` and
/// `D ≡_{E A1} B1` (with `D` enumerated like `B0` and `B1`); when they hold,
/// certifies `<A_i E> ∩ B_i = E` and runs [`merge_al25`].
pub fn check_al3(
    u: &mut FreeUniverse,
    a0: &[Term],
    b0: &[Term],
    a1: &[Term],
    b1: &[Term],
    d: &[Term],
    limits: MergeLimits,
) -> Result<Al3Report> {
    let no = Al3Report {
        hypotheses: false,
        merge: None,
    };
    let inter = |x: &[Term], y: &[Term]| -> BTreeSet<Term> { set(x).intersection(&set(y)).copied().collect() };
    if inter(a0, b0) != inter(a1, b1) || d.len() != b0.len() || b0.len() != b1.len() {
        return Ok(no);
    }
    let e: Vec<Term> = inter(b0, b1).into_iter().collect();
    let pairs = [
        ([&e[..], a0, b0].concat(), [&e[..], a1, b1].concat()),
        ([&e[..], a0, d].concat(), [&e[..], a0, b0].concat()),
        ([&e[..], a1, d].concat(), [&e[..], a1, b1].concat()),
    ];
    for (x, y) in &pairs {
        match closure_iso_in(u, x, y, limits.cap) {
            Ok(Some(_)) => {}
            Ok(None) | Err(Error::DepthExceeded(_)) => return Ok(no),
            Err(e) => return Err(e),
        }
    }
    let e_set = set(&e);
    for (a, b) in [(a0, b0), (a1, b1)] {
        let h = closed_in(u, &[a, &e[..]].concat(), limits.cap)?;
        if inter(&h, b) != e_set {
            return Err(Error::VerificationFailed(
                "<A E> meets B outside E although D exists".into(),
            ));
        }
    }
    let merge = merge_al25(u, a0, b0, a1, b1, limits)?;
    Ok(Al3Report {
        hypotheses: true,
        merge: Some(merge),
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum IndepVerdict {
    Independent,
    Dependent(String),
    Unknown,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndepReport {
    pub verdict: IndepVerdict,
    /// Chain levels explored past `<AC> <BC>`.
    pub levels: usize,
    /// The chain reached `<ABC>`, so an independent verdict is unconditional.
    pub exhausted: bool,
}

/// Free independence of `A` and `B` over `C`: `<AC> ∩ <BC> = <C>` and
/// `<ABC>` is freely generated by `<AC> <BC>`, explored for `depth` levels
/// of the unique-parent chain.
pub fn indep(u: &mut FreeUniverse, a: &[Term], b: &[Term], c: &[Term], depth: usize) -> IndepReport {
    let cap = depth.max(1) + 3;
    let ac = u.generated(&[a, c].concat(), cap);
    let bc = u.generated(&[b, c].concat(), cap);
    let cc = u.generated(c, cap);
    let unknown = IndepReport {
        verdict: IndepVerdict::Unknown,
        levels: 0,
        exhausted: false,
    };
    let in_c: HashSet<Term> = cc.elements.iter().copied().collect();
    let in_bc: HashSet<Term> = bc.elements.iter().copied().collect();
    if cc.complete {
        if let Some(&x) = ac.elements.iter().find(|x| in_bc.contains(x) && !in_c.contains(x)) {
            return IndepReport {
                verdict: IndepVerdict::Dependent(format!(
                    "{} lies in <AC> and <BC> but not in <C>",
                    u.display(x)
                )),
                levels: 0,
                exhausted: false,
            };
        }
    }
    if !(ac.complete && bc.complete && cc.complete) {
        return unknown;
    }
    let mut g0 = ac.elements.clone();
    g0.extend(bc.elements.iter().filter(|x| !ac.elements.contains(x)));
    let report = parent_chain(u, &g0, depth.max(1));
    if let Some((z, p, q)) = report.collision {
        return IndepReport {
            verdict: IndepVerdict::Dependent(format!(
                "{} = {} * {} = {} * {}",
                u.display(z),
                u.display(p[0]),
                u.display(p[1]),
                u.display(q[0]),
                u.display(q[1])
            )),
            levels: report.levels,
            exhausted: false,
        };
    }
    IndepReport {
        verdict: IndepVerdict::Independent,
        levels: report.levels,
        exhausted: report.exhausted,
    }
}

/// A copy `A'` of `<AC>` over `<C>` in an extension of the universe, with
/// `A' \ <C>` on fresh points freely placed over everything else.
#[derive(Clone, Debug)]
pub struct FullExistence {
    pub universe: FreeUniverse,
    /// The copy of `<AC>`.
    pub a: Vec<Term>,
    /// Images of the given `A`, in order.
    pub a_image: Vec<Term>,
    pub b: Vec<Term>,
    pub c: Vec<Term>,
    pub report: IndepReport,
}

pub fn full_existence_witness(
    u: &mut FreeUniverse,
    a: &[Term],
    b: &[Term],
    c: &[Term],
    depth: usize,
    cap: usize,
) -> Result<FullExistence> {
    let cl_c = closed_in(u, c, cap)?;
    let cl_a = closed_in(u, &[a, c].concat(), cap)?;
    let in_c: HashSet<Term> = cl_c.iter().copied().collect();
    let mut roots = u.base_leaves();
    roots.extend(b);
    roots.extend(&cl_a);
    let materialized = subterm_closure(u, roots);
    let mut names = FreshNames {
        taken: materialized.iter().map(|&x| u.point_name(x)).collect(),
    };
    let copy_name: HashMap<Term, String> = cl_a
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let n = if in_c.contains(&x) {
                u.point_name(x)
            } else {
                names.take(&format!("{}~{i}", "a'"))
            };
            (x, n)
        })
        .collect();
    let copy = u.induced_system(&cl_a).rename(|n| {
        let t = cl_a.iter().find(|&&x| u.point_name(x) == n).expect("member");
        copy_name[t].clone()
    })?;
    let system = u.induced_system(&materialized).union(&copy)?;
    let mut universe = FreeUniverse::new(system);
    let lift = |universe: &FreeUniverse, name: &str| universe.leaf(name).expect("materialized point");
    let a2: Vec<Term> = cl_a.iter().map(|x| lift(&universe, &copy_name[x])).collect();
    let b2: Vec<Term> = b.iter().map(|&x| lift(&universe, &u.point_name(x))).collect();
    let c2: Vec<Term> = cl_c.iter().map(|&x| lift(&universe, &u.point_name(x))).collect();
    let old: Vec<Term> = cl_a.iter().chain(&cl_c).copied().collect();
    let new: Vec<Term> = a2.iter().chain(&c2).copied().collect();
    if closure_iso(u, &old, &mut universe, &new, cap)?.is_none() {
        return Err(Error::VerificationFailed("the copy is not equivalent over C".into()));
    }
    let report = indep(&mut universe, &a2, &b2, &c2, depth);
    if let IndepVerdict::Dependent(w) = &report.verdict {
        return Err(Error::VerificationFailed(format!("the copy is not independent: {w}")));
    }
    let a_image = a.iter().map(|x| lift(&universe, &copy_name[x])).collect();
    Ok(FullExistence {
        universe,
        a: a2,
        a_image,
        b: b2,
        c: c2,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testing::fano;

    fn opts(max: usize) -> CompletionOptions {
        CompletionOptions::new(max, 0)
    }

    fn terms(u: &FreeUniverse, names: &[&str]) -> Vec<Term> {
        names.iter().map(|n| u.leaf(n).unwrap()).collect()
    }

    #[test]
    fn joint_embedding_of_points_and_planes() {
        let p = PartialSts::discrete(["x"]).unwrap();
        let j = joint_embed(&p, &p, &opts(9)).unwrap();
        assert_eq!(j.system.len(), 3);
        assert_ne!(j.left[0], j.right[0]);

        let f = fano();
        let j = joint_embed(&f, &f, &opts(27)).unwrap();
        assert!(j.system.is_total());
        // Every point sees 7 pairs into the other copy, each needing a fresh third.
        assert_eq!(j.system.len(), 21);
        let l = j.system.restrict(&j.left);
        assert_eq!(l.blocks().len(), 7);
        assert!(j.left.iter().all(|p| !j.right.contains(p)));

        let empty = PartialSts::discrete(Vec::<String>::new()).unwrap();
        let j = joint_embed(&f, &empty, &opts(7)).unwrap();
        assert_eq!(j.system.len(), 7);
    }

    #[test]
    fn amalgam_over_a_block() {
        let f = fano();
        let shared = [("1", "1"), ("2", "2"), ("3", "3")];
        let am = amalgamate(&f, &f, &shared, &opts(31)).unwrap();
        assert!(am.system.is_total());
        let common: Vec<PointId> = am.left.iter().filter(|p| am.right.contains(p)).copied().collect();
        assert_eq!(common.len(), 3);
        let all: Vec<(&str, &str)> = f.names().iter().map(|n| (n.as_str(), n.as_str())).collect();
        let same = amalgamate(&f, &f, &all, &opts(7)).unwrap();
        assert_eq!(same.system.len(), 7);
        assert!(matches!(
            amalgamate(&f, &f, &[("1", "1"), ("2", "2")], &opts(31)),
            Err(Error::NotASubquasigroup(_))
        ));
    }

    #[test]
    fn al1_on_free_points() {
        let mut u = FreeUniverse::new(PartialSts::discrete(["a", "b", "c", "d"]).unwrap());
        let [a, b, c, d] = terms(&u, &["a", "b", "c", "d"])[..] else { unreachable!() };
        let m = merge_al1(&mut u, &[a], &[b], &[c], &[d], MergeLimits::default()).unwrap();
        assert_eq!(m.a.len(), 1);
        assert_eq!((m.fresh_a, m.fresh_w, m.fresh_u.clone()), (1, 0, vec![1, 1]));
        let mut v = m.universe.clone();
        let x = v.mul(m.a[0], m.b[0][0]);
        assert!(!v.is_leaf(x) || v.leaf_name(x).unwrap().starts_with("U0"));
        assert!(matches!(
            merge_al1(&mut u, &[a], &[b], &[c], &[b], MergeLimits::default()),
            Err(Error::HypothesisViolated(_))
        ));
    }

    /// Two Fano planes glued along a point `e`, named `<n>` and `<n>'`.
    fn twin_fano() -> PartialSts {
        let f = fano();
        let g = f.rename(|n| if n == "1" { n.into() } else { format!("{n}'") }).unwrap();
        f.union(&g).unwrap()
    }

    #[test]
    fn al25_over_a_point() {
        let mut u = FreeUniverse::new(twin_fano());
        let b0 = terms(&u, &["1", "2", "3"]);
        let b1 = terms(&u, &["1", "2'", "3'"]);
        let a0 = terms(&u, &["4"]);
        let a1 = terms(&u, &["4'"]);
        let m = merge_al25(&mut u, &a0, &b0, &a1, &b1, MergeLimits::default()).unwrap();
        // <4, 1> = {1, 4, 5}: W holds the image of 5; U_i the remaining 2
        // points of each plane.
        assert_eq!((m.fresh_a, m.fresh_w, m.fresh_u.clone()), (1, 1, vec![2, 2]));
        let fam = merge_family(
            &mut u,
            &[(a0.clone(), b0.clone()), (a1.clone(), b1.clone())],
            MergeLimits::default(),
        )
        .unwrap();
        assert_eq!(
            crate::canon::canonical_form(&fam.system).unwrap(),
            crate::canon::canonical_form(&m.system).unwrap()
        );
        // 5 lies in <4, 1> and in the line {1, 4, 5}.
        let bad_b0 = terms(&u, &["1", "4", "5"]);
        let bad_a0 = terms(&u, &["2"]);
        let bad_b1 = terms(&u, &["1", "4'", "5'"]);
        let bad_a1 = terms(&u, &["2'"]);
        assert!(merge_al25(&mut u, &bad_a0, &bad_b0, &bad_a1, &bad_b1, MergeLimits::default()).is_ok());
        let a_on = terms(&u, &["1", "6", "7"]);
        let a_on1 = terms(&u, &["1", "6'", "7'"]);
        assert!(merge_al25(&mut u, &a_on, &b0, &a_on1, &b1, MergeLimits::default()).is_ok());

        // (a * e) * a2 lands in B0 outside E.
        let base = PartialSts::build(
            &["a", "a2", "m", "e", "b", "c", "p", "x", "x2", "n", "b'", "c'", "q"],
            &[
                ["a", "a2", "m"],
                ["e", "b", "c"],
                ["a", "e", "p"],
                ["p", "a2", "b"],
                ["x", "x2", "n"],
                ["e", "b'", "c'"],
                ["x", "e", "q"],
                ["q", "x2", "b'"],
            ],
        )
        .unwrap();
        let mut u = FreeUniverse::new(base);
        let (a0, b0) = (terms(&u, &["a", "a2", "m"]), terms(&u, &["e", "b", "c"]));
        let (a1, b1) = (terms(&u, &["x", "x2", "n"]), terms(&u, &["e", "b'", "c'"]));
        assert!(matches!(
            merge_al25(&mut u, &a0, &b0, &a1, &b1, MergeLimits { cap: 64, depth: 3 }),
            Err(Error::HypothesisViolated(ref m)) if m.contains("E")
        ));
    }

    #[test]
    fn family_of_three_singletons() {
        let mut u = FreeUniverse::new(PartialSts::discrete(["a0", "a1", "a2", "b0", "b1", "b2"]).unwrap());
        let pairs: Vec<(Vec<Term>, Vec<Term>)> = (0..3)
            .map(|i| (terms(&u, &[&format!("a{i}")]), terms(&u, &[&format!("b{i}")])))
            .collect();
        let m = merge_family(&mut u, &pairs, MergeLimits::default()).unwrap();
        assert_eq!(m.fresh_u, vec![1, 1, 1]);
        let one = merge_family(&mut u, &pairs[..1], MergeLimits::default()).unwrap();
        assert_eq!(one.a, pairs[0].0);
    }

    #[test]
    fn al3_hypotheses() {
        let mut u = FreeUniverse::new(twin_fano());
        let e = terms(&u, &["1"]);
        let a0 = terms(&u, &["4"]);
        let a1 = terms(&u, &["4'"]);
        let r = check_al3(&mut u, &a0, &e, &a1, &e, &e, MergeLimits::default()).unwrap();
        assert!(r.hypotheses && r.merge.is_some());

        let b = terms(&u, &["1", "2", "3"]);
        let r = check_al3(&mut u, &a0, &b, &a0, &b, &b, MergeLimits::default()).unwrap();
        assert!(r.hypotheses);
        let d = terms(&u, &["1", "4", "5"]);
        let r = check_al3(&mut u, &a0, &b, &a0, &b, &d, MergeLimits::default()).unwrap();
        assert!(!r.hypotheses);
    }

    #[test]
    fn independence_examples() {
        let mut u = FreeUniverse::new(PartialSts::discrete(["a", "b"]).unwrap());
        let [a, b] = terms(&u, &["a", "b"])[..] else { unreachable!() };
        let r = indep(&mut u, &[a], &[b], &[], 3);
        assert_eq!(r.verdict, IndepVerdict::Independent);
        assert!(r.exhausted);

        let mut u = FreeUniverse::new(PartialSts::build(&["a", "b", "c"], &[["a", "b", "c"]]).unwrap());
        let [a, b, c] = terms(&u, &["a", "b", "c"])[..] else { unreachable!() };
        assert!(matches!(indep(&mut u, &[a], &[b, c], &[], 3).verdict, IndepVerdict::Dependent(_)));

        let base = PartialSts::build(&["a", "b", "d", "e", "p"], &[["a", "d", "p"], ["b", "e", "p"]]).unwrap();
        let mut u = FreeUniverse::new(base);
        let [a, b, d, e] = terms(&u, &["a", "b", "d", "e"])[..] else { unreachable!() };
        let r = indep(&mut u, &[a, b], &[d, e], &[], 3);
        assert!(matches!(r.verdict, IndepVerdict::Dependent(ref w) if w.starts_with("p =")), "{r:?}");
        assert_eq!(indep(&mut u, &[d, e], &[a, b], &[], 3).verdict, r.verdict.clone());
    }

    #[test]
    fn indep_sees_blocks_between_levels() {
        // v3 = v0 * v5 and v4 = v1 * v5 are new, but {v2, v3, v4} is a block.
        let base = PartialSts::build(
            &["v0", "v1", "v2", "v3", "v4", "v5"],
            &[["v0", "v1", "v2"], ["v0", "v3", "v5"], ["v1", "v4", "v5"], ["v2", "v3", "v4"]],
        )
        .unwrap();
        let mut u = FreeUniverse::new(base);
        let [v1, v2, v5] = terms(&u, &["v1", "v2", "v5"])[..] else { unreachable!() };
        let r = indep(&mut u, &[v1], &[v5], &[v2], 3);
        assert!(matches!(r.verdict, IndepVerdict::Dependent(_)), "{r:?}");
    }

    #[test]
    fn full_existence() {
        let mut u = FreeUniverse::new(PartialSts::discrete(["a"]).unwrap());
        let a = u.leaf("a").unwrap();
        let w = full_existence_witness(&mut u, &[a], &[a], &[], 3, 4096).unwrap();
        assert_ne!(w.a, w.b);
        assert_eq!(w.report.verdict, IndepVerdict::Independent);

        let mut u = FreeUniverse::new(PartialSts::build(&["a", "b", "c"], &[["a", "b", "c"]]).unwrap());
        let [a, b, c] = terms(&u, &["a", "b", "c"])[..] else { unreachable!() };
        let w = full_existence_witness(&mut u, &[a, b], &[c], &[], 3, 4096).unwrap();
        assert_eq!(w.a.len(), 3);
        assert!(w.a.iter().all(|x| !w.b.contains(x)));
        assert_eq!(w.report.verdict, IndepVerdict::Independent);

        let w = full_existence_witness(&mut u, &[a], &[b], &[a], 3, 4096).unwrap();
        assert_eq!(w.a, w.c);
    }
}
