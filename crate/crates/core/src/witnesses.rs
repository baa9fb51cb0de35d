//! Explicit witness systems: the TP2 array for `x = y1 * (y2 * (y3 * x))`,
//! the three-generated chain embedding a prescribed family of finite systems,
//! and subsystem-free systems found by search.

use std::collections::{BTreeMap, HashMap};
use std::time::{Duration, Instant};

use crate::budget::Budget;
use crate::canon::canonical_form;
use crate::completion::{complete_at_order, is_admissible, CompletionOptions};
use crate::embed::find_embedding;
use crate::error::{Error, Result};
use crate::free::{FreeUniverse, RawTerm, Term};
use crate::seed;
use crate::system::{PartialSts, PointId};

/// The TP2 array with rows `0..rows`, columns `0..cols` and one `d_f` per
/// function `f: rows -> cols`.
#[derive(Clone, Debug)]
pub struct Tp2Array {
    pub rows: usize,
    pub cols: usize,
    /// All functions, as value lists, in lexicographic order.
    pub functions: Vec<Vec<usize>>,
    pub system: PartialSts,
    pub labels: Tp2Labels,
}

/// Point names of each family; starred points are indexed by (row, function).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Tp2Labels {
    pub a: Vec<String>,
    pub b: Vec<String>,
    pub c: Vec<Vec<String>>,
    pub d: Vec<String>,
    pub a_star: Vec<Vec<String>>,
    pub b_star: Vec<Vec<String>>,
}

impl Tp2Labels {
    /// Family name to point names, for the label sidecar.
    pub fn families(&self) -> BTreeMap<String, Vec<String>> {
        let mut out = BTreeMap::new();
        out.insert("a".to_string(), self.a.clone());
        out.insert("b".to_string(), self.b.clone());
        out.insert("c".to_string(), self.c.concat());
        out.insert("d".to_string(), self.d.clone());
        out.insert("a*".to_string(), self.a_star.concat());
        out.insert("b*".to_string(), self.b_star.concat());
        out
    }
}

fn all_functions(rows: usize, cols: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for _ in 0..rows {
        out = out
            .into_iter()
            .flat_map(|f| {
                (0..cols).map(move |j| {
                    let mut g = f.clone();
                    g.push(j);
                    g
                })
            })
            .collect();
    }
    out
}

pub fn tp2_array(rows: usize, cols: usize) -> Result<Tp2Array> {
    if rows == 0 || cols == 0 {
        return Err(Error::Format("the array needs at least one row and one column".into()));
    }
    let functions = all_functions(rows, cols);
    let fname = |f: &[usize]| f.iter().map(|j| j.to_string()).collect::<Vec<_>>().join("-");
    let labels = Tp2Labels {
        a: (0..rows).map(|i| format!("a{i}")).collect(),
        b: (0..rows).map(|i| format!("b{i}")).collect(),
        c: (0..rows)
            .map(|i| (0..cols).map(|j| format!("c{i}_{j}")).collect())
            .collect(),
        d: functions.iter().map(|f| format!("d{}", fname(f))).collect(),
        a_star: (0..rows)
            .map(|i| functions.iter().map(|f| format!("a*{i}_{}", fname(f))).collect())
            .collect(),
        b_star: (0..rows)
            .map(|i| functions.iter().map(|f| format!("b*{i}_{}", fname(f))).collect())
            .collect(),
    };
    let system = tp2_system(&labels, &functions)?;
    Ok(Tp2Array {
        rows,
        cols,
        functions,
        system,
        labels,
    })
}

fn tp2_blocks(labels: &Tp2Labels, functions: &[Vec<usize>], i: usize, fi: usize) -> [[String; 3]; 3] {
    let f = &functions[fi];
    let (a, b, c, d) = (
        &labels.a[i],
        &labels.b[i],
        &labels.c[i][f[i]],
        &labels.d[fi],
    );
    let (sa, sb) = (&labels.a_star[i][fi], &labels.b_star[i][fi]);
    [
        [d.clone(), c.clone(), sb.clone()],
        [sb.clone(), b.clone(), sa.clone()],
        [d.clone(), a.clone(), sa.clone()],
    ]
}

fn tp2_system(labels: &Tp2Labels, functions: &[Vec<usize>]) -> Result<PartialSts> {
    let mut points: Vec<String> = Vec::new();
    points.extend(labels.a.iter().cloned());
    points.extend(labels.b.iter().cloned());
    points.extend(labels.c.concat());
    points.extend(labels.d.iter().cloned());
    points.extend(labels.a_star.concat());
    points.extend(labels.b_star.concat());
    let mut blocks = Vec::new();
    for i in 0..labels.a.len() {
        for fi in 0..functions.len() {
            blocks.extend(tp2_blocks(labels, functions, i, fi).into_iter().map(Vec::from));
        }
    }
    PartialSts::from_raw(points, blocks)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Tp2Report {
    /// (row, function) pairs whose path equation holds.
    pub paths_checked: usize,
    /// One cancellation derivation per row, ending in `c_ij = c_ik`.
    pub derivations: Vec<Vec<String>>,
    /// Rank up to which no common solution of two formulas in a row exists.
    pub brute_force_depth: usize,
    pub candidates_checked: usize,
    /// Partial systems checked while rebuilding the array from its pieces.
    pub unions_checked: usize,
}

fn path_term(a: &str, b: &str, c: &str, x: RawTerm) -> RawTerm {
    RawTerm::node(
        RawTerm::leaf(a),
        RawTerm::node(RawTerm::leaf(b), RawTerm::node(RawTerm::leaf(c), x)),
    )
}

/// Strips common factors from both sides of `lhs = rhs` using
/// `p * q = p * r => q = r` and commutativity, recording each equation.
pub fn cancel(lhs: &RawTerm, rhs: &RawTerm) -> Vec<String> {
    let mut steps = vec![format!("{lhs} = {rhs}")];
    let (mut l, mut r) = (lhs.clone(), rhs.clone());
    loop {
        let next = match (&l, &r) {
            (RawTerm::Node(p, q), RawTerm::Node(s, t)) => {
                if p == s {
                    Some(((**q).clone(), (**t).clone()))
                } else if p == t {
                    Some(((**q).clone(), (**s).clone()))
                } else if q == s {
                    Some(((**p).clone(), (**t).clone()))
                } else if q == t {
                    Some(((**p).clone(), (**s).clone()))
                } else {
                    None
                }
            }
            _ => None,
        };
        match next {
            Some((a, b)) => {
                steps.push(format!("{a} = {b}"));
                (l, r) = (a, b);
            }
            None => return steps,
        }
    }
}

/// Checks path satisfaction by normalization, 2-inconsistency of each row by
/// cancellation and by search over terms of rank at most `depth`, and that
/// the array is the union of its row and cell systems.
pub fn verify_tp2(array: &Tp2Array, depth: usize) -> Result<Tp2Report> {
    let labels = &array.labels;
    let fail = |what: &str| Error::VerificationFailed(what.to_string());

    // Validity: distinct labels, and the array rebuilt from cells and rows.
    let mut all: Vec<&String> = labels
        .a
        .iter()
        .chain(&labels.b)
        .chain(labels.c.iter().flatten())
        .chain(&labels.d)
        .chain(labels.a_star.iter().flatten())
        .chain(labels.b_star.iter().flatten())
        .collect();
    let n = all.len();
    all.sort();
    all.dedup();
    if all.len() != n {
        return Err(fail("validity: labels are not distinct"));
    }
    let mut unions_checked = 0;
    let mut rows = Vec::new();
    for i in 0..array.rows {
        let mut cells = Vec::new();
        for j in 0..array.cols {
            let mut blocks = Vec::new();
            for (fi, f) in array.functions.iter().enumerate() {
                if f[i] == j {
                    blocks.extend(tp2_blocks(labels, &array.functions, i, fi).into_iter().map(Vec::from));
                }
            }
            let mut points: Vec<String> = blocks.iter().flatten().cloned().collect();
            points.extend([labels.a[i].clone(), labels.b[i].clone(), labels.c[i][j].clone()]);
            points.sort();
            points.dedup();
            let cell = PartialSts::from_raw(points, blocks).map_err(|_| fail("validity: cell system"))?;
            unions_checked += 1;
            cells.push(cell);
        }
        let row = PartialSts::family_union(&cells).map_err(|_| fail("validity: row union"))?;
        unions_checked += 1;
        rows.push(row);
    }
    let whole = PartialSts::family_union(&rows).map_err(|_| fail("validity: array union"))?;
    unions_checked += 1;
    if whole != array.system {
        return Err(fail("validity: the array differs from the union of its rows"));
    }

    // Paths: a_i * (b_i * (c_{i f(i)} * d_f)) = d_f.
    let mut u = FreeUniverse::new(array.system.clone());
    let mut paths_checked = 0;
    for (fi, f) in array.functions.iter().enumerate() {
        for i in 0..array.rows {
            let d = &labels.d[fi];
            let t = path_term(&labels.a[i], &labels.b[i], &labels.c[i][f[i]], RawTerm::leaf(d.clone()));
            let lhs = u.normalize(&t).map_err(|_| fail("paths: unknown point"))?;
            if Some(lhs) != u.leaf(d) {
                return Err(fail("paths: a path equation fails"));
            }
            paths_checked += 1;
        }
    }

    // Rows: two formulas of a row force c_ij = c_ik.
    let mut derivations = Vec::new();
    for i in 0..array.rows {
        for j in 0..array.cols {
            for k in j + 1..array.cols {
                let x = RawTerm::leaf("x");
                let (a, b) = (&labels.a[i], &labels.b[i]);
                let steps = cancel(
                    &path_term(a, b, &labels.c[i][j], x.clone()),
                    &path_term(a, b, &labels.c[i][k], x),
                );
                if steps.last() != Some(&format!("{} = {}", labels.c[i][j], labels.c[i][k])) {
                    return Err(fail("rows: cancellation does not reach the parameters"));
                }
                if u.leaf(&labels.c[i][j]) == u.leaf(&labels.c[i][k]) {
                    return Err(fail("rows: parameters coincide"));
                }
                if k == j + 1 && j == 0 {
                    derivations.push(steps);
                }
            }
        }
    }
    let leaves = u.base_leaves();
    let candidates: Vec<Term> = u.rank_layers(&leaves, depth).into_iter().flatten().collect();
    let leaf = |name: &str| u.leaf(name).expect("label");
    let mut rows_params: Vec<(Term, Term, Vec<Term>)> = Vec::new();
    for i in 0..array.rows {
        rows_params.push((
            leaf(&labels.a[i]),
            leaf(&labels.b[i]),
            labels.c[i].iter().map(|c| leaf(c)).collect(),
        ));
    }
    for &x in &candidates {
        for (a, b, cs) in &rows_params {
            let mut hits = 0;
            for &c in cs {
                let y = u.mul(c, x);
                let y = u.mul(*b, y);
                if u.mul(*a, y) == x {
                    hits += 1;
                }
            }
            if hits > 1 {
                return Err(fail("rows: a term satisfies two formulas of one row"));
            }
        }
    }
    Ok(Tp2Report {
        paths_checked,
        derivations,
        brute_force_depth: depth,
        candidates_checked: candidates.len(),
        unions_checked,
    })
}

/// Stage `i` of the chain: saturation rounds, the generator count `k`, the
/// product-free points used, and the linking blocks `{b_j, b_{k+j}, a_j}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sma1Stage {
    pub member: usize,
    pub k: usize,
    pub iterations: usize,
    pub free_points: Vec<String>,
    pub linking: Vec<[String; 3]>,
}

#[derive(Clone, Debug)]
pub struct Sma1Chain {
    pub stages: Vec<PartialSts>,
    pub logs: Vec<Sma1Stage>,
    /// The renamed family members, in attachment order.
    pub attached: Vec<PartialSts>,
}

/// A smallest generating set, preferring lexicographically first point ids.
pub fn minimal_generators(s: &PartialSts) -> Vec<PointId> {
    let n = s.len();
    for k in 0..=n {
        let mut idx: Vec<usize> = (0..k).collect();
        loop {
            let seeds: Vec<PointId> = idx.iter().map(|&i| PointId(i as u32)).collect();
            if s.close(&seeds).len() == n {
                return seeds;
            }
            let mut pos = k;
            loop {
                if pos == 0 {
                    break;
                }
                pos -= 1;
                if idx[pos] < n - k + pos {
                    idx[pos] += 1;
                    for q in pos + 1..k {
                        idx[q] = idx[q - 1] + 1;
                    }
                    break;
                }
                if pos == 0 {
                    idx.clear();
                }
            }
            if idx.len() != k || k == 0 {
                break;
            }
        }
    }
    s.points().collect()
}

/// One round of saturation: a fresh product `s{stage}_{r}_{m}` for every
/// undefined pair. Returns the new system and the fresh names.
fn saturate(s: &PartialSts, stage: usize, round: usize) -> Result<(PartialSts, Vec<String>)> {
    let mut fresh = Vec::new();
    let mut blocks = Vec::new();
    let pts: Vec<PointId> = s.points().collect();
    for (i, &a) in pts.iter().enumerate() {
        for &b in &pts[i + 1..] {
            if s.product(a, b).is_none() {
                let name = format!("s{stage}_{round}_{}", fresh.len());
                blocks.push([s.name(a).to_string(), s.name(b).to_string(), name.clone()]);
                fresh.push(name);
            }
        }
    }
    Ok((s.extend(&fresh, &blocks)?, fresh))
}

/// The chain `B_0 ⊆ ... ⊆ B_t`, attaching member `i mod |family|` at stage `i`.
pub fn sma1_build(family: &[PartialSts], prefix: usize, generators: Option<&[Vec<String>]>) -> Result<Sma1Chain> {
    if family.is_empty() || family.iter().all(|m| m.len() < 3) {
        return Err(Error::FamilyMemberTooSmall(family.iter().map(|m| m.len()).max().unwrap_or(0)));
    }
    for m in family {
        if !m.is_total() {
            return Err(Error::NotTotal);
        }
    }
    let mut b = PartialSts::discrete(["o0", "o1", "o2"])?;
    let mut stages = vec![b.clone()];
    let mut logs = Vec::new();
    let mut attached = Vec::new();
    for stage in 0..prefix {
        let member = stage % family.len();
        let a = &family[member];
        let gens: Vec<PointId> = match generators {
            Some(g) => {
                let ids = a.require_all(&g[member])?;
                if a.close(&ids).len() != a.len() {
                    return Err(Error::Format(format!("the generators of member {member} do not generate it")));
                }
                ids
            }
            None => minimal_generators(a),
        };
        let k = gens.len();
        let mut cur = b.clone();
        let mut iterations = 0;
        let mut fresh: Vec<String> = Vec::new();
        while fresh.len() < 2 * k + 3 {
            let (next, new) = saturate(&cur, stage, iterations)?;
            if new.is_empty() {
                return Err(Error::VerificationFailed("saturation stalled".into()));
            }
            cur = next;
            fresh = new;
            iterations += 1;
        }
        fresh.truncate(2 * k + 3);
        let tag = format!("A{stage}:");
        let renamed = a.rename(|n| format!("{tag}{n}"))?;
        let gen_names: Vec<String> = gens.iter().map(|&g| format!("{tag}{}", a.name(g))).collect();
        let linking: Vec<[String; 3]> = (0..k)
            .map(|j| [fresh[j].clone(), fresh[k + j].clone(), gen_names[j].clone()])
            .collect();
        let mut next = cur.union(&renamed)?;
        next = next.extend(&[], &linking)?;
        logs.push(Sma1Stage {
            member,
            k,
            iterations,
            free_points: fresh,
            linking,
        });
        attached.push(renamed);
        b = next;
        stages.push(b.clone());
    }
    Ok(Sma1Chain { stages, logs, attached })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sma1Audit {
    /// Sub-STSs with more than 3 points found at each stage `1..=t`.
    pub subsystems: Vec<usize>,
}

fn audit_fail(property: u8, witness: impl Into<String>) -> Error {
    Error::AuditFailed {
        property,
        witness: witness.into(),
    }
}

/// Re-derives, at every stage: the previous stage and the attached member
/// are substructures (property 3), new points are iterated products of the
/// previous stage (property 4), every sub-STS with more than 3 points embeds
/// in an attached member (property 5), and `B_0` generates the stage.
pub fn sma1_audit(chain: &Sma1Chain) -> Result<Sma1Audit> {
    let mut subsystems = Vec::new();
    for (i, pair) in chain.stages.windows(2).enumerate() {
        let (prev, next) = (&pair[0], &pair[1]);
        if !next.has_substructure(prev) {
            return Err(audit_fail(3, format!("B{i} is not a substructure of B{}", i + 1)));
        }
        let a = &chain.attached[i];
        if !next.has_substructure(a) {
            return Err(audit_fail(3, format!("A{i} is not a substructure of B{}", i + 1)));
        }
        let prev_ids = next.require_all(prev.names())?;
        if next.close(&prev_ids).len() != next.len() {
            return Err(audit_fail(4, format!("B{} is not generated by B{i}", i + 1)));
        }
        let b0 = next.require_all(&["o0", "o1", "o2"])?;
        if next.close(&b0).len() != next.len() {
            return Err(audit_fail(4, format!("B0 does not generate B{}", i + 1)));
        }
        let subs = next.sub_systems(4, next.len());
        for sub in &subs {
            let s = next.restrict(sub);
            let mut ok = false;
            for m in &chain.attached[..=i] {
                if find_embedding(&s, m, &[], true, &mut Budget::default())?.is_some() {
                    ok = true;
                    break;
                }
            }
            if !ok {
                let names: Vec<&str> = sub.iter().map(|&p| next.name(p)).collect();
                return Err(audit_fail(5, names.join(",")));
            }
        }
        subsystems.push(subs.len());
    }
    Ok(Sma1Audit { subsystems })
}

/// An STS of order `n` with no sub-STS of order strictly between 3 and `n`,
/// found by randomized completion and certified by an exhaustive scan.
pub fn doyen_search(n: usize, budget: Duration, seed_value: u64) -> Result<PartialSts> {
    if !is_admissible(n) || n < 3 {
        return Err(Error::NotAdmissible(n));
    }
    let start = Instant::now();
    let deadline = start + budget;
    let points = PartialSts::discrete((0..n).map(|i| format!("p{i}")))?;
    for restart in 0.. {
        if Instant::now() >= deadline {
            break;
        }
        let mut opts = CompletionOptions::new(n, seed::derive_indexed(seed_value, "doyen", restart));
        opts.substructure = false;
        opts.deadline = Some(deadline);
        let s = match complete_at_order(&points, n, &opts) {
            Ok(Some(s)) => s,
            Ok(None) => return Err(Error::VerificationFailed(format!("no STS of order {n}"))),
            Err(Error::BudgetExceeded) => continue,
            Err(Error::Timeout) => break,
            Err(e) => return Err(e),
        };
        if is_subsystem_free(&s) {
            return Ok(s);
        }
    }
    Err(Error::Timeout)
}

/// Whether the total system has no sub-STS of order strictly between 3 and its own.
pub fn is_subsystem_free(s: &PartialSts) -> bool {
    s.is_total() && s.len() > 4 && s.sub_systems(4, s.len() - 1).is_empty() || s.len() <= 4 && s.is_total()
}

/// Final chain stages over Doyen systems of the given orders, for two order
/// lists; `true` when the stages are not isomorphic.
pub fn nonisomorphic_prefixes(
    x: &[usize],
    y: &[usize],
    prefix: usize,
    budget: Duration,
    seed_value: u64,
) -> Result<bool> {
    let mut cache: HashMap<usize, PartialSts> = HashMap::new();
    let mut build = |orders: &[usize]| -> Result<PartialSts> {
        let mut family = Vec::new();
        for &n in orders {
            if let std::collections::hash_map::Entry::Vacant(e) = cache.entry(n) {
                e.insert(doyen_search(n, budget, seed_value)?);
            }
            family.push(cache[&n].clone());
        }
        let chain = sma1_build(&family, prefix, None)?;
        Ok(chain.stages.last().expect("B0").clone())
    };
    let (bx, by) = (build(x)?, build(y)?);
    if invariants(&bx) != invariants(&by) {
        return Ok(true);
    }
    Ok(canonical_form(&bx)? != canonical_form(&by)?)
}

/// Point count, block count and sorted degree sequence.
fn invariants(s: &PartialSts) -> (usize, usize, Vec<usize>) {
    let mut deg = vec![0usize; s.len()];
    for b in s.blocks() {
        for p in b {
            deg[p.index()] += 1;
        }
    }
    deg.sort_unstable();
    (s.len(), s.blocks().len(), deg)
}
