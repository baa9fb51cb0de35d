//! Rank bounds, algebraic closure, quantifier-free satisfiability over the
//! free completion, and the infinite-orbit test.

use std::collections::{HashMap, HashSet};
use std::fmt;

use crate::error::{Error, Result};
use crate::free::{FreeUniverse, Generated, Parser, RawTerm, Term};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Relation {
    Eq,
    Neq,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Literal {
    pub lhs: RawTerm,
    pub rhs: RawTerm,
    pub relation: Relation,
}

impl Literal {
    pub fn eq(lhs: RawTerm, rhs: RawTerm) -> Self {
        Self {
            lhs,
            rhs,
            relation: Relation::Eq,
        }
    }

    pub fn neq(lhs: RawTerm, rhs: RawTerm) -> Self {
        Self {
            lhs,
            rhs,
            relation: Relation::Neq,
        }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let op = match self.relation {
            Relation::Eq => "=",
            Relation::Neq => "!=",
        };
        write!(f, "{} {op} {}", self.lhs, self.rhs)
    }
}

/// A conjunction of term equalities and inequalities. Leaves that are not
/// declared variables name constants of the ambient universe.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Formula {
    pub variables: Vec<String>,
    pub literals: Vec<Literal>,
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.literals.is_empty() {
            return f.write_str("true");
        }
        let parts: Vec<String> = self.literals.iter().map(|l| l.to_string()).collect();
        f.write_str(&parts.join(" & "))
    }
}

impl Formula {
    /// Parses `lit ("&" lit)*` with `lit := term "=" term | term "!=" term`.
    /// Identifiers for which `is_constant` fails become variables, in order of
    /// first occurrence. The empty string and `true` are the empty conjunction.
    pub fn parse(text: &str, is_constant: &dyn Fn(&str) -> bool) -> Result<Formula> {
        let trimmed = text.trim();
        if trimmed.is_empty() || trimmed == "true" {
            return Ok(Formula::default());
        }
        let mut p = Parser::new(text);
        let mut literals = Vec::new();
        loop {
            let lhs = p.term()?;
            let relation = match p.peek() {
                Some('=') => {
                    p.pos += 1;
                    Relation::Eq
                }
                Some('!') => {
                    p.pos += 1;
                    p.expect('=')?;
                    Relation::Neq
                }
                _ => return Err(p.error("expected `=` or `!=`")),
            };
            let rhs = p.term()?;
            literals.push(Literal { lhs, rhs, relation });
            match p.peek() {
                Some('&') => p.pos += 1,
                None => break,
                Some(_) => return Err(p.error("expected `&` or end of input")),
            }
        }
        let mut variables = Vec::new();
        let mut seen = HashSet::new();
        for l in &literals {
            let mut leaves = Vec::new();
            l.lhs.leaves(&mut leaves);
            l.rhs.leaves(&mut leaves);
            for name in leaves {
                if !is_constant(&name) && seen.insert(name.clone()) {
                    variables.push(name);
                }
            }
        }
        Ok(Formula {
            variables,
            literals,
        })
    }

    pub fn parse_in(text: &str, universe: &FreeUniverse) -> Result<Formula> {
        Self::parse(text, &|n| universe.leaf(n).is_some())
    }

    pub fn max_rank(&self) -> usize {
        self.literals
            .iter()
            .map(|l| l.lhs.rank().max(l.rhs.rank()))
            .max()
            .unwrap_or(1)
    }

    /// Constant leaves in order of first occurrence.
    pub fn constants(&self) -> Vec<String> {
        let vars: HashSet<&str> = self.variables.iter().map(|s| s.as_str()).collect();
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for l in &self.literals {
            let mut leaves = Vec::new();
            l.lhs.leaves(&mut leaves);
            l.rhs.leaves(&mut leaves);
            for n in leaves {
                if !vars.contains(n.as_str()) && seen.insert(n.clone()) {
                    out.push(n);
                }
            }
        }
        out
    }

    /// Truth value under `assignment` in `universe`.
    pub fn evaluate(
        &self,
        universe: &mut FreeUniverse,
        assignment: &HashMap<String, Term>,
    ) -> Result<bool> {
        for l in &self.literals {
            let a = eval(universe, &l.lhs, assignment)?;
            let b = eval(universe, &l.rhs, assignment)?;
            let holds = match l.relation {
                Relation::Eq => a == b,
                Relation::Neq => a != b,
            };
            if !holds {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// Normal form of `t` with variables read from `assignment`.
pub fn eval(
    universe: &mut FreeUniverse,
    t: &RawTerm,
    assignment: &HashMap<String, Term>,
) -> Result<Term> {
    match t {
        RawTerm::Leaf(n) => match assignment.get(n) {
            Some(&v) => Ok(v),
            None => universe.require_leaf(n),
        },
        RawTerm::Node(l, r) => {
            let l = eval(universe, l, assignment)?;
            let r = eval(universe, r, assignment)?;
            Ok(universe.mul(l, r))
        }
    }
}

/// Number of syntactic terms of rank at most `max_rank` over `num_vars`
/// variables: `T(1) = n`, `T(r) = sum_{i<r} T(i) T(r - i)`.
pub fn count_terms(num_vars: u64, max_rank: usize) -> Result<u64> {
    let overflow = || Error::Overflow("count_terms");
    let mut t: Vec<u64> = vec![0, num_vars];
    let mut total = if max_rank >= 1 { num_vars } else { 0 };
    for r in 2..=max_rank {
        let mut s: u64 = 0;
        for i in 1..r {
            let p = t[i].checked_mul(t[r - i]).ok_or_else(overflow)?;
            s = s.checked_add(p).ok_or_else(overflow)?;
        }
        t.push(s);
        total = total.checked_add(s).ok_or_else(overflow)?;
    }
    Ok(total)
}

/// `k0` is one more than the number of terms `t(x, x_1..x_n)` of rank at most
/// `m`; the bound is `2^k0 * m`.
pub fn rank_bound_k(n: u64, m: usize) -> Result<u64> {
    let k0 = count_terms(n + 1, m)?
        .checked_add(1)
        .ok_or(Error::Overflow("rank_bound_k"))?;
    if k0 >= 64 {
        return Err(Error::Overflow("rank_bound_k"));
    }
    (1u64 << k0)
        .checked_mul(m as u64)
        .ok_or(Error::Overflow("rank_bound_k"))
}

/// `<A>_k`, failing once more than `cap` elements have appeared.
pub fn closure_k_capped(
    universe: &mut FreeUniverse,
    gens: &[Term],
    k: u64,
    cap: usize,
) -> Result<Vec<Term>> {
    let mut seen: HashSet<Term> = HashSet::new();
    let mut layers: Vec<Vec<Term>> = Vec::new();
    let mut first = Vec::new();
    for &g in gens {
        if seen.insert(g) {
            first.push(g);
        }
    }
    if k == 0 {
        return Ok(Vec::new());
    }
    let mut top = usize::from(!first.is_empty());
    layers.push(first);
    let mut r = 2usize;
    // Once layers top+1 ..= 2*top are all empty every later layer is too.
    while (r as u64) <= k && r <= 2 * top {
        let mut layer = Vec::new();
        for i in 1..=r / 2 {
            let j = r - i;
            let (li, lj) = (layers[i - 1].clone(), layers[j - 1].clone());
            for (xi, &x) in li.iter().enumerate() {
                let ys: &[Term] = if i == j { &lj[xi + 1..] } else { &lj };
                for &y in ys {
                    let z = universe.mul(x, y);
                    if seen.insert(z) {
                        layer.push(z);
                        if seen.len() > cap {
                            return Err(Error::SizeBudgetExceeded(cap));
                        }
                    }
                }
            }
        }
        if !layer.is_empty() {
            top = r;
        }
        layers.push(layer);
        r += 1;
    }
    let mut out: Vec<Term> = layers.into_iter().flatten().collect();
    universe.sort_terms(&mut out);
    Ok(out)
}

/// The formula `x != t` over all terms `t` of rank at most `k` in the
/// parameters, one literal per distinct normal form.
pub fn psi_k(
    target: &str,
    params: &[Term],
    k: u64,
    universe: &mut FreeUniverse,
    cap: usize,
) -> Result<Formula> {
    let elems = closure_k_capped(universe, params, k, cap)?;
    Ok(Formula {
        variables: vec![target.to_string()],
        literals: elems
            .into_iter()
            .map(|t| Literal::neq(RawTerm::leaf(target), universe.to_raw(t)))
            .collect(),
    })
}

/// Algebraic closure: the generated substructure, explored to rank `budget`.
pub fn acl(universe: &mut FreeUniverse, gens: &[Term], budget: usize) -> Generated {
    universe.generated(gens, budget)
}

#[derive(Clone, Debug)]
pub struct Witness {
    /// The universe the values live in; it may have gained fresh generators.
    pub universe: FreeUniverse,
    pub values: Vec<(String, Term)>,
}

impl Witness {
    pub fn assignment(&self) -> HashMap<String, Term> {
        self.values.iter().cloned().collect()
    }

    pub fn render(&self) -> Vec<(String, String)> {
        self.values
            .iter()
            .map(|(v, t)| (v.clone(), self.universe.display(*t)))
            .collect()
    }
}

#[derive(Clone, Debug)]
pub enum Satisfiability {
    Satisfiable(Witness),
    Unsatisfiable,
    Unknown,
}

/// Equalities solved for variables, with the literals left over.
#[derive(Clone, Debug)]
struct Solved {
    forced: Vec<(String, RawTerm)>,
    rest: Vec<Literal>,
    free_vars: Vec<String>,
}

fn occurrences(t: &RawTerm, var: &str) -> usize {
    match t {
        RawTerm::Leaf(n) => usize::from(n == var),
        RawTerm::Node(l, r) => occurrences(l, var) + occurrences(r, var),
    }
}

/// Solves `t = s` for the single occurrence of `var` in `t`, peeling one
/// product at a time: `p * q = s` with `var` in `q` gives `q = p * s`.
fn isolate(mut t: RawTerm, mut s: RawTerm, var: &str) -> RawTerm {
    loop {
        match t {
            RawTerm::Leaf(_) => return s,
            RawTerm::Node(l, r) => {
                if occurrences(&l, var) == 1 {
                    s = RawTerm::node(*r, s);
                    t = *l;
                } else {
                    s = RawTerm::node(*l, s);
                    t = *r;
                }
            }
        }
    }
}

fn substitute(t: &RawTerm, var: &str, by: &RawTerm) -> RawTerm {
    t.substitute(&|n| (n == var).then(|| by.clone()))
}

/// Variables are temporarily fresh generators so that both sides can be put
/// in generic normal form; then the rules `p*q = p*r => q = r` and
/// `p*q = p => q = p` (valid in every quasigroup) are applied.
fn simplify(
    universe: &mut FreeUniverse,
    literal: &Literal,
    generic: &HashMap<String, Term>,
    back: &HashMap<Term, String>,
) -> Result<Literal> {
    let a = eval(universe, &literal.lhs, generic)?;
    let b = eval(universe, &literal.rhs, generic)?;
    let (mut a, mut b) = (a, b);
    if literal.relation == Relation::Eq {
        loop {
            match (universe.children(a), universe.children(b)) {
                (Some((p, q)), Some((r, s))) => {
                    let next = if p == r {
                        (q, s)
                    } else if p == s {
                        (q, r)
                    } else if q == r {
                        (p, s)
                    } else if q == s {
                        (p, r)
                    } else {
                        break;
                    };
                    (a, b) = next;
                }
                (Some((p, q)), None) if p == b || q == b => {
                    a = if p == b { q } else { p };
                }
                (None, Some((p, q))) if p == a || q == a => {
                    b = if p == a { q } else { p };
                }
                _ => break,
            }
        }
    }
    let to_raw = |u: &FreeUniverse, t: Term| {
        u.to_raw(t).substitute(&|n| {
            u.leaf(n)
                .and_then(|g| back.get(&g))
                .map(|v| RawTerm::leaf(v.clone()))
        })
    };
    Ok(Literal {
        lhs: to_raw(universe, a),
        rhs: to_raw(universe, b),
        relation: literal.relation,
    })
}

fn solve(universe: &mut FreeUniverse, phi: &Formula) -> Result<Solved> {
    let mut u = universe.clone();
    let mut generic = HashMap::new();
    let mut back = HashMap::new();
    for v in &phi.variables {
        let g = u.add_generator(&format!("?{v}"));
        generic.insert(v.clone(), g);
        back.insert(g, v.clone());
    }
    let mut forced: Vec<(String, RawTerm)> = Vec::new();
    let mut rest: Vec<Literal> = phi.literals.clone();
    let mut free_vars: Vec<String> = phi.variables.clone();
    loop {
        let mut progress = false;
        let mut i = 0;
        while i < rest.len() {
            if rest[i].relation != Relation::Eq {
                i += 1;
                continue;
            }
            let lit = simplify(&mut u, &rest[i], &generic, &back)?;
            let pick = free_vars.iter().find_map(|v| {
                let (cl, cr) = (occurrences(&lit.lhs, v), occurrences(&lit.rhs, v));
                match (cl, cr) {
                    (1, 0) => Some((v.clone(), lit.lhs.clone(), lit.rhs.clone())),
                    (0, 1) => Some((v.clone(), lit.rhs.clone(), lit.lhs.clone())),
                    _ => None,
                }
            });
            match pick {
                Some((v, t, s)) => {
                    let value = isolate(t, s, &v);
                    rest.remove(i);
                    for l in rest.iter_mut() {
                        l.lhs = substitute(&l.lhs, &v, &value);
                        l.rhs = substitute(&l.rhs, &v, &value);
                    }
                    for (_, e) in forced.iter_mut() {
                        *e = substitute(e, &v, &value);
                    }
                    forced.push((v.clone(), value));
                    free_vars.retain(|w| *w != v);
                    progress = true;
                }
                None => {
                    rest[i] = lit;
                    i += 1;
                }
            }
        }
        if !progress {
            break;
        }
    }
    Ok(Solved {
        forced,
        rest,
        free_vars,
    })
}

/// Bounded search for an assignment satisfying `phi` in the free completion
/// of the universe's base.
///
/// Equalities are first solved symbolically by cancellation. Remaining free
/// variables are tried as fresh generators (the generic point), then over
/// fresh generators, constants and base terms of rank at most `depth`. An
/// answer of `Unsatisfiable` is only given when it is forced: an inequality
/// fails at the generic point (so it fails everywhere), or every variable is
/// forced and a ground literal fails.
pub fn qf_satisfiable(phi: &Formula, universe: &FreeUniverse, depth: usize) -> Result<Satisfiability> {
    let mut scratch = universe.clone();
    let solved = solve(&mut scratch, phi)?;
    let mut u = universe.clone();
    let mut generic: HashMap<String, Term> = HashMap::new();
    for v in &solved.free_vars {
        let g = u.add_generator(v);
        generic.insert(v.clone(), g);
    }
    let residual = Formula {
        variables: solved.free_vars.clone(),
        literals: solved.rest.clone(),
    };
    let mut generic_holds = true;
    for l in &residual.literals {
        let a = eval(&mut u, &l.lhs, &generic)?;
        let b = eval(&mut u, &l.rhs, &generic)?;
        let ground = solved
            .free_vars
            .iter()
            .all(|v| occurrences(&l.lhs, v) + occurrences(&l.rhs, v) == 0);
        match l.relation {
            Relation::Neq if a == b => return Ok(Satisfiability::Unsatisfiable),
            Relation::Eq if a != b && ground => return Ok(Satisfiability::Unsatisfiable),
            Relation::Eq if a != b => generic_holds = false,
            _ => {}
        }
    }
    if generic_holds {
        return Ok(Satisfiability::Satisfiable(finish(u, phi, &solved, &generic)?));
    }
    if solved.free_vars.is_empty() {
        return Ok(Satisfiability::Unsatisfiable);
    }
    let mut pool: Vec<Term> = solved.free_vars.iter().map(|v| generic[v]).collect();
    let mut consts: Vec<Term> = u.base_leaves();
    for c in phi.constants() {
        let t = u.require_leaf(&c)?;
        if !consts.contains(&t) {
            consts.push(t);
        }
    }
    let ground = closure_k_capped(&mut u, &consts, depth.max(1) as u64, 4096).unwrap_or(consts);
    for t in ground {
        if !pool.contains(&t) {
            pool.push(t);
        }
    }
    let vars = solved.free_vars.clone();
    let mut idx = vec![0usize; vars.len()];
    let limit: u64 = 200_000;
    let mut tried = 0u64;
    loop {
        let assignment: HashMap<String, Term> =
            vars.iter().cloned().zip(idx.iter().map(|&i| pool[i])).collect();
        if residual.evaluate(&mut u, &assignment)? {
            return Ok(Satisfiability::Satisfiable(finish(u, phi, &solved, &assignment)?));
        }
        tried += 1;
        if tried >= limit {
            return Ok(Satisfiability::Unknown);
        }
        let mut pos = 0;
        loop {
            if pos == idx.len() {
                return Ok(Satisfiability::Unknown);
            }
            idx[pos] += 1;
            if idx[pos] < pool.len() {
                break;
            }
            idx[pos] = 0;
            pos += 1;
        }
    }
}

fn finish(
    mut u: FreeUniverse,
    phi: &Formula,
    solved: &Solved,
    free: &HashMap<String, Term>,
) -> Result<Witness> {
    let mut assignment = free.clone();
    for (v, e) in &solved.forced {
        let t = eval(&mut u, e, free)?;
        assignment.insert(v.clone(), t);
    }
    if !phi.evaluate(&mut u, &assignment)? {
        return Err(Error::VerificationFailed(format!(
            "witness does not satisfy {phi}"
        )));
    }
    let values = phi
        .variables
        .iter()
        .map(|v| (v.clone(), assignment[v]))
        .collect();
    Ok(Witness {
        universe: u,
        values,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OrbitVerdict {
    Infinite,
    Finite,
    Unknown,
}

#[derive(Clone, Debug)]
pub struct OrbitReport {
    pub verdict: OrbitVerdict,
    /// The rank bound used; `None` when it does not fit in 64 bits.
    pub k: Option<u64>,
    /// False when a caller-supplied `k` replaced the certified bound.
    pub certified: bool,
    pub witness: Option<Witness>,
    /// The forced solution when the equalities pin the variable down.
    pub forced_solution: Option<String>,
}

/// Decides whether `phi(x)` has infinitely many solutions, where `phi` has
/// exactly one variable and its constants are the parameters.
///
/// A solution outside `<params>_k` with `k = rank_bound_k(n, m)` means there
/// are infinitely many. A fresh generator is never in `<params>_k`, so a
/// generic witness certifies `Infinite` for any `k`. When the equalities
/// force the value of `x`, there is at most one solution.
pub fn has_infinite_orbit(
    phi: &Formula,
    universe: &FreeUniverse,
    depth: usize,
    manual_k: Option<u64>,
) -> Result<OrbitReport> {
    if phi.variables.len() != 1 {
        return Err(Error::InvalidFormula(format!(
            "expected one free variable, found {}",
            phi.variables.len()
        )));
    }
    let x = phi.variables[0].clone();
    let params = phi.constants();
    let m = phi.max_rank();
    let (k, certified) = match manual_k {
        Some(k) => (Some(k), false),
        None => (rank_bound_k(params.len() as u64, m).ok(), true),
    };
    let report = |verdict, witness, forced_solution| OrbitReport {
        verdict,
        k,
        certified,
        witness,
        forced_solution,
    };
    let mut scratch = universe.clone();
    let solved = solve(&mut scratch, phi)?;
    let forced = solved.forced.iter().find(|(v, _)| *v == x).map(|(_, e)| e.clone());
    let sat = qf_satisfiable(phi, universe, depth)?;
    if let Some(e) = forced {
        let shown = match &sat {
            Satisfiability::Satisfiable(w) => Some(w.universe.display(w.values[0].1)),
            _ => Some(e.to_string()),
        };
        let witness = match sat {
            Satisfiability::Satisfiable(w) => Some(w),
            _ => None,
        };
        return Ok(report(OrbitVerdict::Finite, witness, shown));
    }
    match sat {
        Satisfiability::Unsatisfiable => Ok(report(OrbitVerdict::Finite, None, None)),
        Satisfiability::Unknown => Ok(report(OrbitVerdict::Unknown, None, None)),
        Satisfiability::Satisfiable(w) => {
            let t = w.values[0].1;
            if w.universe.as_base_point(t).is_none()
                && w.universe.leaf_name(t).is_some()
                && universe.leaf(w.universe.leaf_name(t).unwrap()).is_none()
            {
                return Ok(report(OrbitVerdict::Infinite, Some(w), None));
            }
            let mut u = w.universe.clone();
            let ps: Vec<Term> = params
                .iter()
                .map(|p| u.require_leaf(p))
                .collect::<Result<_>>()?;
            let outside = match k {
                Some(k) if !certified => {
                    let ck = closure_k_capped(&mut u, &ps, k, 1 << 16)?;
                    !ck.contains(&t)
                }
                _ => {
                    let g = u.generated(&ps, 64);
                    g.complete && !g.elements.contains(&t)
                }
            };
            if outside {
                Ok(report(OrbitVerdict::Infinite, Some(w), None))
            } else {
                Ok(report(OrbitVerdict::Unknown, Some(w), None))
            }
        }
    }
}

/// `r` pairwise distinct solutions of a one-variable formula whose generic
/// point is a solution: the generator is replaced by `r` distinct fresh ones.
pub fn distinct_witnesses(phi: &Formula, universe: &FreeUniverse, r: usize) -> Result<Option<Vec<String>>> {
    if phi.variables.len() != 1 {
        return Err(Error::InvalidFormula("expected one free variable".into()));
    }
    let mut u = universe.clone();
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for i in 0..r {
        let g = u.add_generator(&format!("{}#{i}", phi.variables[0]));
        let assignment: HashMap<String, Term> = [(phi.variables[0].clone(), g)].into_iter().collect();
        if !phi.evaluate(&mut u, &assignment)? {
            return Ok(None);
        }
        if !seen.insert(g) {
            return Ok(None);
        }
        out.push(u.display(g));
    }
    Ok(Some(out))
}
