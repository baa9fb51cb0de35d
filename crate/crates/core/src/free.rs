//! The Steiner quasigroup freely generated by a partial STS.
//!
//! Elements are hash-consed normal-form terms. A product `u * v` of normal
//! forms reduces by, in order: `u = v` gives `u`; `v = u * w` (either child
//! order) gives `w`; `u = v * w` gives `w`; two base points with a product in
//! the base give that product; anything else is a new node whose children are
//! sorted by the term order (rank, then structure, leaves by name).
//!
//! The nodes that can be built are exactly the points of the free chain. A
//! node `u * v` has defined products only with `u` and `v` until it is
//! multiplied by something else, which creates a new node, so reduction never
//! needs to look deeper than one level.

use std::cmp::Ordering;
use std::collections::{HashMap, HashSet};
use std::fmt;
use std::hash::Hash;

use crate::error::{Error, Result};
use crate::system::{PartialSts, PointId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Term(u32);

impl Term {
    pub fn id(self) -> u32 {
        self.0
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
enum Node {
    Leaf(u32),
    Pair(Term, Term),
}

/// Syntax tree before normalization.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum RawTerm {
    Leaf(String),
    Node(Box<RawTerm>, Box<RawTerm>),
}

impl RawTerm {
    pub fn leaf(name: impl Into<String>) -> Self {
        RawTerm::Leaf(name.into())
    }

    pub fn node(l: RawTerm, r: RawTerm) -> Self {
        RawTerm::Node(Box::new(l), Box::new(r))
    }

    pub fn rank(&self) -> usize {
        match self {
            RawTerm::Leaf(_) => 1,
            RawTerm::Node(l, r) => l.rank() + r.rank(),
        }
    }

    pub fn leaves(&self, out: &mut Vec<String>) {
        match self {
            RawTerm::Leaf(n) => out.push(n.clone()),
            RawTerm::Node(l, r) => {
                l.leaves(out);
                r.leaves(out);
            }
        }
    }

    /// Replaces leaves by `f(name)` where it returns a term.
    pub fn substitute(&self, f: &dyn Fn(&str) -> Option<RawTerm>) -> RawTerm {
        match self {
            RawTerm::Leaf(n) => f(n).unwrap_or_else(|| self.clone()),
            RawTerm::Node(l, r) => RawTerm::node(l.substitute(f), r.substitute(f)),
        }
    }

    /// Parses `term := IDENT | "(" term "." term ")"`, whitespace ignored.
    pub fn parse(text: &str) -> Result<RawTerm> {
        let mut p = Parser::new(text);
        let t = p.term()?;
        p.skip_ws();
        if p.pos < p.bytes.len() {
            return Err(p.error("trailing input"));
        }
        Ok(t)
    }
}

impl fmt::Display for RawTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RawTerm::Leaf(n) => f.write_str(n),
            RawTerm::Node(l, r) => write!(f, "({l}.{r})"),
        }
    }
}

pub(crate) fn is_ident_char(c: char) -> bool {
    !(c.is_whitespace() || matches!(c, '.' | '(' | ')' | '=' | '!' | '&' | ','))
}

pub(crate) struct Parser<'a> {
    pub(crate) text: &'a str,
    pub(crate) bytes: &'a [u8],
    pub(crate) pos: usize,
}

impl<'a> Parser<'a> {
    pub(crate) fn new(text: &'a str) -> Self {
        Self {
            text,
            bytes: text.as_bytes(),
            pos: 0,
        }
    }

    pub(crate) fn error(&self, message: &str) -> Error {
        Error::Syntax {
            position: self.pos,
            message: message.to_string(),
        }
    }

    pub(crate) fn skip_ws(&mut self) {
        while let Some(c) = self.text[self.pos..].chars().next() {
            if !c.is_whitespace() {
                break;
            }
            self.pos += c.len_utf8();
        }
    }

    pub(crate) fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.text[self.pos..].chars().next()
    }

    pub(crate) fn expect(&mut self, want: char) -> Result<()> {
        match self.peek() {
            Some(c) if c == want => {
                self.pos += c.len_utf8();
                Ok(())
            }
            Some(_) => Err(self.error(&format!("expected `{want}`"))),
            None => Err(self.error(&format!("expected `{want}`, found end of input"))),
        }
    }

    pub(crate) fn term(&mut self) -> Result<RawTerm> {
        match self.peek() {
            Some('(') => {
                self.pos += 1;
                let l = self.term()?;
                self.expect('.')?;
                let r = self.term()?;
                self.expect(')')?;
                Ok(RawTerm::node(l, r))
            }
            Some(c) if is_ident_char(c) => {
                let start = self.pos;
                while let Some(c) = self.text[self.pos..].chars().next() {
                    if !is_ident_char(c) {
                        break;
                    }
                    self.pos += c.len_utf8();
                }
                Ok(RawTerm::Leaf(self.text[start..self.pos].to_string()))
            }
            Some(_) => Err(self.error("expected a point name or `(`")),
            None => Err(self.error("expected a term, found end of input")),
        }
    }
}

/// Base system plus every normal-form term built so far.
#[derive(Clone)]
pub struct FreeUniverse {
    base: PartialSts,
    leaf_names: Vec<String>,
    leaf_index: HashMap<String, u32>,
    leaf_terms: Vec<Term>,
    nodes: Vec<Node>,
    ranks: Vec<u32>,
    lookup: HashMap<(Term, Term), Term>,
}

impl fmt::Debug for FreeUniverse {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FreeUniverse")
            .field("base", &self.base)
            .field("terms", &self.nodes.len())
            .finish()
    }
}

impl FreeUniverse {
    pub fn new(base: PartialSts) -> Self {
        let mut u = Self {
            base: PartialSts::discrete(Vec::<String>::new()).unwrap(),
            leaf_names: Vec::new(),
            leaf_index: HashMap::new(),
            leaf_terms: Vec::new(),
            nodes: Vec::new(),
            ranks: Vec::new(),
            lookup: HashMap::new(),
        };
        for name in base.names() {
            u.push_leaf(name.clone());
        }
        u.base = base;
        u
    }

    fn push_leaf(&mut self, name: String) -> Term {
        let idx = self.leaf_names.len() as u32;
        let t = Term(self.nodes.len() as u32);
        self.nodes.push(Node::Leaf(idx));
        self.ranks.push(1);
        self.leaf_index.insert(name.clone(), idx);
        self.leaf_names.push(name);
        self.leaf_terms.push(t);
        t
    }

    pub fn base(&self) -> &PartialSts {
        &self.base
    }

    /// Number of distinct terms materialized so far.
    pub fn term_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn base_leaf(&self, p: PointId) -> Term {
        self.leaf_terms[p.index()]
    }

    pub fn base_leaves(&self) -> Vec<Term> {
        self.base.points().map(|p| self.base_leaf(p)).collect()
    }

    pub fn leaf(&self, name: &str) -> Option<Term> {
        self.leaf_index
            .get(name)
            .map(|&i| self.leaf_terms[i as usize])
    }

    pub fn require_leaf(&self, name: &str) -> Result<Term> {
        self.leaf(name)
            .ok_or_else(|| Error::UnknownPoint(name.to_string()))
    }

    /// Adds a free generator unrelated to everything else. The name is `hint`
    /// made unique by appending primes.
    pub fn add_generator(&mut self, hint: &str) -> Term {
        let mut name = hint.to_string();
        while self.leaf_index.contains_key(&name) {
            name.push('\'');
        }
        self.push_leaf(name)
    }

    pub fn is_leaf(&self, t: Term) -> bool {
        matches!(self.nodes[t.0 as usize], Node::Leaf(_))
    }

    /// The base point of a base leaf.
    pub fn as_base_point(&self, t: Term) -> Option<PointId> {
        match self.nodes[t.0 as usize] {
            Node::Leaf(i) if (i as usize) < self.base.len() => Some(PointId(i)),
            _ => None,
        }
    }

    pub fn leaf_name(&self, t: Term) -> Option<&str> {
        match self.nodes[t.0 as usize] {
            Node::Leaf(i) => Some(&self.leaf_names[i as usize]),
            Node::Pair(..) => None,
        }
    }

    pub fn children(&self, t: Term) -> Option<(Term, Term)> {
        match self.nodes[t.0 as usize] {
            Node::Pair(l, r) => Some((l, r)),
            Node::Leaf(_) => None,
        }
    }

    pub fn rank(&self, t: Term) -> u32 {
        self.ranks[t.0 as usize]
    }

    /// The fixed total order on terms: rank, then leaves by name, then nodes
    /// by children.
    pub fn cmp_terms(&self, u: Term, v: Term) -> Ordering {
        if u == v {
            return Ordering::Equal;
        }
        self.rank(u).cmp(&self.rank(v)).then_with(|| {
            match (&self.nodes[u.0 as usize], &self.nodes[v.0 as usize]) {
                (Node::Leaf(a), Node::Leaf(b)) => {
                    self.leaf_names[*a as usize].cmp(&self.leaf_names[*b as usize])
                }
                (Node::Pair(a, b), Node::Pair(c, d)) => self
                    .cmp_terms(*a, *c)
                    .then_with(|| self.cmp_terms(*b, *d)),
                (Node::Leaf(_), Node::Pair(..)) => Ordering::Less,
                (Node::Pair(..), Node::Leaf(_)) => Ordering::Greater,
            }
        })
    }

    pub fn sort_terms(&self, terms: &mut [Term]) {
        terms.sort_by(|a, b| self.cmp_terms(*a, *b));
    }

    /// The product if it reduces to an existing term, without allocating.
    pub fn try_mul(&self, u: Term, v: Term) -> Option<Term> {
        if u == v {
            return Some(u);
        }
        if let Some((a, b)) = self.children(v) {
            if a == u {
                return Some(b);
            }
            if b == u {
                return Some(a);
            }
        }
        if let Some((a, b)) = self.children(u) {
            if a == v {
                return Some(b);
            }
            if b == v {
                return Some(a);
            }
        }
        if let (Some(p), Some(q)) = (self.as_base_point(u), self.as_base_point(v)) {
            if let Some(r) = self.base.product(p, q) {
                return Some(self.base_leaf(r));
            }
        }
        let key = self.ordered(u, v);
        self.lookup.get(&key).copied()
    }

    fn ordered(&self, u: Term, v: Term) -> (Term, Term) {
        if self.cmp_terms(u, v) == Ordering::Less {
            (u, v)
        } else {
            (v, u)
        }
    }

    /// Whether `u * v` reduces without creating a new node.
    pub fn is_reducible_pair(&self, u: Term, v: Term) -> bool {
        if u == v {
            return true;
        }
        let mut r = false;
        if let Some((a, b)) = self.children(v) {
            r |= a == u || b == u;
        }
        if let Some((a, b)) = self.children(u) {
            r |= a == v || b == v;
        }
        if let (Some(p), Some(q)) = (self.as_base_point(u), self.as_base_point(v)) {
            r |= self.base.product(p, q).is_some();
        }
        r
    }

    pub fn mul(&mut self, u: Term, v: Term) -> Term {
        if let Some(t) = self.try_mul(u, v) {
            return t;
        }
        let key = self.ordered(u, v);
        let t = Term(self.nodes.len() as u32);
        self.nodes.push(Node::Pair(key.0, key.1));
        self.ranks.push(self.rank(u) + self.rank(v));
        self.lookup.insert(key, t);
        t
    }

    pub fn normalize(&mut self, raw: &RawTerm) -> Result<Term> {
        match raw {
            RawTerm::Leaf(n) => self.require_leaf(n),
            RawTerm::Node(l, r) => {
                let l = self.normalize(l)?;
                let r = self.normalize(r)?;
                Ok(self.mul(l, r))
            }
        }
    }

    pub fn parse(&mut self, text: &str) -> Result<Term> {
        let raw = RawTerm::parse(text)?;
        self.normalize(&raw)
    }

    /// Parses, normalizes and prints a term.
    pub fn normalize_text(&mut self, text: &str) -> Result<String> {
        let t = self.parse(text)?;
        Ok(self.display(t))
    }

    pub fn to_raw(&self, t: Term) -> RawTerm {
        match self.nodes[t.0 as usize] {
            Node::Leaf(i) => RawTerm::Leaf(self.leaf_names[i as usize].clone()),
            Node::Pair(l, r) => RawTerm::node(self.to_raw(l), self.to_raw(r)),
        }
    }

    /// The term in the input grammar, e.g. `((a.b).c)`.
    pub fn display(&self, t: Term) -> String {
        self.to_raw(t).to_string()
    }

    /// A valid point name for `t`: the leaf name, or `[l;r]` for nodes.
    pub fn point_name(&self, t: Term) -> String {
        match self.nodes[t.0 as usize] {
            Node::Leaf(i) => self.leaf_names[i as usize].clone(),
            Node::Pair(l, r) => format!("[{};{}]", self.point_name(l), self.point_name(r)),
        }
    }

    /// Layers of `<A>_k` by least syntactic rank: `layers[r - 1]` holds the
    /// elements whose shortest term over `gens` has rank exactly `r`.
    pub fn rank_layers(&mut self, gens: &[Term], k: usize) -> Vec<Vec<Term>> {
        let mut seen: HashSet<Term> = HashSet::new();
        let mut layers: Vec<Vec<Term>> = Vec::new();
        let mut first = Vec::new();
        for &g in gens {
            if seen.insert(g) {
                first.push(g);
            }
        }
        if k == 0 {
            return layers;
        }
        layers.push(first);
        for r in 2..=k {
            let mut layer = Vec::new();
            for i in 1..=r / 2 {
                let j = r - i;
                let (li, lj) = (layers[i - 1].clone(), layers[j - 1].clone());
                for (xi, &x) in li.iter().enumerate() {
                    let ys: &[Term] = if i == j { &lj[xi + 1..] } else { &lj };
                    for &y in ys {
                        let z = self.mul(x, y);
                        if seen.insert(z) {
                            layer.push(z);
                        }
                    }
                }
            }
            layers.push(layer);
        }
        layers
    }

    /// `<A>_k`: values of terms of rank at most `k` over `gens`, in term order.
    pub fn closure_k(&mut self, gens: &[Term], k: usize) -> Vec<Term> {
        let mut out: Vec<Term> = self.rank_layers(gens, k).into_iter().flatten().collect();
        self.sort_terms(&mut out);
        out
    }

    /// The subquasigroup generated by `gens`, explored up to rank `budget`.
    /// `complete` is set when the explored set is closed under products.
    pub fn generated(&mut self, gens: &[Term], budget: usize) -> Generated {
        let mut seen: HashSet<Term> = HashSet::new();
        let mut layers: Vec<Vec<Term>> = Vec::new();
        let mut all: Vec<Term> = Vec::new();
        for &g in gens {
            if seen.insert(g) {
                all.push(g);
            }
        }
        layers.push(all.clone());
        let mut complete = all.len() <= 1;
        let mut r = 2;
        while !complete && r <= budget.max(1) {
            let mut layer = Vec::new();
            for i in 1..=r / 2 {
                let j = r - i;
                let (li, lj) = (layers[i - 1].clone(), layers[j - 1].clone());
                for (xi, &x) in li.iter().enumerate() {
                    let ys: &[Term] = if i == j { &lj[xi + 1..] } else { &lj };
                    for &y in ys {
                        let z = self.mul(x, y);
                        if seen.insert(z) {
                            layer.push(z);
                        }
                    }
                }
            }
            all.extend(&layer);
            let empty = layer.is_empty();
            layers.push(layer);
            if empty || r == budget {
                complete = self.is_closed(&all);
            }
            r += 1;
        }
        self.sort_terms(&mut all);
        Generated {
            elements: all,
            complete,
            rank: (r - 1) as u32,
        }
    }

    /// Whether every product of two members is a member.
    pub fn is_closed(&mut self, set: &[Term]) -> bool {
        let members: HashSet<Term> = set.iter().copied().collect();
        for (i, &x) in set.iter().enumerate() {
            for &y in &set[i + 1..] {
                let z = self.mul(x, y);
                if !members.contains(&z) {
                    return false;
                }
            }
        }
        true
    }

    /// The partial STS induced on `elems` by products landing in `elems`,
    /// with points named by [`FreeUniverse::point_name`].
    pub fn induced_system(&mut self, elems: &[Term]) -> PartialSts {
        let names: Vec<String> = elems.iter().map(|&t| self.point_name(t)).collect();
        let index: HashMap<Term, usize> = elems.iter().enumerate().map(|(i, &t)| (t, i)).collect();
        let mut blocks = Vec::new();
        for i in 0..elems.len() {
            for j in i + 1..elems.len() {
                let z = self.mul(elems[i], elems[j]);
                if let Some(&k) = index.get(&z) {
                    if k > j {
                        blocks.push([i, j, k]);
                    }
                }
            }
        }
        PartialSts::from_indexed(names, &blocks).expect("products form a partial STS")
    }

    /// Images of `targets` under the unique homomorphism extending `f`.
    ///
    /// `f` maps leaf names to points of the total system `c`; it must send
    /// every base block used by the targets onto a block of `c`.
    pub fn extend_homomorphism(
        &self,
        f: &HashMap<String, PointId>,
        c: &PartialSts,
        targets: &[Term],
    ) -> Result<HashMap<Term, PointId>> {
        if !c.is_total() {
            return Err(Error::NotTotal);
        }
        for b in self.base.blocks() {
            let names = b.map(|p| self.base.name(p));
            let imgs: Vec<Option<&PointId>> = names.iter().map(|n| f.get(*n)).collect();
            if let [Some(&x), Some(&y), Some(&z)] = imgs[..] {
                if c.product(x, y) != Some(z) {
                    return Err(Error::NotAHomomorphism(
                        names.iter().map(|s| s.to_string()).collect(),
                    ));
                }
            }
        }
        let mut out = HashMap::new();
        for &t in targets {
            self.image(t, f, c, &mut out)?;
        }
        Ok(out)
    }

    fn image(
        &self,
        t: Term,
        f: &HashMap<String, PointId>,
        c: &PartialSts,
        memo: &mut HashMap<Term, PointId>,
    ) -> Result<PointId> {
        if let Some(&p) = memo.get(&t) {
            return Ok(p);
        }
        let p = match self.nodes[t.0 as usize] {
            Node::Leaf(i) => {
                let name = &self.leaf_names[i as usize];
                *f.get(name)
                    .ok_or_else(|| Error::UnknownPoint(name.clone()))?
            }
            Node::Pair(l, r) => {
                let (x, y) = (self.image(l, f, c, memo)?, self.image(r, f, c, memo)?);
                c.product(x, y).expect("total")
            }
        };
        memo.insert(t, p);
        Ok(p)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Generated {
    pub elements: Vec<Term>,
    pub complete: bool,
    /// Largest rank layer computed.
    pub rank: u32,
}

/// Anything with a binary product: the free universe or a finite total system.
pub trait Magma {
    type Elem: Copy + Eq + Hash + Ord + fmt::Debug;
    fn op(&mut self, a: Self::Elem, b: Self::Elem) -> Self::Elem;
}

impl Magma for FreeUniverse {
    type Elem = Term;
    fn op(&mut self, a: Term, b: Term) -> Term {
        self.mul(a, b)
    }
}

/// A total STS viewed as its quasigroup.
pub struct TotalSquag<'a>(&'a PartialSts);

impl<'a> TotalSquag<'a> {
    pub fn new(s: &'a PartialSts) -> Result<Self> {
        if s.is_total() {
            Ok(Self(s))
        } else {
            Err(Error::NotTotal)
        }
    }
}

impl Magma for TotalSquag<'_> {
    type Elem = PointId;
    fn op(&mut self, a: PointId, b: PointId) -> PointId {
        self.0.product(a, b).expect("total")
    }
}

/// Outcome of running the chain `A_0 = gens`, `A_{n+1} = A_n * A_n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChainReport<E> {
    /// Levels computed.
    pub levels: usize,
    /// The chain reached a fixpoint.
    pub exhausted: bool,
    /// A new element with two distinct parent pairs, if one was met.
    pub collision: Option<(E, [E; 2], [E; 2])>,
    pub elements: Vec<E>,
}

/// Runs the unique-parent chain for at most `max_levels` levels and stops at
/// the first element with two parent pairs. A product landing on an element
/// already present must come from a block of `gens` or a parent block;
/// otherwise the new member of that block has a second parent pair.
pub fn parent_chain<M: Magma>(m: &mut M, gens: &[M::Elem], max_levels: usize) -> ChainReport<M::Elem> {
    let mut members: HashSet<M::Elem> = gens.iter().copied().collect();
    let base = members.clone();
    let mut parent_of: HashMap<M::Elem, [M::Elem; 2]> = HashMap::new();
    let mut level: Vec<M::Elem> = members.iter().copied().collect();
    level.sort();
    let mut levels = 0;
    let pair = |x: M::Elem, y: M::Elem| if x < y { [x, y] } else { [y, x] };
    while levels < max_levels {
        let mut fresh = Vec::new();
        for i in 0..level.len() {
            for j in i + 1..level.len() {
                let (a, b) = (level[i], level[j]);
                let c = m.op(a, b);
                if members.contains(&c) {
                    let known = (base.contains(&a) && base.contains(&b) && base.contains(&c))
                        || parent_of.get(&c) == Some(&pair(a, b))
                        || parent_of.get(&a) == Some(&pair(b, c))
                        || parent_of.get(&b) == Some(&pair(a, c));
                    if known {
                        continue;
                    }
                    let (w, rest) = if !base.contains(&c) {
                        (c, pair(a, b))
                    } else if !base.contains(&a) {
                        (a, pair(b, c))
                    } else {
                        (b, pair(a, c))
                    };
                    let mut elements = level.clone();
                    elements.extend(fresh);
                    return ChainReport {
                        levels: levels + 1,
                        exhausted: false,
                        collision: Some((w, parent_of[&w], rest)),
                        elements,
                    };
                }
                match parent_of.get(&c) {
                    Some(&p) => {
                        let mut elements = level.clone();
                        elements.extend(fresh);
                        return ChainReport {
                            levels: levels + 1,
                            exhausted: false,
                            collision: Some((c, p, pair(a, b))),
                            elements,
                        };
                    }
                    None => {
                        parent_of.insert(c, pair(a, b));
                        fresh.push(c);
                    }
                }
            }
        }
        levels += 1;
        if fresh.is_empty() {
            return ChainReport {
                levels,
                exhausted: true,
                collision: None,
                elements: level,
            };
        }
        members.extend(fresh.iter().copied());
        level.extend(fresh);
        level.sort();
    }
    ChainReport {
        levels,
        exhausted: false,
        collision: None,
        elements: level,
    }
}

/// Whether the total system `q` is freely generated by `a`: the parent chain
/// from `a` reaches all of `q` with a unique parent pair for every new point.
pub fn is_freely_generated(q: &PartialSts, a: &[PointId]) -> Result<bool> {
    let mut m = TotalSquag::new(q)?;
    let report = parent_chain(&mut m, a, q.len() + 1);
    Ok(report.collision.is_none() && report.exhausted && report.elements.len() == q.len())
}
