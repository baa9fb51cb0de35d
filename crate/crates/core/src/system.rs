//! Validated partial Steiner triple systems.
//!
//! A [`PartialSts`] is a finite point set with 3-element blocks in which every
//! unordered pair of distinct points lies in at most one block. Points are kept
//! sorted by name, so a [`PointId`] is the rank of its name and two systems with
//! the same names and blocks compare equal regardless of input order.
//!
//! Idempotent triples `(a, a, a)` are never stored; [`PartialSts::product`]
//! returns `a` for `(a, a)` directly.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

use crate::error::{Error, Result};

const NONE: u32 = u32::MAX;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PointId(pub u32);

impl PointId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Names may not contain whitespace, `.` or parentheses; those are term syntax.
pub fn is_valid_point_name(name: &str) -> bool {
    !name.is_empty()
        && !name
            .chars()
            .any(|c| c.is_whitespace() || c == '.' || c == '(' || c == ')')
}

#[derive(Clone)]
pub struct PartialSts {
    names: Vec<String>,
    index: HashMap<String, PointId>,
    blocks: Vec<[PointId; 3]>,
    table: Vec<u32>,
}

impl PartialEq for PartialSts {
    fn eq(&self, other: &Self) -> bool {
        self.names == other.names && self.blocks == other.blocks
    }
}

impl Eq for PartialSts {}

impl fmt::Debug for PartialSts {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let blocks: Vec<String> = self
            .blocks
            .iter()
            .map(|b| format!("{}{}{}", self.name(b[0]), self.name(b[1]), self.name(b[2])))
            .collect();
        f.debug_struct("PartialSts")
            .field("points", &self.names)
            .field("blocks", &blocks)
            .finish()
    }
}

impl PartialSts {
    /// Validates a raw point list and raw block list.
    pub fn from_raw(points: Vec<String>, blocks: Vec<Vec<String>>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(points.len());
        for p in &points {
            if !is_valid_point_name(p) {
                return Err(Error::InvalidPointName(p.clone()));
            }
            if !seen.insert(p.as_str()) {
                return Err(Error::DuplicatePoint(p.clone()));
            }
        }
        let mut names = points;
        names.sort();
        let index: HashMap<String, PointId> = names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), PointId(i as u32)))
            .collect();
        let mut triples = Vec::with_capacity(blocks.len());
        for (i, block) in blocks.iter().enumerate() {
            if block.len() != 3 {
                return Err(Error::NonTernaryBlock {
                    index: i,
                    len: block.len(),
                });
            }
            let mut ids = [0usize; 3];
            for (slot, name) in ids.iter_mut().zip(block) {
                *slot = index
                    .get(name)
                    .ok_or_else(|| Error::UnknownPoint(name.clone()))?
                    .index();
            }
            triples.push(ids);
        }
        Self::assemble(names, index, triples)
    }

    /// Convenience constructor for literals in code and tests.
    pub fn build(points: &[&str], blocks: &[[&str; 3]]) -> Result<Self> {
        Self::from_raw(
            points.iter().map(|s| s.to_string()).collect(),
            blocks
                .iter()
                .map(|b| b.iter().map(|s| s.to_string()).collect())
                .collect(),
        )
    }

    /// Builds a system from names and blocks given as indices into `names`.
    pub fn from_indexed(names: Vec<String>, blocks: &[[usize; 3]]) -> Result<Self> {
        let raw_blocks = blocks
            .iter()
            .map(|b| b.iter().map(|&i| names[i].clone()).collect())
            .collect();
        Self::from_raw(names, raw_blocks)
    }

    /// `n` discrete points with the given names and no blocks.
    pub fn discrete<S: Into<String>>(points: impl IntoIterator<Item = S>) -> Result<Self> {
        Self::from_raw(points.into_iter().map(Into::into).collect(), Vec::new())
    }

    fn assemble(
        names: Vec<String>,
        index: HashMap<String, PointId>,
        triples: Vec<[usize; 3]>,
    ) -> Result<Self> {
        let n = names.len();
        let mut table = vec![NONE; n * n];
        let mut blocks = BTreeSet::new();
        for t in triples {
            let mut t = t;
            t.sort_unstable();
            if t[0] == t[1] || t[1] == t[2] {
                return Err(Error::RepeatedMemberInBlock(
                    t.iter().map(|&i| names[i].clone()).collect(),
                ));
            }
            if !blocks.insert(t) {
                continue;
            }
            for (x, y, z) in [(t[0], t[1], t[2]), (t[0], t[2], t[1]), (t[1], t[2], t[0])] {
                let cell = &mut table[x * n + y];
                if *cell != NONE {
                    return Err(Error::PairInTwoBlocks(names[x].clone(), names[y].clone()));
                }
                *cell = z as u32;
                table[y * n + x] = z as u32;
            }
        }
        let blocks = blocks
            .into_iter()
            .map(|t| t.map(|i| PointId(i as u32)))
            .collect();
        Ok(Self {
            names,
            index,
            blocks,
            table,
        })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, p: PointId) -> &str {
        &self.names[p.index()]
    }

    pub fn point(&self, name: &str) -> Option<PointId> {
        self.index.get(name).copied()
    }

    pub fn require(&self, name: &str) -> Result<PointId> {
        self.point(name)
            .ok_or_else(|| Error::UnknownPoint(name.to_string()))
    }

    pub fn require_all<S: AsRef<str>>(&self, names: &[S]) -> Result<Vec<PointId>> {
        names.iter().map(|n| self.require(n.as_ref())).collect()
    }

    pub fn points(&self) -> impl Iterator<Item = PointId> + '_ {
        (0..self.names.len() as u32).map(PointId)
    }

    /// Blocks with members in increasing id order, sorted lexicographically.
    pub fn blocks(&self) -> &[[PointId; 3]] {
        &self.blocks
    }

    /// Blocks spelled out by point names.
    pub fn named_blocks(&self) -> Vec<[String; 3]> {
        self.blocks
            .iter()
            .map(|b| b.map(|p| self.name(p).to_string()))
            .collect()
    }

    /// The product of `a` and `b`: `a` itself when `a == b`, the third point of
    /// their block when one exists, `None` otherwise.
    #[inline]
    pub fn product(&self, a: PointId, b: PointId) -> Option<PointId> {
        if a == b {
            return Some(a);
        }
        let c = self.table[a.index() * self.len() + b.index()];
        (c != NONE).then_some(PointId(c))
    }

    pub fn product_by_name(&self, a: &str, b: &str) -> Result<Option<&str>> {
        let (a, b) = (self.require(a)?, self.require(b)?);
        Ok(self.product(a, b).map(|c| self.name(c)))
    }

    /// True iff every pair of distinct points has a product.
    pub fn is_total(&self) -> bool {
        let n = self.len();
        3 * self.blocks.len() == n * n.saturating_sub(1) / 2
    }

    /// Number of unordered pairs of distinct points without a product.
    pub fn undefined_pairs(&self) -> usize {
        let n = self.len();
        n * n.saturating_sub(1) / 2 - 3 * self.blocks.len()
    }

    pub fn is_relatively_closed(&self, subset: &[PointId]) -> bool {
        self.escaping_product(subset).is_none()
    }

    /// A product of two members of `subset` that lands outside it.
    pub fn escaping_product(&self, subset: &[PointId]) -> Option<(PointId, PointId, PointId)> {
        let mut inside = vec![false; self.len()];
        for &p in subset {
            inside[p.index()] = true;
        }
        for (i, &a) in subset.iter().enumerate() {
            for &b in &subset[i + 1..] {
                if let Some(c) = self.product(a, b) {
                    if !inside[c.index()] {
                        return Some((a, b, c));
                    }
                }
            }
        }
        None
    }

    pub fn is_relatively_closed_by_name<S: AsRef<str>>(&self, subset: &[S]) -> Result<bool> {
        Ok(self.is_relatively_closed(&self.require_all(subset)?))
    }

    /// The induced partial system on `subset`.
    pub fn restrict(&self, subset: &[PointId]) -> PartialSts {
        let mut inside = vec![false; self.len()];
        for &p in subset {
            inside[p.index()] = true;
        }
        let names: Vec<String> = subset.iter().map(|&p| self.name(p).to_string()).collect();
        let blocks: Vec<Vec<String>> = self
            .blocks
            .iter()
            .filter(|b| b.iter().all(|p| inside[p.index()]))
            .map(|b| b.iter().map(|&p| self.name(p).to_string()).collect())
            .collect();
        PartialSts::from_raw(names, blocks).expect("restriction of a valid system is valid")
    }

    /// Renames every point. The map must be injective and produce valid names.
    pub fn rename(&self, mut f: impl FnMut(&str) -> String) -> Result<PartialSts> {
        let names: Vec<String> = self.names.iter().map(|n| f(n)).collect();
        let blocks: Vec<[usize; 3]> = self.blocks.iter().map(|b| b.map(|p| p.index())).collect();
        PartialSts::from_indexed(names, &blocks)
    }

    /// Adds discrete points and extra blocks (by name) to a copy of this system.
    pub fn extend(&self, points: &[String], blocks: &[[String; 3]]) -> Result<PartialSts> {
        let mut names = self.names.clone();
        names.extend(points.iter().cloned());
        let mut raw: Vec<Vec<String>> = self.named_blocks().into_iter().map(Vec::from).collect();
        raw.extend(blocks.iter().map(|b| b.to_vec()));
        PartialSts::from_raw(names, raw)
    }

    /// Whether the defined products of the two systems agree on `common`.
    pub fn compatible<S: AsRef<str>>(&self, other: &PartialSts, common: &[S]) -> Result<bool> {
        let here = self.require_all(common)?;
        let there = other.require_all(common)?;
        Ok(self.conflict_on(other, &here, &there).is_none())
    }

    fn conflict_on(
        &self,
        other: &PartialSts,
        here: &[PointId],
        there: &[PointId],
    ) -> Option<(String, String)> {
        for i in 0..here.len() {
            for j in i + 1..here.len() {
                let (Some(c), Some(d)) = (
                    self.product(here[i], here[j]),
                    other.product(there[i], there[j]),
                ) else {
                    continue;
                };
                if self.name(c) != other.name(d) {
                    return Some((
                        self.name(here[i]).to_string(),
                        self.name(here[j]).to_string(),
                    ));
                }
            }
        }
        None
    }

    fn shared_names(&self, other: &PartialSts) -> (Vec<PointId>, Vec<PointId>) {
        let mut here = Vec::new();
        let mut there = Vec::new();
        for p in self.points() {
            if let Some(q) = other.point(self.name(p)) {
                here.push(p);
                there.push(q);
            }
        }
        (here, there)
    }

    /// Union of point sets and block sets; points are identified by name.
    pub fn union(&self, other: &PartialSts) -> Result<PartialSts> {
        let (here, there) = self.shared_names(other);
        if let Some((a, b)) = self.conflict_on(other, &here, &there) {
            return Err(Error::IncompatibleSystems { a, b });
        }
        let mut names = self.names.clone();
        names.extend(
            other
                .names
                .iter()
                .filter(|n| self.point(n).is_none())
                .cloned(),
        );
        let mut blocks: Vec<Vec<String>> =
            self.named_blocks().into_iter().map(Vec::from).collect();
        blocks.extend(other.named_blocks().into_iter().map(Vec::from));
        match PartialSts::from_raw(names, blocks) {
            Err(Error::PairInTwoBlocks(a, b)) => Err(Error::IncompatibleSystems { a, b }),
            other => other,
        }
    }

    /// Union of a family whose members are pairwise compatible.
    pub fn family_union(family: &[PartialSts]) -> Result<PartialSts> {
        for i in 0..family.len() {
            for j in i + 1..family.len() {
                let (here, there) = family[i].shared_names(&family[j]);
                if let Some((a, b)) = family[i].conflict_on(&family[j], &here, &there) {
                    return Err(Error::IncompatibleFamily { i, j, a, b });
                }
            }
        }
        let mut names = Vec::new();
        let mut seen = HashSet::new();
        let mut blocks = Vec::new();
        for member in family {
            for n in member.names() {
                if seen.insert(n.clone()) {
                    names.push(n.clone());
                }
            }
            blocks.extend(member.named_blocks().into_iter().map(Vec::from));
        }
        PartialSts::from_raw(names, blocks)
    }

    /// Whether `sub`'s points and blocks are exactly the induced structure of
    /// this system on `sub`'s point names.
    pub fn has_substructure(&self, sub: &PartialSts) -> bool {
        let Ok(ids) = self.require_all(sub.names()) else {
            return false;
        };
        &self.restrict(&ids) == sub
    }

    /// Closure of `seeds` under defined products.
    pub fn close(&self, seeds: &[PointId]) -> Vec<PointId> {
        let mut inside = vec![false; self.len()];
        let mut members = Vec::new();
        for &p in seeds {
            if !inside[p.index()] {
                inside[p.index()] = true;
                members.push(p);
            }
        }
        let mut frontier = 0;
        while frontier < members.len() {
            let a = members[frontier];
            frontier += 1;
            for i in 0..frontier {
                if let Some(c) = self.product(a, members[i]) {
                    if !inside[c.index()] {
                        inside[c.index()] = true;
                        members.push(c);
                    }
                }
            }
        }
        members.sort_unstable();
        members
    }

    /// Closure of `seeds` when every pair inside it has a product, otherwise `None`.
    fn total_closure(&self, seeds: &[PointId], inside: &mut [bool]) -> Option<Vec<PointId>> {
        let mut members: Vec<PointId> = Vec::with_capacity(seeds.len() * 2);
        for &p in seeds {
            if !inside[p.index()] {
                inside[p.index()] = true;
                members.push(p);
            }
        }
        let mut ok = true;
        let mut frontier = 0;
        'outer: while frontier < members.len() {
            let a = members[frontier];
            frontier += 1;
            for i in 0..frontier {
                match self.product(a, members[i]) {
                    Some(c) => {
                        if !inside[c.index()] {
                            inside[c.index()] = true;
                            members.push(c);
                        }
                    }
                    None => {
                        ok = false;
                        break 'outer;
                    }
                }
            }
        }
        for p in &members {
            inside[p.index()] = false;
        }
        if !ok {
            return None;
        }
        members.sort_unstable();
        Some(members)
    }

    /// All sub-STSs (relatively closed subsets on which every pair has a
    /// product) with `min_size <= |X| <= max_size`, sorted by size then members.
    ///
    /// A pair without a product rules out every superset as well, so the search
    /// only grows closed sets by one generator at a time.
    pub fn sub_systems(&self, min_size: usize, max_size: usize) -> Vec<Vec<PointId>> {
        let mut found: HashSet<Vec<PointId>> = HashSet::new();
        let mut inside = vec![false; self.len()];
        let mut stack: Vec<Vec<PointId>> = Vec::new();
        if min_size == 0 {
            found.insert(Vec::new());
        }
        if min_size <= 1 {
            for p in self.points() {
                found.insert(vec![p]);
            }
        }
        if max_size >= 3 {
            for b in &self.blocks {
                let set = b.to_vec();
                if found.insert(set.clone()) {
                    stack.push(set);
                }
            }
        }
        while let Some(set) = stack.pop() {
            if set.len() >= max_size {
                continue;
            }
            let mut member = vec![false; self.len()];
            for p in &set {
                member[p.index()] = true;
            }
            for p in self.points() {
                if member[p.index()] || self.product(set[0], p).is_none() {
                    continue;
                }
                let mut seeds = set.clone();
                seeds.push(p);
                if let Some(closed) = self.total_closure(&seeds, &mut inside) {
                    if closed.len() <= max_size && found.insert(closed.clone()) {
                        stack.push(closed);
                    }
                }
            }
        }
        let mut out: Vec<Vec<PointId>> = found
            .into_iter()
            .filter(|s| s.len() >= min_size && s.len() <= max_size)
            .collect();
        out.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
        out
    }
}
