//! Embedding partial systems into total ones.
//!
//! [`free_step`] adds a fresh product for every undefined pair; iterating it
//! gives the free chain whose union is the free Steiner quasigroup.
//! [`complete_finite`] instead searches for a finite STS containing the input
//! as a substructure, trying admissible orders in increasing order.

use rand::seq::SliceRandom;

use crate::budget::Budget;
use crate::error::{Error, Result};
use crate::seed;
use crate::system::PartialSts;

/// Name of the fresh product of `a` and `b` added at `stage`.
pub fn fresh_product_name(a: &str, b: &str, stage: usize) -> String {
    let (a, b) = if a <= b { (a, b) } else { (b, a) };
    format!("{a}*{b}#{stage}")
}

fn unique_name(mut name: String, taken: &dyn Fn(&str) -> bool) -> String {
    while taken(&name) {
        name.push('\'');
    }
    name
}

/// One step of the free chain: every undefined pair `{a, b}` gets a fresh
/// point `p` and the block `{a, b, p}`.
pub fn free_step(s: &PartialSts, stage: usize) -> PartialSts {
    let mut names: Vec<String> = s.names().to_vec();
    let mut added = std::collections::HashSet::new();
    let mut blocks: Vec<[String; 3]> = Vec::new();
    let mut fresh = Vec::new();
    let pts: Vec<_> = s.points().collect();
    for (i, &a) in pts.iter().enumerate() {
        for &b in &pts[i + 1..] {
            if s.product(a, b).is_some() {
                continue;
            }
            let name = unique_name(fresh_product_name(s.name(a), s.name(b), stage), &|n| {
                s.point(n).is_some() || added.contains(n)
            });
            added.insert(name.clone());
            fresh.push(name.clone());
            blocks.push([s.name(a).to_string(), s.name(b).to_string(), name]);
        }
    }
    if fresh.is_empty() {
        return s.clone();
    }
    names.extend(fresh);
    s.extend(&names[s.len()..], &blocks)
        .expect("fresh products never double-define a pair")
}

/// The `depth`-th stage of the free chain over `s`.
pub fn free_truncation(s: &PartialSts, depth: usize) -> PartialSts {
    let mut cur = s.clone();
    for stage in 1..=depth {
        let next = free_step(&cur, stage);
        if next.len() == cur.len() {
            break;
        }
        cur = next;
    }
    cur
}

pub fn is_admissible(n: usize) -> bool {
    n % 6 == 1 || n % 6 == 3
}

pub fn admissible_orders(lo: usize, hi: usize) -> Vec<usize> {
    (lo..=hi).filter(|&n| is_admissible(n)).collect()
}

#[derive(Clone, Debug)]
pub struct CompletionOptions {
    pub max_order: usize,
    /// Seed 0 keeps candidate thirds in point order; other seeds shuffle them.
    pub seed: u64,
    /// Search nodes per attempt at a given order.
    pub nodes_per_attempt: u64,
    /// Attempts per order; each restart reseeds the candidate order.
    pub restarts: usize,
    /// Orders below this are skipped.
    pub min_order: usize,
    /// Prefix for added points; an index is appended.
    pub fresh_prefix: String,
    pub deadline: Option<std::time::Instant>,
    /// When set (the default) the input stays a substructure: its undefined
    /// pairs get thirds outside it. When cleared, new blocks may lie entirely
    /// inside the input.
    pub substructure: bool,
}

impl CompletionOptions {
    pub fn new(max_order: usize, seed: u64) -> Self {
        Self {
            max_order,
            seed,
            nodes_per_attempt: 200_000,
            restarts: 8,
            min_order: 0,
            fresh_prefix: "~".into(),
            deadline: None,
            substructure: true,
        }
    }
}

/// A total STS of admissible order at most `max_order` containing `s` as a
/// substructure.
pub fn complete_finite(s: &PartialSts, max_order: usize, seed: u64) -> Result<PartialSts> {
    complete_with(s, &CompletionOptions::new(max_order, seed))
}

pub fn complete_with(s: &PartialSts, opts: &CompletionOptions) -> Result<PartialSts> {
    if s.is_total() && s.len() >= opts.min_order {
        return Ok(s.clone());
    }
    let mut budget_hit = false;
    for n in admissible_orders(s.len().max(opts.min_order), opts.max_order) {
        match complete_at_order(s, n, opts) {
            Ok(Some(t)) => return Ok(t),
            Ok(None) => {}
            Err(Error::BudgetExceeded) => budget_hit = true,
            Err(e) => return Err(e),
        }
    }
    if budget_hit {
        Err(Error::BudgetExceeded)
    } else {
        Err(Error::NoCompletionWithinBound(opts.max_order))
    }
}

/// `Ok(None)` means the search proved there is no completion of order `n`.
pub fn complete_at_order(
    s: &PartialSts,
    n: usize,
    opts: &CompletionOptions,
) -> Result<Option<PartialSts>> {
    if !is_admissible(n) && n > 0 {
        return Err(Error::NotAdmissible(n));
    }
    let mut names = s.names().to_vec();
    let mut k = 0usize;
    while names.len() < n {
        let name = format!("{}{k}", opts.fresh_prefix);
        k += 1;
        if s.point(&name).is_none() {
            names.push(name);
        }
    }
    let mut cover = Cover::new(s, n, opts.substructure);
    if !cover.feasible() {
        return Ok(None);
    }
    let mut budget_hit = false;
    for attempt in 0..opts.restarts.max(1) {
        let attempt_seed = if attempt == 0 {
            opts.seed
        } else {
            seed::derive_indexed(opts.seed, "complete-restart", attempt as u64)
        };
        cover.set_priority(attempt_seed, n);
        let mut budget = Budget::nodes(opts.nodes_per_attempt).with_deadline(opts.deadline);
        let mut c = cover.clone();
        match c.solve(&mut budget, true) {
            Ok(true) => {
                let blocks: Vec<[usize; 3]> = c.added;
                let mut all: Vec<[usize; 3]> = s
                    .blocks()
                    .iter()
                    .map(|b| b.map(|p| p.index()))
                    .collect();
                all.extend(blocks);
                let t = PartialSts::from_indexed(names, &all)?;
                debug_assert!(t.is_total());
                return Ok(Some(t));
            }
            Ok(false) => return Ok(None),
            Err(Error::BudgetExceeded) => budget_hit = true,
            Err(e) => return Err(e),
        }
    }
    if budget_hit {
        Err(Error::BudgetExceeded)
    } else {
        Ok(None)
    }
}

#[derive(Clone)]
struct Cover {
    n: usize,
    words: usize,
    /// `free[x]` has bit `y` iff the pair `{x, y}` is still uncovered.
    free: Vec<Vec<u64>>,
    /// Points of the input system; no new block may lie inside it.
    original: Vec<u64>,
    is_original: Vec<bool>,
    rank: Vec<usize>,
    by_rank: Vec<usize>,
    uncovered: usize,
    added: Vec<[usize; 3]>,
}

impl Cover {
    fn new(s: &PartialSts, n: usize, substructure: bool) -> Self {
        let words = n.div_ceil(64).max(1);
        let mut free = vec![vec![0u64; words]; n];
        for x in 0..n {
            for y in 0..n {
                if x != y {
                    free[x][y / 64] |= 1 << (y % 64);
                }
            }
        }
        let mut uncovered = n * n.saturating_sub(1) / 2;
        for b in s.blocks() {
            let [x, y, z] = b.map(|p| p.index());
            for (u, v) in [(x, y), (x, z), (y, z)] {
                free[u][v / 64] &= !(1 << (v % 64));
                free[v][u / 64] &= !(1 << (u % 64));
                uncovered -= 1;
            }
        }
        let mut original = vec![0u64; words];
        for i in 0..s.len() {
            original[i / 64] |= 1 << (i % 64);
        }
        let mut is_original = vec![false; n];
        if substructure {
            is_original[..s.len()].fill(true);
        } else {
            original.fill(0);
        }
        Self {
            n,
            words,
            free,
            original,
            is_original,
            rank: (0..n).collect(),
            by_rank: (0..n).collect(),
            uncovered,
            added: Vec::new(),
        }
    }

    /// Parity of uncovered degrees, and enough fresh points for the
    /// uncovered pairs inside the original system.
    fn feasible(&self) -> bool {
        let fresh = self.is_original.iter().filter(|o| !**o).count();
        (0..self.n).all(|x| {
            let deg: u32 = self.free[x].iter().map(|w| w.count_ones()).sum();
            if deg % 2 == 1 {
                return false;
            }
            if self.is_original[x] {
                let inside: u32 = self.free[x]
                    .iter()
                    .zip(&self.original)
                    .map(|(w, o)| (w & o).count_ones())
                    .sum();
                inside as usize <= fresh
            } else {
                true
            }
        })
    }

    fn set_priority(&mut self, seed: u64, n: usize) {
        self.by_rank = (0..n).collect();
        if seed != 0 {
            let mut rng = seed::rng(seed, "complete-order");
            self.by_rank.shuffle(&mut rng);
        }
        for (r, &p) in self.by_rank.iter().enumerate() {
            self.rank[p] = r;
        }
    }

    fn candidates(&self, x: usize, y: usize, out: &mut Vec<u64>) {
        out.clear();
        let both = self.is_original[x] && self.is_original[y];
        for w in 0..self.words {
            let mut m = self.free[x][w] & self.free[y][w];
            if both {
                m &= !self.original[w];
            }
            out.push(m);
        }
    }

    fn count(mask: &[u64]) -> u32 {
        mask.iter().map(|w| w.count_ones()).sum()
    }

    fn toggle(&mut self, t: [usize; 3]) {
        let [x, y, z] = t;
        for (u, v) in [(x, y), (x, z), (y, z)] {
            self.free[u][v / 64] ^= 1 << (v % 64);
            self.free[v][u / 64] ^= 1 << (u % 64);
        }
    }

    fn first_pair(&self) -> Option<(usize, usize)> {
        (0..self.n)
            .flat_map(|x| (x + 1..self.n).map(move |y| (x, y)))
            .find(|&(x, y)| self.free[x][y / 64] >> (y % 64) & 1 == 1)
    }

    /// Uncovered pair with the fewest candidate thirds, ties to the least pair.
    fn tightest_pair(&self, scratch: &mut Vec<u64>) -> Option<(usize, usize, u32)> {
        let mut best: Option<(usize, usize, u32)> = None;
        for x in 0..self.n {
            for w in x / 64..self.words {
                let mut m = self.free[x][w];
                if w == x / 64 {
                    m &= !((2u64 << (x % 64)) - 1);
                }
                while m != 0 {
                    let y = w * 64 + m.trailing_zeros() as usize;
                    m &= m - 1;
                    self.candidates(x, y, scratch);
                    let c = Self::count(scratch);
                    if best.is_none_or(|(_, _, b)| c < b) {
                        best = Some((x, y, c));
                        if c <= 1 {
                            return best;
                        }
                    }
                }
            }
        }
        best
    }

    fn solve(&mut self, budget: &mut Budget, root: bool) -> Result<bool> {
        budget.tick()?;
        if self.uncovered == 0 {
            return Ok(true);
        }
        let mut scratch = Vec::with_capacity(self.words);
        let (x, y) = if root {
            self.first_pair().expect("uncovered pairs remain")
        } else {
            match self.tightest_pair(&mut scratch) {
                Some((_, _, 0)) | None => return Ok(false),
                Some((x, y, _)) => (x, y),
            }
        };
        self.candidates(x, y, &mut scratch);
        let mut cands: Vec<usize> = Vec::new();
        for (w, &m) in scratch.iter().enumerate() {
            let mut m = m;
            while m != 0 {
                cands.push(w * 64 + m.trailing_zeros() as usize);
                m &= m - 1;
            }
        }
        cands.sort_by_key(|&z| self.rank[z]);
        for z in cands {
            let t = [x, y, z];
            self.toggle(t);
            self.uncovered -= 3;
            self.added.push(t);
            if self.solve(budget, false)? {
                return Ok(true);
            }
            self.added.pop();
            self.uncovered += 3;
            self.toggle(t);
        }
        Ok(false)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testing::fano;

    #[test]
    fn free_step_on_three_points() {
        let s = PartialSts::discrete(["a", "b", "c"]).unwrap();
        let one = free_step(&s, 1);
        assert_eq!(one.len(), 6);
        assert_eq!(one.blocks().len(), 3);
        assert!(one.point("a*b#1").is_some());
        assert!(one.has_substructure(&s));
        let two = free_truncation(&s, 2);
        assert_eq!(two.len(), 12);
        assert!(two.has_substructure(&one));
    }

    #[test]
    fn free_step_fixpoints() {
        assert_eq!(free_step(&fano(), 1), fano());
        let pair = PartialSts::discrete(["a", "b"]).unwrap();
        let one = free_step(&pair, 1);
        assert_eq!(one.len(), 3);
        assert_eq!(free_step(&one, 2), one);
    }

    #[test]
    fn fresh_name_collisions_are_avoided() {
        let s = PartialSts::discrete(["a", "b", "a*b#1"]).unwrap();
        let one = free_step(&s, 1);
        assert!(one.point("a*b#1'").is_some());
    }

    #[test]
    fn admissible() {
        assert_eq!(admissible_orders(1, 21), [1, 3, 7, 9, 13, 15, 19, 21]);
        assert!(admissible_orders(4, 6).is_empty());
        assert_eq!(admissible_orders(7, 7), [7]);
    }

    #[test]
    fn empty_seven_points_gives_fano() {
        let s = PartialSts::discrete((1..=7).map(|i| i.to_string())).unwrap();
        let mut opts = CompletionOptions::new(7, 0);
        opts.substructure = false;
        assert_eq!(complete_with(&s, &opts).unwrap(), fano());
        let t = complete_finite(&s, 15, 0).unwrap();
        assert_eq!(t.len(), 15);
        assert!(t.has_substructure(&s));
    }

    #[test]
    fn total_input_is_unchanged() {
        assert_eq!(complete_finite(&fano(), 30, 5).unwrap(), fano());
    }

    #[test]
    fn fano_minus_a_point() {
        let f = fano();
        let six: Vec<_> = f.points().filter(|p| f.name(*p) != "7").collect();
        let s = f.restrict(&six);
        assert_eq!(s.blocks().len(), 4);
        let t = complete_finite(&s, 7, 0).unwrap();
        assert_eq!(t.len(), 7);
        assert!(t.has_substructure(&s));
    }

    #[test]
    fn triangle_needs_fresh_points_for_its_pairs() {
        let s = PartialSts::discrete(["a", "b", "c"]).unwrap();
        let t = complete_finite(&s, 9, 3).unwrap();
        assert!(t.is_total());
        assert!(t.has_substructure(&s));
        assert_eq!(t.len(), 7);
    }

    #[test]
    fn bound_too_small() {
        let s = PartialSts::discrete((0..8).map(|i| format!("p{i}"))).unwrap();
        assert_eq!(
            complete_finite(&s, 8, 0).unwrap_err(),
            Error::NoCompletionWithinBound(8)
        );
    }

    #[test]
    fn seeds_are_deterministic() {
        let s = PartialSts::discrete((0..5).map(|i| format!("p{i}"))).unwrap();
        let a = complete_finite(&s, 15, 42).unwrap();
        let b = complete_finite(&s, 15, 42).unwrap();
        assert_eq!(a, b);
    }
}
