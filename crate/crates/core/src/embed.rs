//! Injective block-preserving maps between partial systems.
//!
//! Assigning a point immediately forces the images of its products with
//! already-assigned points, so the assigned set is always closed under the
//! source's defined products. Branching picks the unassigned source point with
//! the fewest surviving candidates (ties to the smaller id).

use std::ops::ControlFlow;

use crate::budget::Budget;
use crate::error::{Error, Result};
use crate::system::{PartialSts, PointId};

const FREE: u32 = u32::MAX;

/// A map from source point ids to target point ids, indexed by source id.
pub type Embedding = Vec<PointId>;

struct Search<'a> {
    source: &'a PartialSts,
    target: &'a PartialSts,
    substructure: bool,
    image: Vec<u32>,
    preimage: Vec<u32>,
    trail: Vec<PointId>,
}

impl<'a> Search<'a> {
    fn new(source: &'a PartialSts, target: &'a PartialSts, substructure: bool) -> Self {
        Self {
            source,
            target,
            substructure,
            image: vec![FREE; source.len()],
            preimage: vec![FREE; target.len()],
            trail: Vec::with_capacity(source.len()),
        }
    }

    fn undo_to(&mut self, mark: usize) {
        while self.trail.len() > mark {
            let x = self.trail.pop().unwrap();
            let y = self.image[x.index()];
            self.image[x.index()] = FREE;
            self.preimage[y as usize] = FREE;
        }
    }

    /// Cheap necessary condition for `x -> y` against the current assignment.
    fn admissible(&self, x: PointId, y: PointId) -> bool {
        if self.preimage[y.index()] != FREE {
            return false;
        }
        for &a in &self.trail {
            let fa = PointId(self.image[a.index()]);
            let t = self.target.product(y, fa);
            match self.source.product(x, a) {
                Some(s) => {
                    let Some(t) = t else { return false };
                    let fs = self.image[s.index()];
                    if fs != FREE {
                        if fs != t.0 {
                            return false;
                        }
                    } else if self.preimage[t.index()] != FREE {
                        return false;
                    }
                }
                None => {
                    if self.substructure {
                        if let Some(t) = t {
                            if self.preimage[t.index()] != FREE {
                                return false;
                            }
                        }
                    }
                }
            }
        }
        true
    }

    /// Assigns `x -> y` and everything it forces. On failure the caller undoes.
    fn assign(&mut self, x: PointId, y: PointId) -> bool {
        let fx = self.image[x.index()];
        if fx != FREE {
            return fx == y.0;
        }
        if !self.admissible(x, y) {
            return false;
        }
        let assigned = self.trail.len();
        self.image[x.index()] = y.0;
        self.preimage[y.index()] = x.0;
        self.trail.push(x);
        for i in 0..assigned {
            let a = self.trail[i];
            if let Some(s) = self.source.product(x, a) {
                let t = self
                    .target
                    .product(y, PointId(self.image[a.index()]))
                    .expect("checked by admissible");
                if !self.assign(s, t) {
                    return false;
                }
            }
        }
        true
    }

    fn candidates(&self, x: PointId) -> Vec<PointId> {
        self.target
            .points()
            .filter(|&y| self.admissible(x, y))
            .collect()
    }

    fn run(
        &mut self,
        budget: &mut Budget,
        visit: &mut dyn FnMut(&[PointId]) -> ControlFlow<()>,
    ) -> Result<ControlFlow<()>> {
        budget.tick()?;
        if self.trail.len() == self.source.len() {
            let map: Vec<PointId> = self.image.iter().map(|&y| PointId(y)).collect();
            return Ok(visit(&map));
        }
        let mut best: Option<(PointId, Vec<PointId>)> = None;
        for x in self.source.points() {
            if self.image[x.index()] != FREE {
                continue;
            }
            let cands = self.candidates(x);
            if best.as_ref().is_none_or(|(_, c)| cands.len() < c.len()) {
                let empty = cands.is_empty();
                best = Some((x, cands));
                if empty {
                    break;
                }
            }
        }
        let (x, cands) = best.expect("an unassigned point exists");
        for y in cands {
            let mark = self.trail.len();
            if self.assign(x, y) {
                if let ControlFlow::Break(()) = self.run(budget, visit)? {
                    self.undo_to(mark);
                    return Ok(ControlFlow::Break(()));
                }
            }
            self.undo_to(mark);
        }
        Ok(ControlFlow::Continue(()))
    }
}

/// Calls `visit` on every injective homomorphism `source -> target` extending
/// `base`; with `substructure` set, only maps that also reflect blocks on
/// their image. Stops early when `visit` breaks.
pub fn for_each_embedding(
    source: &PartialSts,
    target: &PartialSts,
    base: &[(PointId, PointId)],
    substructure: bool,
    budget: &mut Budget,
    mut visit: impl FnMut(&[PointId]) -> ControlFlow<()>,
) -> Result<()> {
    if source.len() > target.len() {
        return Ok(());
    }
    let mut search = Search::new(source, target, substructure);
    for &(x, y) in base {
        if !search.assign(x, y) {
            return Ok(());
        }
    }
    let _ = search.run(budget, &mut visit)?;
    Ok(())
}

pub fn find_embeddings(
    source: &PartialSts,
    target: &PartialSts,
    base: &[(PointId, PointId)],
    substructure: bool,
    limit: Option<usize>,
    budget: &mut Budget,
) -> Result<Vec<Embedding>> {
    let mut out = Vec::new();
    for_each_embedding(source, target, base, substructure, budget, |m| {
        out.push(m.to_vec());
        if limit.is_some_and(|l| out.len() >= l) {
            ControlFlow::Break(())
        } else {
            ControlFlow::Continue(())
        }
    })?;
    Ok(out)
}

pub fn find_embedding(
    source: &PartialSts,
    target: &PartialSts,
    base: &[(PointId, PointId)],
    substructure: bool,
    budget: &mut Budget,
) -> Result<Option<Embedding>> {
    Ok(find_embeddings(source, target, base, substructure, Some(1), budget)?.pop())
}

pub fn count_embeddings(
    source: &PartialSts,
    target: &PartialSts,
    substructure: bool,
    budget: &mut Budget,
) -> Result<u64> {
    let mut n = 0u64;
    for_each_embedding(source, target, &[], substructure, budget, |_| {
        n += 1;
        ControlFlow::Continue(())
    })?;
    Ok(n)
}

/// Checks that `map` (source id -> target id) is an injective homomorphism.
pub fn verify_homomorphism(
    source: &PartialSts,
    target: &PartialSts,
    map: &[PointId],
    substructure: bool,
) -> Result<()> {
    let mut seen = vec![false; target.len()];
    for &y in map {
        if std::mem::replace(&mut seen[y.index()], true) {
            return Err(Error::VerificationFailed(format!(
                "map is not injective at {}",
                target.name(y)
            )));
        }
    }
    for b in source.blocks() {
        let img = b.map(|p| map[p.index()]);
        if target.product(img[0], img[1]) != Some(img[2]) {
            return Err(Error::NotAHomomorphism(
                b.iter().map(|&p| source.name(p).to_string()).collect(),
            ));
        }
    }
    if substructure {
        let mut pre = vec![None; target.len()];
        for (x, &y) in map.iter().enumerate() {
            pre[y.index()] = Some(PointId(x as u32));
        }
        for b in target.blocks() {
            if let [Some(x), Some(y), Some(z)] = b.map(|p| pre[p.index()]) {
                if source.product(x, y) != Some(z) {
                    return Err(Error::VerificationFailed(format!(
                        "target block {{{}, {}, {}}} is not reflected",
                        target.name(b[0]),
                        target.name(b[1]),
                        target.name(b[2])
                    )));
                }
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testing::fano;

    #[test]
    fn block_into_fano() {
        let block = PartialSts::build(&["x", "y", "z"], &[["x", "y", "z"]]).unwrap();
        let f = fano();
        let n = count_embeddings(&block, &f, false, &mut Budget::unlimited()).unwrap();
        assert_eq!(n, 42);
        assert_eq!(
            count_embeddings(&block, &f, true, &mut Budget::unlimited()).unwrap(),
            42
        );
    }

    #[test]
    fn fano_automorphisms() {
        let f = fano();
        let all = find_embeddings(&f, &f, &[], true, None, &mut Budget::unlimited()).unwrap();
        assert_eq!(all.len(), 168);
        for m in &all {
            verify_homomorphism(&f, &f, m, true).unwrap();
        }
    }

    #[test]
    fn too_many_points() {
        let eight = PartialSts::discrete((0..8).map(|i| format!("p{i}"))).unwrap();
        assert!(find_embedding(&eight, &fano(), &[], false, &mut Budget::unlimited())
            .unwrap()
            .is_none());
    }

    #[test]
    fn substructure_flag_excludes_triangles_in_blocks() {
        let pair = PartialSts::discrete(["x", "y", "z"]).unwrap();
        let f = fano();
        // Every triple of distinct Fano points is a block or a triangle.
        let all = count_embeddings(&pair, &f, false, &mut Budget::unlimited()).unwrap();
        let sub = count_embeddings(&pair, &f, true, &mut Budget::unlimited()).unwrap();
        assert_eq!(all, 7 * 6 * 5);
        assert_eq!(sub, 7 * 6 * 4);
    }

    #[test]
    fn base_is_respected() {
        let block = PartialSts::build(&["x", "y", "z"], &[["x", "y", "z"]]).unwrap();
        let f = fano();
        let base = [
            (block.point("x").unwrap(), f.point("1").unwrap()),
            (block.point("y").unwrap(), f.point("2").unwrap()),
        ];
        let all = find_embeddings(&block, &f, &base, false, None, &mut Budget::unlimited()).unwrap();
        assert_eq!(all.len(), 1);
        assert_eq!(f.name(all[0][2]), "3");
    }

    #[test]
    fn budget_is_enforced() {
        let f = fano();
        assert_eq!(
            count_embeddings(&f, &f, true, &mut Budget::nodes(5)),
            Err(Error::BudgetExceeded)
        );
    }
}
