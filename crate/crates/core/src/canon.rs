//! Canonical labeling of (optionally point-colored) partial systems.
//!
//! Equitable refinement on block incidences, then individualization of each
//! vertex of the first non-singleton cell. Leaves are compared by their
//! relabeled encoding and the least one wins. Automorphisms found when two
//! leaves coincide prune siblings in the same orbit of the stabilizer of the
//! current individualization prefix.

use crate::budget::Budget;
use crate::error::Result;
use crate::system::PartialSts;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Canonical {
    /// Deterministic function of the isomorphism class.
    pub label: String,
    /// `labeling[p]` is the canonical position of point id `p`.
    pub labeling: Vec<u32>,
}

pub fn canonical_form(s: &PartialSts) -> Result<String> {
    Ok(canonical_form_colored(s, &vec![0; s.len()], &mut Budget::default())?.label)
}

pub fn canonical_form_colored(
    s: &PartialSts,
    colors: &[u32],
    budget: &mut Budget,
) -> Result<Canonical> {
    assert_eq!(colors.len(), s.len(), "one color per point");
    let mut c = Canon::new(s, colors);
    let start = c.initial_partition();
    c.search(start, &mut Vec::new(), budget)?;
    let (encoding, labeling) = c.best.expect("search visits at least one leaf");
    Ok(Canonical {
        label: render(s.len(), &encoding),
        labeling,
    })
}

pub fn are_isomorphic(a: &PartialSts, b: &PartialSts) -> Result<bool> {
    if a.len() != b.len() || a.blocks().len() != b.blocks().len() {
        return Ok(false);
    }
    Ok(canonical_form(a)? == canonical_form(b)?)
}

fn render(n: usize, enc: &[u32]) -> String {
    let mut out = format!("n={n};c=");
    let (colors, blocks) = enc.split_at(n);
    let cs: Vec<String> = colors.iter().map(|c| c.to_string()).collect();
    out.push_str(&cs.join("."));
    out.push_str(";b=");
    let bs: Vec<String> = blocks
        .chunks(3)
        .map(|b| format!("{}.{}.{}", b[0], b[1], b[2]))
        .collect();
    out.push_str(&bs.join(","));
    out
}

struct Canon<'a> {
    s: &'a PartialSts,
    colors: &'a [u32],
    incident: Vec<Vec<(u32, u32)>>,
    best: Option<(Vec<u32>, Vec<u32>)>,
    first: Option<(Vec<u32>, Vec<u32>)>,
    automorphisms: Vec<Vec<u32>>,
}

impl<'a> Canon<'a> {
    fn new(s: &'a PartialSts, colors: &'a [u32]) -> Self {
        let mut incident = vec![Vec::new(); s.len()];
        for b in s.blocks() {
            let [x, y, z] = b.map(|p| p.0);
            incident[x as usize].push((y, z));
            incident[y as usize].push((x, z));
            incident[z as usize].push((x, y));
        }
        Self {
            s,
            colors,
            incident,
            best: None,
            first: None,
            automorphisms: Vec::new(),
        }
    }

    fn initial_partition(&self) -> Vec<u32> {
        let mut distinct: Vec<u32> = self.colors.to_vec();
        distinct.sort_unstable();
        distinct.dedup();
        let cells = self
            .colors
            .iter()
            .map(|c| distinct.binary_search(c).unwrap() as u32)
            .collect();
        self.refine(cells)
    }

    /// Dense cell indices ordered by an isomorphism-invariant key.
    fn refine(&self, mut cell: Vec<u32>) -> Vec<u32> {
        let n = cell.len();
        let mut count = distinct_count(&cell);
        loop {
            if count == n {
                return cell;
            }
            let mut sigs: Vec<(u32, Vec<(u32, u32)>, usize)> = (0..n)
                .map(|x| {
                    let mut nb: Vec<(u32, u32)> = self.incident[x]
                        .iter()
                        .map(|&(y, z)| {
                            let (a, b) = (cell[y as usize], cell[z as usize]);
                            (a.min(b), a.max(b))
                        })
                        .collect();
                    nb.sort_unstable();
                    (cell[x], nb, x)
                })
                .collect();
            sigs.sort_unstable_by(|a, b| (a.0, &a.1).cmp(&(b.0, &b.1)));
            let mut next = vec![0u32; n];
            let mut id = 0u32;
            for i in 0..n {
                if i > 0 && (sigs[i].0, &sigs[i].1) != (sigs[i - 1].0, &sigs[i - 1].1) {
                    id += 1;
                }
                next[sigs[i].2] = id;
            }
            let new_count = id as usize + 1;
            cell = next;
            if new_count == count {
                return cell;
            }
            count = new_count;
        }
    }

    fn encode(&self, lab: &[u32]) -> Vec<u32> {
        let n = lab.len();
        let mut colors = vec![0u32; n];
        for (p, &l) in lab.iter().enumerate() {
            colors[l as usize] = self.colors[p];
        }
        let mut blocks: Vec<[u32; 3]> = self
            .s
            .blocks()
            .iter()
            .map(|b| {
                let mut t = b.map(|p| lab[p.index()]);
                t.sort_unstable();
                t
            })
            .collect();
        blocks.sort_unstable();
        let mut enc = colors;
        enc.extend(blocks.into_iter().flatten());
        enc
    }

    fn record_automorphism(&mut self, a: &[u32], b: &[u32]) {
        // p -> q where a[p] = b[q].
        let n = a.len();
        let mut inv_b = vec![0u32; n];
        for (q, &l) in b.iter().enumerate() {
            inv_b[l as usize] = q as u32;
        }
        let perm: Vec<u32> = a.iter().map(|&l| inv_b[l as usize]).collect();
        if perm.iter().enumerate().any(|(i, &p)| i as u32 != p) {
            self.automorphisms.push(perm);
        }
    }

    fn search(&mut self, cell: Vec<u32>, prefix: &mut Vec<u32>, budget: &mut Budget) -> Result<()> {
        budget.tick()?;
        let n = cell.len();
        if distinct_count(&cell) == n {
            let enc = self.encode(&cell);
            let mut found_auto = None;
            if let Some((fe, fl)) = &self.first {
                if *fe == enc {
                    found_auto = Some(fl.clone());
                }
            }
            match &self.best {
                Some((be, bl)) if *be == enc => {
                    if found_auto.is_none() {
                        found_auto = Some(bl.clone());
                    }
                }
                Some((be, _)) if enc < *be => self.best = Some((enc.clone(), cell.clone())),
                None => self.best = Some((enc.clone(), cell.clone())),
                _ => {}
            }
            if self.first.is_none() {
                self.first = Some((enc, cell.clone()));
            }
            if let Some(other) = found_auto {
                self.record_automorphism(&cell, &other);
            }
            return Ok(());
        }
        // Smallest non-singleton cell index.
        let mut sizes = vec![0usize; n];
        for &c in &cell {
            sizes[c as usize] += 1;
        }
        let target = sizes.iter().position(|&s| s > 1).unwrap() as u32;
        let members: Vec<u32> = (0..n as u32).filter(|&x| cell[x as usize] == target).collect();
        let mut explored: Vec<u32> = Vec::new();
        for &v in &members {
            if explored
                .iter()
                .any(|&w| self.same_orbit(prefix, w, v))
            {
                continue;
            }
            explored.push(v);
            let split: Vec<u32> = (0..n)
                .map(|x| 2 * cell[x] + u32::from(cell[x] == target && x as u32 != v))
                .collect();
            let mut dense = split.clone();
            dense.sort_unstable();
            dense.dedup();
            let next: Vec<u32> = split
                .iter()
                .map(|c| dense.binary_search(c).unwrap() as u32)
                .collect();
            prefix.push(v);
            let r = self.search(self.refine(next), prefix, budget);
            prefix.pop();
            r?;
        }
        Ok(())
    }

    /// Whether some product of recorded automorphisms fixing `prefix`
    /// pointwise maps `w` to `v`.
    fn same_orbit(&self, prefix: &[u32], w: u32, v: u32) -> bool {
        let gens: Vec<&Vec<u32>> = self
            .automorphisms
            .iter()
            .filter(|g| prefix.iter().all(|&p| g[p as usize] == p))
            .collect();
        if gens.is_empty() {
            return false;
        }
        let mut seen = vec![false; self.s.len()];
        let mut stack = vec![w];
        seen[w as usize] = true;
        while let Some(x) = stack.pop() {
            if x == v {
                return true;
            }
            for g in &gens {
                let y = g[x as usize];
                if !seen[y as usize] {
                    seen[y as usize] = true;
                    stack.push(y);
                }
            }
        }
        false
    }
}

fn distinct_count(cell: &[u32]) -> usize {
    let mut seen = vec![false; cell.len()];
    let mut n = 0;
    for &c in cell {
        if !std::mem::replace(&mut seen[c as usize], true) {
            n += 1;
        }
    }
    n
}
