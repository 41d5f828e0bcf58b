//! Level-by-level search through the tree of partial `k`-colorings of an enumeration prefix,
//! pruning every node that already carries a pairwise monochromatic solution.

use std::collections::HashSet;

use indexmap::IndexMap;
use serde::Serialize;

use crate::abelian::{self, Element, GroupSpec};
use crate::error::{Error, Result};
use crate::straus::{EquationSpec, TableColoring};
use crate::verify::{ambient, lift};

#[derive(Clone, Debug)]
struct Node {
    colors: Vec<u32>,
    // Per slot: all f_i(x) - f_i(y) over same-colored pairs of colored elements.
    diffs: Vec<HashSet<Element>>,
}

#[derive(Clone, Debug)]
pub struct ColoringTree {
    spec: GroupSpec,
    amb: GroupSpec,
    eq: EquationSpec,
    k: u32,
    symmetry: bool,
    elements: Vec<Element>,
    // images[slot][i] = lifted f_slot(elements[i])
    images: Vec<Vec<Element>>,
    target: Element,
    frontier: Vec<Node>,
    levels: Vec<Vec<Vec<u32>>>,
    died_at: Option<usize>,
}

/// `{levels, died_at?, path?}`.
#[derive(Clone, PartialEq, Debug, Serialize)]
pub struct TreeReport {
    pub levels: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub died_at: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<Vec<u32>>,
}

impl ColoringTree {
    /// A tree at level 0: one empty node. With `symmetry`, color sequences are kept in canonical
    /// form (each new color is the least unused one), which preserves emptiness.
    pub fn new(spec: &GroupSpec, eq: EquationSpec, k: u32, symmetry: bool) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidArgument("need at least one color".into()));
        }
        let amb = ambient(spec);
        let target = lift(spec, &eq.b)?;
        let slots = if eq.uniform_maps() { 1 } else { eq.n };
        Ok(ColoringTree {
            spec: spec.clone(),
            amb,
            eq,
            k,
            symmetry,
            elements: Vec::new(),
            images: vec![Vec::new(); slots],
            target,
            frontier: vec![Node {
                colors: Vec::new(),
                diffs: vec![HashSet::new(); slots],
            }],
            levels: vec![vec![Vec::new()]],
            died_at: None,
        })
    }

    pub fn level(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn died_at(&self) -> Option<usize> {
        self.died_at
    }

    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    fn slot_of(&self, t: usize) -> usize {
        t.min(self.images.len() - 1)
    }

    fn push_element(&mut self, x: Element) -> Result<()> {
        for slot in 0..self.images.len() {
            let fx = match self.eq.map(slot) {
                Some(f) => f.apply(&self.spec, &x)?,
                None => x.clone(),
            };
            let lifted = lift(&self.spec, &fx)?;
            self.images[slot].push(lifted);
        }
        self.elements.push(x);
        Ok(())
    }

    /// Advances the frontier to `target` levels. Fails with [`Error::TreeDied`] at the first
    /// empty level; levels before it stay available.
    pub fn grow(&mut self, target: usize) -> Result<()> {
        if let Some(level) = self.died_at {
            return Err(Error::TreeDied { level });
        }
        if let GroupSpec::Cyclic(m) = self.spec {
            if target as u64 > m {
                return Err(Error::InvalidArgument(format!(
                    "depth {target} exceeds the group order {m}"
                )));
            }
        }
        if target > self.elements.len() {
            let all = abelian::enumerate(&self.spec, target)?;
            for x in all.into_iter().skip(self.elements.len()) {
                self.push_element(x)?;
            }
        }
        while self.level() < target {
            let pos = self.level();
            let mut next = Vec::new();
            for node in &self.frontier {
                let used = node.colors.iter().max().map_or(0, |c| c + 1);
                let limit = if self.symmetry {
                    (used + 1).min(self.k)
                } else {
                    self.k
                };
                for c in 0..limit {
                    if let Some(child) = self.extend(node, pos, c)? {
                        next.push(child);
                    }
                }
            }
            self.levels
                .push(next.iter().map(|n| n.colors.clone()).collect());
            self.frontier = next;
            if self.frontier.is_empty() {
                self.died_at = Some(self.level());
                return Err(Error::TreeDied {
                    level: self.level(),
                });
            }
        }
        Ok(())
    }

    // Colors element `pos` with `c`; `None` if that creates a solution.
    fn extend(&self, node: &Node, pos: usize, c: u32) -> Result<Option<Node>> {
        let mut diffs = node.diffs.clone();
        let mut fresh: Vec<Vec<Element>> = vec![Vec::new(); diffs.len()];
        for (slot, set) in diffs.iter_mut().enumerate() {
            let img = &self.images[slot];
            let mut candidates = vec![abelian::sub(&self.amb, &img[pos], &img[pos])?];
            for (i, ci) in node.colors.iter().enumerate() {
                if *ci == c {
                    candidates.push(abelian::sub(&self.amb, &img[pos], &img[i])?);
                    candidates.push(abelian::sub(&self.amb, &img[i], &img[pos])?);
                }
            }
            for d in candidates {
                if set.insert(d.clone()) {
                    fresh[slot].push(d);
                }
            }
        }
        // Any new solution uses a fresh difference in some slot t; the other slots draw from the
        // updated sets.
        for t in 0..self.eq.n {
            let s = self.slot_of(t);
            if fresh[s].is_empty() {
                continue;
            }
            let others = self.sumset_except(&diffs, t)?;
            for d in &fresh[s] {
                let need = abelian::sub(&self.amb, &self.target, d)?;
                if others.contains(&need) {
                    return Ok(None);
                }
            }
        }
        let mut colors = node.colors.clone();
        colors.push(c);
        Ok(Some(Node { colors, diffs }))
    }

    fn sumset_except(&self, diffs: &[HashSet<Element>], skip: usize) -> Result<HashSet<Element>> {
        let mut acc: HashSet<Element> = HashSet::from([self.amb.zero()]);
        for t in (0..self.eq.n).filter(|t| *t != skip) {
            let set = &diffs[self.slot_of(t)];
            let mut next = HashSet::with_capacity(acc.len() * set.len().max(1));
            for r in &acc {
                for d in set {
                    next.insert(abelian::add(&self.amb, r, d)?);
                }
            }
            acc = next;
        }
        Ok(acc)
    }

    /// Frontier size at level `m`.
    pub fn level_size(&self, m: usize) -> Result<usize> {
        self.levels
            .get(m)
            .map(Vec::len)
            .ok_or_else(|| Error::InvalidArgument(format!("tree not grown to level {m}")))
    }

    pub fn level_sizes(&self) -> Vec<usize> {
        self.levels.iter().map(Vec::len).collect()
    }

    /// The lexicographically least surviving color sequence at level `m`.
    pub fn leftmost(&self, m: usize) -> Result<&[u32]> {
        let level = self
            .levels
            .get(m)
            .ok_or_else(|| Error::InvalidArgument(format!("tree not grown to level {m}")))?;
        level
            .iter()
            .min()
            .map(Vec::as_slice)
            .ok_or(Error::TreeDied { level: m })
    }

    /// The leftmost node at level `m` as a coloring of the first `m` elements.
    pub fn extract_path(&self, m: usize) -> Result<TableColoring> {
        let colors = self.leftmost(m)?;
        let table: IndexMap<Element, u32> = self.elements[..m]
            .iter()
            .cloned()
            .zip(colors.iter().copied())
            .collect();
        TableColoring::new(self.k, table)
    }

    pub fn report(&self) -> TreeReport {
        let top = self.level();
        TreeReport {
            levels: self.level_sizes(),
            died_at: self.died_at,
            path: if self.died_at.is_none() {
                self.leftmost(top).ok().map(<[u32]>::to_vec)
            } else {
                None
            },
        }
    }
}
