//! Deciding whether a coloring admits (pairwise) monochromatic solutions, conflict graphs for
//! `x - y = b`, the computable 2/3-colorings, and the constant-solution criterion.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use indexmap::IndexMap;
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::Zero;
use serde::Serialize;

use crate::abelian::{
    self, merge_classes, order_of, scalar_mul, solve_congruence, Element, GroupSpec, OrderValue,
};
use crate::error::{Error, Result};
use crate::straus::{straus_coloring, Coloring, EquationSpec, TableColoring};

/// `(x_1, y_1, …, x_n, y_n)` with `c(x_i) = c(y_i)` and `Σ (f_i(x_i) - f_i(y_i)) = b`.
#[derive(Clone, PartialEq, Debug, Serialize)]
pub struct SolutionTuple {
    #[serde(serialize_with = "ser_pairs")]
    pub pairs: Vec<(Element, Element)>,
    #[serde(serialize_with = "ser_element")]
    pub sum: Element,
}

fn ser_element<S: serde::Serializer>(x: &Element, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&x.to_string())
}

fn ser_pairs<S: serde::Serializer>(
    pairs: &[(Element, Element)],
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(pairs.len()))?;
    for (x, y) in pairs {
        seq.serialize_element(&[x.to_string(), y.to_string()])?;
    }
    seq.end()
}

// Sequence-backed groups are searched inside Z^(ω), where every sum is defined.
pub(crate) fn ambient(spec: &GroupSpec) -> GroupSpec {
    match spec {
        GroupSpec::FreeOmega(_) => GroupSpec::Sequences,
        other => other.clone(),
    }
}

pub(crate) fn lift(spec: &GroupSpec, x: &Element) -> Result<Element> {
    match spec {
        GroupSpec::FreeOmega(_) => Ok(Element::Seq(spec.sequence_of(x)?)),
        _ => Ok(x.clone()),
    }
}

/// Searches for a pairwise monochromatic solution with every `x_i, y_i` in `window`.
///
/// For each slot, the differences `f_i(x) - f_i(y)` over same-colored pairs form a set `D_i`;
/// a solution exists iff `b ∈ D_1 + … + D_n`, which is decided by layered reachability with
/// back-pointers for the witness. A `None` result is exact for the window.
pub fn find_pairwise_mono(
    spec: &GroupSpec,
    coloring: &Coloring,
    eq: &EquationSpec,
    window: &[Element],
) -> Result<Option<SolutionTuple>> {
    let amb = ambient(spec);
    let colors: Vec<u64> = window
        .iter()
        .map(|x| coloring.color(spec, x))
        .collect::<Result<_>>()?;
    let mut classes: HashMap<u64, Vec<usize>> = HashMap::new();
    for (i, c) in colors.iter().enumerate() {
        classes.entry(*c).or_default().push(i);
    }

    let slot_count = if eq.uniform_maps() { 1 } else { eq.n };
    let mut slots: Vec<IndexMap<Element, (usize, usize)>> = Vec::with_capacity(slot_count);
    for slot in 0..slot_count {
        let images: Vec<Element> = window
            .iter()
            .map(|x| {
                let fx = match eq.map(slot) {
                    Some(f) => f.apply(spec, x)?,
                    None => x.clone(),
                };
                lift(spec, &fx)
            })
            .collect::<Result<_>>()?;
        let mut diffs = IndexMap::new();
        for members in classes.values() {
            for &i in members {
                for &j in members {
                    let d = abelian::sub(&amb, &images[i], &images[j])?;
                    diffs.entry(d).or_insert((i, j));
                }
            }
        }
        slots.push(diffs);
    }

    let target = lift(spec, &eq.b)?;
    let zero = amb.zero();
    let slot_of = |t: usize| t.min(slot_count - 1);
    // layers[t] maps each sum reachable with t + 1 pairs to (previous sum, difference used).
    // The last layer is never materialized: `target - r ∈ D_n` is a membership test.
    let mut layers: Vec<HashMap<Element, (Element, Element)>> = Vec::with_capacity(eq.n);
    let mut frontier: Vec<Element> = vec![zero];
    for t in 0..eq.n - 1 {
        let mut next: HashMap<Element, (Element, Element)> = HashMap::new();
        for r in &frontier {
            for d in slots[slot_of(t)].keys() {
                let s = abelian::add(&amb, r, d)?;
                next.entry(s).or_insert_with(|| (r.clone(), d.clone()));
            }
        }
        frontier = next.keys().cloned().collect();
        layers.push(next);
    }
    let last = &slots[slot_of(eq.n - 1)];
    let mut hit = None;
    for r in &frontier {
        let d = abelian::sub(&amb, &target, r)?;
        if last.contains_key(&d) {
            hit = Some((r.clone(), d));
            break;
        }
    }
    let Some((mut cur, d_last)) = hit else {
        return Ok(None);
    };

    let (i, j) = last[&d_last];
    let mut chosen = vec![(window[i].clone(), window[j].clone())];
    for t in (0..eq.n - 1).rev() {
        let (prev, d) = layers[t][&cur].clone();
        let (i, j) = slots[slot_of(t)][&d];
        chosen.push((window[i].clone(), window[j].clone()));
        cur = prev;
    }
    chosen.reverse();
    Ok(Some(SolutionTuple {
        pairs: chosen,
        sum: eq.b.clone(),
    }))
}

/// The search domain of a verification run.
#[derive(Clone, PartialEq, Debug, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Window {
    /// The whole of a finite group: a `none` result is a proof.
    Full { size: u64 },
    /// Integers in `[lo, hi]`: a `none` result is evidence only.
    Interval { lo: i64, hi: i64 },
    /// An explicit list of elements, e.g. a constructed carrier.
    Explicit { size: usize },
}

impl Window {
    pub fn elements(&self, spec: &GroupSpec) -> Result<Vec<Element>> {
        match (self, spec) {
            (Window::Full { .. }, GroupSpec::Cyclic(m)) => {
                Ok((0..*m).map(Element::Residue).collect())
            }
            (Window::Interval { lo, hi }, GroupSpec::Integers) => {
                Ok((*lo..=*hi).map(Element::int).collect())
            }
            _ => Err(Error::InvalidArgument(format!(
                "window {self:?} cannot be materialized for {spec}"
            ))),
        }
    }

    /// Full group for finite groups, `[-radius, radius]` for the integers.
    pub fn default_for(spec: &GroupSpec, radius: i64) -> Result<Self> {
        match spec {
            GroupSpec::Cyclic(m) => Ok(Window::Full { size: *m }),
            GroupSpec::Integers => Ok(Window::Interval {
                lo: -radius,
                hi: radius,
            }),
            other => Err(Error::Unsupported(format!(
                "no default window for {other}; pass explicit elements"
            ))),
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    None,
    Found,
}

/// `{result, window, witness?}`.
#[derive(Clone, PartialEq, Debug, Serialize)]
pub struct VerificationReport {
    pub result: Outcome,
    pub window: Window,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<SolutionTuple>,
}

impl VerificationReport {
    pub fn is_none(&self) -> bool {
        self.result == Outcome::None
    }
}

pub fn verify_coloring(
    spec: &GroupSpec,
    coloring: &Coloring,
    eq: &EquationSpec,
    window: Window,
) -> Result<VerificationReport> {
    let elements = window.elements(spec)?;
    report_for(spec, coloring, eq, window, &elements)
}

pub fn verify_on(
    spec: &GroupSpec,
    coloring: &Coloring,
    eq: &EquationSpec,
    elements: &[Element],
) -> Result<VerificationReport> {
    let window = Window::Explicit {
        size: elements.len(),
    };
    report_for(spec, coloring, eq, window, elements)
}

fn report_for(
    spec: &GroupSpec,
    coloring: &Coloring,
    eq: &EquationSpec,
    window: Window,
    elements: &[Element],
) -> Result<VerificationReport> {
    let witness = find_pairwise_mono(spec, coloring, eq, elements)?;
    Ok(VerificationReport {
        result: if witness.is_some() {
            Outcome::Found
        } else {
            Outcome::None
        },
        window,
        witness,
    })
}

/// True iff all `l·m·b` with `|l| ≤ bound` share one color.
pub fn check_lmb_condition(
    spec: &GroupSpec,
    coloring: &Coloring,
    b: &Element,
    m: u64,
    bound: u64,
) -> Result<bool> {
    if m == 0 {
        return Err(Error::InvalidArgument("period m must be positive".into()));
    }
    let bound = bound as i64;
    let mut first = None;
    for l in -bound..=bound {
        let x = scalar_mul(spec, &(BigInt::from(l) * BigInt::from(m)), b)?;
        let c = coloring.color(spec, &x)?;
        match first {
            None => first = Some(c),
            Some(f) if f != c => return Ok(false),
            _ => {}
        }
    }
    Ok(true)
}

/// Vertices are window elements; `u` and `v` are adjacent iff `u - v = ±b`.
#[derive(Clone, Debug)]
pub struct ConflictGraph {
    pub vertices: Vec<Element>,
    pub edges: Vec<(usize, usize)>,
    adjacency: Vec<Vec<usize>>,
}

impl ConflictGraph {
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    pub fn max_degree(&self) -> usize {
        (0..self.vertices.len())
            .map(|v| self.degree(v))
            .max()
            .unwrap_or(0)
    }

    /// Connected components as sorted vertex-index lists.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.vertices.len()];
        let mut out = Vec::new();
        for start in 0..self.vertices.len() {
            if seen[start] {
                continue;
            }
            seen[start] = true;
            let mut comp = vec![start];
            let mut queue = VecDeque::from([start]);
            while let Some(v) = queue.pop_front() {
                for &u in &self.adjacency[v] {
                    if !seen[u] {
                        seen[u] = true;
                        comp.push(u);
                        queue.push_back(u);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    /// Edge count inside a component.
    pub fn component_edges(&self, comp: &[usize]) -> usize {
        comp.iter().map(|v| self.degree(*v)).sum::<usize>() / 2
    }
}

fn sum_if_defined(spec: &GroupSpec, x: &Element, y: &Element) -> Result<Option<Element>> {
    match abelian::add(spec, x, y) {
        Ok(s) => Ok(Some(s)),
        Err(Error::NeedMoreStages(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

pub fn conflict_graph(spec: &GroupSpec, b: &Element, window: &[Element]) -> Result<ConflictGraph> {
    if *b == spec.zero() {
        return Err(Error::ZeroElement);
    }
    let index: HashMap<&Element, usize> = window.iter().enumerate().map(|(i, x)| (x, i)).collect();
    let mut edges = Vec::new();
    let mut seen = HashSet::new();
    let mut adjacency = vec![Vec::new(); window.len()];
    for (i, x) in window.iter().enumerate() {
        let Some(y) = sum_if_defined(spec, x, b)? else {
            continue;
        };
        if let Some(&j) = index.get(&y) {
            let e = (i.min(j), i.max(j));
            if i != j && seen.insert(e) {
                edges.push(e);
                adjacency[i].push(j);
                adjacency[j].push(i);
            }
        }
    }
    Ok(ConflictGraph {
        vertices: window.to_vec(),
        edges,
        adjacency,
    })
}

/// BFS 2-coloring per component; `None` exactly when an odd cycle exists.
pub fn two_color_bipartite(graph: &ConflictGraph) -> Option<TableColoring> {
    let mut color: Vec<Option<u32>> = vec![None; graph.vertices.len()];
    for start in 0..graph.vertices.len() {
        if color[start].is_some() {
            continue;
        }
        color[start] = Some(0);
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            let cv = color[v].expect("queued vertices are colored");
            for &u in graph.neighbors(v) {
                match color[u] {
                    None => {
                        color[u] = Some(1 - cv);
                        queue.push_back(u);
                    }
                    Some(cu) if cu == cv => return None,
                    _ => {}
                }
            }
        }
    }
    let colors = graph
        .vertices
        .iter()
        .cloned()
        .zip(color.into_iter().map(|c| c.expect("all visited")))
        .collect();
    Some(TableColoring { k: 2, colors })
}

/// Colors the first `count` elements of the canonical enumeration in order, giving each the
/// least color not used by its (at most two) already-colored neighbours `x ± b`.
pub fn greedy_color(
    spec: &GroupSpec,
    b: &Element,
    count: usize,
    palette: u32,
) -> Result<TableColoring> {
    if palette < 3 {
        return Err(Error::InvalidArgument(format!(
            "greedy coloring needs at least 3 colors, got {palette}"
        )));
    }
    if *b == spec.zero() {
        return Err(Error::ZeroElement);
    }
    let stream = abelian::enumerate(spec, count)?;
    let neg_b = abelian::neg(spec, b)?;
    let mut colors: IndexMap<Element, u32> = IndexMap::with_capacity(stream.len());
    for x in stream {
        let mut taken = vec![false; palette as usize];
        for nb in [b, &neg_b] {
            if let Some(y) = sum_if_defined(spec, &x, nb)? {
                if let Some(&c) = colors.get(&y) {
                    taken[c as usize] = true;
                }
            }
        }
        let c = (0..palette)
            .find(|c| !taken[*c as usize])
            .expect("at most two neighbours, so one of three colors is free");
        colors.insert(x, c);
    }
    Ok(TableColoring { k: palette, colors })
}

/// A proper coloring of `Z_m` for `x - y = b`: two colors when `ord b` is even, three when odd.
pub fn finite_order_coloring(spec: &GroupSpec, b: &Element) -> Result<TableColoring> {
    let GroupSpec::Cyclic(m) = spec else {
        return Err(Error::Unsupported(format!(
            "finite-order colorings are built for cyclic groups, not {spec}"
        )));
    };
    let ord = order_of(spec, b)?;
    let elements: Vec<Element> = (0..*m).map(Element::Residue).collect();
    let table = if ord.is_even_or_infinite() {
        let graph = conflict_graph(spec, b, &elements)?;
        two_color_bipartite(&graph).expect("even-order conflict cycles are bipartite")
    } else {
        greedy_color(spec, b, *m as usize, 3)?
    };
    let eq = EquationSpec::new(1, b.clone())?;
    debug_assert!(
        find_pairwise_mono(spec, &Coloring::Table(table.clone()), &eq, &elements)?.is_none()
    );
    Ok(table)
}

/// Coefficient ring of a linear system.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Ring {
    Integers,
    Cyclic(u64),
}

impl FromStr for Ring {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.parse::<GroupSpec>()? {
            GroupSpec::Integers => Ok(Ring::Integers),
            GroupSpec::Cyclic(m) => Ok(Ring::Cyclic(m)),
            other => Err(Error::Unsupported(format!("ring {other}"))),
        }
    }
}

impl fmt::Display for Ring {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ring::Integers => write!(f, "Z"),
            Ring::Cyclic(m) => write!(f, "Zm:{m}"),
        }
    }
}

impl Ring {
    pub fn group(&self) -> Result<GroupSpec> {
        match self {
            Ring::Integers => Ok(GroupSpec::Integers),
            Ring::Cyclic(m) => GroupSpec::cyclic(*m),
        }
    }
}

/// A `t` with `(row sum)·t = b_i` for every row, or `None`. Rows with zero sum force `b_i = 0`.
pub fn constant_solution(
    matrix: &[Vec<BigInt>],
    rhs: &[BigInt],
    ring: Ring,
) -> Result<Option<BigInt>> {
    if matrix.len() != rhs.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} rows but {} right-hand sides",
            matrix.len(),
            rhs.len()
        )));
    }
    if let Some(width) = matrix.first().map(Vec::len) {
        if let Some(row) = matrix.iter().position(|r| r.len() != width) {
            return Err(Error::DimensionMismatch(format!(
                "row {} has {} entries, expected {width}",
                row + 1,
                matrix[row].len()
            )));
        }
    }
    let sums: Vec<BigInt> = matrix.iter().map(|r| r.iter().sum()).collect();
    let t = match ring {
        Ring::Integers => {
            let mut t: Option<BigInt> = None;
            for (s, b) in sums.iter().zip(rhs) {
                if s.is_zero() {
                    if !b.is_zero() {
                        return Ok(None);
                    }
                    continue;
                }
                if !(b % s).is_zero() {
                    return Ok(None);
                }
                let q = b / s;
                match &t {
                    Some(prev) if *prev != q => return Ok(None),
                    _ => t = Some(q),
                }
            }
            t.unwrap_or_default()
        }
        Ring::Cyclic(m) => {
            let modulus = BigInt::from(m);
            let mut class = (BigInt::zero(), BigInt::from(1));
            for (s, b) in sums.iter().zip(rhs) {
                let Some(r) = solve_congruence(s, b, &modulus) else {
                    return Ok(None);
                };
                let step = &modulus / s.mod_floor(&modulus).gcd(&modulus);
                let Some(merged) = merge_classes((&class.0, &class.1), (&r, &step)) else {
                    return Ok(None);
                };
                class = merged;
            }
            class.0
        }
    };
    // Re-verify the constant tuple against every row.
    let ok = sums.iter().zip(rhs).all(|(s, b)| match ring {
        Ring::Integers => s * &t == *b,
        Ring::Cyclic(m) => {
            let m = BigInt::from(m);
            (s * &t - b).mod_floor(&m).is_zero()
        }
    });
    Ok(ok.then_some(t))
}

/// Parses a system: one row per line, integers separated by whitespace, last column `b_i`.
pub fn parse_system(text: &str) -> Result<(Vec<Vec<BigInt>>, Vec<BigInt>)> {
    let mut matrix = Vec::new();
    let mut rhs = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut row: Vec<BigInt> = line
            .split_whitespace()
            .map(|t| {
                t.parse()
                    .map_err(|_| Error::Parse(format!("line {}: bad integer `{t}`", i + 1)))
            })
            .collect::<Result<_>>()?;
        if row.len() < 2 {
            return Err(Error::Parse(format!(
                "line {}: need at least one coefficient and b",
                i + 1
            )));
        }
        rhs.push(row.pop().expect("nonempty"));
        matrix.push(row);
    }
    if rhs.iter().all(Zero::is_zero) {
        return Err(Error::InvalidArgument(
            "right-hand side must be nonzero".into(),
        ));
    }
    Ok((matrix, rhs))
}

/// Equation shapes with a ready-made bad coloring.
#[derive(Clone, Debug)]
pub enum CertEquation {
    /// `x + y = c`.
    PairSum { c: BigInt },
    /// `Σ_{i=1}^n (x_i - y_i) = b`.
    DifferenceSum { n: usize, b: Element },
}

impl CertEquation {
    /// Recognizes a single-row system as one of the supported shapes.
    pub fn from_row(coeffs: &[BigInt], rhs: &BigInt, ring: Ring) -> Option<Self> {
        let one = BigInt::from(1);
        if coeffs.len() == 2 && coeffs.iter().all(|c| *c == one) {
            return Some(CertEquation::PairSum { c: rhs.clone() });
        }
        let alternating = coeffs.len().is_multiple_of(2)
            && coeffs
                .iter()
                .enumerate()
                .all(|(i, c)| if i % 2 == 0 { *c == one } else { *c == -&one });
        if alternating && !coeffs.is_empty() {
            let b = ring.group().ok()?.parse_element(&rhs.to_string()).ok()?;
            return Some(CertEquation::DifferenceSum {
                n: coeffs.len() / 2,
                b,
            });
        }
        None
    }
}

/// A coloring together with the verifier's report that it has no monochromatic solution.
#[derive(Clone, Debug)]
pub struct Certificate {
    pub coloring: Coloring,
    pub report: VerificationReport,
}

/// First `x + y = c` with `x, y` in `window` of equal color.
pub fn find_mono_pair_sum(
    spec: &GroupSpec,
    coloring: &Coloring,
    c: &Element,
    window: &[Element],
) -> Result<Option<(Element, Element)>> {
    let members: HashSet<&Element> = window.iter().collect();
    for x in window {
        let y = abelian::sub(spec, c, x)?;
        if members.contains(&y) && coloring.color(spec, x)? == coloring.color(spec, &y)? {
            return Ok(Some((x.clone(), y)));
        }
    }
    Ok(None)
}

pub fn non_pr_certificate(eq: &CertEquation, ring: Ring, radius: i64) -> Result<Certificate> {
    let spec = ring.group()?;
    let window = Window::default_for(&spec, radius)?;
    let elements = window.elements(&spec)?;
    match eq {
        CertEquation::PairSum { c } => {
            let odd = c.is_odd();
            let parity_ok = match ring {
                Ring::Integers => odd,
                Ring::Cyclic(m) => odd && m % 2 == 0,
            };
            if !parity_ok {
                return Err(Error::Unsupported(format!(
                    "x + y = {c} over {ring} has no parity certificate"
                )));
            }
            let one = spec.parse_element("1")?;
            let coloring = straus_coloring(&spec, &one, 1)?;
            let c_elem = spec.parse_element(&c.to_string())?;
            let hit = find_mono_pair_sum(&spec, &coloring, &c_elem, &elements)?;
            let report = VerificationReport {
                result: if hit.is_some() {
                    Outcome::Found
                } else {
                    Outcome::None
                },
                window,
                witness: hit.map(|(x, y)| SolutionTuple {
                    pairs: vec![(x, y)],
                    sum: c_elem,
                }),
            };
            Ok(Certificate { coloring, report })
        }
        CertEquation::DifferenceSum { n, b } => {
            let coloring = straus_coloring(&spec, b, *n as u64)?;
            let report =
                verify_coloring(&spec, &coloring, &EquationSpec::new(*n, b.clone())?, window)?;
            Ok(Certificate { coloring, report })
        }
    }
}

/// `Finite(d)` and `Infinite` orders for a cyclic-group element, exposed for reports.
pub fn describe_order(ord: OrderValue) -> String {
    match ord {
        OrderValue::Finite(d) => d.to_string(),
        OrderValue::Infinite => "infinite".into(),
    }
}
