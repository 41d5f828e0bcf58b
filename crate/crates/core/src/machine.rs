//! A fuel-bounded toy stand-in for an enumeration of partial computable functions, together with
//! the DNC utilities and the reduction that turns a `DNC_{k²}` function into a `DNC_k` one.
//!
//! Expressions are Gödel-coded by a bijection with the naturals:
//!
//! * `0` codes `Diverge`;
//! * `c ≥ 1` splits as `c - 1 = 3q + r`, where `r = 0` gives `Const(q)`, `r = 1` gives
//!   `Countdown(s, v)` with `q = ⟨s, v⟩`, and `r = 2` gives `DiagPair(k, a, b)` with
//!   `q = ⟨k - 2, ⟨code(a), code(b)⟩⟩`.
//!
//! `⟨x, y⟩ = (x + y)(x + y + 1)/2 + y` is the Cantor pairing, used everywhere a bijection
//! `N × N → N` is needed (including stage numbering in [`crate::diagonal`]).

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Cantor pairing on `u64`. Panics on overflow.
pub fn cantor_pair(x: u64, y: u64) -> u64 {
    let s = x.checked_add(y).expect("cantor pair overflow");
    let tri = s.checked_mul(s + 1).expect("cantor pair overflow") / 2;
    tri.checked_add(y).expect("cantor pair overflow")
}

pub fn cantor_unpair(z: u64) -> (u64, u64) {
    let (x, y) = big_cantor_unpair(&BigUint::from(z));
    (
        x.to_u64().expect("component below z"),
        y.to_u64().expect("component below z"),
    )
}

fn big_cantor_pair(x: &BigUint, y: &BigUint) -> BigUint {
    let s = x + y;
    (&s * (&s + 1u32)) / 2u32 + y
}

fn big_cantor_unpair(z: &BigUint) -> (BigUint, BigUint) {
    // w = floor((sqrt(8z + 1) - 1) / 2)
    let w = ((z * 8u32 + 1u32).sqrt() - 1u32) / 2u32;
    let t = (&w * (&w + 1u32)) / 2u32;
    let y = z - t;
    let x = &w - &y;
    (x, y)
}

/// An expression of the toy language; its Gödel code is [`ToyIndex::code`].
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum ToyIndex {
    Const(u64),
    Diverge,
    Countdown(u64, u64),
    /// `DiagPair(k, a, b)` halts on any input with `pair(Φ_a(a), Φ_b(b), k)`.
    DiagPair(u64, Box<ToyIndex>, Box<ToyIndex>),
}

impl ToyIndex {
    pub fn diag_pair(k: u64, a: ToyIndex, b: ToyIndex) -> Self {
        assert!(k >= 2, "DiagPair needs k >= 2");
        ToyIndex::DiagPair(k, Box::new(a), Box::new(b))
    }

    pub fn code(&self) -> BigUint {
        match self {
            ToyIndex::Diverge => BigUint::zero(),
            ToyIndex::Const(v) => BigUint::from(*v) * 3u32 + 1u32,
            ToyIndex::Countdown(s, v) => {
                big_cantor_pair(&BigUint::from(*s), &BigUint::from(*v)) * 3u32 + 2u32
            }
            ToyIndex::DiagPair(k, a, b) => {
                let inner = big_cantor_pair(&a.code(), &b.code());
                big_cantor_pair(&BigUint::from(k - 2), &inner) * 3u32 + 3u32
            }
        }
    }

    pub fn from_code(code: &BigUint) -> Result<Self> {
        if code.is_zero() {
            return Ok(ToyIndex::Diverge);
        }
        let c = code - 1u32;
        let q = &c / 3u32;
        let r = (&c % 3u32).to_u32().expect("residue");
        let small = |x: &BigUint| {
            x.to_u64()
                .ok_or_else(|| Error::Parse(format!("code component {x} exceeds u64")))
        };
        Ok(match r {
            0 => ToyIndex::Const(small(&q)?),
            1 => {
                let (s, v) = big_cantor_unpair(&q);
                ToyIndex::Countdown(small(&s)?, small(&v)?)
            }
            _ => {
                let (k, inner) = big_cantor_unpair(&q);
                let (a, b) = big_cantor_unpair(&inner);
                ToyIndex::DiagPair(
                    small(&k)? + 2,
                    Box::new(ToyIndex::from_code(&a)?),
                    Box::new(ToyIndex::from_code(&b)?),
                )
            }
        })
    }
}

impl fmt::Display for ToyIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ToyIndex::Const(v) => write!(f, "(const {v})"),
            ToyIndex::Diverge => write!(f, "(diverge)"),
            ToyIndex::Countdown(s, v) => write!(f, "(countdown {s} {v})"),
            ToyIndex::DiagPair(k, a, b) => write!(f, "(diagpair {k} {a} {b})"),
        }
    }
}

impl FromStr for ToyIndex {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let tokens = tokenize(s);
        let mut pos = 0;
        let expr = parse_expr(&tokens, &mut pos)?;
        if pos != tokens.len() {
            return Err(Error::Parse(format!("trailing input in `{s}`")));
        }
        Ok(expr)
    }
}

fn tokenize(s: &str) -> Vec<String> {
    s.replace('(', " ( ")
        .replace(')', " ) ")
        .split_whitespace()
        .map(str::to_owned)
        .collect()
}

fn parse_expr(tokens: &[String], pos: &mut usize) -> Result<ToyIndex> {
    let mut next = || -> Result<&str> {
        let t = tokens
            .get(*pos)
            .ok_or_else(|| Error::Parse("unexpected end of expression".into()))?;
        *pos += 1;
        Ok(t.as_str())
    };
    if next()? != "(" {
        return Err(Error::Parse("expected `(`".into()));
    }
    let head = next()?.to_ascii_lowercase();
    let num = |pos: &mut usize| -> Result<u64> {
        let t = tokens
            .get(*pos)
            .ok_or_else(|| Error::Parse("expected a number".into()))?;
        *pos += 1;
        t.parse()
            .map_err(|_| Error::Parse(format!("expected a number, got `{t}`")))
    };
    let expr = match head.as_str() {
        "const" => ToyIndex::Const(num(pos)?),
        "diverge" => ToyIndex::Diverge,
        "countdown" => {
            let s = num(pos)?;
            ToyIndex::Countdown(s, num(pos)?)
        }
        "diagpair" => {
            let k = num(pos)?;
            if k < 2 {
                return Err(Error::Parse(format!("diagpair needs k >= 2, got {k}")));
            }
            let a = parse_expr(tokens, pos)?;
            let b = parse_expr(tokens, pos)?;
            ToyIndex::diag_pair(k, a, b)
        }
        other => return Err(Error::Parse(format!("unknown form `{other}`"))),
    };
    match tokens.get(*pos) {
        Some(t) if t == ")" => {
            *pos += 1;
            Ok(expr)
        }
        _ => Err(Error::Parse(format!("expected `)` after {expr}"))),
    }
}

/// Parses a fixture: one expression per line; blank lines and `;` comments are skipped.
pub fn parse_fixture(text: &str) -> Result<Vec<ToyIndex>> {
    text.lines()
        .enumerate()
        .filter_map(|(i, line)| {
            let line = line.split(';').next().unwrap_or("").trim();
            (!line.is_empty()).then(|| {
                line.parse()
                    .map_err(|e| Error::Parse(format!("fixture line {}: {e}", i + 1)))
            })
        })
        .collect()
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Evaluation {
    Halts(u64),
    OutOfFuel,
}

impl Evaluation {
    pub fn value(self) -> Option<u64> {
        match self {
            Evaluation::Halts(v) => Some(v),
            Evaluation::OutOfFuel => None,
        }
    }
}

/// Evaluates `e` on input `x` with at most `fuel` steps. No construct of the toy language reads
/// its input, so `x` only documents which evaluation is meant (`Φ_e(x)`).
pub fn eval(e: &ToyIndex, _x: u64, fuel: u64) -> Evaluation {
    match run(e, fuel) {
        Some((v, _)) => Evaluation::Halts(v),
        None => Evaluation::OutOfFuel,
    }
}

/// Diagonal evaluation `Φ_e(e)`.
pub fn eval_diagonal(e: &ToyIndex, fuel: u64) -> Evaluation {
    eval(e, 0, fuel)
}

// Returns the value and the number of steps used.
fn run(e: &ToyIndex, fuel: u64) -> Option<(u64, u64)> {
    match e {
        ToyIndex::Const(v) => (fuel >= 1).then_some((*v, 1)),
        ToyIndex::Diverge => None,
        ToyIndex::Countdown(steps, v) => (fuel >= *steps).then_some((*v, *steps)),
        ToyIndex::DiagPair(k, a, b) => {
            let remaining = fuel.checked_sub(1)?;
            let (u, used_a) = run(a, remaining)?;
            let (v, used_b) = run(b, remaining - used_a)?;
            // Out-of-range components make the combined diagonal undefined.
            let w = pair(u, v, *k).ok()?;
            Some((w, 1 + used_a + used_b))
        }
    }
}

/// `u·k + v`, a bijection `k × k → k²`.
pub fn pair(u: u64, v: u64, k: u64) -> Result<u64> {
    if u >= k {
        return Err(Error::OutOfRange { value: u, bound: k });
    }
    if v >= k {
        return Err(Error::OutOfRange { value: v, bound: k });
    }
    Ok(u * k + v)
}

pub fn unpair(w: u64, k: u64) -> Result<(u64, u64)> {
    if w >= k * k {
        return Err(Error::OutOfRange {
            value: w,
            bound: k * k,
        });
    }
    Ok((w / k, w % k))
}

/// A function on indices, e.g. a candidate DNC function.
pub type IndexMap = BTreeMap<ToyIndex, u64>;

/// True iff `f(e) ≠ Φ_e(e)` for every `e` in `indices` whose diagonal halts within `fuel`.
pub fn is_dnc(f: &IndexMap, k: u64, indices: &[ToyIndex], fuel: u64) -> Result<bool> {
    Ok(first_dnc_violation(f, k, indices, fuel)?.is_none())
}

/// The first index where `f` agrees with the halting diagonal, if any.
pub fn first_dnc_violation<'a>(
    f: &IndexMap,
    k: u64,
    indices: &'a [ToyIndex],
    fuel: u64,
) -> Result<Option<&'a ToyIndex>> {
    for e in indices {
        let v = *f
            .get(e)
            .ok_or_else(|| Error::InvalidArgument(format!("function undefined at {e}")))?;
        if v >= k {
            return Err(Error::OutOfRange { value: v, bound: k });
        }
        if eval_diagonal(e, fuel) == Evaluation::Halts(v) {
            return Ok(Some(e));
        }
    }
    Ok(None)
}

/// The least value below `k` avoiding each halting diagonal (0 when the diagonal diverges).
pub fn brute_force_dnc(k: u64, indices: &[ToyIndex], fuel: u64) -> Result<IndexMap> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!(
            "DNC bound must be >= 2, got {k}"
        )));
    }
    Ok(indices
        .iter()
        .map(|e| {
            let v = match eval_diagonal(e, fuel) {
                Evaluation::Halts(0) => 1,
                _ => 0,
            };
            (e.clone(), v)
        })
        .collect())
}

/// `indices` together with every `DiagPair(k, a, b)` for `a, b` in `indices`.
pub fn diag_pair_closure(k: u64, indices: &[ToyIndex]) -> Vec<ToyIndex> {
    let mut out = indices.to_vec();
    for a in indices {
        for b in indices {
            out.push(ToyIndex::diag_pair(k, a.clone(), b.clone()));
        }
    }
    out.sort();
    out.dedup();
    out
}

/// Which half of the case split supplies the reduced function.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum CaseWitness {
    /// For every `a`, `chooser[a]` is some `b` with `g₂(a, b) = Φ_b(b)`.
    Case1(BTreeMap<ToyIndex, ToyIndex>),
    /// A fixed `a` with `g₂(a, b) ≠ Φ_b(b)` for all `b`.
    Case2(ToyIndex),
}

fn split(g: &IndexMap, k: u64, a: &ToyIndex, b: &ToyIndex) -> Result<(u64, u64)> {
    let c = ToyIndex::diag_pair(k, a.clone(), b.clone());
    let w = *g
        .get(&c)
        .ok_or_else(|| Error::InvalidArgument(format!("oracle undefined at {c}")))?;
    unpair(w, k)
}

/// Bounded search for a case witness over the finite index set.
pub fn find_case_witness(
    g: &IndexMap,
    k: u64,
    indices: &[ToyIndex],
    fuel: u64,
) -> Result<Option<CaseWitness>> {
    if indices.is_empty() {
        return Ok(Some(CaseWitness::Case2(ToyIndex::Diverge)));
    }
    let diagonals: Vec<Option<u64>> = indices
        .iter()
        .map(|b| eval_diagonal(b, fuel).value())
        .collect();
    for a in indices {
        let mut avoids_all = true;
        for (b, diag) in indices.iter().zip(&diagonals) {
            let (_, g2) = split(g, k, a, b)?;
            if *diag == Some(g2) {
                avoids_all = false;
                break;
            }
        }
        if avoids_all {
            return Ok(Some(CaseWitness::Case2(a.clone())));
        }
    }
    let mut chooser = BTreeMap::new();
    for a in indices {
        let mut found = None;
        for (b, diag) in indices.iter().zip(&diagonals) {
            let (_, g2) = split(g, k, a, b)?;
            if *diag == Some(g2) {
                found = Some(b.clone());
                break;
            }
        }
        match found {
            Some(b) => {
                chooser.insert(a.clone(), b);
            }
            None => return Ok(None),
        }
    }
    Ok(Some(CaseWitness::Case1(chooser)))
}

/// Builds `h` from the `k²`-bounded oracle `g` and a case witness, then checks it is DNC at
/// bound `k` on `indices`. A witness that does not deliver a DNC function is reported with the
/// first offending index.
pub fn jockusch_reduce(
    g: &IndexMap,
    k: u64,
    witness: &CaseWitness,
    indices: &[ToyIndex],
    fuel: u64,
) -> Result<IndexMap> {
    let mut h = IndexMap::new();
    match witness {
        CaseWitness::Case1(chooser) => {
            for a in indices {
                let b = chooser.get(a).ok_or_else(|| Error::InvalidWitness {
                    index: a.to_string(),
                })?;
                let (g1, _) = split(g, k, a, b)?;
                h.insert(a.clone(), g1);
            }
        }
        CaseWitness::Case2(a) => {
            for b in indices {
                let (_, g2) = split(g, k, a, b)?;
                h.insert(b.clone(), g2);
            }
        }
    }
    if let Some(bad) = first_dnc_violation(&h, k, indices, fuel)? {
        return Err(Error::InvalidWitness {
            index: bad.to_string(),
        });
    }
    Ok(h)
}

/// One level of an iterated reduction: reduce to bound `k` on `indices` with `witness`.
#[derive(Clone, Debug)]
pub struct ReductionLevel {
    pub k: u64,
    pub indices: Vec<ToyIndex>,
    pub witness: CaseWitness,
}

/// Chains single reductions, e.g. `DNC_16 → DNC_4 → DNC_2`. Each level's output is the next
/// level's oracle, so level `j`'s indices must include the `DiagPair` closure needed by level
/// `j + 1`. Witnesses are supplied per level because the case split is not effective.
pub fn jockusch_iterate(g: &IndexMap, levels: &[ReductionLevel], fuel: u64) -> Result<IndexMap> {
    let mut current = g.clone();
    for level in levels {
        current = jockusch_reduce(&current, level.k, &level.witness, &level.indices, fuel)?;
    }
    Ok(current)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(v: u64) -> ToyIndex {
        ToyIndex::Const(v)
    }

    #[test]
    fn eval_examples() {
        assert_eq!(eval(&c(3), 7, 1), Evaluation::Halts(3));
        assert_eq!(
            eval(&ToyIndex::Diverge, 0, 1_000_000),
            Evaluation::OutOfFuel
        );
        let dp = ToyIndex::diag_pair(2, c(1), c(0));
        assert_eq!(eval(&dp, 0, 10), Evaluation::Halts(2));
        assert_eq!(
            eval(&ToyIndex::Countdown(5, 1), 0, 4),
            Evaluation::OutOfFuel
        );
        assert_eq!(eval(&ToyIndex::Countdown(5, 1), 0, 5), Evaluation::Halts(1));
        // Components outside the pairing range never halt.
        assert_eq!(
            eval(&ToyIndex::diag_pair(2, c(2), c(0)), 0, 100),
            Evaluation::OutOfFuel
        );
    }

    #[test]
    fn pairing_examples() {
        assert_eq!(pair(1, 2, 3).unwrap(), 5);
        assert_eq!(unpair(5, 3).unwrap(), (1, 2));
        assert_eq!(pair(0, 0, 7).unwrap(), 0);
        assert!(pair(3, 0, 3).is_err());
        assert!(unpair(9, 3).is_err());
        for k in 1..=8 {
            for u in 0..k {
                for v in 0..k {
                    assert_eq!(unpair(pair(u, v, k).unwrap(), k).unwrap(), (u, v));
                }
            }
        }
    }

    #[test]
    fn cantor_roundtrip() {
        for z in 0..5000 {
            let (x, y) = cantor_unpair(z);
            assert_eq!(cantor_pair(x, y), z);
        }
        assert_eq!(cantor_pair(0, 0), 0);
        assert_eq!(cantor_pair(1, 0), 1);
        assert_eq!(cantor_pair(0, 1), 2);
    }

    #[test]
    fn codes_are_bijective_on_a_prefix() {
        for n in 0u32..3000 {
            let code = BigUint::from(n);
            let e = ToyIndex::from_code(&code).unwrap();
            assert_eq!(e.code(), code, "{e}");
        }
        let nested = ToyIndex::diag_pair(3, ToyIndex::diag_pair(2, c(1), ToyIndex::Diverge), c(4));
        assert_eq!(ToyIndex::from_code(&nested.code()).unwrap(), nested);
    }

    #[test]
    fn parses_s_expressions() {
        let e: ToyIndex = "(diagpair 2 (const 1) (diverge))".parse().unwrap();
        assert_eq!(e, ToyIndex::diag_pair(2, c(1), ToyIndex::Diverge));
        assert_eq!(e.to_string().parse::<ToyIndex>().unwrap(), e);
        assert!("(diagpair 1 (const 0) (const 0))"
            .parse::<ToyIndex>()
            .is_err());
        assert!("(const)".parse::<ToyIndex>().is_err());
        assert!("(const 1) extra".parse::<ToyIndex>().is_err());
        let fx = parse_fixture("; comment\n(const 0)\n\n(countdown 3 1) ; trailing\n").unwrap();
        assert_eq!(fx, vec![c(0), ToyIndex::Countdown(3, 1)]);
    }

    #[test]
    fn dnc_checks() {
        let div = vec![ToyIndex::Diverge];
        let f: IndexMap = [(ToyIndex::Diverge, 0)].into_iter().collect();
        assert!(is_dnc(&f, 2, &div, 100).unwrap());

        let idx = vec![c(1)];
        let agree: IndexMap = [(c(1), 1)].into_iter().collect();
        assert!(!is_dnc(&agree, 2, &idx, 100).unwrap());
        let too_big: IndexMap = [(c(1), 5)].into_iter().collect();
        assert!(is_dnc(&too_big, 2, &idx, 100).is_err());
    }

    #[test]
    fn brute_force_examples() {
        let f = brute_force_dnc(2, &[c(0)], 10).unwrap();
        assert_eq!(f[&c(0)], 1);
        let f = brute_force_dnc(2, &[ToyIndex::Diverge], 10).unwrap();
        assert_eq!(f[&ToyIndex::Diverge], 0);
        assert!(brute_force_dnc(1, &[], 10).is_err());
    }

    #[test]
    fn empty_indices_give_vacuous_case2() {
        let w = find_case_witness(&IndexMap::new(), 2, &[], 10).unwrap();
        assert!(matches!(w, Some(CaseWitness::Case2(_))));
    }

    #[test]
    fn all_diverging_fixture_accepts_any_witness() {
        let idx = vec![ToyIndex::Diverge, ToyIndex::Countdown(1000, 0)];
        let closure = diag_pair_closure(2, &idx);
        let g: IndexMap = closure.iter().map(|e| (e.clone(), 3)).collect();
        let h = jockusch_reduce(&g, 2, &CaseWitness::Case2(idx[0].clone()), &idx, 50).unwrap();
        assert!(is_dnc(&h, 2, &idx, 50).unwrap());
    }

    #[test]
    fn reduction_from_16_to_2() {
        let base = vec![c(0), c(1), ToyIndex::Diverge, ToyIndex::Countdown(4, 1)];
        let fuel = 100;
        // Level 2 (k = 2) needs its oracle on the 2-closure of the base; level 1 (k = 4) then
        // needs its oracle on the 4-closure of that set.
        let level2_indices = base.clone();
        let level1_indices = diag_pair_closure(2, &base);
        let top = diag_pair_closure(4, &level1_indices);
        let g = brute_force_dnc(16, &top, fuel).unwrap();

        let w1 = find_case_witness(&g, 4, &level1_indices, fuel)
            .unwrap()
            .unwrap();
        let h4 = jockusch_reduce(&g, 4, &w1, &level1_indices, fuel).unwrap();
        let w2 = find_case_witness(&h4, 2, &level2_indices, fuel)
            .unwrap()
            .unwrap();

        let levels = [
            ReductionLevel {
                k: 4,
                indices: level1_indices,
                witness: w1,
            },
            ReductionLevel {
                k: 2,
                indices: level2_indices.clone(),
                witness: w2,
            },
        ];
        let h2 = jockusch_iterate(&g, &levels, fuel).unwrap();
        assert!(is_dnc(&h2, 2, &level2_indices, fuel).unwrap());
        assert!(h2.values().all(|v| *v < 2));
    }
}
