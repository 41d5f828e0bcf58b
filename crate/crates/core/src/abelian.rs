//! Exact arithmetic for the group presentations used throughout the crate: the integers, the
//! cyclic groups `Z_m`, the group `Z^(ω)` of finitely supported integer sequences, and groups
//! built by the stage construction (whose elements are opaque ids interpreted through a frozen
//! construction log). Also hosts the circle group `Q/Z` and the modular-arithmetic helpers the
//! colorings and the constant-solution checker need.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::machine::cantor_unpair;

/// Id of the zero element in a constructed group.
pub const ZERO_ID: u64 = 0;
/// Id of the distinguished element `b` in a constructed group; its image is always `(1)`.
pub const B_ID: u64 = 1;

/// A finitely supported integer sequence with 1-based coordinates. Zero coordinates are never
/// stored, so the zero sequence is the empty map.
#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Seq(BTreeMap<usize, BigInt>);

impl Seq {
    pub fn zero() -> Self {
        Seq(BTreeMap::new())
    }

    /// The sequence `0^(pos-1) 1`.
    pub fn unit(pos: usize) -> Self {
        assert!(pos >= 1, "coordinates are 1-based");
        let mut s = Seq::zero();
        s.set(pos, BigInt::one());
        s
    }

    pub fn from_coords<I, T>(coords: I) -> Self
    where
        I: IntoIterator<Item = T>,
        T: Into<BigInt>,
    {
        let mut s = Seq::zero();
        for (i, c) in coords.into_iter().enumerate() {
            s.set(i + 1, c.into());
        }
        s
    }

    pub fn get(&self, pos: usize) -> BigInt {
        self.0.get(&pos).cloned().unwrap_or_default()
    }

    pub fn set(&mut self, pos: usize, value: BigInt) {
        assert!(pos >= 1, "coordinates are 1-based");
        if value.is_zero() {
            self.0.remove(&pos);
        } else {
            self.0.insert(pos, value);
        }
    }

    /// Nonzero coordinates in increasing position order.
    pub fn coords(&self) -> impl Iterator<Item = (usize, &BigInt)> {
        self.0.iter().map(|(p, v)| (*p, v))
    }

    pub fn first(&self) -> BigInt {
        self.get(1)
    }

    /// Index of the rightmost nonzero coordinate.
    pub fn rightmost(&self) -> Option<usize> {
        self.0.keys().next_back().copied()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn add(&self, other: &Seq) -> Seq {
        let mut out = self.clone();
        for (p, v) in other.coords() {
            let sum = out.get(p) + v;
            out.set(p, sum);
        }
        out
    }

    pub fn neg(&self) -> Seq {
        Seq(self.0.iter().map(|(p, v)| (*p, -v)).collect())
    }

    pub fn sub(&self, other: &Seq) -> Seq {
        self.add(&other.neg())
    }

    pub fn scale(&self, k: &BigInt) -> Seq {
        if k.is_zero() {
            return Seq::zero();
        }
        Seq(self.0.iter().map(|(p, v)| (*p, v * k)).collect())
    }

    /// Sum of absolute values of all coordinates.
    pub fn abs_sum(&self) -> BigInt {
        self.0.values().map(|v| v.abs()).sum()
    }

    /// Dense coordinates up to the rightmost nonzero one.
    pub fn to_dense(&self) -> Vec<BigInt> {
        let len = self.rightmost().unwrap_or(0);
        (1..=len).map(|p| self.get(p)).collect()
    }
}

impl fmt::Display for Seq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let dense = self.to_dense();
        for (i, c) in dense.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

impl FromStr for Seq {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() {
            return Ok(Seq::zero());
        }
        let mut coords = Vec::new();
        for part in s.split(',') {
            let c: BigInt = part
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad sequence coordinate `{part}`")))?;
            coords.push(c);
        }
        Ok(Seq::from_coords(coords))
    }
}

/// A frozen snapshot of a stage construction: the ids defined so far (in order of first
/// appearance) together with their images in `Z^(ω)`.
#[derive(Clone, Debug)]
pub struct FrozenLog {
    order: Vec<u64>,
    images: HashMap<u64, Seq>,
    preimages: HashMap<Seq, u64>,
}

impl FrozenLog {
    /// Builds a snapshot, checking that the map is injective and that `0 ↦ ()`, `b ↦ (1)`.
    pub fn new(entries: impl IntoIterator<Item = (u64, Seq)>) -> Result<Self> {
        let mut order = Vec::new();
        let mut images = HashMap::new();
        let mut preimages = HashMap::new();
        for (id, image) in entries {
            if images.contains_key(&id) {
                return Err(Error::InvalidArgument(format!("id {id} listed twice")));
            }
            if let Some(other) = preimages.insert(image.clone(), id) {
                return Err(Error::InvalidArgument(format!(
                    "ids {other} and {id} share the image {image}"
                )));
            }
            images.insert(id, image);
            order.push(id);
        }
        if images.get(&ZERO_ID) != Some(&Seq::zero()) {
            return Err(Error::InvalidArgument(
                "id 0 must map to the zero sequence".into(),
            ));
        }
        if images.get(&B_ID) != Some(&Seq::unit(1)) {
            return Err(Error::InvalidArgument("id 1 must map to (1)".into()));
        }
        Ok(FrozenLog {
            order,
            images,
            preimages,
        })
    }

    pub fn image(&self, id: u64) -> Option<&Seq> {
        self.images.get(&id)
    }

    pub fn preimage(&self, image: &Seq) -> Option<u64> {
        self.preimages.get(image).copied()
    }

    /// Ids in order of first appearance.
    pub fn ids(&self) -> &[u64] {
        &self.order
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }
}

/// A presentation of an abelian group.
#[derive(Clone, Debug)]
pub enum GroupSpec {
    Integers,
    Cyclic(u64),
    /// `Z^(ω)` itself, with explicit sequences as elements.
    Sequences,
    /// A group built by the stage construction; elements are ids resolved through the log.
    FreeOmega(Arc<FrozenLog>),
}

impl PartialEq for GroupSpec {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (GroupSpec::Integers, GroupSpec::Integers) => true,
            (GroupSpec::Sequences, GroupSpec::Sequences) => true,
            (GroupSpec::Cyclic(a), GroupSpec::Cyclic(b)) => a == b,
            (GroupSpec::FreeOmega(a), GroupSpec::FreeOmega(b)) => Arc::ptr_eq(a, b),
            _ => false,
        }
    }
}

impl fmt::Display for GroupSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupSpec::Integers => write!(f, "Z"),
            GroupSpec::Cyclic(m) => write!(f, "Zm:{m}"),
            GroupSpec::Sequences => write!(f, "Zw"),
            GroupSpec::FreeOmega(log) => write!(f, "free[{} ids]", log.len()),
        }
    }
}

impl FromStr for GroupSpec {
    type Err = Error;

    /// Parses `Z`, `Zm:<m>` and `Zw`. Constructed groups (`free:<file>`) are loaded by
    /// [`crate::io::parse_group`], which needs file access.
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "Z" => Ok(GroupSpec::Integers),
            "Zw" => Ok(GroupSpec::Sequences),
            other => {
                let m = other
                    .strip_prefix("Zm:")
                    .ok_or_else(|| Error::Parse(format!("unknown group `{other}`")))?;
                let m: u64 = m
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad modulus `{m}`")))?;
                GroupSpec::cyclic(m)
            }
        }
    }
}

impl GroupSpec {
    pub fn cyclic(modulus: u64) -> Result<Self> {
        if modulus < 2 {
            return Err(Error::InvalidModulus(modulus));
        }
        Ok(GroupSpec::Cyclic(modulus))
    }

    pub fn free_omega(log: FrozenLog) -> Self {
        GroupSpec::FreeOmega(Arc::new(log))
    }

    pub fn zero(&self) -> Element {
        match self {
            GroupSpec::Integers => Element::Int(BigInt::zero()),
            GroupSpec::Cyclic(_) => Element::Residue(0),
            GroupSpec::Sequences => Element::Seq(Seq::zero()),
            GroupSpec::FreeOmega(_) => Element::Id(ZERO_ID),
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, GroupSpec::Cyclic(_))
    }

    pub fn contains(&self, x: &Element) -> bool {
        match (self, x) {
            (GroupSpec::Integers, Element::Int(_)) => true,
            (GroupSpec::Cyclic(m), Element::Residue(r)) => r < m,
            (GroupSpec::Sequences, Element::Seq(_)) => true,
            (GroupSpec::FreeOmega(log), Element::Id(id)) => log.image(*id).is_some(),
            _ => false,
        }
    }

    fn check(&self, x: &Element) -> Result<()> {
        if self.contains(x) {
            return Ok(());
        }
        match (self, x) {
            (GroupSpec::FreeOmega(_), Element::Id(id)) => Err(Error::UndefinedId(*id)),
            _ => Err(Error::NotInGroup {
                group: self.to_string(),
                element: x.to_string(),
            }),
        }
    }

    /// Image in `Z^(ω)` of a sequence-like element (explicit sequence or constructed id).
    pub fn sequence_of(&self, x: &Element) -> Result<Seq> {
        self.check(x)?;
        match (self, x) {
            (GroupSpec::Sequences, Element::Seq(s)) => Ok(s.clone()),
            (GroupSpec::FreeOmega(log), Element::Id(id)) => {
                Ok(log.image(*id).cloned().expect("checked above"))
            }
            _ => Err(Error::Unsupported(format!(
                "{} has no sequence representation",
                self
            ))),
        }
    }

    fn element_from(&self, s: Seq) -> Result<Element> {
        match self {
            GroupSpec::Sequences => Ok(Element::Seq(s)),
            GroupSpec::FreeOmega(log) => log.preimage(&s).map(Element::Id).ok_or_else(|| {
                Error::NeedMoreStages(format!("no id with image {s} has been defined"))
            }),
            _ => unreachable!("only sequence-backed groups"),
        }
    }

    /// Parses an element in this group's serialization: decimal integers for `Z`, `Z_m` and
    /// constructed ids, comma-separated coordinates for `Z^(ω)`.
    pub fn parse_element(&self, s: &str) -> Result<Element> {
        let s = s.trim();
        let bad = || Error::Parse(format!("bad element `{s}` for group {self}"));
        let x = match self {
            GroupSpec::Integers => Element::Int(s.parse().map_err(|_| bad())?),
            GroupSpec::Cyclic(m) => {
                let v: BigInt = s.parse().map_err(|_| bad())?;
                let r = v.mod_floor(&BigInt::from(*m));
                Element::Residue(r.to_u64().expect("reduced below modulus"))
            }
            GroupSpec::Sequences => Element::Seq(s.parse()?),
            GroupSpec::FreeOmega(_) => Element::Id(s.parse().map_err(|_| bad())?),
        };
        self.check(&x)?;
        Ok(x)
    }
}

/// An element of one of the supported groups.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Element {
    Int(BigInt),
    /// Residue in `[0, modulus)`.
    Residue(u64),
    Seq(Seq),
    /// Opaque id of a constructed group.
    Id(u64),
}

impl Element {
    pub fn int(v: i64) -> Self {
        Element::Int(BigInt::from(v))
    }

    pub fn seq<T: Into<BigInt>>(coords: impl IntoIterator<Item = T>) -> Self {
        Element::Seq(Seq::from_coords(coords))
    }
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Element::Int(v) => write!(f, "{v}"),
            Element::Residue(r) => write!(f, "{r}"),
            Element::Seq(s) => write!(f, "{s}"),
            Element::Id(id) => write!(f, "{id}"),
        }
    }
}

pub fn add(spec: &GroupSpec, x: &Element, y: &Element) -> Result<Element> {
    spec.check(x)?;
    spec.check(y)?;
    match (spec, x, y) {
        (GroupSpec::Integers, Element::Int(a), Element::Int(b)) => Ok(Element::Int(a + b)),
        (GroupSpec::Cyclic(m), Element::Residue(a), Element::Residue(b)) => {
            let s = (*a as u128 + *b as u128) % *m as u128;
            Ok(Element::Residue(s as u64))
        }
        _ => {
            let s = spec.sequence_of(x)?.add(&spec.sequence_of(y)?);
            spec.element_from(s)
        }
    }
}

pub fn neg(spec: &GroupSpec, x: &Element) -> Result<Element> {
    spec.check(x)?;
    match (spec, x) {
        (GroupSpec::Integers, Element::Int(a)) => Ok(Element::Int(-a)),
        (GroupSpec::Cyclic(m), Element::Residue(a)) => Ok(Element::Residue((m - a) % m)),
        _ => spec.element_from(spec.sequence_of(x)?.neg()),
    }
}

pub fn sub(spec: &GroupSpec, x: &Element, y: &Element) -> Result<Element> {
    match (spec, x, y) {
        (GroupSpec::Integers, Element::Int(a), Element::Int(b)) => Ok(Element::Int(a - b)),
        (GroupSpec::Cyclic(m), Element::Residue(a), Element::Residue(b)) if a < m && b < m => {
            Ok(Element::Residue((a + (m - b)) % m))
        }
        (GroupSpec::FreeOmega(_), _, _) => {
            let s = spec.sequence_of(x)?.sub(&spec.sequence_of(y)?);
            spec.element_from(s)
        }
        _ => add(spec, x, &neg(spec, y)?),
    }
}

/// The `k`-fold sum of `x` (negative `k` sums the inverse).
pub fn scalar_mul(spec: &GroupSpec, k: &BigInt, x: &Element) -> Result<Element> {
    spec.check(x)?;
    match (spec, x) {
        (GroupSpec::Integers, Element::Int(a)) => Ok(Element::Int(k * a)),
        (GroupSpec::Cyclic(m), Element::Residue(a)) => {
            let m_big = BigInt::from(*m);
            let r = (k * BigInt::from(*a)).mod_floor(&m_big);
            Ok(Element::Residue(r.to_u64().expect("reduced")))
        }
        _ => spec.element_from(spec.sequence_of(x)?.scale(k)),
    }
}

/// Order of a group element: finite `d ≥ 1` or infinite.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum OrderValue {
    Finite(u64),
    Infinite,
}

impl OrderValue {
    pub fn is_even_or_infinite(&self) -> bool {
        match self {
            OrderValue::Infinite => true,
            OrderValue::Finite(d) => d % 2 == 0,
        }
    }
}

pub fn order_of(spec: &GroupSpec, b: &Element) -> Result<OrderValue> {
    spec.check(b)?;
    if *b == spec.zero() {
        return Err(Error::ZeroElement);
    }
    Ok(match (spec, b) {
        (GroupSpec::Cyclic(m), Element::Residue(r)) => OrderValue::Finite(m / m.gcd(r)),
        _ => OrderValue::Infinite,
    })
}

/// Largest prime divisor of `d ≥ 2`, by trial division.
pub fn largest_prime_divisor(d: u64) -> Result<u64> {
    if d < 2 {
        return Err(Error::InvalidArgument(format!(
            "largest prime divisor needs d >= 2, got {d}"
        )));
    }
    let mut rest = d;
    let mut largest = 1;
    let mut p = 2u64;
    while p.saturating_mul(p) <= rest {
        while rest.is_multiple_of(p) {
            largest = p;
            rest /= p;
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if rest > 1 {
        largest = largest.max(rest);
    }
    Ok(largest)
}

/// The first `count` elements of the group's canonical enumeration.
///
/// Integers run `0, 1, -1, 2, -2, …`; `Z_m` runs `0..m` (capped at `m`); `Z^(ω)` follows a fixed
/// bijection from naturals to finite integer strings; constructed groups list ids in order of
/// first appearance.
pub fn enumerate(spec: &GroupSpec, count: usize) -> Result<Vec<Element>> {
    match spec {
        GroupSpec::Integers => Ok((0..count as i64)
            .map(|i| {
                if i % 2 == 1 {
                    Element::int((i + 1) / 2)
                } else {
                    Element::int(-i / 2)
                }
            })
            .collect()),
        GroupSpec::Cyclic(m) => Ok((0..(*m).min(count as u64)).map(Element::Residue).collect()),
        GroupSpec::Sequences => {
            let mut seen = HashSet::new();
            let mut out = Vec::with_capacity(count);
            let mut code = 0u64;
            while out.len() < count {
                let s = sequence_from_code(code);
                if seen.insert(s.clone()) {
                    out.push(Element::Seq(s));
                }
                code += 1;
            }
            Ok(out)
        }
        GroupSpec::FreeOmega(log) => {
            if log.len() < count {
                return Err(Error::NeedMoreStages(format!(
                    "asked for {count} elements, construction has {}",
                    log.len()
                )));
            }
            Ok(log.ids()[..count]
                .iter()
                .map(|id| Element::Id(*id))
                .collect())
        }
    }
}

fn zigzag(n: u64) -> BigInt {
    if n % 2 == 1 {
        BigInt::from(n.div_ceil(2))
    } else {
        -BigInt::from(n / 2)
    }
}

// 0 is the empty string; otherwise n-1 = <head, tail> by Cantor pairing.
fn sequence_from_code(mut code: u64) -> Seq {
    let mut coords = Vec::new();
    while code > 0 {
        let (head, tail) = cantor_unpair(code - 1);
        coords.push(zigzag(head));
        code = tail;
    }
    Seq::from_coords(coords)
}

/// A reduced rational in `[0, 1)`: an element of `Q/Z`.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct CirclePoint {
    num: BigInt,
    den: BigInt,
}

impl CirclePoint {
    /// `num/den` reduced modulo 1 into lowest terms.
    pub fn new(num: impl Into<BigInt>, den: impl Into<BigInt>) -> Self {
        let num = num.into();
        let den = den.into();
        assert!(!den.is_zero(), "zero denominator");
        let (num, den) = if den.is_negative() {
            (-num, -den)
        } else {
            (num, den)
        };
        let num = num.mod_floor(&den);
        let g = num.gcd(&den);
        CirclePoint {
            num: &num / &g,
            den: &den / &g,
        }
    }

    pub fn zero() -> Self {
        CirclePoint::new(0, 1)
    }

    pub fn from_rational(r: &BigRational) -> Self {
        CirclePoint::new(r.numer().clone(), r.denom().clone())
    }

    pub fn num(&self) -> &BigInt {
        &self.num
    }

    pub fn den(&self) -> &BigInt {
        &self.den
    }

    pub fn to_rational(&self) -> BigRational {
        BigRational::new(self.num.clone(), self.den.clone())
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }
}

impl fmt::Display for CirclePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

pub fn circle_add(a: &CirclePoint, b: &CirclePoint) -> CirclePoint {
    CirclePoint::new(&a.num * &b.den + &b.num * &a.den, &a.den * &b.den)
}

pub fn circle_sub(a: &CirclePoint, b: &CirclePoint) -> CirclePoint {
    CirclePoint::new(&a.num * &b.den - &b.num * &a.den, &a.den * &b.den)
}

/// Distance from `a` to 0 on the circle: `min(a, 1 - a)`.
pub fn circle_norm(a: &CirclePoint) -> BigRational {
    let r = a.to_rational();
    let other = BigRational::one() - &r;
    if r <= other {
        r
    } else {
        other
    }
}

pub fn circle_dist(a: &CirclePoint, b: &CirclePoint) -> BigRational {
    circle_norm(&circle_sub(a, b))
}

/// Least nonnegative `s` with `a*s ≡ c (mod modulus)`, or `None` when `gcd(a, modulus) ∤ c`.
/// Solutions form one class modulo `modulus / gcd(a, modulus)`; the representative returned lies
/// in `[0, modulus / gcd)`.
pub fn solve_congruence(a: &BigInt, c: &BigInt, modulus: &BigInt) -> Option<BigInt> {
    assert!(modulus.is_positive(), "modulus must be positive");
    let a = a.mod_floor(modulus);
    let c = c.mod_floor(modulus);
    let ext = a.extended_gcd(modulus);
    let g = ext.gcd;
    if !(&c % &g).is_zero() {
        return None;
    }
    let reduced = modulus / &g;
    if reduced.is_one() {
        return Some(BigInt::zero());
    }
    // ext.x * a ≡ g (mod modulus), so x is the inverse of a/g modulo modulus/g.
    Some(((&c / &g) * ext.x).mod_floor(&reduced))
}

/// Intersects the classes `r1 mod m1` and `r2 mod m2`, returning the merged class.
pub fn merge_classes(
    (r1, m1): (&BigInt, &BigInt),
    (r2, m2): (&BigInt, &BigInt),
) -> Option<(BigInt, BigInt)> {
    let g = m1.gcd(m2);
    let diff = r2 - r1;
    if !(&diff % &g).is_zero() {
        return None;
    }
    let lcm = m1.lcm(m2);
    // r1 + m1*t ≡ r2 (mod m2)
    let t = solve_congruence(m1, &diff, m2)?;
    Some(((r1 + m1 * t).mod_floor(&lcm), lcm))
}
