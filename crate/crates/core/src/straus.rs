//! Colorings with no pairwise monochromatic solutions to `Σ (x_i - y_i) = b`.
//!
//! The construction maps the group homomorphically into `Q/Z` so that `b` lands on `1/2`
//! (when `ord b` is even or infinite) or on `(p-1)/(2p)` (when `ord b` is odd with largest prime
//! divisor `p`), then colors the circle by half-open intervals of width `1/(2n)` or
//! `(p-1)/(2np)`. Two points in the same interval are closer than one width, so `n`
//! same-colored differences sum to something of norm strictly below `|ψ(b)|`.

use std::fmt;
use std::sync::Arc;

use indexmap::IndexMap;
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive};

use crate::abelian::{
    largest_prime_divisor, order_of, solve_congruence, CirclePoint, Element, GroupSpec, OrderValue,
};
use crate::error::{Error, Result};

/// `2n` when `ord b` is even or infinite, `⌈2np/(p-1)⌉` when `ord b` is odd with largest prime
/// divisor `p`.
pub fn color_count(n: u64, ord: OrderValue) -> Result<u64> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be >= 1".into()));
    }
    match ord {
        OrderValue::Infinite => Ok(2 * n),
        OrderValue::Finite(d) if d % 2 == 0 => Ok(2 * n),
        OrderValue::Finite(d) => {
            let p = largest_prime_divisor(d)?;
            Ok((2 * n * p).div_ceil(p - 1))
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum HomCase {
    /// `ψ(b) = 1/2`.
    Half,
    /// `ψ(b) = (p-1)/(2p)` for an odd prime `p`.
    Odd(u64),
}

impl HomCase {
    pub fn target(&self) -> CirclePoint {
        match self {
            HomCase::Half => CirclePoint::new(1, 2),
            HomCase::Odd(p) => CirclePoint::new(p - 1, 2 * p),
        }
    }
}

/// `ψ(x) = s·v(x) / D mod 1`, where `v(x)` is the integer or residue itself, or a fixed
/// coordinate of the element's sequence image.
#[derive(Clone, PartialEq, Debug)]
pub struct CircleHom {
    pub spec: GroupSpec,
    pub s: BigInt,
    pub denominator: BigInt,
    /// Coordinate read for sequence-backed groups; `None` for `Z` and `Z_m`.
    pub coordinate: Option<usize>,
    pub case: HomCase,
}

impl CircleHom {
    pub fn target(&self) -> CirclePoint {
        self.case.target()
    }

    pub fn apply(&self, x: &Element) -> Result<CirclePoint> {
        let v = match (&self.spec, x, self.coordinate) {
            (GroupSpec::Integers, Element::Int(v), None) => v.clone(),
            (GroupSpec::Cyclic(m), Element::Residue(r), None) if r < m => BigInt::from(*r),
            (_, _, Some(pos)) => self.spec.sequence_of(x)?.get(pos),
            _ => {
                return Err(Error::NotInGroup {
                    group: self.spec.to_string(),
                    element: x.to_string(),
                })
            }
        };
        Ok(CirclePoint::new(&self.s * v, self.denominator.clone()))
    }
}

/// Builds `ψ` with `ψ(b)` equal to `1/2` or `(p-1)/(2p)` as dictated by `ord b`.
pub fn build_hom(spec: &GroupSpec, b: &Element) -> Result<CircleHom> {
    let ord = order_of(spec, b)?;
    match (spec, b) {
        (GroupSpec::Integers, Element::Int(v)) => Ok(CircleHom {
            spec: spec.clone(),
            s: v.signum(),
            denominator: 2 * v.abs(),
            coordinate: None,
            case: HomCase::Half,
        }),
        (GroupSpec::Cyclic(m), Element::Residue(r)) => {
            let OrderValue::Finite(d) = ord else {
                unreachable!("cyclic orders are finite")
            };
            let m_big = BigInt::from(*m);
            let b_big = BigInt::from(*r);
            let (a, c, modulus, case) = if d % 2 == 0 {
                // 2bs ≡ m (mod 2m)
                (2 * &b_big, m_big.clone(), 2 * &m_big, HomCase::Half)
            } else {
                // 2pbs ≡ m(p-1) (mod 2pm)
                let p = largest_prime_divisor(d)?;
                let pb = BigInt::from(p);
                (
                    2 * &pb * &b_big,
                    &m_big * (&pb - 1),
                    2 * &pb * &m_big,
                    HomCase::Odd(p),
                )
            };
            let s = solve_congruence(&a, &c, &modulus).ok_or_else(|| Error::Unsolvable {
                a: a.to_string(),
                c: c.to_string(),
                modulus: modulus.to_string(),
            })?;
            Ok(CircleHom {
                spec: spec.clone(),
                s,
                denominator: m_big,
                coordinate: None,
                case,
            })
        }
        (GroupSpec::Sequences | GroupSpec::FreeOmega(_), _) => {
            let image = spec.sequence_of(b)?;
            let (pos, v) = image
                .coords()
                .next()
                .map(|(p, v)| (p, v.clone()))
                .ok_or(Error::ZeroElement)?;
            Ok(CircleHom {
                spec: spec.clone(),
                s: v.signum(),
                denominator: 2 * v.abs(),
                coordinate: Some(pos),
                case: HomCase::Half,
            })
        }
        _ => Err(Error::NotInGroup {
            group: spec.to_string(),
            element: b.to_string(),
        }),
    }
}

/// Index of the half-open cell `[(i-1)·width, min(i·width, 1))` containing `pt`, as `i - 1`.
pub fn circle_color(pt: &CirclePoint, k: u64, width: &BigRational) -> Result<u32> {
    if k < 1
        || !width.is_positive()
        || BigRational::from_integer(k.into()) * width < BigRational::one()
    {
        return Err(Error::InvalidArgument(format!(
            "{k} cells of width {width} do not cover the circle"
        )));
    }
    let cell = (pt.to_rational() / width).floor().to_integer();
    let cell = cell.to_u64().expect("nonnegative").min(k - 1);
    Ok(cell as u32)
}

type MapFn = dyn Fn(&GroupSpec, &Element) -> Result<Element> + Send + Sync;

/// A self-map of the group, evaluated as a black box.
#[derive(Clone)]
pub struct GroupMap {
    pub name: String,
    f: Arc<MapFn>,
}

impl GroupMap {
    pub fn new(
        name: impl Into<String>,
        f: impl Fn(&GroupSpec, &Element) -> Result<Element> + Send + Sync + 'static,
    ) -> Self {
        GroupMap {
            name: name.into(),
            f: Arc::new(f),
        }
    }

    pub fn identity() -> Self {
        GroupMap::new("id", |_, x| Ok(x.clone()))
    }

    /// `x ↦ k·x`, named `x{k}` (so doubling is `x2`).
    pub fn scale(k: i64) -> Self {
        let kb = BigInt::from(k);
        GroupMap::new(format!("x{k}"), move |spec, x| {
            crate::abelian::scalar_mul(spec, &kb, x)
        })
    }

    pub fn apply(&self, spec: &GroupSpec, x: &Element) -> Result<Element> {
        (self.f)(spec, x)
    }

    pub fn is_identity(&self) -> bool {
        self.name == "id" || self.name == "x1"
    }
}

impl fmt::Debug for GroupMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GroupMap({})", self.name)
    }
}

impl std::str::FromStr for GroupMap {
    type Err = Error;

    /// `id` or `x<k>` for multiplication by `k`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "id" {
            return Ok(GroupMap::identity());
        }
        s.strip_prefix('x')
            .and_then(|k| k.parse::<i64>().ok())
            .map(GroupMap::scale)
            .ok_or_else(|| Error::Parse(format!("unknown map `{s}` (use id or x<k>)")))
    }
}

/// `Σ_{i=1}^n (f_i(x_i) - f_i(y_i)) = b`; absent maps mean identity in every slot.
#[derive(Clone, Debug)]
pub struct EquationSpec {
    pub n: usize,
    pub b: Element,
    pub maps: Option<Vec<GroupMap>>,
}

impl EquationSpec {
    pub fn new(n: usize, b: Element) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("n must be >= 1".into()));
        }
        Ok(EquationSpec { n, b, maps: None })
    }

    pub fn with_maps(n: usize, b: Element, maps: Vec<GroupMap>) -> Result<Self> {
        if maps.len() != n {
            return Err(Error::InvalidArgument(format!(
                "expected {n} maps, got {}",
                maps.len()
            )));
        }
        let mut eq = EquationSpec::new(n, b)?;
        eq.maps = Some(maps);
        Ok(eq)
    }

    pub fn map(&self, slot: usize) -> Option<&GroupMap> {
        self.maps.as_ref().map(|m| &m[slot])
    }

    /// True when every slot uses the same map (or none), so one difference set serves all.
    pub fn uniform_maps(&self) -> bool {
        match &self.maps {
            None => true,
            Some(maps) => maps.iter().all(|m| m.name == maps[0].name),
        }
    }
}

/// An explicit finite coloring.
#[derive(Clone, PartialEq, Debug)]
pub struct TableColoring {
    pub k: u32,
    pub colors: IndexMap<Element, u32>,
}

impl TableColoring {
    pub fn new(k: u32, colors: IndexMap<Element, u32>) -> Result<Self> {
        if let Some((x, c)) = colors.iter().find(|(_, c)| **c >= k) {
            return Err(Error::InvalidArgument(format!(
                "color {c} of {x} is not below {k}"
            )));
        }
        Ok(TableColoring { k, colors })
    }

    /// Every element of `domain` gets color 0.
    pub fn constant(domain: &[Element]) -> Self {
        TableColoring {
            k: 1,
            colors: domain.iter().map(|x| (x.clone(), 0)).collect(),
        }
    }

    pub fn domain(&self) -> impl Iterator<Item = &Element> {
        self.colors.keys()
    }

    pub fn get(&self, x: &Element) -> Option<u32> {
        self.colors.get(x).copied()
    }

    /// Number of distinct colors actually used.
    pub fn used_colors(&self) -> usize {
        let mut seen: Vec<u32> = self.colors.values().copied().collect();
        seen.sort_unstable();
        seen.dedup();
        seen.len()
    }
}

/// Color of `x` is the cell of `ψ(x)`.
#[derive(Clone, PartialEq, Debug)]
pub struct RuleColoring {
    pub hom: CircleHom,
    pub k: u32,
    pub width: BigRational,
}

/// Color of `x` is the tuple of base colors of `f(x)` over the distinct maps `f`, packed in
/// mixed radix.
#[derive(Clone, Debug)]
pub struct ProductColoring {
    pub factors: Vec<(GroupMap, Coloring)>,
    pub k: u64,
}

#[derive(Clone, Debug)]
pub enum Coloring {
    Table(TableColoring),
    Rule(RuleColoring),
    Product(ProductColoring),
}

impl Coloring {
    /// Declared number of colors.
    pub fn k(&self) -> u64 {
        match self {
            Coloring::Table(t) => t.k as u64,
            Coloring::Rule(r) => r.k as u64,
            Coloring::Product(p) => p.k,
        }
    }

    pub fn color(&self, spec: &GroupSpec, x: &Element) -> Result<u64> {
        match self {
            Coloring::Table(t) => t
                .get(x)
                .map(u64::from)
                .ok_or_else(|| Error::OutsideDomain(x.to_string())),
            Coloring::Rule(r) => {
                let pt = r.hom.apply(x)?;
                Ok(circle_color(&pt, r.k as u64, &r.width)? as u64)
            }
            Coloring::Product(p) => {
                let mut id = 0u64;
                let mut radix = 1u64;
                for (map, base) in &p.factors {
                    let c = base.color(spec, &map.apply(spec, x)?)?;
                    id += c * radix;
                    radix *= base.k();
                }
                Ok(id)
            }
        }
    }

    pub fn as_rule(&self) -> Option<&RuleColoring> {
        match self {
            Coloring::Rule(r) => Some(r),
            _ => None,
        }
    }
}

/// Interval width used for `n` difference pairs in the given case.
pub fn cell_width(case: HomCase, n: u64) -> BigRational {
    match case {
        HomCase::Half => BigRational::new(1.into(), (2 * n).into()),
        HomCase::Odd(p) => BigRational::new((p - 1).into(), (2 * n * p).into()),
    }
}

pub fn straus_coloring(spec: &GroupSpec, b: &Element, n: u64) -> Result<Coloring> {
    let hom = build_hom(spec, b)?;
    let k = color_count(n, order_of(spec, b)?)?;
    let width = cell_width(hom.case, n);
    let k = u32::try_from(k).map_err(|_| Error::InvalidArgument(format!("{k} colors")))?;
    Ok(Coloring::Rule(RuleColoring { hom, k, width }))
}

/// Product of the Straus coloring over the distinct maps (by name); `k^m` colors for `m`
/// distinct maps.
pub fn straus_star_coloring(
    spec: &GroupSpec,
    b: &Element,
    n: u64,
    maps: &[GroupMap],
) -> Result<Coloring> {
    if maps.is_empty() {
        return Err(Error::InvalidArgument(
            "at least one map is required".into(),
        ));
    }
    let base = straus_coloring(spec, b, n)?;
    let mut distinct: Vec<GroupMap> = Vec::new();
    for m in maps {
        if !distinct.iter().any(|d| d.name == m.name) {
            distinct.push(m.clone());
        }
    }
    let k = base
        .k()
        .checked_pow(distinct.len() as u32)
        .ok_or_else(|| Error::InvalidArgument("too many product colors".into()))?;
    Ok(Coloring::Product(ProductColoring {
        factors: distinct.into_iter().map(|m| (m, base.clone())).collect(),
        k,
    }))
}

/// Smallest `m > 0` with `ψ(m·b) = 0`: the order of `ψ(b)` in `Q/Z`, i.e. 2 or `p`.
/// Every `l·m·b` then shares the color of 0.
pub fn multiple_period(rule: &RuleColoring) -> u64 {
    let den = rule.hom.target().den().clone();
    den.to_u64().expect("small denominator")
}

/// Least common multiple of `1..=bound`.
pub fn lcm_up_to(bound: u64) -> BigInt {
    (1..=bound).fold(BigInt::one(), |acc, i| acc.lcm(&BigInt::from(i)))
}
