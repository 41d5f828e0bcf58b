//! File formats: rule colorings as JSON, table colorings as `element,color` CSV, constructed
//! groups as `id,image` CSV.

use std::io::{Read, Write};
use std::path::Path;

use indexmap::IndexMap;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::abelian::{FrozenLog, GroupSpec, Seq};
use crate::error::{Error, Result};
use crate::straus::{
    CircleHom, Coloring, GroupMap, HomCase, ProductColoring, RuleColoring, TableColoring,
};

#[derive(Serialize, Deserialize, Debug, PartialEq)]
struct HomJson {
    s: i64,
    #[serde(rename = "D")]
    d: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    coordinate: Option<usize>,
}

#[derive(Serialize, Deserialize, Debug, PartialEq)]
struct Fraction {
    num: i64,
    den: i64,
}

#[derive(Serialize, Deserialize, Debug, PartialEq)]
#[serde(rename_all = "lowercase")]
enum CaseJson {
    Half,
    Odd(u64),
}

#[derive(Serialize, Deserialize, Debug, PartialEq)]
struct RuleJson {
    hom: HomJson,
    k: u32,
    width: Fraction,
    case: CaseJson,
}

#[derive(Serialize, Deserialize, Debug, PartialEq)]
struct ProductJson {
    maps: Vec<String>,
    base: RuleJson,
    k: u64,
}

#[derive(Serialize, Deserialize, Debug, PartialEq)]
#[serde(untagged)]
enum ColoringJson {
    Product(ProductJson),
    Rule(RuleJson),
}

fn small(x: &BigInt, what: &str) -> Result<i64> {
    x.to_i64()
        .ok_or_else(|| Error::Unsupported(format!("{what} = {x} does not fit in 64 bits")))
}

fn rule_to_json(r: &RuleColoring) -> Result<RuleJson> {
    Ok(RuleJson {
        hom: HomJson {
            s: small(&r.hom.s, "s")?,
            d: small(&r.hom.denominator, "D")?,
            coordinate: r.hom.coordinate,
        },
        k: r.k,
        width: Fraction {
            num: small(r.width.numer(), "width numerator")?,
            den: small(r.width.denom(), "width denominator")?,
        },
        case: match r.hom.case {
            HomCase::Half => CaseJson::Half,
            HomCase::Odd(p) => CaseJson::Odd(p),
        },
    })
}

fn rule_from_json(spec: &GroupSpec, j: RuleJson) -> Result<RuleColoring> {
    if j.hom.d <= 0 || j.width.den <= 0 || j.width.num <= 0 {
        return Err(Error::Parse(
            "denominators and width must be positive".into(),
        ));
    }
    let needs_coordinate = matches!(spec, GroupSpec::Sequences | GroupSpec::FreeOmega(_));
    if needs_coordinate != j.hom.coordinate.is_some() {
        return Err(Error::Parse(format!(
            "rule coordinate does not match group {spec}"
        )));
    }
    Ok(RuleColoring {
        hom: CircleHom {
            spec: spec.clone(),
            s: j.hom.s.into(),
            denominator: j.hom.d.into(),
            coordinate: j.hom.coordinate,
            case: match j.case {
                CaseJson::Half => HomCase::Half,
                CaseJson::Odd(p) => HomCase::Odd(p),
            },
        },
        k: j.k,
        width: BigRational::new(j.width.num.into(), j.width.den.into()),
    })
}

/// JSON for rule and product colorings.
pub fn coloring_to_json(c: &Coloring) -> Result<String> {
    let j = match c {
        Coloring::Rule(r) => ColoringJson::Rule(rule_to_json(r)?),
        Coloring::Product(p) => {
            let base = match p.factors.first() {
                Some((_, Coloring::Rule(r))) => rule_to_json(r)?,
                _ => return Err(Error::Unsupported("product over a non-rule base".into())),
            };
            ColoringJson::Product(ProductJson {
                maps: p.factors.iter().map(|(m, _)| m.name.clone()).collect(),
                base,
                k: p.k,
            })
        }
        Coloring::Table(_) => {
            return Err(Error::Unsupported(
                "table colorings are written as CSV".into(),
            ))
        }
    };
    Ok(serde_json::to_string_pretty(&j)?)
}

pub fn coloring_from_json(spec: &GroupSpec, text: &str) -> Result<Coloring> {
    match serde_json::from_str::<ColoringJson>(text)? {
        ColoringJson::Rule(r) => Ok(Coloring::Rule(rule_from_json(spec, r)?)),
        ColoringJson::Product(p) => {
            let base = Coloring::Rule(rule_from_json(spec, p.base)?);
            let factors = p
                .maps
                .iter()
                .map(|m| Ok((m.parse::<GroupMap>()?, base.clone())))
                .collect::<Result<Vec<_>>>()?;
            let expected = base
                .k()
                .checked_pow(factors.len() as u32)
                .ok_or_else(|| Error::Parse("product color count overflows".into()))?;
            if expected != p.k {
                return Err(Error::Parse(format!(
                    "product k = {} but base^maps = {expected}",
                    p.k
                )));
            }
            Ok(Coloring::Product(ProductColoring { factors, k: p.k }))
        }
    }
}

pub fn write_table_csv<W: Write>(t: &TableColoring, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["element", "color"])?;
    for (x, c) in &t.colors {
        w.write_record([x.to_string(), c.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads `element,color` rows. `k` defaults to one more than the largest color.
pub fn read_table_csv<R: Read>(
    spec: &GroupSpec,
    input: R,
    k: Option<u32>,
) -> Result<TableColoring> {
    let mut r = csv::Reader::from_reader(input);
    let mut colors = IndexMap::new();
    for row in r.records() {
        let row = row?;
        let (Some(x), Some(c)) = (row.get(0), row.get(1)) else {
            return Err(Error::Parse("expected `element,color` rows".into()));
        };
        let x = spec.parse_element(x)?;
        let c: u32 = c
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad color `{c}`")))?;
        if colors.insert(x.clone(), c).is_some() {
            return Err(Error::Parse(format!("element {x} colored twice")));
        }
    }
    let k = k.unwrap_or_else(|| colors.values().max().map_or(1, |c| c + 1));
    TableColoring::new(k, colors)
}

pub fn write_group_csv<W: Write>(log: &FrozenLog, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["id", "image"])?;
    for id in log.ids() {
        let image = log.image(*id).expect("listed id");
        w.write_record([id.to_string(), image.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_group_csv<R: Read>(input: R) -> Result<FrozenLog> {
    let mut r = csv::Reader::from_reader(input);
    let mut entries = Vec::new();
    for row in r.records() {
        let row = row?;
        let (Some(id), Some(image)) = (row.get(0), row.get(1)) else {
            return Err(Error::Parse("expected `id,image` rows".into()));
        };
        let id: u64 = id
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad id `{id}`")))?;
        entries.push((id, image.parse::<Seq>()?));
    }
    FrozenLog::new(entries)
}

/// `Z`, `Zm:<m>`, `Zw`, or `free:<file>` where the file is a group table CSV.
pub fn parse_group(s: &str) -> Result<GroupSpec> {
    match s.trim().strip_prefix("free:") {
        Some(path) => {
            let file = std::fs::File::open(Path::new(path))?;
            Ok(GroupSpec::free_omega(read_group_csv(file)?))
        }
        None => s.parse(),
    }
}
