use indexmap::IndexMap;
use straus_core::abelian::{Element, GroupSpec};
use straus_core::error::Error;
use straus_core::straus::{Coloring, EquationSpec, TableColoring};
use straus_core::verify::find_pairwise_mono;
use straus_core::wkl::ColoringTree;

// Counts all k-colorings of Z_m with no pairwise monochromatic solution.
fn count_good(m: u64, b: u64, n: usize, k: u32) -> usize {
    let g = GroupSpec::cyclic(m).unwrap();
    let elems: Vec<Element> = (0..m).map(Element::Residue).collect();
    let eq = EquationSpec::new(n, Element::Residue(b)).unwrap();
    let total = (k as u64).pow(m as u32);
    let mut good = 0;
    for code in 0..total {
        let mut c = code;
        let table: IndexMap<Element, u32> = elems
            .iter()
            .map(|x| {
                let col = (c % k as u64) as u32;
                c /= k as u64;
                (x.clone(), col)
            })
            .collect();
        let coloring = Coloring::Table(TableColoring::new(k, table).unwrap());
        if find_pairwise_mono(&g, &coloring, &eq, &elems)
            .unwrap()
            .is_none()
        {
            good += 1;
        }
    }
    good
}

#[test]
fn full_depth_frontier_counts_match_exhaustive_enumeration() {
    for m in 2..=7u64 {
        for b in 1..m {
            for k in 1..=3u32 {
                let g = GroupSpec::cyclic(m).unwrap();
                let eq = EquationSpec::new(1, Element::Residue(b)).unwrap();
                let mut t = ColoringTree::new(&g, eq, k, false).unwrap();
                let size = match t.grow(m as usize) {
                    Ok(()) => t.level_size(m as usize).unwrap(),
                    Err(Error::TreeDied { .. }) => 0,
                    Err(e) => panic!("{e}"),
                };
                assert_eq!(size, count_good(m, b, 1, k), "m={m} b={b} k={k}");
            }
        }
    }
}

#[test]
fn stricter_equations_prune_more() {
    for m in 2..=8u64 {
        for b in 1..m {
            let g = GroupSpec::cyclic(m).unwrap();
            let sizes = |n: usize| {
                let eq = EquationSpec::new(n, Element::Residue(b)).unwrap();
                let mut t = ColoringTree::new(&g, eq, 3, true).unwrap();
                let _ = t.grow(m as usize);
                (0..=m as usize)
                    .map(|l| t.level_size(l).unwrap_or(0))
                    .collect::<Vec<_>>()
            };
            let one = sizes(1);
            let two = sizes(2);
            assert!(one.iter().zip(&two).all(|(a, b)| b <= a), "m={m} b={b}");
        }
    }
}

#[test]
fn two_colorings_survive_exactly_for_even_orders() {
    for m in 2..=12u64 {
        for b in 1..m {
            let g = GroupSpec::cyclic(m).unwrap();
            let ord = m / num_integer::gcd(m, b);
            let eq = EquationSpec::new(1, Element::Residue(b)).unwrap();
            let mut t = ColoringTree::new(&g, eq, 2, true).unwrap();
            assert_eq!(t.grow(m as usize).is_ok(), ord % 2 == 0, "m={m} b={b}");
        }
    }
}
