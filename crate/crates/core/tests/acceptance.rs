//! Acceptance suite: one PASS/FAIL line per criterion. Exits non-zero if any criterion fails.

use std::panic::{self, AssertUnwindSafe};
use std::time::Instant;

use indexmap::IndexMap;
use num_bigint::BigInt;
use num_integer::Integer;
use straus_core::abelian::{order_of, Element, GroupSpec, OrderValue};
use straus_core::diagonal::{Driver, KPolicy, Mode, StageState, Until};
use straus_core::error::Error;
use straus_core::machine::{
    brute_force_dnc, diag_pair_closure, eval_diagonal, find_case_witness, is_dnc, jockusch_reduce,
    parse_fixture, unpair, CaseWitness, Evaluation, IndexMap as ToyMap, ToyIndex,
};
use straus_core::straus::{
    color_count, multiple_period, straus_coloring, straus_star_coloring, Coloring, EquationSpec,
    GroupMap, TableColoring,
};
use straus_core::verify::{
    check_lmb_condition, conflict_graph, constant_solution, find_pairwise_mono, greedy_color,
    non_pr_certificate, parse_system, two_color_bipartite, verify_coloring, CertEquation, Ring,
    Window,
};
use straus_core::wkl::ColoringTree;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn e2s<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

const MODE31_FIXTURE: &str = include_str!("../../../fixtures/mode31.txt");
const MODE32_FIXTURE: &str = include_str!("../../../fixtures/mode32.txt");
const JOCKUSCH_BASE: &str = include_str!("../../../fixtures/jockusch_base.txt");
const SYSTEM_4X4: &str = include_str!("../../../fixtures/system_4x4.txt");

fn criterion_1() -> Outcome {
    let cases = [
        (1, OrderValue::Infinite, 2),
        (1, OrderValue::Finite(3), 3),
        (2, OrderValue::Finite(3), 6),
        (3, OrderValue::Finite(5), 8),
    ];
    for (n, ord, want) in cases {
        let got = color_count(n, ord).map_err(e2s)?;
        ensure(got == want, || {
            format!("n={n}, ord={ord:?}: got {got}, want {want}")
        })?;
    }
    Ok("4/4 values exact".into())
}

fn criterion_2() -> Outcome {
    let mut checked = 0;
    for m in 2..=48u64 {
        let g = GroupSpec::cyclic(m).map_err(e2s)?;
        for b in 1..m {
            let b = Element::Residue(b);
            let ord = order_of(&g, &b).map_err(e2s)?;
            for n in 1..=3u64 {
                let c = straus_coloring(&g, &b, n).map_err(e2s)?;
                let want = color_count(n, ord).map_err(e2s)?;
                ensure(c.k() == want, || {
                    format!("Z_{m}, b={b}, n={n}: k={} want {want}", c.k())
                })?;
                let eq = EquationSpec::new(n as usize, b.clone()).map_err(e2s)?;
                let r = verify_coloring(&g, &c, &eq, Window::Full { size: m }).map_err(e2s)?;
                ensure(r.is_none(), || {
                    format!("Z_{m}, b={b}, n={n}: witness {:?}", r.witness)
                })?;
                checked += 1;
            }
        }
    }
    Ok(format!(
        "{checked} (m, b, n) instances, none found over the full group"
    ))
}

fn criterion_3() -> Outcome {
    let g = GroupSpec::Integers;
    for b in [1i64, 2, 5] {
        let b = Element::int(b);
        for n in 1..=2u64 {
            let c = straus_coloring(&g, &b, n).map_err(e2s)?;
            let eq = EquationSpec::new(n as usize, b.clone()).map_err(e2s)?;
            let r = verify_coloring(&g, &c, &eq, Window::Interval { lo: -300, hi: 300 })
                .map_err(e2s)?;
            ensure(r.is_none(), || {
                format!("b={b}, n={n}: witness {:?}", r.witness)
            })?;
            let m = multiple_period(c.as_rule().ok_or("not a rule coloring")?);
            let lmb = check_lmb_condition(&g, &c, &b, m, 100).map_err(e2s)?;
            ensure(lmb, || {
                format!("b={b}, n={n}: multiples of {m}b not monochromatic")
            })?;
        }
    }
    Ok("6 instances on [-300, 300], lmb condition holds".into())
}

fn criterion_4() -> Outcome {
    let g = GroupSpec::cyclic(12).map_err(e2s)?;
    let b = Element::Residue(3);
    let maps = vec![GroupMap::identity(), GroupMap::scale(2)];
    let c = straus_star_coloring(&g, &b, 1, &maps).map_err(e2s)?;
    let base_k = straus_coloring(&g, &b, 1).map_err(e2s)?.k();
    ensure(c.k() == base_k * base_k, || {
        format!("k = {}, want {}", c.k(), base_k * base_k)
    })?;
    let window = Window::Full { size: 12 }.elements(&g).map_err(e2s)?;
    for f in &maps {
        let eq = EquationSpec::with_maps(1, b.clone(), vec![f.clone()]).map_err(e2s)?;
        let w = find_pairwise_mono(&g, &c, &eq, &window).map_err(e2s)?;
        ensure(w.is_none(), || format!("map {}: witness {w:?}", f.name))?;
    }
    Ok(format!("k = {} = {base_k}^2, none for both maps", c.k()))
}

fn proper(g: &GroupSpec, t: &TableColoring, b: &Element) -> Result<bool, String> {
    for x in t.domain() {
        let y = straus_core::abelian::add(g, x, b).map_err(e2s)?;
        if let Some(cy) = t.get(&y) {
            if t.get(x) == Some(cy) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

fn criterion_5() -> Outcome {
    let z = GroupSpec::Integers;
    for b in 1..=7i64 {
        let b = Element::int(b);
        let t = greedy_color(&z, &b, 10_000, 4).map_err(e2s)?;
        ensure(t.colors.values().all(|c| *c < 3), || {
            format!("Z, b={b}: 4th color used")
        })?;
        ensure(proper(&z, &t, &b)?, || format!("Z, b={b}: improper"))?;
    }
    let mut runs = 0;
    for m in 2..=200u64 {
        let g = GroupSpec::cyclic(m).map_err(e2s)?;
        for b in 1..m {
            let b = Element::Residue(b);
            let t = greedy_color(&g, &b, m as usize, 4).map_err(e2s)?;
            ensure(t.colors.values().all(|c| *c < 3), || {
                format!("Z_{m}, b={b}: 4th color used")
            })?;
            ensure(proper(&g, &t, &b)?, || format!("Z_{m}, b={b}: improper"))?;
            runs += 1;
        }
    }
    for m in 2..=60u64 {
        let g = GroupSpec::cyclic(m).map_err(e2s)?;
        let elems = Window::Full { size: m }.elements(&g).map_err(e2s)?;
        for b in 1..m {
            let ord = m / m.gcd(&b);
            let b = Element::Residue(b);
            let cg = conflict_graph(&g, &b, &elems).map_err(e2s)?;
            for comp in cg.components() {
                let edges = cg.component_edges(&comp);
                let shape_ok =
                    comp.len() as u64 == ord && edges as u64 == if ord == 2 { 1 } else { ord };
                ensure(shape_ok, || {
                    format!("Z_{m}, b={b}: component is not an {ord}-cycle")
                })?;
            }
            let bip = two_color_bipartite(&cg).is_some();
            ensure(bip == (ord % 2 == 0), || {
                format!("Z_{m}, b={b}: bipartite={bip} but ord={ord}")
            })?;
        }
    }
    Ok(format!("greedy uses ≤ 3 colors on Z (7 b's, N=10^4) and {runs} Z_m instances; bipartite iff even order for m ≤ 60"))
}

fn run_mode31() -> Result<(StageState, Vec<ToyIndex>, usize), String> {
    let fixture = parse_fixture(MODE31_FIXTURE).map_err(e2s)?;
    let mut s = StageState::init(
        Mode::Mode31,
        Driver::Machine {
            fixture: fixture.clone(),
            fuel: 1000,
        },
    )
    .map_err(e2s)?;
    let mut audits = 0;
    let mut last = None;
    for _ in 0..10_000 {
        s.run_stage();
        if s.last_remap_stage() != last {
            last = s.last_remap_stage();
            let r = s.audit();
            ensure(r.is_clean(), || {
                format!("stage {}: {:?}", r.stage, r.violations)
            })?;
            audits += 1;
        }
    }
    let r = s.audit();
    ensure(r.is_clean(), || format!("final: {:?}", r.violations))?;
    Ok((s, fixture, audits))
}

fn criterion_6() -> Outcome {
    let (s, _, audits) = run_mode31()?;
    let pending: Vec<u64> = s
        .halting_indices()
        .into_iter()
        .filter(|e| !s.actions().contains_key(e))
        .collect();
    ensure(pending.is_empty(), || {
        format!("requirements never acted: {pending:?}")
    })?;
    for (e, act) in s.actions() {
        ensure(act.k.is_odd() == (act.value == 1), || {
            format!("R_{e}: k parity")
        })?;
    }
    // Negative control: k = 0 must be caught.
    let fixture = parse_fixture(MODE31_FIXTURE).map_err(e2s)?;
    let mut bad = StageState::init(
        Mode::Mode31,
        Driver::Machine {
            fixture,
            fuel: 1000,
        },
    )
    .map_err(e2s)?
    .with_k_policy(KPolicy::Constant(BigInt::from(0)));
    bad.run_until(Until::Stage(200), 200).map_err(e2s)?;
    ensure(!bad.audit().is_clean(), || "corrupted k not flagged".into())?;
    Ok(format!(
        "{audits} remap audits clean, {} actions, carrier {} after 10^4 stages; k = 0 control flagged",
        s.actions().len(),
        s.carrier_size()
    ))
}

fn criterion_7() -> Outcome {
    let (s, fixture, _) = run_mode31()?;
    let c = Coloring::Table(s.reference_bad_coloring().map_err(e2s)?);
    ensure(s.check_no_mono_pair(&c).map_err(e2s)?.is_none(), || {
        "reference coloring has a monochromatic pair".into()
    })?;
    let g = s.extract_pa(&c, fixture.len() as u64).map_err(e2s)?;
    let mut halting = 0;
    for (e, idx) in fixture.iter().enumerate() {
        if let Evaluation::Halts(v) = eval_diagonal(idx, 1000) {
            halting += 1;
            ensure(g[&(e as u64)] == v, || {
                format!("g({e}) = {} but Φ = {v}", g[&(e as u64)])
            })?;
        }
    }
    Ok(format!(
        "g extends the diagonal on all {halting} halting indices"
    ))
}

fn criterion_8() -> Outcome {
    let fixture = parse_fixture(MODE32_FIXTURE).map_err(e2s)?;
    let mut s = StageState::init(
        Mode::Mode32 { n: 2, m_bound: 12 },
        Driver::Machine {
            fixture: fixture.clone(),
            fuel: 1000,
        },
    )
    .map_err(e2s)?;
    s.run_until(Until::AllHaltingActed, 10_000).map_err(e2s)?;
    let r = s.audit();
    ensure(r.is_clean(), || format!("{:?}", r.violations))?;
    let c = Coloring::Table(s.reference_bad_coloring().map_err(e2s)?);
    let g = s
        .extract_dnc(&c, fixture.len() as u64, Some(2))
        .map_err(e2s)?;
    let f: ToyMap = fixture.iter().cloned().zip(g.values().copied()).collect();
    ensure(is_dnc(&f, 10, &fixture, 1000).map_err(e2s)?, || {
        "extracted function is not DNC at bound 10".into()
    })?;
    Ok(format!(
        "DNC_10 on {} indices ({} actions, carrier {})",
        fixture.len(),
        s.actions().len(),
        s.carrier_size()
    ))
}

fn criterion_9() -> Outcome {
    let k = 2u64;
    let fuel = 50u64;
    let base = parse_fixture(JOCKUSCH_BASE).map_err(e2s)?;
    let mut fixture = diag_pair_closure(k, &base);
    // Pad with constants that exercise out-of-range oracle values.
    let mut extra = 2;
    while fixture.len() < 40 {
        let c = ToyIndex::Const(extra);
        if !fixture.contains(&c) {
            fixture.push(c);
        }
        extra += 1;
    }
    ensure(fixture.len() == 40, || {
        format!("fixture has {} indices", fixture.len())
    })?;
    for a in &base {
        for b in &base {
            let c = ToyIndex::diag_pair(k, a.clone(), b.clone());
            ensure(fixture.contains(&c), || format!("{c} missing"))?;
        }
    }
    let oracle_fuel = 2 * fuel + 1;
    let g = brute_force_dnc(k * k, &fixture, oracle_fuel).map_err(e2s)?;
    ensure(
        is_dnc(&g, k * k, &fixture, oracle_fuel).map_err(e2s)?,
        || "oracle not DNC_4".into(),
    )?;
    let w = find_case_witness(&g, k, &base, fuel)
        .map_err(e2s)?
        .ok_or("no case witness")?;
    let h = jockusch_reduce(&g, k, &w, &base, fuel).map_err(e2s)?;
    ensure(is_dnc(&h, k, &base, fuel).map_err(e2s)?, || {
        "h not DNC_2".into()
    })?;

    // Negative control: every Case2 candidate whose split meets a halting diagonal is rejected.
    let mut flagged = 0;
    for a in &base {
        let meets = base.iter().any(|b| {
            let c = ToyIndex::diag_pair(k, a.clone(), b.clone());
            let (_, g2) = unpair(g[&c], k).expect("in range");
            eval_diagonal(b, fuel).value() == Some(g2)
        });
        let r = jockusch_reduce(&g, k, &CaseWitness::Case2(a.clone()), &base, fuel);
        match (meets, r) {
            (true, Err(Error::InvalidWitness { .. })) => flagged += 1,
            (false, Ok(_)) => {}
            (m, r) => return Err(format!("Case2({a}): meets={m}, result {r:?}")),
        }
    }
    let mut corrupt = g.clone();
    let want = eval_diagonal(&base[1], fuel)
        .value()
        .ok_or("base[1] must halt")?;
    // Force g₂(a, b) to agree with Φ_b(b) at one b for the chosen witness.
    if let CaseWitness::Case2(a) = &w {
        let c = ToyIndex::diag_pair(k, a.clone(), base[1].clone());
        let (g1, _) = unpair(corrupt[&c], k).map_err(e2s)?;
        corrupt.insert(c, g1 * k + want);
        let r = jockusch_reduce(&corrupt, k, &w, &base, fuel);
        ensure(matches!(r, Err(Error::InvalidWitness { .. })), || {
            format!("corrupted oracle not flagged: {r:?}")
        })?;
        flagged += 1;
    }
    ensure(flagged > 0, || "no corrupted witness exercised".into())?;
    Ok(format!(
        "DNC_4 on 40 indices → DNC_2 via {}; {flagged} corrupted witnesses flagged",
        match w {
            CaseWitness::Case1(_) => "Case1",
            CaseWitness::Case2(_) => "Case2",
        }
    ))
}

fn all_colorings_bad(m: u64, b: u64, n: usize, k: u32) -> Result<bool, String> {
    let g = GroupSpec::cyclic(m).map_err(e2s)?;
    let elems: Vec<Element> = (0..m).map(Element::Residue).collect();
    let eq = EquationSpec::new(n, Element::Residue(b)).map_err(e2s)?;
    for code in 0..(k as u64).pow(m as u32) {
        let mut rest = code;
        let table: IndexMap<Element, u32> = elems
            .iter()
            .map(|x| {
                let c = (rest % k as u64) as u32;
                rest /= k as u64;
                (x.clone(), c)
            })
            .collect();
        let c = Coloring::Table(TableColoring::new(k, table).map_err(e2s)?);
        if find_pairwise_mono(&g, &c, &eq, &elems)
            .map_err(e2s)?
            .is_none()
        {
            return Ok(false);
        }
    }
    Ok(true)
}

fn grow_tree(m: u64, b: u64, n: usize, k: u32) -> Result<ColoringTree, String> {
    let g = GroupSpec::cyclic(m).map_err(e2s)?;
    let eq = EquationSpec::new(n, Element::Residue(b)).map_err(e2s)?;
    let mut t = ColoringTree::new(&g, eq, k, true).map_err(e2s)?;
    match t.grow(m as usize) {
        Ok(()) | Err(Error::TreeDied { .. }) => Ok(t),
        Err(e) => Err(e.to_string()),
    }
}

fn criterion_10() -> Outcome {
    let g12 = GroupSpec::cyclic(12).map_err(e2s)?;
    let t = grow_tree(12, 3, 1, 2)?;
    ensure(t.died_at().is_none(), || "Z_12 tree died".into())?;
    let path = Coloring::Table(t.extract_path(12).map_err(e2s)?);
    let eq = EquationSpec::new(1, Element::Residue(3)).map_err(e2s)?;
    ensure(
        find_pairwise_mono(&g12, &path, &eq, t.elements())
            .map_err(e2s)?
            .is_none(),
        || "Z_12 path fails verification".into(),
    )?;
    let t9 = grow_tree(9, 3, 1, 2)?;
    let died = t9.died_at().ok_or("Z_9 two-color tree survived")?;
    ensure(died <= 9, || format!("died at {died}"))?;
    let t9k3 = grow_tree(9, 3, 1, 3)?;
    ensure(t9k3.died_at().is_none(), || {
        "Z_9 three-color tree died".into()
    })?;

    let mut instances = 0;
    for m in 2..=8u64 {
        for b in 1..m {
            for k in 1..=3u32 {
                for n in 1..=2usize {
                    if n == 2 && m > 6 {
                        continue;
                    }
                    let t = grow_tree(m, b, n, k)?;
                    let dead = all_colorings_bad(m, b, n, k)?;
                    ensure(t.died_at().is_some() == dead, || {
                        format!(
                            "Z_{m}, b={b}, n={n}, k={k}: tree dead={} oracle dead={dead}",
                            t.died_at().is_some()
                        )
                    })?;
                    instances += 1;
                }
            }
        }
    }
    Ok(format!(
        "Z_12/k=2 path verified, Z_9/k=2 died at {died}, Z_9/k=3 alive; {instances} oracle instances agree"
    ))
}

fn criterion_11() -> Outcome {
    let (a, rhs) = parse_system(SYSTEM_4X4).map_err(e2s)?;
    let t = constant_solution(&a, &rhs, Ring::Integers).map_err(e2s)?;
    ensure(t == Some(BigInt::from(3)), || {
        format!("4x4 system: t = {t:?}")
    })?;
    let one_row = vec![vec![BigInt::from(1), BigInt::from(1)]];
    let none = constant_solution(&one_row, &[BigInt::from(3)], Ring::Integers).map_err(e2s)?;
    ensure(none.is_none(), || format!("x+y=3: t = {none:?}"))?;
    let cert = non_pr_certificate(
        &CertEquation::PairSum { c: BigInt::from(3) },
        Ring::Integers,
        300,
    )
    .map_err(e2s)?;
    ensure(cert.report.is_none(), || {
        format!("parity certificate: {:?}", cert.report.witness)
    })?;
    ensure(cert.coloring.k() == 2, || {
        "certificate is not a 2-coloring".into()
    })?;
    let evens_agree = (-10..=10).step_by(2).all(|x| {
        cert.coloring
            .color(&GroupSpec::Integers, &Element::int(x))
            .ok()
            == cert
                .coloring
                .color(&GroupSpec::Integers, &Element::int(0))
                .ok()
    });
    ensure(evens_agree, || "even integers do not share a color".into())?;
    Ok("4x4 system: t = 3; x+y=3: no constant solution, parity certificate verified on [-300, 300]".into())
}

type Criterion = fn() -> Outcome;

fn main() {
    let criteria: Vec<(&str, Criterion)> = vec![
        ("color-count formula", criterion_1),
        ("Straus colorings of Z_m, m ≤ 48", criterion_2),
        ("Straus colorings of Z, windowed", criterion_3),
        ("Straus* product coloring on Z_12", criterion_4),
        ("greedy and bipartite structure", criterion_5),
        ("mode 31 construction audit", criterion_6),
        ("PA extraction", criterion_7),
        ("DNC extraction (mode 32)", criterion_8),
        ("DNC_4 → DNC_2 reduction", criterion_9),
        ("coloring trees", criterion_10),
        ("constant-solution certificates", criterion_11),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(f))
            .unwrap_or_else(|p| Err(format!("panicked: {:?}", p.downcast_ref::<String>())));
        let ms = start.elapsed().as_secs_f64() * 1e3;
        let line = match outcome {
            Ok(detail) => format!("PASS [{:>2}] {name}: {detail} ({ms:.0} ms)", i + 1),
            Err(why) => {
                failed += 1;
                format!("FAIL [{:>2}] {name}: {why} ({ms:.0} ms)", i + 1)
            }
        };
        println!("{line}");
    }
    println!(
        "{}/{} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
