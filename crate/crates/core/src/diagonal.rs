//! Stage constructions of a computable copy of `Z^(ω)` whose bad colorings compute
//! PA / DNC functions, plus the extractions and an audit of the construction invariants.
//!
//! Stage `s + 1` is driven by `(e, j) = ⟨·,·⟩⁻¹(s)`: `j ≡ 1 (mod 3)` is the addition
//! requirement `A_e`, `j ≡ 2` the inverse requirement `I_e`, and `j ≡ 0` with `j ≥ 3` the
//! diagonal requirement `R_e`. Stages with `j = 0` are idle.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::abelian::{Element, FrozenLog, GroupSpec, Seq, B_ID, ZERO_ID};
use crate::error::{Error, Result};
use crate::machine::{cantor_pair, cantor_unpair, eval_diagonal, Evaluation, ToyIndex};
use crate::straus::{lcm_up_to, Coloring, EquationSpec, TableColoring};
use crate::verify::{self, find_pairwise_mono};

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Mode {
    /// Two witnesses per index, `h(y_e) - h(x_e) = k·h(b)` with `k ≡ Φ_e(e) (mod 2)`.
    Mode31,
    /// `2n + 1` witnesses per index; the acted pair differs by `(M·k + 1)·h(b)`,
    /// `M = lcm(1..=m_bound)`.
    Mode32 { n: usize, m_bound: u64 },
}

impl Mode {
    pub fn witness_count(&self) -> usize {
        match self {
            Mode::Mode31 => 2,
            Mode::Mode32 { n, .. } => 2 * n + 1,
        }
    }

    /// Number of values an `R_e` reacts to: 2, or `C(2n+1, 2)`.
    pub fn value_bound(&self) -> u64 {
        match self {
            Mode::Mode31 => 2,
            Mode::Mode32 { n, .. } => {
                let w = (2 * n + 1) as u64;
                w * (w - 1) / 2
            }
        }
    }

    /// 1-based coordinate carrying the single 1 of witness `slot` (0-based) for index `e`.
    pub fn witness_position(&self, e: u64, slot: usize) -> usize {
        let w = self.witness_count();
        e as usize * w + slot + 2
    }

    /// The witness slots `(i1, i2)` (0-based, `i1 < i2`) of pair number `i`, in lexicographic
    /// order: 0 ↦ (0, 1), 1 ↦ (0, 2), ….
    pub fn pair_slots(&self, i: u64) -> Option<(usize, usize)> {
        let w = self.witness_count();
        let mut idx = 0u64;
        for a in 0..w {
            for b in a + 1..w {
                if idx == i {
                    return Some((a, b));
                }
                idx += 1;
            }
        }
        None
    }
}

/// Which side of a separation instance was observed for an index.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Phi0,
    Phi1,
}

/// `e ↦ (side, stage)`: `φ_side(e)` is observed from `stage` on. Indices not listed never fire.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct EventOracle {
    events: BTreeMap<u64, (Side, u64)>,
}

impl EventOracle {
    pub fn new(entries: impl IntoIterator<Item = (u64, Side, u64)>) -> Result<Self> {
        let mut events = BTreeMap::new();
        for (e, side, stage) in entries {
            if let Some((prev, _)) = events.insert(e, (side, stage)) {
                if prev != side {
                    return Err(Error::Precondition(format!(
                        "both events fire for index {e}"
                    )));
                }
                return Err(Error::InvalidArgument(format!("index {e} listed twice")));
            }
        }
        Ok(EventOracle { events })
    }

    pub fn get(&self, e: u64) -> Option<(Side, u64)> {
        self.events.get(&e).copied()
    }

    pub fn indices(&self) -> impl Iterator<Item = u64> + '_ {
        self.events.keys().copied()
    }
}

/// Lines `e phi0|phi1 stage`; `#` starts a comment.
impl FromStr for EventOracle {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = || Error::Parse(format!("line {}: expected `e phi0|phi1 stage`", n + 1));
            let parts: Vec<&str> = line.split_whitespace().collect();
            let [e, side, stage] = parts[..] else {
                return Err(bad());
            };
            let side = match side {
                "phi0" => Side::Phi0,
                "phi1" => Side::Phi1,
                _ => return Err(bad()),
            };
            entries.push((
                e.parse().map_err(|_| bad())?,
                side,
                stage.parse().map_err(|_| bad())?,
            ));
        }
        EventOracle::new(entries)
    }
}

/// What decides when and how `R_e` acts.
#[derive(Clone, PartialEq, Debug)]
pub enum Driver {
    /// `Φ_e(e)[s]` is the toy evaluation of `fixture[e]` with fuel `min(s, fuel)`; indices past
    /// the fixture diverge.
    Machine { fixture: Vec<ToyIndex>, fuel: u64 },
    /// Separation instance: a `φ₀` event acts like value 1, a `φ₁` event like value 0.
    Events(EventOracle),
}

/// How the multiplier `k` of an action is chosen.
#[derive(Clone, PartialEq, Debug)]
pub enum KPolicy {
    /// Least admissible `k` above twice the total absolute coordinate sum of all images.
    Fresh,
    /// A fixed `k`, ignoring freshness and parity. Only useful as a negative control.
    Constant(BigInt),
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize)]
pub enum Requirement {
    A(u64),
    I(u64),
    R(u64),
}

/// A completed `R_e` action.
#[derive(Clone, PartialEq, Debug)]
pub struct Action {
    pub stage: u64,
    pub value: u64,
    pub k: BigInt,
    /// Coefficient of `h(b)` in the created difference: `k` or `M·k + 1`.
    pub multiplier: BigInt,
    /// Coordinates `(j1, j2)`: `j2` is folded into `j1` and into coordinate 1.
    pub positions: (usize, usize),
    /// Ids `(x, y)` with `h(y) - h(x) = multiplier·h(b)`.
    pub pair: (u64, u64),
}

#[derive(Clone, PartialEq, Debug)]
struct Remap {
    stage: u64,
    positions: (usize, usize),
    before: BTreeMap<u64, Seq>,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    Idle,
    Add,
    Inverse,
    Witness,
    Act,
    Wait,
}

/// One line of the construction dump.
#[derive(Clone, PartialEq, Debug, Serialize)]
pub struct StageEvent {
    pub stage: u64,
    pub kind: EventKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub acted_e: Option<u64>,
    #[serde(
        skip_serializing_if = "Option::is_none",
        serialize_with = "ser_opt_big"
    )]
    pub k: Option<BigInt>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub new_ids: Vec<u64>,
}

fn ser_opt_big<S: serde::Serializer>(
    k: &Option<BigInt>,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    match k {
        Some(k) => s.serialize_str(&k.to_string()),
        None => s.serialize_none(),
    }
}

/// Stopping conditions for [`StageState::run_until`].
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Until {
    Stage(u64),
    CarrierSize(usize),
    /// Every requirement that will ever act (fuel-bounded) has acted.
    AllHaltingActed,
}

#[derive(Clone, PartialEq, Debug)]
pub struct StageState {
    mode: Mode,
    driver: Driver,
    k_policy: KPolicy,
    stage: u64,
    images: BTreeMap<u64, Seq>,
    index: HashMap<Seq, u64>,
    order: Vec<u64>,
    next_id: u64,
    witnesses: BTreeMap<u64, Vec<u64>>,
    satisfied: BTreeSet<Requirement>,
    actions: BTreeMap<u64, Action>,
    events: Vec<StageEvent>,
    last_remap: Option<Remap>,
}

impl StageState {
    /// Stage 0: carrier `{0, b}` with `0 ↦ ()` and `b ↦ (1)`.
    pub fn init(mode: Mode, driver: Driver) -> Result<Self> {
        if let Mode::Mode32 { n, m_bound } = mode {
            if n < 2 || m_bound == 0 {
                return Err(Error::InvalidArgument(format!(
                    "mode 32 needs n ≥ 2 and a positive period bound, got n = {n}, bound = {m_bound}"
                )));
            }
            if matches!(driver, Driver::Events(_)) {
                return Err(Error::Unsupported(
                    "event-driven runs use two witnesses per index".into(),
                ));
            }
        }
        let mut state = StageState {
            mode,
            driver,
            k_policy: KPolicy::Fresh,
            stage: 0,
            images: BTreeMap::new(),
            index: HashMap::new(),
            order: Vec::new(),
            next_id: 2,
            witnesses: BTreeMap::new(),
            satisfied: BTreeSet::new(),
            actions: BTreeMap::new(),
            events: Vec::new(),
            last_remap: None,
        };
        state.insert(ZERO_ID, Seq::zero());
        state.insert(B_ID, Seq::unit(1));
        Ok(state)
    }

    pub fn with_k_policy(mut self, policy: KPolicy) -> Self {
        self.k_policy = policy;
        self
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn driver(&self) -> &Driver {
        &self.driver
    }

    pub fn stage(&self) -> u64 {
        self.stage
    }

    pub fn carrier_size(&self) -> usize {
        self.images.len()
    }

    /// Ids in order of first appearance.
    pub fn ids(&self) -> &[u64] {
        &self.order
    }

    pub fn image(&self, id: u64) -> Option<&Seq> {
        self.images.get(&id)
    }

    pub fn witnesses(&self, e: u64) -> Option<&[u64]> {
        self.witnesses.get(&e).map(Vec::as_slice)
    }

    pub fn actions(&self) -> &BTreeMap<u64, Action> {
        &self.actions
    }

    pub fn satisfied(&self) -> &BTreeSet<Requirement> {
        &self.satisfied
    }

    pub fn events(&self) -> &[StageEvent] {
        &self.events
    }

    pub fn last_remap_stage(&self) -> Option<u64> {
        self.last_remap.as_ref().map(|r| r.stage)
    }

    /// `M = lcm(1..=m_bound)` in mode 32, 1 otherwise.
    pub fn period_multiple(&self) -> BigInt {
        match self.mode {
            Mode::Mode31 => BigInt::one(),
            Mode::Mode32 { m_bound, .. } => lcm_up_to(m_bound),
        }
    }

    fn insert(&mut self, id: u64, image: Seq) {
        self.index.entry(image.clone()).or_insert(id);
        self.images.insert(id, image);
        self.order.push(id);
    }

    fn fresh_id(&mut self) -> u64 {
        let id = self.next_id;
        self.next_id += 1;
        id
    }

    fn push_event(
        &mut self,
        kind: EventKind,
        acted_e: Option<u64>,
        k: Option<BigInt>,
        new_ids: Vec<u64>,
    ) {
        self.events.push(StageEvent {
            stage: self.stage,
            kind,
            acted_e,
            k,
            new_ids,
        });
    }

    /// The value `R_e` should act on at the current stage, if any.
    fn observed_value(&self, e: u64, s: u64) -> Option<u64> {
        match &self.driver {
            Driver::Machine { fixture, fuel } => {
                let idx = fixture.get(e as usize)?;
                match eval_diagonal(idx, s.min(*fuel)) {
                    Evaluation::Halts(v) if v < self.mode.value_bound() => Some(v),
                    _ => None,
                }
            }
            Driver::Events(oracle) => match oracle.get(e)? {
                (Side::Phi0, at) if at <= s => Some(1),
                (Side::Phi1, at) if at <= s => Some(0),
                _ => None,
            },
        }
    }

    /// The value `R_e` will eventually act on, once stages are large enough.
    fn eventual_value(&self, e: u64) -> Option<u64> {
        match &self.driver {
            Driver::Machine { fuel, .. } => self.observed_value(e, *fuel),
            Driver::Events(_) => self.observed_value(e, u64::MAX),
        }
    }

    /// Indices whose `R_e` will act at some stage.
    pub fn halting_indices(&self) -> Vec<u64> {
        let candidates: Vec<u64> = match &self.driver {
            Driver::Machine { fixture, .. } => (0..fixture.len() as u64).collect(),
            Driver::Events(oracle) => oracle.indices().collect(),
        };
        candidates
            .into_iter()
            .filter(|e| self.eventual_value(*e).is_some())
            .collect()
    }

    fn pending_indices(&self) -> Vec<u64> {
        self.halting_indices()
            .into_iter()
            .filter(|e| !self.actions.contains_key(e))
            .collect()
    }

    /// Runs stage `s + 1` where `s` is the current stage.
    pub fn run_stage(&mut self) {
        let s = self.stage;
        self.stage += 1;
        let (e, j) = cantor_unpair(s);
        if j == 0 {
            self.push_event(EventKind::Idle, None, None, vec![]);
        } else if j % 3 == 1 {
            self.stage_add(e);
        } else if j % 3 == 2 {
            self.stage_inverse(e);
        } else {
            self.stage_diagonal(e, s);
        }
    }

    fn stage_add(&mut self, e: u64) {
        let (i, j) = cantor_unpair(e);
        let mut new_ids = vec![];
        if let (Some(a), Some(b)) = (self.images.get(&i), self.images.get(&j)) {
            let sum = a.add(b);
            if !self.index.contains_key(&sum) {
                let id = self.fresh_id();
                self.insert(id, sum);
                new_ids.push(id);
            }
            self.satisfied.insert(Requirement::A(e));
        }
        self.push_event(EventKind::Add, None, None, new_ids);
    }

    fn stage_inverse(&mut self, e: u64) {
        let mut new_ids = vec![];
        if let Some(a) = self.images.get(&e) {
            let inv = a.neg();
            if !self.index.contains_key(&inv) {
                let id = self.fresh_id();
                self.insert(id, inv);
                new_ids.push(id);
            }
            self.satisfied.insert(Requirement::I(e));
        }
        self.push_event(EventKind::Inverse, None, None, new_ids);
    }

    fn stage_diagonal(&mut self, e: u64, s: u64) {
        if !self.witnesses.contains_key(&e) {
            let ids: Vec<u64> = (0..self.mode.witness_count())
                .map(|slot| {
                    let id = self.fresh_id();
                    self.insert(id, Seq::unit(self.mode.witness_position(e, slot)));
                    id
                })
                .collect();
            self.witnesses.insert(e, ids.clone());
            self.push_event(EventKind::Witness, None, None, ids);
            return;
        }
        if self.satisfied.contains(&Requirement::R(e)) {
            self.push_event(EventKind::Wait, None, None, vec![]);
            return;
        }
        let Some(value) = self.observed_value(e, s) else {
            self.push_event(EventKind::Wait, None, None, vec![]);
            return;
        };
        let (slot1, slot2) = match self.mode {
            Mode::Mode31 => (0, 1),
            Mode::Mode32 { .. } => self.mode.pair_slots(value).expect("value below bound"),
        };
        let j1 = self.mode.witness_position(e, slot1);
        let j2 = self.mode.witness_position(e, slot2);
        let k = self.choose_k(value);
        let multiplier = match self.mode {
            Mode::Mode31 => k.clone(),
            Mode::Mode32 { .. } => self.period_multiple() * &k + 1,
        };
        self.remap(j1, j2, &multiplier);
        let ws = &self.witnesses[&e];
        let pair = (ws[slot1], ws[slot2]);
        self.actions.insert(
            e,
            Action {
                stage: self.stage,
                value,
                k: k.clone(),
                multiplier,
                positions: (j1, j2),
                pair,
            },
        );
        self.satisfied.insert(Requirement::R(e));
        self.push_event(EventKind::Act, Some(e), Some(k), vec![]);
    }

    fn choose_k(&self, value: u64) -> BigInt {
        match &self.k_policy {
            KPolicy::Constant(k) => k.clone(),
            KPolicy::Fresh => {
                let total: BigInt = self.images.values().map(Seq::abs_sum).sum();
                let mut k: BigInt = total * 2 + 1;
                if self.mode == Mode::Mode31 && k.is_odd() != (value % 2 == 1) {
                    k += 1;
                }
                k
            }
        }
    }

    // a ↦ (a_1 + c·a_{j2}, …, a_{j1} + a_{j2}, …, 0 at j2, …)
    fn remap(&mut self, j1: usize, j2: usize, multiplier: &BigInt) {
        let before = self.images.clone();
        for image in self.images.values_mut() {
            let t = image.get(j2);
            if t.is_zero() {
                continue;
            }
            image.set(1, image.get(1) + multiplier * &t);
            image.set(j1, image.get(j1) + &t);
            image.set(j2, BigInt::zero());
        }
        self.index.clear();
        for id in &self.order {
            self.index.entry(self.images[id].clone()).or_insert(*id);
        }
        self.last_remap = Some(Remap {
            stage: self.stage,
            positions: (j1, j2),
            before,
        });
    }

    fn until_holds(&self, until: Until) -> bool {
        match until {
            Until::Stage(s) => self.stage >= s,
            Until::CarrierSize(n) => self.carrier_size() >= n,
            Until::AllHaltingActed => self.pending_indices().is_empty(),
        }
    }

    /// Runs stages until `until` holds, spending at most `budget` stages. Returns the number
    /// of stages run.
    pub fn run_until(&mut self, until: Until, budget: u64) -> Result<u64> {
        let mut spent = 0;
        while !self.until_holds(until) {
            if spent == budget {
                return Err(Error::StageBudget(budget));
            }
            self.run_stage();
            spent += 1;
        }
        Ok(spent)
    }

    fn lookup_image(&mut self, target: impl Fn(&Self) -> Option<Seq>, budget: u64) -> Result<u64> {
        for _ in 0..=budget {
            if let Some(seq) = target(self) {
                if let Some(id) = self.index.get(&seq) {
                    return Ok(*id);
                }
            }
            if self.stage == u64::MAX {
                break;
            }
            self.run_stage();
        }
        Err(Error::StageBudget(budget))
    }

    /// `i + j`: the id whose image is `h(i) + h(j)`, running stages forward until it exists.
    pub fn lookup_add(&mut self, i: u64, j: u64, budget: u64) -> Result<u64> {
        for id in [i, j] {
            if !self.images.contains_key(&id) {
                return Err(Error::UndefinedId(id));
            }
        }
        self.lookup_image(|st| Some(st.images[&i].add(&st.images[&j])), budget)
    }

    /// `-i`, running stages forward until it exists.
    pub fn lookup_neg(&mut self, i: u64, budget: u64) -> Result<u64> {
        if !self.images.contains_key(&i) {
            return Err(Error::UndefinedId(i));
        }
        self.lookup_image(|st| Some(st.images[&i].neg()), budget)
    }

    /// Immutable copy of the current carrier and images.
    pub fn snapshot(&self) -> Result<FrozenLog> {
        FrozenLog::new(self.order.iter().map(|id| (*id, self.images[id].clone())))
    }

    /// The constructed group, frozen at the current stage.
    pub fn group(&self) -> Result<GroupSpec> {
        Ok(GroupSpec::free_omega(self.snapshot()?))
    }

    /// Checks injectivity, the pinned images of `0` and `b`, coherence and locality across the
    /// last remap, and the difference relation of every action.
    pub fn audit(&self) -> AuditReport {
        let mut violations = Vec::new();
        let mut seen: HashMap<&Seq, u64> = HashMap::new();
        for id in &self.order {
            if let Some(other) = seen.insert(&self.images[id], *id) {
                violations.push(Violation::NotInjective { ids: (other, *id) });
            }
        }
        if self.images.get(&ZERO_ID) != Some(&Seq::zero()) {
            violations.push(Violation::PinnedImage { id: ZERO_ID });
        }
        if self.images.get(&B_ID) != Some(&Seq::unit(1)) {
            violations.push(Violation::PinnedImage { id: B_ID });
        }
        if let Some(remap) = &self.last_remap {
            self.audit_remap(remap, &mut violations);
        }
        let unit = Seq::unit(1);
        for (e, act) in &self.actions {
            let (x, y) = act.pair;
            let (Some(hx), Some(hy)) = (self.images.get(&x), self.images.get(&y)) else {
                violations.push(Violation::ActedRelation { e: *e });
                continue;
            };
            let diff_ok = hy.sub(hx) == unit.scale(&act.multiplier);
            let value_ok = match self.mode {
                Mode::Mode31 => act.multiplier.is_odd() == (act.value % 2 == 1),
                Mode::Mode32 { .. } => (&act.multiplier - 1i32)
                    .mod_floor(&self.period_multiple())
                    .is_zero(),
            };
            if !diff_ok || !value_ok || act.multiplier.is_negative() {
                violations.push(Violation::ActedRelation { e: *e });
            }
        }
        AuditReport {
            stage: self.stage,
            violations,
        }
    }

    fn audit_remap(&self, remap: &Remap, violations: &mut Vec<Violation>) {
        let (j1, j2) = remap.positions;
        let before_index: HashMap<&Seq, u64> =
            remap.before.iter().map(|(id, s)| (s, *id)).collect();
        let after_index: HashMap<Seq, u64> = remap
            .before
            .keys()
            .map(|id| (self.images[id].clone(), *id))
            .collect();
        for (id, old) in &remap.before {
            let new = &self.images[id];
            let positions: BTreeSet<usize> = old
                .coords()
                .map(|(p, _)| p)
                .chain(new.coords().map(|(p, _)| p))
                .collect();
            for p in positions {
                if p != 1 && p != j1 && p != j2 && old.get(p) != new.get(p) {
                    violations.push(Violation::Locality {
                        id: *id,
                        position: p,
                    });
                }
            }
        }
        let ids: Vec<u64> = remap.before.keys().copied().collect();
        for (a, i) in ids.iter().enumerate() {
            for jd in &ids[a..] {
                let before = before_index
                    .get(&remap.before[i].add(&remap.before[jd]))
                    .copied();
                let after = after_index
                    .get(&self.images[i].add(&self.images[jd]))
                    .copied();
                if before != after {
                    violations.push(Violation::Coherence {
                        i: *i,
                        j: *jd,
                        before,
                        after,
                    });
                }
            }
        }
    }

    /// Ids whose image may still change: those touching a coordinate of a pending requirement.
    pub fn unstabilized_ids(&self) -> Vec<u64> {
        let mut positions = HashSet::new();
        for e in self.pending_indices() {
            for slot in 0..self.mode.witness_count() {
                positions.insert(self.mode.witness_position(e, slot));
            }
        }
        self.order
            .iter()
            .copied()
            .filter(|id| {
                self.images[id]
                    .coords()
                    .any(|(p, _)| positions.contains(&p))
            })
            .collect()
    }

    /// Parity of the first coordinate of the image: a 2-coloring with no monochromatic
    /// `x - y = b`, and with every `2l·b` colored 0.
    pub fn reference_bad_coloring(&self) -> Result<TableColoring> {
        let unstable = self.unstabilized_ids();
        if !unstable.is_empty() {
            return Err(Error::NeedMoreStages(format!(
                "{} ids have not stabilized (first: {})",
                unstable.len(),
                unstable[0]
            )));
        }
        let two = BigInt::from(2);
        let colors = self
            .order
            .iter()
            .map(|id| {
                let c = self.images[id].first().mod_floor(&two);
                (Element::Id(*id), if c.is_zero() { 0 } else { 1 })
            })
            .collect();
        TableColoring::new(2, colors)
    }

    fn witness_ids(&self, e: u64) -> Result<&[u64]> {
        self.witnesses
            .get(&e)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::NeedMoreStages(format!("witnesses for index {e} not created")))
    }

    fn colors_of(&self, group: &GroupSpec, coloring: &Coloring, ids: &[u64]) -> Result<Vec<u64>> {
        ids.iter()
            .map(|id| coloring.color(group, &Element::Id(*id)))
            .collect()
    }

    /// `g(e) = [c(x_e) ≠ c(y_e)]` for `e < count`.
    pub fn extract_pa(&self, coloring: &Coloring, count: u64) -> Result<BTreeMap<u64, u64>> {
        self.require_mode31("PA extraction")?;
        let group = self.group()?;
        (0..count)
            .map(|e| {
                let c = self.colors_of(&group, coloring, self.witness_ids(e)?)?;
                Ok((e, u64::from(c[0] != c[1])))
            })
            .collect()
    }

    /// `X = {e < count : c(x_e) = c(y_e)}`.
    pub fn extract_separator(&self, coloring: &Coloring, count: u64) -> Result<BTreeSet<u64>> {
        self.require_mode31("separator extraction")?;
        let group = self.group()?;
        let mut out = BTreeSet::new();
        for e in 0..count {
            let c = self.colors_of(&group, coloring, self.witness_ids(e)?)?;
            if c[0] == c[1] {
                out.insert(e);
            }
        }
        Ok(out)
    }

    /// `g(e)` = the least pair number `i` whose two witnesses share a color, for `e < count`.
    ///
    /// `period`, if given, is checked to divide `M` and to make every defined multiple of
    /// `period·b` share one color; the coloring is checked to have no pairwise monochromatic
    /// solution on the carrier.
    pub fn extract_dnc(
        &self,
        coloring: &Coloring,
        count: u64,
        period: Option<u64>,
    ) -> Result<BTreeMap<u64, u64>> {
        let Mode::Mode32 { n, .. } = self.mode else {
            return Err(Error::Unsupported(
                "DNC extraction needs a mode 32 run".into(),
            ));
        };
        let group = self.group()?;
        self.check_dnc_preconditions(&group, coloring, n, period)?;
        let mut out = BTreeMap::new();
        for e in 0..count {
            let c = self.colors_of(&group, coloring, self.witness_ids(e)?)?;
            let g = (0..self.mode.value_bound())
                .find(|i| {
                    let (a, b) = self.mode.pair_slots(*i).expect("below bound");
                    c[a] == c[b]
                })
                .ok_or_else(|| {
                    Error::Precondition(format!(
                        "witnesses of index {e} are colored injectively; more than 2n colors?"
                    ))
                })?;
            out.insert(e, g);
        }
        Ok(out)
    }

    fn check_dnc_preconditions(
        &self,
        group: &GroupSpec,
        coloring: &Coloring,
        n: usize,
        period: Option<u64>,
    ) -> Result<()> {
        if let Some(m) = period {
            if m == 0 || !(self.period_multiple() % m).is_zero() {
                return Err(Error::Precondition(format!(
                    "period {m} does not divide lcm(1..=bound)"
                )));
            }
            let mut first = None;
            for id in &self.order {
                let s = &self.images[id];
                let is_multiple = s.coords().all(|(p, _)| p == 1)
                    && (s.first().mod_floor(&BigInt::from(m))).is_zero();
                if !is_multiple {
                    continue;
                }
                let c = coloring.color(group, &Element::Id(*id))?;
                match first {
                    None => first = Some(c),
                    Some(f) if f != c => {
                        return Err(Error::Precondition(format!(
                            "multiples of {m}·b are not monochromatic (id {id})"
                        )))
                    }
                    _ => {}
                }
            }
        }
        let elements: Vec<Element> = self.order.iter().map(|id| Element::Id(*id)).collect();
        let eq = EquationSpec::new(n, Element::Id(B_ID))?;
        if let Some(w) = find_pairwise_mono(group, coloring, &eq, &elements)? {
            return Err(Error::Precondition(format!(
                "pairwise monochromatic solution on the carrier: {:?}",
                w.pairs
            )));
        }
        Ok(())
    }

    fn require_mode31(&self, what: &str) -> Result<()> {
        match self.mode {
            Mode::Mode31 => Ok(()),
            _ => Err(Error::Unsupported(format!("{what} needs a mode 31 run"))),
        }
    }

    /// Checks that `coloring` has no monochromatic `x - y = b` on the carrier.
    pub fn check_no_mono_pair(&self, coloring: &Coloring) -> Result<verify::VerificationReport> {
        let group = self.group()?;
        let elements: Vec<Element> = self.order.iter().map(|id| Element::Id(*id)).collect();
        verify::verify_on(
            &group,
            coloring,
            &EquationSpec::new(1, Element::Id(B_ID))?,
            &elements,
        )
    }

    /// One JSON object per stage event.
    pub fn events_jsonl(&self) -> Result<String> {
        let mut out = String::new();
        for ev in &self.events {
            out.push_str(&serde_json::to_string(ev)?);
            out.push('\n');
        }
        Ok(out)
    }
}

/// Stage number `⟨e, 3t + 3⟩` at which `R_e` is considered for the `t`-th time.
pub fn diagonal_stage(e: u64, t: u64) -> u64 {
    cantor_pair(e, 3 * t + 3)
}

#[derive(Clone, PartialEq, Eq, Debug, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    NotInjective {
        ids: (u64, u64),
    },
    PinnedImage {
        id: u64,
    },
    Coherence {
        i: u64,
        j: u64,
        before: Option<u64>,
        after: Option<u64>,
    },
    Locality {
        id: u64,
        position: usize,
    },
    ActedRelation {
        e: u64,
    },
}

#[derive(Clone, PartialEq, Eq, Debug, Serialize)]
pub struct AuditReport {
    pub stage: u64,
    pub violations: Vec<Violation>,
}

impl AuditReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}
