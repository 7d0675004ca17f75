//! Kripke semantics: models, the satisfaction relation, and complete
//! desk-scale deciders for the frame classes K, T, and S5.
//!
//! The deciders compile formulae over arbitrary bases down to De Morgan
//! form, then run a signed tableau (K, T) or an exhaustive clique search
//! (S5). Both are complete within explicit model bounds and report
//! `BudgetExceeded` rather than guessing beyond them. The module also
//! houses the linear-size formula family `phi_n`, the even/odd diamond
//! transfer check, and the bounded search for diamond-minimal equivalents
//! that backs the lower-bound experiments.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::rc::Rc;

use thiserror::Error;

use crate::boolfn::{builtin, Basis, BoolfnError, TruthTable};
use crate::formula::{eo_sets, is_variable_name, Formula, FormulaError};
use crate::repr::{dnf, synthesize, truth_table_of, ReprError, MAX_SYNTHESIS_ARITY};

/// Default node budget for the decision procedures.
pub const DEFAULT_BUDGET: u64 = 1_000_000;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SemanticsError {
    #[error("formula uses '{name}', which the ambient basis does not define")]
    UnknownFunction { name: String },
    #[error("'{name}' has arity {expected} but is applied to {got} arguments")]
    Arity {
        name: String,
        expected: usize,
        got: usize,
    },
    #[error("search budget exhausted; the answer is unknown at this bound")]
    BudgetExceeded,
    #[error("model file line {line}: {message}")]
    ModelFile { line: usize, message: String },
    #[error("world {world} out of range for {worlds} worlds")]
    WorldOutOfRange { world: usize, worlds: usize },
    #[error("'{name}' is not a variable name")]
    InvalidVariable { name: String },
    #[error("relation is not admissible for frame class {class}")]
    NotAdmissible { class: FrameClass },
    #[error(transparent)]
    Formula(#[from] FormulaError),
    #[error(transparent)]
    Repr(#[from] ReprError),
    #[error(transparent)]
    Boolfn(#[from] BoolfnError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum FrameClass {
    K,
    T,
    S5,
}

impl FrameClass {
    pub fn parse(tag: &str) -> Option<FrameClass> {
        match tag {
            "K" => Some(FrameClass::K),
            "T" => Some(FrameClass::T),
            "S5" => Some(FrameClass::S5),
            _ => None,
        }
    }
}

impl fmt::Display for FrameClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FrameClass::K => "K",
            FrameClass::T => "T",
            FrameClass::S5 => "S5",
        })
    }
}

/// A finite pointed Kripke structure. Worlds are `0..worlds`; variables
/// absent from the valuation are false everywhere.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KripkeModel {
    worlds: usize,
    relation: BTreeSet<(usize, usize)>,
    valuation: BTreeMap<String, BTreeSet<usize>>,
    initial: usize,
}

impl KripkeModel {
    pub fn new(
        worlds: usize,
        relation: BTreeSet<(usize, usize)>,
        valuation: BTreeMap<String, BTreeSet<usize>>,
        initial: usize,
    ) -> Result<KripkeModel, SemanticsError> {
        if initial >= worlds {
            return Err(SemanticsError::WorldOutOfRange {
                world: initial,
                worlds,
            });
        }
        for &(u, v) in &relation {
            let w = u.max(v);
            if w >= worlds {
                return Err(SemanticsError::WorldOutOfRange { world: w, worlds });
            }
        }
        for (name, set) in &valuation {
            if !is_variable_name(name) {
                return Err(SemanticsError::InvalidVariable { name: name.clone() });
            }
            if let Some(&w) = set.iter().next_back() {
                if w >= worlds {
                    return Err(SemanticsError::WorldOutOfRange { world: w, worlds });
                }
            }
        }
        Ok(KripkeModel {
            worlds,
            relation,
            valuation,
            initial,
        })
    }

    pub fn worlds(&self) -> usize {
        self.worlds
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn relation(&self) -> &BTreeSet<(usize, usize)> {
        &self.relation
    }

    pub fn valuation(&self) -> &BTreeMap<String, BTreeSet<usize>> {
        &self.valuation
    }

    pub fn successors(&self, w: usize) -> impl Iterator<Item = usize> + '_ {
        self.relation
            .range((w, 0)..=(w, usize::MAX))
            .map(|&(_, v)| v)
    }

    pub fn holds(&self, var: &str, w: usize) -> bool {
        self.valuation.get(var).is_some_and(|s| s.contains(&w))
    }

    /// Whether the relation satisfies the frame conditions of `class`:
    /// nothing for K, reflexivity for T, an equivalence relation for S5.
    pub fn admissible(&self, class: FrameClass) -> bool {
        match class {
            FrameClass::K => true,
            FrameClass::T => self.reflexive(),
            FrameClass::S5 => {
                self.reflexive()
                    && self.relation.iter().all(|&(u, v)| self.relation.contains(&(v, u)))
                    && self.relation.iter().all(|&(u, v)| {
                        self.successors(v).all(|w| self.relation.contains(&(u, w)))
                    })
            }
        }
    }

    fn reflexive(&self) -> bool {
        (0..self.worlds).all(|w| self.relation.contains(&(w, w)))
    }

    /// Closes the relation under the frame conditions of `class`: adds
    /// self-loops for T, replaces the relation by the finest equivalence
    /// containing it for S5.
    pub fn close(&mut self, class: FrameClass) {
        match class {
            FrameClass::K => {}
            FrameClass::T => {
                for w in 0..self.worlds {
                    self.relation.insert((w, w));
                }
            }
            FrameClass::S5 => {
                let mut component: Vec<usize> = (0..self.worlds).collect();
                fn root(component: &mut [usize], mut w: usize) -> usize {
                    while component[w] != w {
                        component[w] = component[component[w]];
                        w = component[w];
                    }
                    w
                }
                for &(u, v) in &self.relation {
                    let (ru, rv) = (root(&mut component, u), root(&mut component, v));
                    component[ru] = rv;
                }
                let mut closed = BTreeSet::new();
                for u in 0..self.worlds {
                    for v in 0..self.worlds {
                        if root(&mut component, u) == root(&mut component, v) {
                            closed.insert((u, v));
                        }
                    }
                }
                self.relation = closed;
            }
        }
    }

    /// Parses the line-oriented model format: `worlds N`, `init I`,
    /// `frame K|T|S5`, `edge U V`, `val p: W1 W2 ...`, with `#` comments.
    /// With `close_frame` the relation is closed under the declared frame
    /// conditions; without it, non-conforming files are rejected.
    pub fn load(text: &str, close_frame: bool) -> Result<(KripkeModel, FrameClass), SemanticsError> {
        let mut worlds = None;
        let mut initial = None;
        let mut frame = None;
        let mut relation = BTreeSet::new();
        let mut valuation: BTreeMap<String, BTreeSet<usize>> = BTreeMap::new();
        let fail = |line: usize, message: &str| SemanticsError::ModelFile {
            line,
            message: message.to_string(),
        };
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.trim();
            if content.is_empty() || content.starts_with('#') {
                continue;
            }
            let (key, rest) = content.split_once(char::is_whitespace).unwrap_or((content, ""));
            let rest = rest.trim();
            match key {
                "worlds" => {
                    let n: usize = rest.parse().map_err(|_| fail(line, "expected 'worlds N'"))?;
                    if worlds.replace(n).is_some() {
                        return Err(fail(line, "duplicate 'worlds' line"));
                    }
                }
                "init" => {
                    let n: usize = rest.parse().map_err(|_| fail(line, "expected 'init I'"))?;
                    if initial.replace(n).is_some() {
                        return Err(fail(line, "duplicate 'init' line"));
                    }
                }
                "frame" => {
                    let class = FrameClass::parse(rest)
                        .ok_or_else(|| fail(line, "expected 'frame K', 'frame T', or 'frame S5'"))?;
                    if frame.replace(class).is_some() {
                        return Err(fail(line, "duplicate 'frame' line"));
                    }
                }
                "edge" => {
                    let mut parts = rest.split_whitespace();
                    let pair = (parts.next(), parts.next(), parts.next());
                    match pair {
                        (Some(u), Some(v), None) => {
                            let u = u.parse().map_err(|_| fail(line, "expected 'edge U V'"))?;
                            let v = v.parse().map_err(|_| fail(line, "expected 'edge U V'"))?;
                            relation.insert((u, v));
                        }
                        _ => return Err(fail(line, "expected 'edge U V'")),
                    }
                }
                "val" => {
                    let (name, indices) = rest
                        .split_once(':')
                        .ok_or_else(|| fail(line, "expected 'val p: W1 W2 ...'"))?;
                    let name = name.trim();
                    if !is_variable_name(name) {
                        return Err(fail(line, "valuation key is not a variable name"));
                    }
                    let entry = valuation.entry(name.to_string()).or_default();
                    for token in indices.split_whitespace() {
                        let w = token
                            .parse()
                            .map_err(|_| fail(line, "expected world indices after ':'"))?;
                        entry.insert(w);
                    }
                }
                _ => return Err(fail(line, "unknown directive")),
            }
        }
        let worlds = worlds.ok_or_else(|| fail(0, "missing 'worlds' line"))?;
        let initial = initial.ok_or_else(|| fail(0, "missing 'init' line"))?;
        let frame = frame.ok_or_else(|| fail(0, "missing 'frame' line"))?;
        let mut model = KripkeModel::new(worlds, relation, valuation, initial)?;
        if close_frame {
            model.close(frame);
        } else if !model.admissible(frame) {
            return Err(SemanticsError::NotAdmissible { class: frame });
        }
        Ok((model, frame))
    }

    /// Renders the model in the format accepted by `load`.
    pub fn to_text(&self, class: FrameClass) -> String {
        let mut out = String::new();
        out.push_str(&format!("worlds {}\n", self.worlds));
        out.push_str(&format!("init {}\n", self.initial));
        out.push_str(&format!("frame {class}\n"));
        for &(u, v) in &self.relation {
            out.push_str(&format!("edge {u} {v}\n"));
        }
        for (name, set) in &self.valuation {
            let worlds: Vec<String> = set.iter().map(usize::to_string).collect();
            out.push_str(&format!("val {name}: {}\n", worlds.join(" ")));
        }
        out
    }
}

/// The satisfaction relation, with applications evaluated through the
/// basis table they name.
pub fn model_check(
    model: &KripkeModel,
    world: usize,
    formula: &Formula,
    basis: &Basis,
) -> Result<bool, SemanticsError> {
    if world >= model.worlds {
        return Err(SemanticsError::WorldOutOfRange {
            world,
            worlds: model.worlds,
        });
    }
    match formula {
        Formula::Var(p) => Ok(model.holds(p, world)),
        Formula::Diamond(inner) => {
            for v in model.successors(world) {
                if model_check(model, v, inner, basis)? {
                    return Ok(true);
                }
            }
            Ok(false)
        }
        Formula::Apply(name, args) => {
            let table = basis
                .get(name)
                .ok_or_else(|| SemanticsError::UnknownFunction { name: name.clone() })?;
            if table.arity() != args.len() {
                return Err(SemanticsError::Arity {
                    name: name.clone(),
                    expected: table.arity(),
                    got: args.len(),
                });
            }
            let mut inputs = Vec::with_capacity(args.len());
            for a in args {
                inputs.push(model_check(model, world, a, basis)?);
            }
            Ok(table.eval(&inputs)?)
        }
    }
}

/// Negation normal form over De Morgan connectives plus both modalities.
/// Nodes are hash-consed: structurally equal terms share one allocation,
/// identity is the interner-assigned id, and comparisons are O(1), so the
/// duplication introduced by expanding ⊕/↔ shapes stays cheap.
#[derive(Debug)]
struct Nnf {
    id: u64,
    kind: NnfKind,
}

#[derive(Debug)]
enum NnfKind {
    Bot,
    Top,
    Lit(String, bool),
    And(Rc<Nnf>, Rc<Nnf>),
    Or(Rc<Nnf>, Rc<Nnf>),
    Dia(Rc<Nnf>),
    Nec(Rc<Nnf>),
}

impl PartialEq for Nnf {
    fn eq(&self, other: &Nnf) -> bool {
        self.id == other.id
    }
}

impl Eq for Nnf {}

impl PartialOrd for Nnf {
    fn partial_cmp(&self, other: &Nnf) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Nnf {
    fn cmp(&self, other: &Nnf) -> std::cmp::Ordering {
        self.id.cmp(&other.id)
    }
}

#[derive(PartialEq, Eq, Hash)]
enum NnfKey {
    Bot,
    Top,
    Lit(String, bool),
    And(u64, u64),
    Or(u64, u64),
    Dia(u64),
    Nec(u64),
}

/// Hash-consing table. Conjunction and disjunction are canonicalized by
/// child id, constants fold away, and complementary pairs collapse when the
/// negation relation between them is already known.
#[derive(Default)]
struct Interner {
    nodes: HashMap<NnfKey, Rc<Nnf>>,
    negations: HashMap<u64, Rc<Nnf>>,
    next_id: u64,
}

impl Interner {
    fn intern(&mut self, key: NnfKey, kind: impl FnOnce() -> NnfKind) -> Rc<Nnf> {
        if let Some(hit) = self.nodes.get(&key) {
            return hit.clone();
        }
        let node = Rc::new(Nnf {
            id: self.next_id,
            kind: kind(),
        });
        self.next_id += 1;
        self.nodes.insert(key, node.clone());
        node
    }

    fn bot(&mut self) -> Rc<Nnf> {
        self.intern(NnfKey::Bot, || NnfKind::Bot)
    }

    fn top(&mut self) -> Rc<Nnf> {
        self.intern(NnfKey::Top, || NnfKind::Top)
    }

    fn constant(&mut self, value: bool) -> Rc<Nnf> {
        if value {
            self.top()
        } else {
            self.bot()
        }
    }

    fn lit(&mut self, name: &str, positive: bool) -> Rc<Nnf> {
        self.intern(NnfKey::Lit(name.to_string(), positive), || {
            NnfKind::Lit(name.to_string(), positive)
        })
    }

    fn complementary(&self, l: &Rc<Nnf>, r: &Rc<Nnf>) -> bool {
        self.negations.get(&l.id).is_some_and(|n| n.id == r.id)
    }

    fn and(&mut self, l: Rc<Nnf>, r: Rc<Nnf>) -> Rc<Nnf> {
        if matches!(l.kind, NnfKind::Bot) || matches!(r.kind, NnfKind::Bot) {
            return self.bot();
        }
        if matches!(l.kind, NnfKind::Top) {
            return r;
        }
        if matches!(r.kind, NnfKind::Top) {
            return l;
        }
        if l.id == r.id {
            return l;
        }
        if self.complementary(&l, &r) {
            return self.bot();
        }
        let (l, r) = if l.id <= r.id { (l, r) } else { (r, l) };
        self.intern(NnfKey::And(l.id, r.id), || NnfKind::And(l, r))
    }

    fn or(&mut self, l: Rc<Nnf>, r: Rc<Nnf>) -> Rc<Nnf> {
        if matches!(l.kind, NnfKind::Top) || matches!(r.kind, NnfKind::Top) {
            return self.top();
        }
        if matches!(l.kind, NnfKind::Bot) {
            return r;
        }
        if matches!(r.kind, NnfKind::Bot) {
            return l;
        }
        if l.id == r.id {
            return l;
        }
        if self.complementary(&l, &r) {
            return self.top();
        }
        let (l, r) = if l.id <= r.id { (l, r) } else { (r, l) };
        self.intern(NnfKey::Or(l.id, r.id), || NnfKind::Or(l, r))
    }

    fn dia(&mut self, x: Rc<Nnf>) -> Rc<Nnf> {
        if matches!(x.kind, NnfKind::Bot) {
            return self.bot();
        }
        self.intern(NnfKey::Dia(x.id), || NnfKind::Dia(x))
    }

    fn nec(&mut self, x: Rc<Nnf>) -> Rc<Nnf> {
        if matches!(x.kind, NnfKind::Top) {
            return self.top();
        }
        self.intern(NnfKey::Nec(x.id), || NnfKind::Nec(x))
    }

    fn negate(&mut self, n: &Rc<Nnf>) -> Rc<Nnf> {
        if let Some(hit) = self.negations.get(&n.id) {
            return hit.clone();
        }
        let result = match &n.kind {
            NnfKind::Bot => self.top(),
            NnfKind::Top => self.bot(),
            NnfKind::Lit(p, pos) => {
                let (p, pos) = (p.clone(), *pos);
                self.lit(&p, !pos)
            }
            NnfKind::And(l, r) => {
                let (l, r) = (l.clone(), r.clone());
                let nl = self.negate(&l);
                let nr = self.negate(&r);
                self.or(nl, nr)
            }
            NnfKind::Or(l, r) => {
                let (l, r) = (l.clone(), r.clone());
                let nl = self.negate(&l);
                let nr = self.negate(&r);
                self.and(nl, nr)
            }
            NnfKind::Dia(x) => {
                let x = x.clone();
                let nx = self.negate(&x);
                self.nec(nx)
            }
            NnfKind::Nec(x) => {
                let x = x.clone();
                let nx = self.negate(&x);
                self.dia(nx)
            }
        };
        self.negations.insert(n.id, result.clone());
        self.negations.entry(result.id).or_insert_with(|| n.clone());
        result
    }
}

fn spend(budget: &mut u64) -> Result<(), SemanticsError> {
    if *budget == 0 {
        return Err(SemanticsError::BudgetExceeded);
    }
    *budget -= 1;
    Ok(())
}

const SHAPE_NAMES: &[&str] = &["not", "and", "or", "iff", "imp", "xor"];

fn shape_of(table: &TruthTable) -> Option<&'static str> {
    SHAPE_NAMES
        .iter()
        .find(|name| table.same_function(&builtin(name).expect("builtin")))
        .copied()
}

/// Compiles formulae straight to interned NNF. Applications resolve through
/// the ambient basis: tables matching a known connective shape expand with
/// the requested polarity, nullary tables become constants, and foreign
/// tables go through a synthesized (or, for wide tables, DNF) skeleton whose
/// variables bind to the already compiled arguments. Binding instead of
/// substituting keeps repeated arguments as one shared node, so nested
/// duplication never materializes.
struct Compiler<'a> {
    basis: &'a Basis,
    dm: Basis,
    interner: Interner,
    skeletons: BTreeMap<(usize, String), Rc<Formula>>,
    memo: HashMap<(usize, bool), Rc<Nnf>>,
}

impl<'a> Compiler<'a> {
    fn new(basis: &'a Basis) -> Compiler<'a> {
        Compiler {
            basis,
            dm: Basis::de_morgan(),
            interner: Interner::default(),
            skeletons: BTreeMap::new(),
            memo: HashMap::new(),
        }
    }

    fn compile(&mut self, formula: &Formula, positive: bool) -> Result<Rc<Nnf>, SemanticsError> {
        let key = (formula as *const Formula as usize, positive);
        if let Some(hit) = self.memo.get(&key) {
            return Ok(hit.clone());
        }
        let result = match formula {
            Formula::Var(p) => self.interner.lit(p, positive),
            Formula::Diamond(inner) => {
                let body = self.compile(inner, positive)?;
                if positive {
                    self.interner.dia(body)
                } else {
                    self.interner.nec(body)
                }
            }
            Formula::Apply(name, args) => self.compile_apply(name, args, positive)?,
        };
        self.memo.insert(key, result.clone());
        Ok(result)
    }

    fn compile_apply(
        &mut self,
        name: &str,
        args: &[Formula],
        positive: bool,
    ) -> Result<Rc<Nnf>, SemanticsError> {
        let table = self
            .basis
            .get(name)
            .ok_or_else(|| SemanticsError::UnknownFunction {
                name: name.to_string(),
            })?
            .clone();
        if table.arity() != args.len() {
            return Err(SemanticsError::Arity {
                name: name.to_string(),
                expected: table.arity(),
                got: args.len(),
            });
        }
        if table.arity() == 0 {
            return Ok(self.interner.constant(table.eval(&[])? == positive));
        }
        if let Some(shape) = shape_of(&table) {
            return self.compile_shape(shape, args, positive);
        }
        let key = (table.arity(), table.bit_string());
        if !self.skeletons.contains_key(&key) {
            let skeleton = if table.arity() <= MAX_SYNTHESIS_ARITY {
                synthesize(&self.dm, &table)?
            } else {
                let vars: Vec<String> = (1..=table.arity()).map(|i| format!("p{i}")).collect();
                dnf(&table, &vars)
            };
            self.skeletons.insert(key.clone(), Rc::new(skeleton));
        }
        let skeleton = self.skeletons[&key].clone();
        let mut env = BTreeMap::new();
        for (i, arg) in args.iter().enumerate() {
            let pos = self.compile(arg, true)?;
            let neg = self.compile(arg, false)?;
            env.insert(format!("p{}", i + 1), (pos, neg));
        }
        self.compile_skeleton(&skeleton, positive, &env)
    }

    fn compile_shape(
        &mut self,
        shape: &str,
        args: &[Formula],
        positive: bool,
    ) -> Result<Rc<Nnf>, SemanticsError> {
        match shape {
            "not" => self.compile(&args[0], !positive),
            "and" | "or" => {
                let conjunctive = (shape == "and") == positive;
                let l = self.compile(&args[0], positive)?;
                let r = self.compile(&args[1], positive)?;
                Ok(if conjunctive {
                    self.interner.and(l, r)
                } else {
                    self.interner.or(l, r)
                })
            }
            "imp" => {
                let l = self.compile(&args[0], !positive)?;
                let r = self.compile(&args[1], positive)?;
                Ok(if positive {
                    self.interner.or(l, r)
                } else {
                    self.interner.and(l, r)
                })
            }
            _ => {
                let same_polarity = (shape == "iff") == positive;
                let lp = self.compile(&args[0], true)?;
                let ln = self.compile(&args[0], false)?;
                let rp = self.compile(&args[1], true)?;
                let rn = self.compile(&args[1], false)?;
                let (first, second) = if same_polarity {
                    (
                        self.interner.and(lp.clone(), rp.clone()),
                        self.interner.and(ln, rn),
                    )
                } else {
                    (
                        self.interner.and(lp.clone(), rn),
                        self.interner.and(ln, rp),
                    )
                };
                Ok(self.interner.or(first, second))
            }
        }
    }

    fn compile_skeleton(
        &mut self,
        skeleton: &Formula,
        positive: bool,
        env: &BTreeMap<String, (Rc<Nnf>, Rc<Nnf>)>,
    ) -> Result<Rc<Nnf>, SemanticsError> {
        match skeleton {
            Formula::Var(p) => {
                let (pos, neg) = env.get(p).expect("skeleton variables are bound");
                Ok(if positive { pos.clone() } else { neg.clone() })
            }
            Formula::Diamond(inner) => {
                let body = self.compile_skeleton(inner, positive, env)?;
                Ok(if positive {
                    self.interner.dia(body)
                } else {
                    self.interner.nec(body)
                })
            }
            Formula::Apply(name, args) => match (name.as_str(), args.len()) {
                ("top", 0) => Ok(self.interner.constant(positive)),
                ("bot", 0) => Ok(self.interner.constant(!positive)),
                ("not", 1) => self.compile_skeleton(&args[0], !positive, env),
                ("and", 2) | ("or", 2) => {
                    let conjunctive = (name == "and") == positive;
                    let l = self.compile_skeleton(&args[0], positive, env)?;
                    let r = self.compile_skeleton(&args[1], positive, env)?;
                    Ok(if conjunctive {
                        self.interner.and(l, r)
                    } else {
                        self.interner.or(l, r)
                    })
                }
                _ => Err(SemanticsError::UnknownFunction {
                    name: name.clone(),
                }),
            },
        }
    }
}

fn nnf_vars(n: &Rc<Nnf>, out: &mut BTreeSet<String>, seen: &mut BTreeSet<u64>) {
    if !seen.insert(n.id) {
        return;
    }
    match &n.kind {
        NnfKind::Bot | NnfKind::Top => {}
        NnfKind::Lit(p, _) => {
            out.insert(p.clone());
        }
        NnfKind::And(l, r) | NnfKind::Or(l, r) => {
            nnf_vars(l, out, seen);
            nnf_vars(r, out, seen);
        }
        NnfKind::Dia(x) | NnfKind::Nec(x) => nnf_vars(x, out, seen),
    }
}

fn nnf_subformulae(n: &Rc<Nnf>, out: &mut BTreeSet<Rc<Nnf>>) {
    if !out.insert(n.clone()) {
        return;
    }
    match &n.kind {
        NnfKind::Bot | NnfKind::Top | NnfKind::Lit(..) => {}
        NnfKind::And(l, r) | NnfKind::Or(l, r) => {
            nnf_subformulae(l, out);
            nnf_subformulae(r, out);
        }
        NnfKind::Dia(x) | NnfKind::Nec(x) => nnf_subformulae(x, out),
    }
}

/// Tableau-extracted tree model.
struct Tree {
    truths: BTreeSet<String>,
    children: Vec<Tree>,
}

#[derive(Clone)]
struct Branch {
    todo: Vec<Rc<Nnf>>,
    seen: BTreeSet<Rc<Nnf>>,
    lits: BTreeMap<String, bool>,
    dias: BTreeSet<Rc<Nnf>>,
    boxes: BTreeSet<Rc<Nnf>>,
}

struct Tableau<'a> {
    reflexive: bool,
    budget: &'a mut u64,
}

impl Tableau<'_> {
    fn world(&mut self, demands: Vec<Rc<Nnf>>) -> Result<Option<Tree>, SemanticsError> {
        spend(self.budget)?;
        self.saturate(Branch {
            todo: demands,
            seen: BTreeSet::new(),
            lits: BTreeMap::new(),
            dias: BTreeSet::new(),
            boxes: BTreeSet::new(),
        })
    }

    fn saturate(&mut self, mut branch: Branch) -> Result<Option<Tree>, SemanticsError> {
        while let Some(item) = branch.todo.pop() {
            spend(self.budget)?;
            if !branch.seen.insert(item.clone()) {
                continue;
            }
            match &item.kind {
                NnfKind::Top => {}
                NnfKind::Bot => return Ok(None),
                NnfKind::Lit(p, pos) => {
                    if let Some(prev) = branch.lits.insert(p.clone(), *pos) {
                        if prev != *pos {
                            return Ok(None);
                        }
                    }
                }
                NnfKind::And(l, r) => {
                    branch.todo.push(l.clone());
                    branch.todo.push(r.clone());
                }
                NnfKind::Or(l, r) => {
                    let mut left = branch.clone();
                    left.todo.push(l.clone());
                    if let Some(tree) = self.saturate(left)? {
                        return Ok(Some(tree));
                    }
                    branch.todo.push(r.clone());
                }
                NnfKind::Dia(x) => {
                    branch.dias.insert(x.clone());
                }
                NnfKind::Nec(x) => {
                    branch.boxes.insert(x.clone());
                    if self.reflexive {
                        branch.todo.push(x.clone());
                    }
                }
            }
        }
        let mut children = Vec::new();
        for d in &branch.dias {
            let mut demands: Vec<Rc<Nnf>> = branch.boxes.iter().cloned().collect();
            demands.push(d.clone());
            match self.world(demands)? {
                Some(child) => children.push(child),
                None => return Ok(None),
            }
        }
        let truths = branch
            .lits
            .into_iter()
            .filter_map(|(p, pos)| pos.then_some(p))
            .collect();
        Ok(Some(Tree { truths, children }))
    }
}

fn flatten(tree: &Tree, reflexive: bool) -> KripkeModel {
    fn walk(
        tree: &Tree,
        next: &mut usize,
        relation: &mut BTreeSet<(usize, usize)>,
        valuation: &mut BTreeMap<String, BTreeSet<usize>>,
    ) -> usize {
        let id = *next;
        *next += 1;
        for p in &tree.truths {
            valuation.entry(p.clone()).or_default().insert(id);
        }
        for child in &tree.children {
            let cid = walk(child, next, relation, valuation);
            relation.insert((id, cid));
        }
        id
    }
    let mut next = 0;
    let mut relation = BTreeSet::new();
    let mut valuation = BTreeMap::new();
    walk(tree, &mut next, &mut relation, &mut valuation);
    if reflexive {
        for w in 0..next {
            relation.insert((w, w));
        }
    }
    KripkeModel::new(next, relation, valuation, 0).expect("tableau trees are well formed")
}

fn s5_satisfiable(root: &Rc<Nnf>, mut budget: u64) -> Result<Option<KripkeModel>, SemanticsError> {
    let mut vars = BTreeSet::new();
    nnf_vars(root, &mut vars, &mut BTreeSet::new());
    let vars: Vec<String> = vars.into_iter().collect();
    if vars.len() > 16 {
        return Err(SemanticsError::BudgetExceeded);
    }
    let mut subformulae = BTreeSet::new();
    nnf_subformulae(root, &mut subformulae);
    let profiles = 1usize << vars.len();
    let cap = (subformulae.len() + 1).min(profiles);
    if cap > 64 {
        return Err(SemanticsError::BudgetExceeded);
    }

    let index: BTreeMap<&str, usize> = vars
        .iter()
        .enumerate()
        .map(|(i, v)| (v.as_str(), i))
        .collect();

    fn eval_clique(
        n: &Rc<Nnf>,
        worlds: &[u32],
        index: &BTreeMap<&str, usize>,
        full: u64,
        memo: &mut HashMap<u64, u64>,
    ) -> u64 {
        if let Some(&hit) = memo.get(&n.id) {
            return hit;
        }
        let result = match &n.kind {
            NnfKind::Bot => 0,
            NnfKind::Top => full,
            NnfKind::Lit(p, pos) => {
                let bit = 1u32 << index[p.as_str()];
                let mut mask = 0u64;
                for (i, w) in worlds.iter().enumerate() {
                    if (w & bit != 0) == *pos {
                        mask |= 1 << i;
                    }
                }
                mask
            }
            NnfKind::And(l, r) => {
                eval_clique(l, worlds, index, full, memo)
                    & eval_clique(r, worlds, index, full, memo)
            }
            NnfKind::Or(l, r) => {
                eval_clique(l, worlds, index, full, memo)
                    | eval_clique(r, worlds, index, full, memo)
            }
            NnfKind::Dia(x) => {
                if eval_clique(x, worlds, index, full, memo) != 0 {
                    full
                } else {
                    0
                }
            }
            NnfKind::Nec(x) => {
                if eval_clique(x, worlds, index, full, memo) == full {
                    full
                } else {
                    0
                }
            }
        };
        memo.insert(n.id, result);
        result
    }

    fn witness(worlds: &[u32], vars: &[String], initial: usize) -> KripkeModel {
        let n = worlds.len();
        let mut relation = BTreeSet::new();
        for u in 0..n {
            for v in 0..n {
                relation.insert((u, v));
            }
        }
        let mut valuation: BTreeMap<String, BTreeSet<usize>> = BTreeMap::new();
        for (i, w) in worlds.iter().enumerate() {
            for (b, var) in vars.iter().enumerate() {
                if w & (1 << b) != 0 {
                    valuation.entry(var.clone()).or_default().insert(i);
                }
            }
        }
        KripkeModel::new(n, relation, valuation, initial).expect("clique model is well formed")
    }

    #[allow(clippy::too_many_arguments)]
    fn search(
        root: &Rc<Nnf>,
        profiles: usize,
        start: usize,
        chosen: &mut Vec<u32>,
        remaining: usize,
        vars: &[String],
        index: &BTreeMap<&str, usize>,
        budget: &mut u64,
    ) -> Result<Option<KripkeModel>, SemanticsError> {
        if remaining == 0 {
            spend(budget)?;
            let full = if chosen.len() == 64 {
                u64::MAX
            } else {
                (1u64 << chosen.len()) - 1
            };
            let mask = eval_clique(root, chosen, index, full, &mut HashMap::new());
            if mask != 0 {
                let initial = mask.trailing_zeros() as usize;
                return Ok(Some(witness(chosen, vars, initial)));
            }
            return Ok(None);
        }
        for p in start..profiles {
            chosen.push(p as u32);
            let found = search(
                root,
                profiles,
                p + 1,
                chosen,
                remaining - 1,
                vars,
                index,
                budget,
            )?;
            chosen.pop();
            if found.is_some() {
                return Ok(found);
            }
        }
        Ok(None)
    }

    for size in 1..=cap {
        let mut chosen = Vec::with_capacity(size);
        if let Some(model) = search(
            root,
            profiles,
            0,
            &mut chosen,
            size,
            &vars,
            &index,
            &mut budget,
        )? {
            return Ok(Some(model));
        }
    }
    Ok(None)
}

/// Complete satisfiability and equivalence decisions within an explicit
/// node budget. The basis interprets every function name appearing in the
/// input formulae.
pub struct Decider {
    basis: Basis,
    budget: u64,
}

impl Decider {
    pub fn new(basis: Basis, budget: u64) -> Decider {
        Decider { basis, budget }
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    fn compile(&self, formula: &Formula) -> Result<Rc<Nnf>, SemanticsError> {
        Compiler::new(&self.basis).compile(formula, true)
    }

    fn satisfiable_nnf(
        &self,
        root: Rc<Nnf>,
        class: FrameClass,
    ) -> Result<Option<KripkeModel>, SemanticsError> {
        match class {
            FrameClass::K | FrameClass::T => {
                let mut budget = self.budget;
                let mut tableau = Tableau {
                    reflexive: class == FrameClass::T,
                    budget: &mut budget,
                };
                Ok(tableau
                    .world(vec![root])?
                    .map(|tree| flatten(&tree, class == FrameClass::T)))
            }
            FrameClass::S5 => s5_satisfiable(&root, self.budget),
        }
    }

    /// Returns a witness model when the formula is satisfiable over the
    /// class, `None` when it is not. Complete at desk scale; budget
    /// exhaustion is reported, never silently treated as unsatisfiable.
    pub fn satisfiable(
        &self,
        formula: &Formula,
        class: FrameClass,
    ) -> Result<Option<KripkeModel>, SemanticsError> {
        let root = self.compile(formula)?;
        self.satisfiable_nnf(root, class)
    }

    /// Equivalence over the class: entailment checked in both directions.
    pub fn equivalent(
        &self,
        phi: &Formula,
        psi: &Formula,
        class: FrameClass,
    ) -> Result<bool, SemanticsError> {
        let mut compiler = Compiler::new(&self.basis);
        let a = compiler.compile(phi, true)?;
        let b = compiler.compile(psi, true)?;
        let not_b = compiler.interner.negate(&b);
        let left = compiler.interner.and(a.clone(), not_b);
        if self.satisfiable_nnf(left, class)?.is_some() {
            return Ok(false);
        }
        let not_a = compiler.interner.negate(&a);
        let right = compiler.interner.and(b, not_a);
        Ok(self.satisfiable_nnf(right, class)?.is_none())
    }
}

/// The linear-size family whose De Morgan equivalents need exponentially
/// many diamonds: `phi_0 = p0 and dia(not p0)`,
/// `phi_{n+1} = p_{(n+1) mod 2} and (p iff dia(phi_n))`.
pub fn phi_n(n: usize) -> Formula {
    let mut phi = Formula::and(
        Formula::var("p0"),
        Formula::diamond(Formula::not(Formula::var("p0"))),
    );
    for k in 1..=n {
        phi = Formula::and(
            Formula::var(&format!("p{}", k % 2)),
            Formula::iff(Formula::var("p"), Formula::diamond(phi)),
        );
    }
    phi
}

/// Checks one instance of the even/odd transfer property: if the pointed
/// models agree on atoms, diamonds over the even set transfer left to
/// right, and diamonds over the odd set transfer right to left, then
/// satisfaction of `psi` transfers left to right. Returns false only on a
/// counterexample to the property itself.
pub fn eo_transfer_check(
    s: &KripkeModel,
    sw: usize,
    t: &KripkeModel,
    tw: usize,
    psi: &Formula,
) -> Result<bool, SemanticsError> {
    let basis = Basis::de_morgan();
    let (even, odd) = eo_sets(psi)?;
    let mut atoms: BTreeSet<String> = psi.vars();
    atoms.extend(s.valuation.keys().cloned());
    atoms.extend(t.valuation.keys().cloned());
    let mut premises = atoms.iter().all(|p| s.holds(p, sw) == t.holds(p, tw));
    if premises {
        for lambda in &even {
            let dia = Formula::diamond(lambda.clone());
            if model_check(s, sw, &dia, &basis)? && !model_check(t, tw, &dia, &basis)? {
                premises = false;
                break;
            }
        }
    }
    if premises {
        for lambda in &odd {
            let dia = Formula::diamond(lambda.clone());
            if model_check(t, tw, &dia, &basis)? && !model_check(s, sw, &dia, &basis)? {
                premises = false;
                break;
            }
        }
    }
    if !premises {
        return Ok(true);
    }
    Ok(!(model_check(s, sw, psi, &basis)? && !model_check(t, tw, psi, &basis)?))
}

/// Exhaustively searches for a De Morgan formula over the target's
/// variables with at most `max_diamonds` diamonds and size at most
/// `max_size` that is equivalent to the target over the class. Candidates
/// are generated in size order, conjunction and disjunction arguments are
/// canonically ordered, and diamond-free candidates are merged by truth
/// table; both prunings preserve completeness of the search. The decider's
/// budget caps both the enumeration and each equivalence check.
pub fn min_diamond_search(
    decider: &Decider,
    target: &Formula,
    class: FrameClass,
    max_diamonds: usize,
    max_size: usize,
) -> Result<Option<Formula>, SemanticsError> {
    let dm = Basis::de_morgan();
    let vars: Vec<String> = target.vars().into_iter().collect();
    let mut fuel = decider.budget;
    let mut battery: Vec<(KripkeModel, bool)> = Vec::new();
    let mut seen = BTreeSet::new();

    let check = |candidate: &Formula,
                     fuel: &mut u64,
                     battery: &mut Vec<(KripkeModel, bool)>|
     -> Result<bool, SemanticsError> {
        spend(fuel)?;
        for (model, target_truth) in battery.iter() {
            if model_check(model, model.initial, candidate, &dm)? != *target_truth {
                return Ok(false);
            }
        }
        let not_target = Formula::not(target.clone());
        if let Some(model) =
            decider.satisfiable(&Formula::and(candidate.clone(), not_target), class)?
        {
            battery.push((model, false));
            return Ok(false);
        }
        let not_candidate = Formula::not(candidate.clone());
        if let Some(model) =
            decider.satisfiable(&Formula::and(target.clone(), not_candidate), class)?
        {
            battery.push((model, true));
            return Ok(false);
        }
        Ok(true)
    };

    let mut pool: Vec<Vec<Formula>> = vec![Vec::new(); max_size + 1];
    let admit = |candidate: Formula,
                     pool_level: &mut Vec<Formula>,
                     seen: &mut BTreeSet<String>,
                     fuel: &mut u64,
                     battery: &mut Vec<(KripkeModel, bool)>|
     -> Result<Option<Formula>, SemanticsError> {
        let key = if candidate.diamond_count() == 0 {
            let table = truth_table_of(&candidate, &dm, &vars, "candidate")?;
            format!("t:{}", table.bit_string())
        } else {
            format!("r:{}", candidate.render())
        };
        if !seen.insert(key) {
            return Ok(None);
        }
        let equivalent = check(&candidate, fuel, battery)?;
        pool_level.push(candidate.clone());
        if equivalent {
            return Ok(Some(candidate));
        }
        Ok(None)
    };

    if max_size == 0 {
        return Ok(None);
    }
    let mut level = Vec::new();
    for v in &vars {
        if let Some(found) = admit(Formula::var(v), &mut level, &mut seen, &mut fuel, &mut battery)?
        {
            return Ok(Some(found));
        }
    }
    for constant in [Formula::top(), Formula::bot()] {
        if let Some(found) = admit(constant, &mut level, &mut seen, &mut fuel, &mut battery)? {
            return Ok(Some(found));
        }
    }
    pool[1] = level;

    for size in 2..=max_size {
        let mut level = Vec::new();
        for item in pool[size - 1].clone() {
            if let Some(found) = admit(
                Formula::not(item.clone()),
                &mut level,
                &mut seen,
                &mut fuel,
                &mut battery,
            )? {
                return Ok(Some(found));
            }
            if item.diamond_count() < max_diamonds {
                if let Some(found) = admit(
                    Formula::diamond(item),
                    &mut level,
                    &mut seen,
                    &mut fuel,
                    &mut battery,
                )? {
                    return Ok(Some(found));
                }
            }
        }
        for left_size in 1..size - 1 {
            let right_size = size - 1 - left_size;
            for l in pool[left_size].clone() {
                for r in pool[right_size].clone() {
                    if l.render() > r.render() {
                        continue;
                    }
                    if l.diamond_count() + r.diamond_count() > max_diamonds {
                        continue;
                    }
                    for combined in [
                        Formula::and(l.clone(), r.clone()),
                        Formula::or(l.clone(), r.clone()),
                    ] {
                        if let Some(found) =
                            admit(combined, &mut level, &mut seen, &mut fuel, &mut battery)?
                        {
                            return Ok(Some(found));
                        }
                    }
                }
            }
        }
        pool[size] = level;
    }
    Ok(None)
}
