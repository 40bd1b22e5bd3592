//! Batch MIP formulations as explicit integer programs.
//!
//! Both formulations share assignment variables `X[i,k,b]` (operation `i`
//! in the `b`-th batch slot of machine `k`), family variables `Y[f,k,b]`,
//! batch start/processing times `S`, `P` and completion times. Machine `k`
//! has one slot per operation it may run. The WSPT formulation fixes the
//! order inside a batch through a precedence order; the sequencing
//! formulation adds pairwise order variables `Z[i,j]` instead.
//!
//! Every coefficient and right-hand side is an integer, so a schedule
//! encoding can be checked exactly.

mod compat;
mod encode;
mod restrict;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

pub use compat::{compatibility_sets, triple_compatible, CompatibilitySets};
pub use encode::{ConstraintViolation, DecodeError, EncodeError};
pub use restrict::{FreeSet, RestrictError};

use crate::instance::Instance;
use crate::precedence::Precedence;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formulation {
    /// Inner-batch order given by a precedence order.
    Wspt,
    /// Inner-batch order decided by `Z` variables.
    Sequencing,
}

impl Formulation {
    pub fn label(self) -> &'static str {
        match self {
            Formulation::Wspt => "Batch-WSPT",
            Formulation::Sequencing => "Batch-S",
        }
    }
}

impl fmt::Display for Formulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Formulation {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "wspt" | "batch-wspt" => Ok(Formulation::Wspt),
            "s" | "seq" | "batch-s" | "sequencing" => Ok(Formulation::Sequencing),
            _ => Err(format!("unknown formulation `{s}` (expected wspt or s)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelConfig {
    pub formulation: Formulation,
    /// Defaults to [`horizon_big_m`].
    pub big_m: Option<i64>,
}

impl ModelConfig {
    pub fn new(formulation: Formulation) -> Self {
        ModelConfig { formulation, big_m: None }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ModelError {
    #[error("the WSPT formulation needs a precedence order")]
    MissingPrecedence,
    #[error("precedence order covers {found} operations, instance has {expected}")]
    PrecedenceSize { expected: usize, found: usize },
    #[error("big-M {given} is below the horizon bound {required}")]
    BigMTooSmall { given: i64, required: i64 },
}

/// `max r_k + max r_i + sum p_i + sum_k |B_k| * max s_f`: no completion
/// time, batch start or constraint left-hand side in a feasible encoding
/// exceeds it.
pub fn horizon_big_m(inst: &Instance) -> i64 {
    let max_rk = inst.machines().iter().map(|m| m.release).max().unwrap_or(0);
    let max_ri = inst.operations().iter().map(|o| o.release).max().unwrap_or(0);
    let sum_p: i64 = inst.operations().iter().map(|o| o.processing).sum();
    let slots: i64 = (0..inst.num_machines()).map(|k| inst.ops_of_machine(k).len() as i64).sum();
    let max_s = inst.families().iter().map(|f| f.setup).max().unwrap_or(0);
    max_rk + max_ri + sum_p + slots * max_s
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Var {
    X { op: usize, machine: usize, slot: usize },
    Y { family: usize, machine: usize, slot: usize },
    /// `before` precedes `after` inside a shared batch.
    Z { before: usize, after: usize },
    S { machine: usize, slot: usize },
    P { machine: usize, slot: usize },
    OpCompletion(usize),
    JobCompletion(usize),
}

impl Var {
    pub fn is_binary(self) -> bool {
        matches!(self, Var::X { .. } | Var::Y { .. } | Var::Z { .. })
    }

    /// LP-file name; indices are one-based.
    pub fn name(self) -> String {
        match self {
            Var::X { op, machine, slot } => format!("X_{}_{}_{}", op + 1, machine + 1, slot + 1),
            Var::Y { family, machine, slot } => format!("Y_{}_{}_{}", family + 1, machine + 1, slot + 1),
            Var::Z { before, after } => format!("Z_{}_{}", before + 1, after + 1),
            Var::S { machine, slot } => format!("S_{}_{}", machine + 1, slot + 1),
            Var::P { machine, slot } => format!("P_{}_{}", machine + 1, slot + 1),
            Var::OpCompletion(i) => format!("Ci_{}", i + 1),
            Var::JobCompletion(j) => format!("Cj_{}", j + 1),
        }
    }

    /// Inverse of [`Var::name`].
    pub fn parse(name: &str) -> Option<Var> {
        let mut parts = name.split('_');
        let tag = parts.next()?;
        let nums: Vec<usize> = parts
            .map(|p| p.parse::<usize>().ok().filter(|&v| v >= 1 && !p.starts_with('0')).map(|v| v - 1))
            .collect::<Option<_>>()?;
        match (tag, nums.as_slice()) {
            ("X", &[op, machine, slot]) => Some(Var::X { op, machine, slot }),
            ("Y", &[family, machine, slot]) => Some(Var::Y { family, machine, slot }),
            ("Z", &[before, after]) => Some(Var::Z { before, after }),
            ("S", &[machine, slot]) => Some(Var::S { machine, slot }),
            ("P", &[machine, slot]) => Some(Var::P { machine, slot }),
            ("Ci", &[i]) => Some(Var::OpCompletion(i)),
            ("Cj", &[j]) => Some(Var::JobCompletion(j)),
            _ => None,
        }
    }
}

/// Variable bounds; `ub == None` is unbounded above.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Bound {
    pub lb: i64,
    pub ub: Option<i64>,
}

impl Bound {
    pub const BINARY: Bound = Bound { lb: 0, ub: Some(1) };
    pub const NONNEG: Bound = Bound { lb: 0, ub: None };

    pub fn fixed(v: i64) -> Bound {
        Bound { lb: v, ub: Some(v) }
    }

    pub fn contains(self, v: i64) -> bool {
        v >= self.lb && self.ub.map_or(true, |u| v <= u)
    }

    pub fn is_fixed(self) -> bool {
        self.ub == Some(self.lb)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

impl Sense {
    pub fn holds(self, lhs: i128, rhs: i128) -> bool {
        match self {
            Sense::Le => lhs <= rhs,
            Sense::Ge => lhs >= rhs,
            Sense::Eq => lhs == rhs,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ConstraintKind {
    Assignment,
    OneFamily,
    FamilyLink,
    Capacity,
    BatchTime,
    MachineRelease,
    BatchSequence,
    OpRelease,
    OpCompletion,
    JobCompletion,
    SameBatch,
    Antisymmetry,
    Transitivity,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Constraint {
    pub kind: ConstraintKind,
    pub name: String,
    pub terms: Vec<(usize, i64)>,
    pub sense: Sense,
    pub rhs: i64,
}

#[derive(Debug)]
struct VarIndex {
    vars: Vec<Var>,
    lookup: HashMap<Var, usize>,
    /// `x_base[i][k]`: index of `X[i,k,0]`; slots follow consecutively.
    x_base: Vec<Vec<Option<usize>>>,
    y_base: Vec<usize>,
    z: HashMap<(usize, usize), usize>,
    s_base: Vec<usize>,
    p_base: Vec<usize>,
    c_op: usize,
    c_job: usize,
    slots: Vec<usize>,
}

impl VarIndex {
    fn build(inst: &Instance, compat: Option<&CompatibilitySets>) -> Self {
        let mut vars = Vec::new();
        let slots: Vec<usize> = (0..inst.num_machines()).map(|k| inst.ops_of_machine(k).len()).collect();
        let mut x_base = vec![vec![None; inst.num_machines()]; inst.num_ops()];
        for (i, op) in inst.operations().iter().enumerate() {
            for &k in &op.eligible {
                // an op heavier than the machine could never be placed there
                if op.load > inst.machines()[k].capacity {
                    continue;
                }
                x_base[i][k] = Some(vars.len());
                vars.extend((0..slots[k]).map(|slot| Var::X { op: i, machine: k, slot }));
            }
        }
        let mut y_base = Vec::with_capacity(slots.len());
        for (k, &n) in slots.iter().enumerate() {
            y_base.push(vars.len());
            for slot in 0..n {
                vars.extend((0..inst.num_families()).map(|family| Var::Y { family, machine: k, slot }));
            }
        }
        let mut z = HashMap::new();
        if let Some(c) = compat {
            for (i, j) in c.pairs() {
                z.insert((i, j), vars.len());
                vars.push(Var::Z { before: i, after: j });
                z.insert((j, i), vars.len());
                vars.push(Var::Z { before: j, after: i });
            }
        }
        let mut s_base = Vec::new();
        for (k, &n) in slots.iter().enumerate() {
            s_base.push(vars.len());
            vars.extend((0..n).map(|slot| Var::S { machine: k, slot }));
        }
        let mut p_base = Vec::new();
        for (k, &n) in slots.iter().enumerate() {
            p_base.push(vars.len());
            vars.extend((0..n).map(|slot| Var::P { machine: k, slot }));
        }
        let c_op = vars.len();
        vars.extend((0..inst.num_ops()).map(Var::OpCompletion));
        let c_job = vars.len();
        vars.extend((0..inst.num_jobs()).map(Var::JobCompletion));
        let lookup = vars.iter().enumerate().map(|(n, &v)| (v, n)).collect();
        VarIndex { vars, lookup, x_base, y_base, z, s_base, p_base, c_op, c_job, slots }
    }
}

/// A complete integer program for one formulation, with per-variable
/// bounds. Restricted models share the variable index of their parent.
#[derive(Debug, Clone)]
pub struct BatchModel<'a> {
    inst: &'a Instance,
    formulation: Formulation,
    big_m: i64,
    prec: Option<Arc<Precedence>>,
    compat: Option<Arc<CompatibilitySets>>,
    index: Arc<VarIndex>,
    bounds: Vec<Bound>,
}

impl<'a> BatchModel<'a> {
    /// Builds the model. `prec` is required for the WSPT formulation and
    /// ignored otherwise.
    pub fn new(inst: &'a Instance, cfg: ModelConfig, prec: Option<Precedence>) -> Result<Self, ModelError> {
        let required = horizon_big_m(inst);
        let big_m = cfg.big_m.unwrap_or(required);
        if big_m < required {
            return Err(ModelError::BigMTooSmall { given: big_m, required });
        }
        let prec = match cfg.formulation {
            Formulation::Wspt => {
                let p = prec.ok_or(ModelError::MissingPrecedence)?;
                if p.order().len() != inst.num_ops() {
                    return Err(ModelError::PrecedenceSize { expected: inst.num_ops(), found: p.order().len() });
                }
                Some(Arc::new(p))
            }
            Formulation::Sequencing => None,
        };
        let compat = match cfg.formulation {
            Formulation::Sequencing => Some(Arc::new(compatibility_sets(inst))),
            Formulation::Wspt => None,
        };
        let index = Arc::new(VarIndex::build(inst, compat.as_deref()));
        let bounds = index.vars.iter().map(|v| if v.is_binary() { Bound::BINARY } else { Bound::NONNEG }).collect();
        Ok(BatchModel { inst, formulation: cfg.formulation, big_m, prec, compat, index, bounds })
    }

    pub fn instance(&self) -> &'a Instance {
        self.inst
    }

    pub fn formulation(&self) -> Formulation {
        self.formulation
    }

    pub fn big_m(&self) -> i64 {
        self.big_m
    }

    pub fn precedence(&self) -> Option<&Precedence> {
        self.prec.as_deref()
    }

    pub fn compat(&self) -> Option<&CompatibilitySets> {
        self.compat.as_deref()
    }

    /// `|B_k|`.
    pub fn slots(&self, k: usize) -> usize {
        self.index.slots[k]
    }

    pub fn num_vars(&self) -> usize {
        self.index.vars.len()
    }

    pub fn var(&self, v: usize) -> Var {
        self.index.vars[v]
    }

    pub fn vars(&self) -> &[Var] {
        &self.index.vars
    }

    pub fn lookup(&self, var: Var) -> Option<usize> {
        self.index.lookup.get(&var).copied()
    }

    pub fn bounds(&self) -> &[Bound] {
        &self.bounds
    }

    pub fn bound(&self, v: usize) -> Bound {
        self.bounds[v]
    }

    pub fn set_bound(&mut self, v: usize, b: Bound) {
        self.bounds[v] = b;
    }

    pub fn x(&self, i: usize, k: usize, b: usize) -> Option<usize> {
        debug_assert!(b < self.index.slots[k]);
        self.index.x_base[i][k].map(|base| base + b)
    }

    pub fn y(&self, f: usize, k: usize, b: usize) -> usize {
        self.index.y_base[k] + b * self.inst.num_families() + f
    }

    pub fn z(&self, before: usize, after: usize) -> Option<usize> {
        self.index.z.get(&(before, after)).copied()
    }

    pub fn s(&self, k: usize, b: usize) -> usize {
        self.index.s_base[k] + b
    }

    pub fn p(&self, k: usize, b: usize) -> usize {
        self.index.p_base[k] + b
    }

    pub fn c_op(&self, i: usize) -> usize {
        self.index.c_op + i
    }

    pub fn c_job(&self, j: usize) -> usize {
        self.index.c_job + j
    }

    /// Number of `X` variables.
    pub fn num_x(&self) -> usize {
        self.index.vars.iter().filter(|v| matches!(v, Var::X { .. })).count()
    }

    pub fn num_z(&self) -> usize {
        self.index.z.len()
    }

    /// `sum_j w_j C_j`.
    pub fn objective(&self) -> Vec<(usize, i64)> {
        self.inst.jobs().iter().enumerate().map(|(j, job)| (self.c_job(j), job.weight)).collect()
    }

    /// Emits every constraint of the formulation, in a fixed order.
    pub fn for_each_constraint(&self, mut emit: impl FnMut(Constraint)) {
        use ConstraintKind::*;
        let inst = self.inst;
        let m = self.big_m;
        let nf = inst.num_families();
        let mut put = |kind, name: String, terms: Vec<(usize, i64)>, sense, rhs| {
            emit(Constraint { kind, name, terms, sense, rhs })
        };

        for i in 0..inst.num_ops() {
            let terms = inst
                .op(i)
                .eligible
                .iter()
                .filter_map(|&k| self.index.x_base[i][k].map(|base| (k, base)))
                .flat_map(|(k, base)| (0..self.slots(k)).map(move |b| (base + b, 1)))
                .collect();
            put(Assignment, format!("assign_{}", i + 1), terms, Sense::Eq, 1);
        }
        for k in 0..inst.num_machines() {
            let on_k: Vec<usize> = (0..inst.num_ops()).filter(|&i| self.index.x_base[i][k].is_some()).collect();
            for b in 0..self.slots(k) {
                let tag = format!("{}_{}", k + 1, b + 1);
                put(OneFamily, format!("onefam_{tag}"), (0..nf).map(|f| (self.y(f, k, b), 1)).collect(), Sense::Le, 1);
                for &i in &on_k {
                    let x = self.x(i, k, b).expect("eligible");
                    put(
                        FamilyLink,
                        format!("famlink_{}_{tag}", i + 1),
                        vec![(x, 1), (self.y(inst.op(i).family, k, b), -1)],
                        Sense::Le,
                        0,
                    );
                }
                let cap = on_k.iter().map(|&i| (self.x(i, k, b).expect("eligible"), inst.op(i).load)).collect();
                put(Capacity, format!("cap_{tag}"), cap, Sense::Le, inst.machines()[k].capacity);
                let mut time = vec![(self.p(k, b), 1)];
                time.extend(on_k.iter().map(|&i| (self.x(i, k, b).expect("eligible"), -inst.op(i).processing)));
                time.extend((0..nf).map(|f| (self.y(f, k, b), -inst.families()[f].setup)));
                put(BatchTime, format!("ptime_{tag}"), time, Sense::Ge, 0);
                put(MachineRelease, format!("mrel_{tag}"), vec![(self.s(k, b), 1)], Sense::Ge, inst.machines()[k].release);
                if b + 1 < self.slots(k) {
                    put(
                        BatchSequence,
                        format!("seq_{tag}"),
                        vec![(self.s(k, b + 1), 1), (self.s(k, b), -1), (self.p(k, b), -1)],
                        Sense::Ge,
                        0,
                    );
                }
                for &i in &on_k {
                    let r = inst.op(i).release;
                    // S >= 0 already holds as a bound
                    if r > 0 {
                        let x = self.x(i, k, b).expect("eligible");
                        put(OpRelease, format!("orel_{}_{tag}", i + 1), vec![(self.s(k, b), 1), (x, -r)], Sense::Ge, 0);
                    }
                }
                for &i in &on_k {
                    let x = self.x(i, k, b).expect("eligible");
                    let mut terms = vec![(self.c_op(i), 1), (self.s(k, b), -1)];
                    match self.formulation {
                        Formulation::Wspt => {
                            let prec = self.prec.as_ref().expect("checked in new");
                            for h in prec.predecessors(i) {
                                if let Some(xh) = self.x(h, k, b) {
                                    terms.push((xh, -inst.op(h).processing));
                                }
                            }
                        }
                        Formulation::Sequencing => {
                            for h in 0..inst.num_ops() {
                                if let Some(z) = self.z(h, i) {
                                    terms.push((z, -inst.op(h).processing));
                                }
                            }
                        }
                    }
                    terms.push((x, -m));
                    let rhs = inst.op(i).processing + inst.setup_of_op(i) - m;
                    put(OpCompletion, format!("comp_{}_{tag}", i + 1), terms, Sense::Ge, rhs);
                }
            }
        }
        for (j, job) in inst.jobs().iter().enumerate() {
            for &i in &job.ops {
                put(
                    JobCompletion,
                    format!("job_{}_{}", j + 1, i + 1),
                    vec![(self.c_job(j), 1), (self.c_op(i), -1)],
                    Sense::Ge,
                    0,
                );
            }
        }
        if let Some(compat) = self.compat.as_deref() {
            for (a, b) in compat.pairs() {
                let (zab, zba) = (self.z(a, b).expect("pair"), self.z(b, a).expect("pair"));
                for &k in compat.machines(a, b) {
                    for s in 0..self.slots(k) {
                        let (xa, xb) = (self.x(a, k, s).expect("eligible"), self.x(b, k, s).expect("eligible"));
                        put(
                            SameBatch,
                            format!("same_{}_{}_{}_{}", a + 1, b + 1, k + 1, s + 1),
                            vec![(zab, 1), (zba, 1), (xa, -1), (xb, -1)],
                            Sense::Ge,
                            -1,
                        );
                    }
                }
                put(Antisymmetry, format!("anti_{}_{}", a + 1, b + 1), vec![(zab, 1), (zba, 1)], Sense::Le, 1);
            }
            for (a, b) in compat.pairs() {
                for c in b + 1..inst.num_ops() {
                    if !(compat.mu(a, c) && compat.mu(b, c) && triple_compatible(inst, a, b, c)) {
                        continue;
                    }
                    let z = |x, y| self.z(x, y).expect("pair");
                    let (a1, b1, c1) = (a + 1, b + 1, c + 1);
                    put(
                        Transitivity,
                        format!("tri_{a1}_{b1}_{c1}"),
                        vec![(z(a, b), 1), (z(b, c), 1), (z(c, a), 1)],
                        Sense::Le,
                        2,
                    );
                    put(
                        Transitivity,
                        format!("tri_{b1}_{a1}_{c1}"),
                        vec![(z(b, a), 1), (z(a, c), 1), (z(c, b), 1)],
                        Sense::Le,
                        2,
                    );
                }
            }
        }
    }

    pub fn constraints(&self) -> Vec<Constraint> {
        let mut out = Vec::new();
        self.for_each_constraint(|c| out.push(c));
        out
    }

    pub fn num_constraints(&self) -> usize {
        let mut n = 0;
        self.for_each_constraint(|_| n += 1);
        n
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{example_instance, Family, Job, Machine, Operation};
    use crate::precedence::wspt_order;

    pub(crate) fn one_op() -> Instance {
        Instance::new(
            vec![Operation { processing: 23, release: 5, load: 10, family: 0, eligible: vec![0] }],
            vec![Job { weight: 2, ops: vec![0] }],
            vec![Machine { release: 1, capacity: 90 }],
            vec![Family { setup: 5 }, Family { setup: 6 }, Family { setup: 7 }],
        )
        .unwrap()
    }

    #[test]
    fn example_slot_counts() {
        let inst = example_instance();
        let m = BatchModel::new(&inst, ModelConfig::new(Formulation::Wspt), Some(wspt_order(&inst, None))).unwrap();
        assert_eq!(m.slots(0), 10);
        for k in 0..4 {
            assert_eq!(m.slots(k), inst.ops_of_machine(k).len());
        }
        assert_eq!(m.slots(3), 14);
    }

    #[test]
    fn one_op_model() {
        let inst = one_op();
        let m = BatchModel::new(&inst, ModelConfig::new(Formulation::Sequencing), None).unwrap();
        assert_eq!(m.num_x(), 1);
        assert_eq!(m.num_z(), 0);
        assert_eq!(m.vars().iter().filter(|v| matches!(v, Var::Y { .. })).count(), 3);
    }

    #[test]
    fn wspt_requires_precedence() {
        let inst = one_op();
        let err = BatchModel::new(&inst, ModelConfig::new(Formulation::Wspt), None).unwrap_err();
        assert_eq!(err, ModelError::MissingPrecedence);
        let cfg = ModelConfig { formulation: Formulation::Sequencing, big_m: Some(1) };
        assert!(matches!(BatchModel::new(&inst, cfg, None), Err(ModelError::BigMTooSmall { .. })));
    }

    #[test]
    fn var_names_round_trip() {
        let inst = example_instance();
        let m = BatchModel::new(&inst, ModelConfig::new(Formulation::Sequencing), None).unwrap();
        for (n, &v) in m.vars().iter().enumerate() {
            let name = v.name();
            assert_eq!(Var::parse(&name), Some(v), "{name}");
            assert_eq!(m.lookup(v), Some(n));
        }
        assert_eq!(Var::parse("X_0_1_1"), None);
        assert_eq!(Var::parse("X_1_1"), None);
        assert_eq!(Var::parse("Q_1"), None);
    }

    #[test]
    fn counts_are_deterministic() {
        let inst = example_instance();
        let a = BatchModel::new(&inst, ModelConfig::new(Formulation::Sequencing), None).unwrap();
        let b = BatchModel::new(&inst, ModelConfig::new(Formulation::Sequencing), None).unwrap();
        assert_eq!(a.num_vars(), b.num_vars());
        assert_eq!(a.constraints(), b.constraints());
        assert!(a.num_constraints() > 0);
    }

    #[test]
    fn formulation_parsing() {
        assert_eq!("wspt".parse::<Formulation>().unwrap(), Formulation::Wspt);
        assert_eq!("Batch-S".parse::<Formulation>().unwrap(), Formulation::Sequencing);
        assert!("x".parse::<Formulation>().is_err());
    }
}
