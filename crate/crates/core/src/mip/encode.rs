//! Schedule <-> variable value translation and exact constraint checking.

use super::{BatchModel, Formulation};
use crate::schedule::{check_feasibility, check_structure, evaluate, Batch, EvalError, Schedule, Violation};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EncodeError {
    #[error(transparent)]
    Structure(#[from] EvalError),
    #[error("schedule is infeasible: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Infeasible(Vec<Violation>),
    #[error("batch {} on machine {} is not in precedence order", .batch + 1, .machine + 1)]
    InnerOrder { machine: usize, batch: usize },
    #[error("machine {} has {found} batch slots but the model only {slots}", .machine + 1)]
    TooManySlots { machine: usize, found: usize, slots: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DecodeError {
    #[error("expected {expected} values, got {found}")]
    Length { expected: usize, found: usize },
    #[error("decoded assignment is not a schedule: {0}")]
    Structure(#[from] EvalError),
}

/// A bound or constraint not satisfied by a value vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstraintViolation {
    pub name: String,
    pub lhs: i128,
    pub rhs: i128,
}

impl BatchModel<'_> {
    /// Variable values representing `sched`: used batches occupy slots
    /// `1..=n` in machine order; trailing slots are empty, start when the
    /// machine becomes idle and take no time.
    pub fn encode(&self, sched: &Schedule) -> Result<Vec<i64>, EncodeError> {
        let layout: Vec<Vec<Option<Batch>>> = sched
            .machines
            .iter()
            .enumerate()
            .map(|(k, batches)| {
                let mut row: Vec<Option<Batch>> = batches.iter().cloned().map(Some).collect();
                if row.len() < self.slots(k) {
                    row.resize(self.slots(k), None);
                }
                row
            })
            .collect();
        self.encode_slots(&layout)
    }

    /// Like [`encode`](Self::encode) but with an explicit slot for every
    /// batch; `None` slots are empty and may sit between used ones.
    pub fn encode_slots(&self, layout: &[Vec<Option<Batch>>]) -> Result<Vec<i64>, EncodeError> {
        let inst = self.inst;
        let sched = Schedule { machines: layout.iter().map(|row| row.iter().flatten().cloned().collect()).collect() };
        check_structure(inst, &sched)?;
        let violations = check_feasibility(inst, &sched);
        if !violations.is_empty() {
            return Err(EncodeError::Infeasible(violations));
        }
        for (k, row) in layout.iter().enumerate() {
            if row.len() > self.slots(k) {
                return Err(EncodeError::TooManySlots { machine: k, found: row.len(), slots: self.slots(k) });
            }
        }
        if let (Formulation::Wspt, Some(prec)) = (self.formulation, self.precedence()) {
            for (k, row) in layout.iter().enumerate() {
                for (b, batch) in row.iter().enumerate() {
                    if let Some(batch) = batch {
                        if batch.ops.windows(2).any(|w| !prec.precedes(w[0], w[1])) {
                            return Err(EncodeError::InnerOrder { machine: k, batch: b });
                        }
                    }
                }
            }
        }
        let ev = evaluate(inst, &sched)?;
        let mut v = vec![0i64; self.num_vars()];
        for (k, row) in layout.iter().enumerate() {
            let mut idle = inst.machines()[k].release;
            let mut used = 0;
            for b in 0..self.slots(k) {
                match row.get(b).and_then(Option::as_ref) {
                    Some(batch) => {
                        for (pos, &i) in batch.ops.iter().enumerate() {
                            v[self.x(i, k, b).expect("feasible placement")] = 1;
                            for &h in &batch.ops[pos + 1..] {
                                if let Some(z) = self.z(i, h) {
                                    v[z] = 1;
                                }
                            }
                        }
                        v[self.y(batch.family, k, b)] = 1;
                        v[self.s(k, b)] = ev.batch_start[k][used];
                        v[self.p(k, b)] = ev.batch_processing[k][used];
                        idle = ev.batch_end(k, used);
                        used += 1;
                    }
                    None => v[self.s(k, b)] = idle,
                }
            }
        }
        for (i, &c) in ev.op_completion.iter().enumerate() {
            v[self.c_op(i)] = c;
        }
        for (j, &c) in ev.job_completion.iter().enumerate() {
            v[self.c_job(j)] = c;
        }
        Ok(v)
    }

    /// Places the batches of `sched` into slots compatible with the current
    /// bounds (earliest fit, skipping only slots that may stay empty) and
    /// returns the encoding if it satisfies every bound and constraint.
    pub fn feasible_point(&self, sched: &Schedule) -> Option<Vec<i64>> {
        let inst = self.inst;
        if sched.machines.len() != inst.num_machines() {
            return None;
        }
        let nf = inst.num_families();
        let mut layout = Vec::with_capacity(inst.num_machines());
        for (k, batches) in sched.machines.iter().enumerate() {
            let forced = |b: usize| {
                (0..inst.num_ops()).filter(move |&i| self.x(i, k, b).is_some_and(|x| self.bound(x).lb == 1))
            };
            let skippable = |b: usize| forced(b).next().is_none() && (0..nf).all(|f| self.bound(self.y(f, k, b)).lb == 0);
            let fits = |batch: &Batch, b: usize| {
                batch.ops.iter().all(|&i| self.x(i, k, b).is_some_and(|x| self.bound(x).contains(1)))
                    && self.bound(self.y(batch.family, k, b)).contains(1)
                    && forced(b).all(|i| batch.ops.contains(&i))
            };
            let mut row: Vec<Option<Batch>> = vec![None; self.slots(k)];
            let mut slot = 0;
            for batch in batches {
                loop {
                    if slot >= self.slots(k) {
                        return None;
                    }
                    if fits(batch, slot) {
                        row[slot] = Some(batch.clone());
                        slot += 1;
                        break;
                    }
                    if !skippable(slot) {
                        return None;
                    }
                    slot += 1;
                }
            }
            if !(slot..self.slots(k)).all(skippable) {
                return None;
            }
            layout.push(row);
        }
        let values = self.encode_slots(&layout).ok()?;
        self.check(&values).is_empty().then_some(values)
    }

    /// Objective value of a value vector.
    pub fn objective_value(&self, values: &[i64]) -> i64 {
        self.objective().iter().map(|&(v, w)| w * values[v]).sum()
    }

    /// Every violated bound and constraint, checked exactly.
    pub fn check(&self, values: &[i64]) -> Vec<ConstraintViolation> {
        let mut out = Vec::new();
        for (n, (&val, b)) in values.iter().zip(self.bounds()).enumerate() {
            if !b.contains(val) {
                out.push(ConstraintViolation {
                    name: format!("bound {}", self.var(n).name()),
                    lhs: val as i128,
                    rhs: if val < b.lb { b.lb as i128 } else { b.ub.unwrap_or(i64::MAX) as i128 },
                });
            }
        }
        self.for_each_constraint(|c| {
            let lhs: i128 = c.terms.iter().map(|&(v, a)| a as i128 * values[v] as i128).sum();
            if !c.sense.holds(lhs, c.rhs as i128) {
                out.push(ConstraintViolation { name: c.name, lhs, rhs: c.rhs as i128 });
            }
        });
        out
    }

    /// Reads a schedule back from (possibly fractional solver) values:
    /// `X > 0.5` assigns and batches keep slot order. Inside a batch the
    /// precedence order decides (WSPT), or the number of `Z > 0.5`
    /// predecessors among the batch members.
    pub fn decode(&self, values: &[f64]) -> Result<Schedule, DecodeError> {
        let inst = self.inst;
        if values.len() != self.num_vars() {
            return Err(DecodeError::Length { expected: self.num_vars(), found: values.len() });
        }
        let mut sched = Schedule::empty(inst.num_machines());
        for k in 0..inst.num_machines() {
            for b in 0..self.slots(k) {
                let mut ops: Vec<usize> = (0..inst.num_ops())
                    .filter(|&i| self.x(i, k, b).is_some_and(|x| values[x] > 0.5))
                    .collect();
                if ops.is_empty() {
                    continue;
                }
                match self.precedence() {
                    Some(prec) => ops.sort_by_key(|&i| prec.rank()[i]),
                    None => {
                        let before = |i: usize| {
                            ops.iter().filter(|&&h| self.z(h, i).is_some_and(|z| values[z] > 0.5)).count()
                        };
                        let mut keyed: Vec<(usize, usize)> = ops.iter().map(|&i| (before(i), i)).collect();
                        keyed.sort_unstable();
                        ops = keyed.into_iter().map(|(_, i)| i).collect();
                    }
                }
                let family = inst.op(ops[0]).family;
                sched.machines[k].push(Batch::new(family, ops));
            }
        }
        check_structure(inst, &sched)?;
        Ok(sched)
    }
}

#[cfg(test)]
mod tests {
    use super::super::{ModelConfig, Var};
    use super::*;
    use crate::instance::example_instance;
    use crate::precedence::{wspt_order, Theta};
    use crate::schedule::example_schedule;

    #[test]
    fn example_encoding_is_feasible_for_both() {
        let inst = example_instance();
        let s = example_schedule();
        let theta = Theta::from_schedule(inst.num_ops(), &s);
        for (f, prec) in [(Formulation::Wspt, Some(wspt_order(&inst, Some(&theta)))), (Formulation::Sequencing, None)] {
            let m = BatchModel::new(&inst, ModelConfig::new(f), prec).unwrap();
            let v = m.encode(&s).unwrap();
            assert_eq!(m.check(&v), vec![], "{f}");
            assert_eq!(m.objective_value(&v), 7634);
            let fv: Vec<f64> = v.iter().map(|&x| x as f64).collect();
            assert_eq!(m.decode(&fv).unwrap(), s);
        }
    }

    #[test]
    fn order_mismatch_is_reported() {
        let inst = example_instance();
        let mut s = example_schedule();
        let theta = Theta::from_schedule(inst.num_ops(), &s);
        s.machines[3][2].ops.reverse();
        let prec = wspt_order(&inst, Some(&theta));
        let m = BatchModel::new(&inst, ModelConfig::new(Formulation::Wspt), Some(prec)).unwrap();
        assert_eq!(m.encode(&s), Err(EncodeError::InnerOrder { machine: 3, batch: 2 }));
    }

    #[test]
    fn tampered_values_violate() {
        let inst = example_instance();
        let s = example_schedule();
        let m = BatchModel::new(&inst, ModelConfig::new(Formulation::Sequencing), None).unwrap();
        let mut v = m.encode(&s).unwrap();
        // op 7 claims to finish before its batch even starts its setup
        v[m.c_op(6)] -= 1;
        let bad = m.check(&v);
        assert!(bad.iter().any(|c| c.name.starts_with("comp_7_4_3")), "{bad:?}");
        let mut v = m.encode(&s).unwrap();
        v[m.lookup(Var::X { op: 0, machine: 0, slot: 2 }).unwrap()] = 2;
        assert!(m.check(&v).iter().any(|c| c.name == "bound X_1_1_3"));
    }
}
