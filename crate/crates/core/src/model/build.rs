use sha2::{Digest, Sha256};

use crate::instance::{Instance, PenaltyMode, PinTarget, SoftFamily, TaskKind};

use super::{
    linearize_indicator, LinearConstraint, Literal, ModelIR, Origin, OriginTag, Provenance, Realization, Relation,
    SoftTerm, Subject, VarId, VarKind, VarTag, Variable,
};

struct Builder {
    variables: Vec<Variable>,
    constraints: Vec<LinearConstraint>,
    soft_terms: Vec<SoftTerm>,
    mode: PenaltyMode,
}

impl Builder {
    fn var(&mut self, kind: VarKind, lo: i64, hi: i64, tag: VarTag) -> VarId {
        let id = VarId(self.variables.len() as u32);
        self.variables.push(Variable { id, kind, lo, hi, tag });
        id
    }

    fn bounds(&self) -> impl Fn(VarId) -> (i64, i64) + '_ {
        |v| {
            let var = &self.variables[v.index()];
            (var.lo, var.hi)
        }
    }

    fn row(&mut self, terms: impl IntoIterator<Item = (i64, VarId)>, relation: Relation, rhs: i64, origin: Origin) {
        self.constraints.push(LinearConstraint::new(terms, relation, rhs, origin));
    }

    fn implies(&mut self, literal: Literal, body: LinearConstraint) {
        let rows = linearize_indicator(literal, &body, self.bounds())
            .expect("bounds of a validated instance stay below the big-M limit");
        self.constraints.extend(rows);
    }

    /// Adds one soft term whose clause is the conjunction of `bodies`
    /// (each `<=` or `>=`). Violation is measured per the penalty mode.
    fn soft(&mut self, family: SoftFamily, subject: Subject, weight: i64, bodies: Vec<LinearConstraint>) {
        let tag = VarTag::Soft { family, subject };
        let realization = match self.mode {
            PenaltyMode::Indicator => {
                let v = self.var(VarKind::Binary, 0, 1, tag);
                for body in bodies {
                    self.implies(Literal::neg(v), body);
                }
                Realization::Indicator(v)
            }
            PenaltyMode::Magnitude => {
                let excess: Vec<i64> = bodies
                    .iter()
                    .map(|b| {
                        let (lo, hi) = b.lhs_range(self.bounds());
                        match b.relation {
                            Relation::Le => hi - b.rhs,
                            Relation::Ge => b.rhs - lo,
                            Relation::Eq => unreachable!("soft bodies are inequalities"),
                        }
                    })
                    .collect();
                let hi = excess.iter().copied().max().unwrap_or(0).max(0);
                let s = self.var(VarKind::Integer, 0, hi, tag);
                for (body, m) in bodies.into_iter().zip(excess) {
                    if m <= 0 {
                        continue;
                    }
                    let sign = if body.relation == Relation::Le { -1 } else { 1 };
                    let terms = body.terms.iter().copied().chain(std::iter::once((sign, s)));
                    self.constraints.push(LinearConstraint::new(terms, body.relation, body.rhs, body.origin));
                }
                Realization::Slack(s)
            }
        };
        self.soft_terms.push(SoftTerm { family, subject, weight, realization });
    }
}

fn config_hash(instance: &Instance) -> String {
    let digest = Sha256::digest(instance.to_json().as_bytes());
    digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

/// Compiles an instance into its integer-linear model.
pub fn build(instance: &Instance) -> ModelIR {
    let n_s = instance.n_tas();
    let n_c = instance.n_courses();
    let n_k = instance.n_kinds();
    let bounds = *instance.bounds();
    let weights = *instance.weights();
    let mut b = Builder { variables: Vec::new(), constraints: Vec::new(), soft_terms: Vec::new(), mode: weights.penalty_mode };

    let cells = |f: &mut dyn FnMut(usize, usize, usize)| {
        for s in 0..n_s {
            for c in 0..n_c {
                for k in 0..n_k {
                    f(s, c, k);
                }
            }
        }
    };

    let mut x = Vec::with_capacity(instance.n_cells());
    cells(&mut |s, c, k| {
        let tau = instance.task_hours(c, k);
        x.push(b.var(VarKind::Integer, 0, tau, VarTag::X { ta: s, course: c, kind: k }));
    });
    let mut y = Vec::with_capacity(instance.n_cells());
    cells(&mut |s, c, k| y.push(b.var(VarKind::Binary, 0, 1, VarTag::Y { ta: s, course: c, kind: k })));
    let mut w = Vec::with_capacity(n_s * n_c);
    for s in 0..n_s {
        for c in 0..n_c {
            w.push(b.var(VarKind::Binary, 0, 1, VarTag::W { ta: s, course: c }));
        }
    }
    let demand = instance.total_demand();
    let h: Vec<VarId> = (0..n_s).map(|s| b.var(VarKind::Integer, 0, demand, VarTag::H { ta: s })).collect();
    let mut n = Vec::with_capacity(n_c * n_k);
    for c in 0..n_c {
        for k in 0..n_k {
            n.push(b.var(VarKind::Integer, 0, n_s as i64, VarTag::N { course: c, kind: k }));
        }
    }
    let z: Vec<VarId> = (0..n_s)
        .map(|s| {
            let fresh = (0..n_c).filter(|&c| !instance.pair(s, c).taught_last_year).count() as i64;
            b.var(VarKind::Integer, 0, fresh, VarTag::Z { ta: s })
        })
        .collect();

    let cell = |s: usize, c: usize, k: usize| (s * n_c + c) * n_k + k;
    let pair = |s: usize, c: usize| s * n_c + c;
    let task = |c: usize, k: usize| c * n_k + k;

    // Per cell: forbidden pairs (1), absent tasks (5), conditional hour
    // bounds (7), x >= 1 <=> y channeling, y => w (3).
    for s in 0..n_s {
        for c in 0..n_c {
            let forbidden = instance.pair(s, c).forbidden;
            for k in 0..n_k {
                let subject = Subject::Cell(s, c, k);
                let (xv, yv) = (x[cell(s, c, k)], y[cell(s, c, k)]);
                let tau = instance.task_hours(c, k);
                if forbidden {
                    b.row([(1, xv)], Relation::Eq, 0, Origin::new(OriginTag::Eq(1), subject));
                }
                if tau == 0 {
                    b.row([(1, xv)], Relation::Eq, 0, Origin::new(OriginTag::Eq(5), subject));
                }
                let upper = LinearConstraint::new([(1, xv)], Relation::Le, 0, Origin::new(OriginTag::Eq(7), subject).part("up"));
                b.implies(Literal::neg(yv), upper);
                let lower = LinearConstraint::new(
                    [(1, xv)],
                    Relation::Ge,
                    instance.min_hours(c, k),
                    Origin::new(OriginTag::Eq(7), subject).part("lo"),
                );
                b.implies(Literal::pos(yv), lower);
                b.row([(1, yv), (-1, xv)], Relation::Le, 0, Origin::new(OriginTag::Channel, subject).part("yx"));
                b.row([(1, yv), (-1, w[pair(s, c)])], Relation::Le, 0, Origin::new(OriginTag::Eq(3), subject));
            }
            let terms = std::iter::once((1, w[pair(s, c)])).chain((0..n_k).map(|k| (-1, y[cell(s, c, k)])));
            b.row(terms, Relation::Le, 0, Origin::new(OriginTag::Channel, Subject::Pair(s, c)).part("wy"));
        }
    }

    for s in 0..n_s {
        let subject = Subject::Ta(s);
        let theta = instance.target(s);
        let hx = std::iter::once((1, h[s])).chain((0..n_c * n_k).map(|i| (-1, x[s * n_c * n_k + i])));
        b.row(hx, Relation::Eq, 0, Origin::new(OriginTag::Eq(2), subject));
        let zw = std::iter::once((1, z[s]))
            .chain((0..n_c).filter(|&c| !instance.pair(s, c).taught_last_year).map(|c| (-1, w[pair(s, c)])));
        b.row(zw, Relation::Eq, 0, Origin::new(OriginTag::Eq(4), subject));
        b.row([(1, h[s])], Relation::Le, theta + bounds.hard_dev, Origin::new(OriginTag::Eq(9), subject).part("up"));
        b.row([(1, h[s])], Relation::Ge, theta - bounds.hard_dev, Origin::new(OriginTag::Eq(9), subject).part("lo"));
        let courses = (0..n_c).map(|c| (1, w[pair(s, c)]));
        b.row(courses, Relation::Le, bounds.hard_courses_per_ta, Origin::new(OriginTag::Eq(10), subject));
        b.row([(1, z[s])], Relation::Le, bounds.hard_new_courses, Origin::new(OriginTag::Eq(12), subject));
    }

    let admin = instance.kind_position(TaskKind::Admin);
    for c in 0..n_c {
        for k in 0..n_k {
            let subject = Subject::Task(c, k);
            let covering = (0..n_s).map(|s| (1, x[cell(s, c, k)]));
            b.row(covering, Relation::Eq, instance.task_hours(c, k), Origin::new(OriginTag::Eq(6), subject));
            let count = std::iter::once((1, n[task(c, k)])).chain((0..n_s).map(|s| (-1, y[cell(s, c, k)])));
            b.row(count, Relation::Eq, 0, Origin::new(OriginTag::Linking, subject));
            b.row([(1, n[task(c, k)])], Relation::Ge, instance.required_tas(c, k), Origin::new(OriginTag::Eq(8), subject));
            if Some(k) == admin {
                b.row([(1, n[task(c, k)])], Relation::Le, 1, Origin::new(OriginTag::Eq(13), subject));
            }
        }
        let tas = (0..n_s).map(|s| (1, w[pair(s, c)]));
        b.row(tas, Relation::Le, bounds.hard_tas_per_course, Origin::new(OriginTag::Eq(11), Subject::Course(c)));
    }

    for pin in instance.pins() {
        match pin.target {
            PinTarget::Course => {
                let origin = Origin::new(OriginTag::Pin, Subject::Pair(pin.ta, pin.course));
                b.row([(1, w[pair(pin.ta, pin.course)])], Relation::Eq, 1, origin);
            }
            PinTarget::Hours { kind, hours } => {
                let origin = Origin::new(OriginTag::Pin, Subject::Cell(pin.ta, pin.course, kind));
                b.row([(1, x[cell(pin.ta, pin.course, kind)])], Relation::Eq, hours, origin);
            }
        }
    }

    // Soft terms, one per clause.
    let le = |terms: Vec<(i64, VarId)>, rhs: i64, origin: Origin| LinearConstraint::new(terms, Relation::Le, rhs, origin);
    let ge = |terms: Vec<(i64, VarId)>, rhs: i64, origin: Origin| LinearConstraint::new(terms, Relation::Ge, rhs, origin);
    for (s, ta) in instance.tas().iter().enumerate() {
        if ta.year >= 5 {
            let o = Origin::new(OriginTag::Eq(14), Subject::Ta(s));
            let bodies = vec![le(vec![(1, h[s])], ta.target_hours, o.part("up")), ge(vec![(1, h[s])], ta.target_hours, o.part("lo"))];
            b.soft(SoftFamily::TargetFifthYear, Subject::Ta(s), weights.w_target5, bodies);
        }
    }
    for (s, ta) in instance.tas().iter().enumerate() {
        let o = Origin::new(OriginTag::Eq(15), Subject::Ta(s));
        let bodies = vec![
            le(vec![(1, h[s])], ta.target_hours + bounds.soft_dev, o.part("up")),
            ge(vec![(1, h[s])], ta.target_hours - bounds.soft_dev, o.part("lo")),
        ];
        b.soft(SoftFamily::SoftDeviation, Subject::Ta(s), weights.w_soft_dev, bodies);
    }
    for s in 0..n_s {
        let o = Origin::new(OriginTag::Eq(16), Subject::Ta(s));
        b.soft(SoftFamily::SoftNewCourses, Subject::Ta(s), weights.w_soft_new, vec![le(vec![(1, z[s])], bounds.soft_new_courses, o)]);
    }
    for c in 0..n_c {
        for k in 0..n_k {
            if instance.task_hours(c, k) == 0 {
                continue;
            }
            let subject = Subject::Task(c, k);
            let rhs = instance.required_tas(c, k) + bounds.soft_extra_tas_per_task;
            let body = le(vec![(1, n[task(c, k)])], rhs, Origin::new(OriginTag::Eq(17), subject));
            b.soft(SoftFamily::SoftStaffing, subject, weights.w_soft_staff, vec![body]);
        }
    }
    for s in 0..n_s {
        let o = Origin::new(OriginTag::Eq(18), Subject::Ta(s));
        let terms = (0..n_c).map(|c| (1, w[pair(s, c)])).collect();
        b.soft(SoftFamily::SoftCourses, Subject::Ta(s), weights.w_soft_courses, vec![le(terms, bounds.soft_courses_per_ta, o)]);
    }
    for (family, preference) in [(SoftFamily::PreferencePositive, 1), (SoftFamily::PreferenceNegative, -1)] {
        for s in 0..n_s {
            for c in 0..n_c {
                if instance.pair(s, c).preference != preference {
                    continue;
                }
                let subject = Subject::Pair(s, c);
                let o = Origin::new(OriginTag::Eq(family.equation()), subject);
                let body = if preference > 0 { ge(vec![(1, w[pair(s, c)])], 1, o) } else { le(vec![(1, w[pair(s, c)])], 0, o) };
                b.soft(family, subject, weights.weight(family), vec![body]);
            }
        }
    }

    b.constraints.sort_by_key(|row| row.origin.tag);
    let provenance = Provenance { label: instance.label().to_string(), config_hash: config_hash(instance) };
    ModelIR::assemble(instance.clone(), b.variables, b.constraints, b.soft_terms, provenance, Vec::new())
}
