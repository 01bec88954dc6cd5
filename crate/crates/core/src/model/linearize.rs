use thiserror::Error;

use super::{LinearConstraint, Relation, VarId};

/// Largest big-M coefficient the builder will emit.
pub const BIG_M_LIMIT: i64 = 1 << 31;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("big-M {m} for {origin} exceeds the limit {BIG_M_LIMIT}")]
pub struct BigMOverflow {
    pub m: i64,
    pub origin: String,
}

/// A binary variable or its negation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Literal {
    pub var: VarId,
    pub positive: bool,
}

impl Literal {
    pub fn pos(var: VarId) -> Self {
        Literal { var, positive: true }
    }

    pub fn neg(var: VarId) -> Self {
        Literal { var, positive: false }
    }
}

/// Rewrites `literal => body` into linear rows over the binary `literal.var`.
///
/// M is the largest violation of `body` reachable within the variable bounds.
/// A direction that cannot be violated produces no row. Equalities are split
/// into a `<=` and a `>=` row (parts `le` / `ge` unless the body has a part).
pub fn linearize_indicator(
    literal: Literal,
    body: &LinearConstraint,
    bounds: impl Fn(VarId) -> (i64, i64),
) -> Result<Vec<LinearConstraint>, BigMOverflow> {
    let (lhs_min, lhs_max) = body.lhs_range(&bounds);
    let mut rows = Vec::new();
    let mut push = |relation: Relation, part: &'static str| -> Result<(), BigMOverflow> {
        let m = match relation {
            Relation::Le => lhs_max - body.rhs,
            Relation::Ge => body.rhs - lhs_min,
            Relation::Eq => unreachable!("split above"),
        };
        if m <= 0 {
            return Ok(());
        }
        if m > BIG_M_LIMIT {
            return Err(BigMOverflow { m, origin: format!("{:?}", body.origin) });
        }
        let mut origin = body.origin;
        if body.relation == Relation::Eq && origin.part.is_none() {
            origin.part = Some(part);
        }
        // Le: lhs <= rhs + M*(1 - lit);  Ge: lhs >= rhs - M*(1 - lit).
        let sign = if relation == Relation::Le { 1 } else { -1 };
        let (coef, rhs) = if literal.positive {
            (sign * m, body.rhs + sign * m)
        } else {
            (-sign * m, body.rhs)
        };
        let terms = body.terms.iter().copied().chain(std::iter::once((coef, literal.var)));
        rows.push(LinearConstraint::new(terms, relation, rhs, origin));
        Ok(())
    };
    match body.relation {
        Relation::Le => push(Relation::Le, "le")?,
        Relation::Ge => push(Relation::Ge, "ge")?,
        Relation::Eq => {
            push(Relation::Le, "le")?;
            push(Relation::Ge, "ge")?;
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Origin, OriginTag, Subject};

    const X: VarId = VarId(0);
    const B: VarId = VarId(1);

    fn bounds(v: VarId) -> (i64, i64) {
        if v == X {
            (0, 10)
        } else {
            (0, 1)
        }
    }

    fn body(relation: Relation, rhs: i64) -> LinearConstraint {
        LinearConstraint::new([(1, X)], relation, rhs, Origin::new(OriginTag::Eq(7), Subject::Ta(0)))
    }

    #[test]
    fn upper_bound_uses_tight_m() {
        let rows = linearize_indicator(Literal::pos(B), &body(Relation::Le, 7), bounds).unwrap();
        // x <= 7 + 3 (1 - b)  <=>  x + 3 b <= 10
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].terms, vec![(1, X), (3, B)]);
        assert_eq!((rows[0].relation, rows[0].rhs), (Relation::Le, 10));
    }

    #[test]
    fn lower_bound_uses_tight_m() {
        let rows = linearize_indicator(Literal::pos(B), &body(Relation::Ge, 5), bounds).unwrap();
        // x >= 5 - 5 (1 - b)  <=>  x - 5 b >= 0
        assert_eq!(rows[0].terms, vec![(1, X), (-5, B)]);
        assert_eq!((rows[0].relation, rows[0].rhs), (Relation::Ge, 0));
    }

    #[test]
    fn redundant_body_emits_nothing() {
        assert!(linearize_indicator(Literal::pos(B), &body(Relation::Le, 10), bounds).unwrap().is_empty());
        assert!(linearize_indicator(Literal::neg(B), &body(Relation::Ge, 0), bounds).unwrap().is_empty());
    }

    #[test]
    fn overflow_is_reported() {
        let wide = |v: VarId| if v == X { (0, BIG_M_LIMIT * 4) } else { (0, 1) };
        assert!(linearize_indicator(Literal::pos(B), &body(Relation::Le, 0), wide).is_err());
    }

    /// Every (b, x) valuation in {0,1} x [0,10] is admitted by the rows
    /// exactly when the implication holds.
    #[test]
    fn exhaustive_equivalence() {
        for relation in [Relation::Le, Relation::Ge, Relation::Eq] {
            for rhs in -1..=11 {
                for positive in [true, false] {
                    let lit = Literal { var: B, positive };
                    let body = body(relation, rhs);
                    let rows = linearize_indicator(lit, &body, bounds).unwrap();
                    for b in 0..=1 {
                        for x in 0..=10 {
                            let values = [x, b];
                            let active = (b == 1) == positive;
                            let implication = !active || body.is_satisfied(&values);
                            let linear = rows.iter().all(|r| r.is_satisfied(&values));
                            assert_eq!(implication, linear, "{relation:?} {rhs} {positive} b={b} x={x}");
                        }
                    }
                }
            }
        }
    }
}
