//! Folding grouped values: `Min=`, `WeightedAverage{...}` and friends.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;
use core::str::FromStr;

use crate::value::{Record, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Aggregation {
    Min,
    Max,
    Sum,
    Count,
    Avg,
    List,
    ArgMin,
    ArgMax,
    WeightedAverage,
}

impl Aggregation {
    pub const ALL: [Aggregation; 9] = [
        Aggregation::Min,
        Aggregation::Max,
        Aggregation::Sum,
        Aggregation::Count,
        Aggregation::Avg,
        Aggregation::List,
        Aggregation::ArgMin,
        Aggregation::ArgMax,
        Aggregation::WeightedAverage,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Aggregation::Min => "Min",
            Aggregation::Max => "Max",
            Aggregation::Sum => "Sum",
            Aggregation::Count => "Count",
            Aggregation::Avg => "Avg",
            Aggregation::List => "List",
            Aggregation::ArgMin => "ArgMin",
            Aggregation::ArgMax => "ArgMax",
            Aggregation::WeightedAverage => "WeightedAverage",
        }
    }

    /// Whether the aggregation folds `lhs -> rhs` pairs rather than plain values.
    pub fn takes_pairs(self) -> bool {
        matches!(
            self,
            Aggregation::ArgMin | Aggregation::ArgMax | Aggregation::WeightedAverage
        )
    }
}

impl FromStr for Aggregation {
    type Err = AggregateError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Aggregation::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| AggregateError(format!("unknown aggregation `{s}`")))
    }
}

impl fmt::Display for Aggregation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AggregateError(pub String);

impl fmt::Display for AggregateError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// One contribution to a group.
///
/// For `WeightedAverage` the weight multiplies the value; for `ArgMin` and
/// `ArgMax` the weight is the number being minimized and `value` is what the
/// aggregation returns. Other aggregations take no weight.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct AggItem {
    pub weight: Option<Value>,
    pub value: Value,
}

impl AggItem {
    pub fn plain(value: Value) -> Self {
        AggItem {
            weight: None,
            value,
        }
    }

    pub fn weighted(weight: f64, value: Value) -> Self {
        AggItem {
            weight: Some(Value::Number(weight)),
            value,
        }
    }
}

fn numeric(agg: Aggregation, what: &str, v: &Value) -> Result<f64, AggregateError> {
    v.as_number().ok_or_else(|| {
        AggregateError(format!(
            "{agg} requires a numeric {what}, got {} `{v}`",
            v.type_name()
        ))
    })
}

fn weight_of(agg: Aggregation, item: &AggItem) -> Result<f64, AggregateError> {
    match &item.weight {
        Some(w) => numeric(agg, "weight", w),
        None => Err(AggregateError(format!("{agg} requires `lhs -> rhs` pairs"))),
    }
}

/// Folds one group. `Ok(None)` means the group produces no row.
///
/// Items are sorted into canonical order first, so the result (including
/// floating-point rounding) does not depend on how the group was assembled.
pub fn aggregate(agg: Aggregation, items: &[AggItem]) -> Result<Option<Value>, AggregateError> {
    if !agg.takes_pairs() {
        if let Some(item) = items.iter().find(|i| i.weight.is_some()) {
            return Err(AggregateError(format!(
                "{agg} takes single values, got a pair with weight `{}`",
                item.weight.as_ref().unwrap()
            )));
        }
    }
    let mut items: Vec<&AggItem> = items.iter().collect();
    items.sort();

    let values = || items.iter().map(|i| &i.value);
    let result = match agg {
        Aggregation::Count => Some(Value::Number(items.len() as f64)),
        Aggregation::List => Some(Value::list(values().cloned())),
        Aggregation::Sum => {
            let mut sum = 0.0;
            for v in values() {
                sum += numeric(agg, "value", v)?;
            }
            Some(Value::Number(sum))
        }
        Aggregation::Avg => {
            let mut sum = 0.0;
            for v in values() {
                sum += numeric(agg, "value", v)?;
            }
            (!items.is_empty()).then(|| Value::Number(sum / items.len() as f64))
        }
        Aggregation::Min | Aggregation::Max => {
            let mut best: Option<f64> = None;
            for v in values() {
                let x = numeric(agg, "value", v)?;
                best = Some(match best {
                    None => x,
                    Some(b) if agg == Aggregation::Min => b.min(x),
                    Some(b) => b.max(x),
                });
            }
            best.map(Value::Number)
        }
        Aggregation::ArgMin | Aggregation::ArgMax => {
            let mut best: Option<(f64, &Value)> = None;
            for item in &items {
                let key = weight_of(agg, item)?;
                let better = match best {
                    None => true,
                    Some((b, bv)) => {
                        let ord = key.partial_cmp(&b).unwrap_or(Ordering::Equal);
                        let ord = if agg == Aggregation::ArgMin {
                            ord
                        } else {
                            ord.reverse()
                        };
                        ord == Ordering::Less || (ord == Ordering::Equal && item.value < *bv)
                    }
                };
                if better {
                    best = Some((key, &item.value));
                }
            }
            best.map(|(_, v)| v.clone())
        }
        Aggregation::WeightedAverage => {
            let (mut num, mut den) = (0.0, 0.0);
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            let mut all_positive = true;
            for item in &items {
                let w = weight_of(agg, item)?;
                let x = numeric(agg, "value", &item.value)?;
                num += w * x;
                den += w;
                lo = lo.min(x);
                hi = hi.max(x);
                all_positive &= w > 0.0;
            }
            let mut avg = num / den;
            if all_positive && !items.is_empty() {
                // A convex combination; undo rounding that leaves the hull.
                avg = avg.clamp(lo, hi);
            }
            (den != 0.0 && avg.is_finite()).then_some(Value::Number(avg))
        }
    };
    if let Some(Value::Number(x)) = result {
        if !x.is_finite() {
            return Err(AggregateError(format!("{agg} overflowed")));
        }
    }
    Ok(result)
}

/// Folds every group; groups that produce no row are absent from the result.
pub fn aggregate_groups(
    agg: Aggregation,
    groups: &BTreeMap<Record, Vec<AggItem>>,
) -> Result<BTreeMap<Record, Value>, AggregateError> {
    let mut out = BTreeMap::new();
    for (key, items) in groups {
        if let Some(v) = aggregate(agg, items)? {
            out.insert(key.clone(), v);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn n(x: f64) -> Value {
        Value::Number(x)
    }

    fn plain(xs: &[f64]) -> Vec<AggItem> {
        xs.iter().map(|x| AggItem::plain(n(*x))).collect()
    }

    #[test]
    fn weighted_average_of_two_rays() {
        let items = vec![
            AggItem::weighted(1.0, n(-0.5)),
            AggItem::weighted(3.0, n(0.5)),
        ];
        assert_eq!(
            aggregate(Aggregation::WeightedAverage, &items).unwrap(),
            Some(n(0.25))
        );
    }

    #[test]
    fn weighted_average_degenerate_cases() {
        let single = vec![AggItem::weighted(7.0, n(1.25))];
        assert_eq!(
            aggregate(Aggregation::WeightedAverage, &single).unwrap(),
            Some(n(1.25))
        );
        let sym = vec![
            AggItem::weighted(2.0, n(-0.3)),
            AggItem::weighted(2.0, n(0.3)),
        ];
        assert_eq!(
            aggregate(Aggregation::WeightedAverage, &sym).unwrap(),
            Some(n(0.0))
        );
        let zero = vec![
            AggItem::weighted(0.0, n(1.0)),
            AggItem::weighted(0.0, n(2.0)),
        ];
        assert_eq!(
            aggregate(Aggregation::WeightedAverage, &zero).unwrap(),
            None
        );
        assert_eq!(aggregate(Aggregation::WeightedAverage, &[]).unwrap(), None);
    }

    #[test]
    fn min_picks_home_zero() {
        assert_eq!(
            aggregate(Aggregation::Min, &plain(&[5.0, 0.0, 3.0])).unwrap(),
            Some(n(0.0))
        );
        assert_eq!(
            aggregate(Aggregation::Max, &plain(&[5.0, 0.0, 3.0])).unwrap(),
            Some(n(5.0))
        );
    }

    #[test]
    fn empty_groups() {
        assert_eq!(aggregate(Aggregation::Sum, &[]).unwrap(), Some(n(0.0)));
        assert_eq!(aggregate(Aggregation::Count, &[]).unwrap(), Some(n(0.0)));
        assert_eq!(
            aggregate(Aggregation::List, &[]).unwrap(),
            Some(Value::list([]))
        );
        for agg in [
            Aggregation::Min,
            Aggregation::Max,
            Aggregation::Avg,
            Aggregation::ArgMin,
            Aggregation::ArgMax,
            Aggregation::WeightedAverage,
        ] {
            assert_eq!(aggregate(agg, &[]).unwrap(), None, "{agg}");
        }
    }

    #[test]
    fn argmin_ties_break_by_value_order() {
        let items = vec![
            AggItem::weighted(1.0, Value::str("b")),
            AggItem::weighted(1.0, Value::str("a")),
            AggItem::weighted(2.0, Value::str("0")),
        ];
        assert_eq!(
            aggregate(Aggregation::ArgMin, &items).unwrap(),
            Some(Value::str("a"))
        );
        assert_eq!(
            aggregate(Aggregation::ArgMax, &items).unwrap(),
            Some(Value::str("0"))
        );
    }

    #[test]
    fn list_is_canonical_and_keeps_duplicates() {
        let items = plain(&[3.0, 1.0, 3.0]);
        assert_eq!(
            aggregate(Aggregation::List, &items).unwrap(),
            Some(Value::list([n(1.0), n(3.0), n(3.0)]))
        );
    }

    #[test]
    fn type_errors() {
        let s = vec![AggItem::plain(Value::str("x"))];
        assert!(aggregate(Aggregation::Sum, &s).is_err());
        assert!(aggregate(Aggregation::Min, &s).is_err());
        assert!(aggregate(Aggregation::WeightedAverage, &s).is_err());
        let bad_weight = vec![AggItem {
            weight: Some(Value::str("w")),
            value: n(1.0),
        }];
        assert!(aggregate(Aggregation::ArgMin, &bad_weight).is_err());
        assert!(aggregate(Aggregation::Count, &bad_weight).is_err());
        assert_eq!(aggregate(Aggregation::Count, &s).unwrap(), Some(n(1.0)));
    }

    #[test]
    fn groups_without_rows_are_dropped() {
        let mut groups = BTreeMap::new();
        let key = |k: &str| {
            let mut r = Record::new();
            r.insert("arg0".into(), Value::str(k));
            r
        };
        groups.insert(key("a"), plain(&[1.0, 2.0]));
        groups.insert(key("b"), vec![]);
        let out = aggregate_groups(Aggregation::Avg, &groups).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[&key("a")], n(1.5));
    }
}
