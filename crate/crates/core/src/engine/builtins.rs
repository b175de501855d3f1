//! Builtin scalar functions callable from expressions.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::geometry::law_of_cosines;
use crate::value::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arity {
    Exactly(usize),
    AtLeast(usize),
}

impl Arity {
    pub fn accepts(self, n: usize) -> bool {
        match self {
            Arity::Exactly(k) => n == k,
            Arity::AtLeast(k) => n >= k,
        }
    }
}

impl fmt::Display for Arity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Arity::Exactly(k) => write!(f, "{k}"),
            Arity::AtLeast(k) => write!(f, "at least {k}"),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Builtin {
    pub name: &'static str,
    pub arity: Arity,
}

pub const BUILTINS: &[Builtin] = &[
    Builtin {
        name: "Sqrt",
        arity: Arity::Exactly(1),
    },
    Builtin {
        name: "Abs",
        arity: Arity::Exactly(1),
    },
    Builtin {
        name: "Sin",
        arity: Arity::Exactly(1),
    },
    Builtin {
        name: "Cos",
        arity: Arity::Exactly(1),
    },
    Builtin {
        name: "Atan2",
        arity: Arity::Exactly(2),
    },
    Builtin {
        name: "Floor",
        arity: Arity::Exactly(1),
    },
    Builtin {
        name: "Pi",
        arity: Arity::Exactly(0),
    },
    Builtin {
        name: "Least",
        arity: Arity::AtLeast(1),
    },
    Builtin {
        name: "Greatest",
        arity: Arity::AtLeast(1),
    },
    Builtin {
        name: "Size",
        arity: Arity::Exactly(1),
    },
    Builtin {
        name: "Range",
        arity: Arity::Exactly(1),
    },
    Builtin {
        name: "EdgeDistance",
        arity: Arity::Exactly(3),
    },
    Builtin {
        name: "NormalizeAngle",
        arity: Arity::Exactly(1),
    },
];

pub fn lookup(name: &str) -> Option<&'static Builtin> {
    BUILTINS.iter().find(|b| b.name == name)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BuiltinError(pub String);

impl fmt::Display for BuiltinError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

fn number(name: &str, v: &Value) -> Result<f64, BuiltinError> {
    v.as_number()
        .ok_or_else(|| BuiltinError(format!("{name} expects a number, got {}", v.type_name())))
}

fn finite(name: &str, x: f64) -> Result<Value, BuiltinError> {
    if x.is_finite() {
        Ok(Value::Number(x))
    } else {
        Err(BuiltinError(format!("{name} produced a non-finite result")))
    }
}

/// Wraps an angle into (-pi, pi].
pub fn normalize_angle(a: f64) -> f64 {
    use core::f64::consts::{PI, TAU};
    let mut r = libm::fmod(a, TAU);
    if r <= -PI {
        r += TAU;
    } else if r > PI {
        r -= TAU;
    }
    r
}

/// Applies builtin `name` to `args`.
pub fn call_builtin(name: &str, args: &[Value]) -> Result<Value, BuiltinError> {
    let b = lookup(name).ok_or_else(|| BuiltinError(format!("unknown builtin `{name}`")))?;
    if !b.arity.accepts(args.len()) {
        return Err(BuiltinError(format!(
            "{name} expects {} argument(s), got {}",
            b.arity,
            args.len()
        )));
    }
    let num = |i: usize| number(name, &args[i]);
    match name {
        "Sqrt" => {
            let x = num(0)?;
            if x < 0.0 {
                return Err(BuiltinError(format!("Sqrt of negative number {x}")));
            }
            finite(name, libm::sqrt(x))
        }
        "Abs" => finite(name, libm::fabs(num(0)?)),
        "Sin" => finite(name, libm::sin(num(0)?)),
        "Cos" => finite(name, libm::cos(num(0)?)),
        "Atan2" => finite(name, libm::atan2(num(0)?, num(1)?)),
        "Floor" => finite(name, libm::floor(num(0)?)),
        "Pi" => Ok(Value::Number(core::f64::consts::PI)),
        "Least" | "Greatest" => {
            let xs = args
                .iter()
                .map(|v| number(name, v))
                .collect::<Result<Vec<_>, _>>()?;
            let pick = if name == "Least" { f64::min } else { f64::max };
            Ok(Value::Number(
                xs.into_iter().reduce(pick).unwrap_or_default(),
            ))
        }
        "Size" => match &args[0] {
            Value::List(l) => Ok(Value::Number(l.len() as f64)),
            v => Err(BuiltinError(format!(
                "Size expects a list, got {}",
                v.type_name()
            ))),
        },
        "Range" => {
            let n = num(0)?;
            if n < 0.0 || libm::floor(n) != n || n > 1e6 {
                return Err(BuiltinError(format!(
                    "Range expects a small nonnegative integer, got {n}"
                )));
            }
            Ok(Value::list(
                (0..n as usize).map(|i| Value::Number(i as f64)),
            ))
        }
        "EdgeDistance" => {
            let (d1, d2, delta) = (num(0)?, num(1)?, num(2)?);
            if d1 < 0.0 || d2 < 0.0 {
                return Err(BuiltinError(
                    "EdgeDistance expects nonnegative ranges".into(),
                ));
            }
            finite(name, law_of_cosines(d1, d2, delta))
        }
        "NormalizeAngle" => finite(name, normalize_angle(num(0)?)),
        _ => unreachable!("builtin table and dispatch disagree on {name}"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::{FRAC_PI_2, PI};

    fn n(x: f64) -> Value {
        Value::Number(x)
    }

    #[test]
    fn scalar_functions() {
        assert_eq!(call_builtin("Sqrt", &[n(9.0)]).unwrap(), n(3.0));
        assert_eq!(
            call_builtin("Atan2", &[n(1.0), n(0.0)]).unwrap(),
            n(FRAC_PI_2)
        );
        assert_eq!(call_builtin("Size", &[Value::list([])]).unwrap(), n(0.0));
        assert_eq!(
            call_builtin("Range", &[n(3.0)]).unwrap(),
            Value::list([n(0.0), n(1.0), n(2.0)])
        );
        assert_eq!(
            call_builtin("Least", &[n(3.0), n(-1.0), n(2.0)]).unwrap(),
            n(-1.0)
        );
        assert_eq!(
            call_builtin("Greatest", &[n(3.0), n(-1.0)]).unwrap(),
            n(3.0)
        );
        assert_eq!(call_builtin("Floor", &[n(-1.5)]).unwrap(), n(-2.0));
        assert_eq!(call_builtin("Pi", &[]).unwrap(), n(PI));
    }

    #[test]
    fn errors() {
        assert!(call_builtin("Sqrt", &[n(-1.0)]).is_err());
        assert!(call_builtin("Sqrt", &[n(1.0), n(2.0)]).is_err());
        assert!(call_builtin("Abs", &[Value::str("x")]).is_err());
        assert!(call_builtin("Nope", &[]).is_err());
    }

    #[test]
    fn edge_distance_cases() {
        let e = |a, b, t| call_builtin("EdgeDistance", &[n(a), n(b), n(t)]).unwrap();
        assert!((e(3.0, 4.0, FRAC_PI_2).as_number().unwrap() - 5.0).abs() < 1e-12);
        assert!((e(3.0, 4.0, 0.0).as_number().unwrap() - 1.0).abs() < 1e-12);
        assert!((e(1.0, 1.0, PI / 3.0).as_number().unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn normalize_wraps_into_half_open_interval() {
        assert_eq!(normalize_angle(PI), PI);
        assert_eq!(normalize_angle(-PI), PI);
        assert!((normalize_angle(3.0 * PI) - PI).abs() < 1e-12);
        assert!((normalize_angle(0.5 - 4.0 * PI) - 0.5).abs() < 1e-12);
    }
}
