//! LogiCore: lexer, parser, checker and pretty printer for robot programs.
//!
//! A program is a list of `;`-terminated rules:
//!
//! ```text
//! FreedomMotion(radar) = WeightedAverage { x.distance -> x.angle :- x in radar };
//! Robot(robot_name:, desire:, memory: null) :- Sensor(robot_name:, sensor:), ...;
//! Best(beacon) Min= d :- d == Old(beacon) | d == 0, beacon == "Home";
//! ```

pub mod ast;
mod format;
mod lexer;
pub mod listings;
mod parser;
mod validate;

pub use ast::*;
pub use format::{format_expr, format_program, format_rule};
pub use lexer::{tokenize, tokenize_bytes, LexError, Token, TokenKind};
pub use parser::{parse_program, SyntaxError};
pub use validate::{validate, Diagnostic, Severity, AGGREGATIONS, INPUT_PREDICATES};

pub(crate) use validate::{analyze, ProgramInfo};
