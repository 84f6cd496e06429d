//! Model files: expression AST, parser, validated `ModelSpec`, builtin families.

pub mod ast;
pub mod builtin;
pub mod model;
pub mod parser;

pub use ast::{Expr, Func, Var};
pub use builtin::{builtin, BuiltinFamily};
pub use model::{Domain, Interval, Lagrangian, ModelSpec};
pub use parser::{parse_expr, parse_model};
