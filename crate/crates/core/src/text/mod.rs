//! Textual form of the IR: tokenizer, parser and canonical printer.
//!
//! ```text
//! func @sum(%arg0: i64) {
//! bb0:
//!   %0 = neura.constant {value = 0 : i64} : i64
//!   neura.br bb1(%0)
//! bb1(%1: i64):
//!   neura.return %1
//! }
//! ```
//!
//! Dataflow functions start with `dataflow func` and have a single block.

mod lexer;
mod parser;
mod printer;

use std::fmt;

use crate::ir::{SourceSpan, Violation};

pub use parser::{parse_module, parse_module_named, parse_unverified};
pub use printer::{print_function, print_module};

#[derive(Debug, Clone, PartialEq)]
pub enum TextError {
    Syntax { span: SourceSpan, message: String },
    Verify { function: String, violations: Vec<Violation> },
}

impl fmt::Display for TextError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TextError::Syntax { span, message } => write!(f, "{}: {}", span, message),
            TextError::Verify { function, violations } => {
                write!(f, "@{} failed verification:", function)?;
                for v in violations {
                    write!(f, "\n  {}", v)?;
                }
                Ok(())
            }
        }
    }
}

impl std::error::Error for TextError {}

/// Two functions are structurally equal when they print identically.
pub fn structurally_equal(a: &crate::ir::Function, b: &crate::ir::Function) -> bool {
    print_function(a) == print_function(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::{Opcode, ScalarType, Type};

    const LOOP: &str = "func @acc(%arg0: i64) {
bb0:
  %0 = neura.constant {value = 0 : i64} : i64
  neura.br bb1(%0, %0)
bb1(%1: i64, %2: i64):
  %3 = neura.icmp %1, %arg0 {cmp = \"slt\"} : i1
  neura.cond_br %3, bb2, bb3
bb2:
  %4 = neura.add %2, %1 : i64
  %5 = neura.add %1 {rhs_const = 1 : i64} : i64
  neura.br bb1(%5, %4)
bb3:
  neura.return %2
}
";

    #[test]
    fn round_trip_is_identity_on_canonical_text() {
        let m = parse_unverified(LOOP, None).unwrap();
        assert_eq!(print_module(&m), LOOP);
        let again = parse_unverified(&print_module(&m), None).unwrap();
        assert!(structurally_equal(&m.functions[0], &again.functions[0]));
    }

    #[test]
    fn immediate_prints_as_rhs_const() {
        let m = parse_unverified(LOOP, None).unwrap();
        let text = print_module(&m);
        assert!(text.contains("%5 = neura.add %1 {rhs_const = 1 : i64} : i64"));
        let add = m.functions[0].ops().filter(|o| o.opcode == Opcode::Add).nth(1).unwrap();
        assert_eq!(add.attr_int("rhs_const"), Some(1));
    }

    #[test]
    fn empty_input_is_a_syntax_error() {
        match parse_module("") {
            Err(TextError::Syntax { message, .. }) => assert!(message.contains("expected 'func'")),
            other => panic!("unexpected {:?}", other),
        }
    }

    #[test]
    fn predicated_types_print() {
        let src = "dataflow func @f(%arg0: !pred<f32>) {
bb0:
  %0 = neura.fadd %arg0, %arg0 : !pred<f32>
  neura.return %0
}
";
        let m = parse_module(src).unwrap();
        assert_eq!(m.functions[0].params[0].1, Type::pred(ScalarType::F32));
        assert!(print_module(&m).contains("!pred<f32>"));
    }

    #[test]
    fn duplicate_definition_is_reported_by_name() {
        let src = "func @f() {
bb0:
  %x = neura.constant {value = 1 : i64} : i64
  %x = neura.constant {value = 2 : i64} : i64
  neura.return %x
}
";
        let err = parse_module(src).unwrap_err();
        assert!(err.to_string().contains("duplicate definition %x"), "{}", err);
    }

    #[test]
    fn undefined_value_has_position() {
        let src = "func @f() {\nbb0:\n  neura.return %nope\n}\n";
        match parse_module(src) {
            Err(TextError::Syntax { span, message }) => {
                assert_eq!((span.line, span.col), (3, 16));
                assert!(message.contains("%nope"));
            }
            other => panic!("unexpected {:?}", other),
        }
    }

    #[test]
    fn float_attrs_survive_round_trip() {
        let src = "func @f() {
bb0:
  %0 = neura.constant {value = -2.5e-7 : f32} : f32
  %1 = neura.constant {value = -inf : f64} : f64
  neura.return %0
}
";
        let m = parse_module(src).unwrap();
        let again = parse_module(&print_module(&m)).unwrap();
        assert_eq!(print_module(&m), print_module(&again));
    }

    #[test]
    fn missing_type_list_is_rejected() {
        let src = "func @f() {\nbb0:\n  %0 = neura.constant {value = 1}\n  neura.return %0\n}\n";
        assert!(matches!(parse_module(src), Err(TextError::Syntax { .. })));
    }
}
