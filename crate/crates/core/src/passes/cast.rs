use super::PassError;
use crate::ir::{Attr, Form, Function, Opcode, ScalarType, Type};

/// Resolves `index` to a concrete integer width and removes identity casts and
/// widen-then-narrow round trips.
pub fn canonicalize_cast(f: &mut Function, index_width: u32) -> Result<(), PassError> {
    let concrete = match index_width {
        32 => ScalarType::I32,
        64 => ScalarType::I64,
        w => return Err(PassError::IndexWidth(w)),
    };
    if f.form != Form::Cdfg {
        return Err(PassError::WrongForm("canonicalize-cast expects cdfg form".into()));
    }
    let fix = |t: &mut Type| {
        if t.scalar == ScalarType::Index {
            t.scalar = concrete;
        }
    };
    for p in &mut f.params {
        fix(&mut p.1);
    }
    for b in &mut f.blocks {
        for a in &mut b.args {
            fix(&mut a.1);
        }
        for op in &mut b.ops {
            for r in &mut op.results {
                fix(&mut r.1);
            }
            for a in op.attrs.values_mut() {
                if let Attr::Int(_, t) = a {
                    if *t == ScalarType::Index {
                        *t = concrete;
                    }
                }
            }
        }
    }
    loop {
        let types = f.value_types();
        let defs = f.defining_ops();
        let mut rewrite = None;
        'search: for op in f.ops() {
            if op.opcode != Opcode::Cast || op.operands.len() != 1 || op.immediate_count() > 0 {
                continue;
            }
            let src = op.operands[0];
            let out = op.result_type();
            if types.get(&src) == Some(&out) {
                rewrite = Some((op.id, op.result(), src));
                break 'search;
            }
            // cast(cast(x: T) -> wider) -> T  ==>  x
            if let Some(inner) = defs.get(&src) {
                if inner.opcode == Opcode::Cast && inner.operands.len() == 1 && inner.immediate_count() == 0 {
                    let x = inner.operands[0];
                    let mid = inner.result_type();
                    if let Some(&xt) = types.get(&x) {
                        let widening = xt.scalar.is_int()
                            && mid.scalar.is_int()
                            && mid.scalar.width() >= xt.scalar.width();
                        if xt == out && widening {
                            rewrite = Some((op.id, op.result(), x));
                            break 'search;
                        }
                    }
                }
            }
        }
        let Some((id, old, new)) = rewrite else { break };
        f.rename_uses_unchecked(old, new);
        for b in &mut f.blocks {
            b.ops.retain(|o| o.id != id);
        }
    }
    super::dce::remove_unused_pure(f);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::{parse_module, print_function};

    fn parse(src: &str) -> Function {
        parse_module(src).unwrap().functions.remove(0)
    }

    #[test]
    fn index_becomes_concrete() {
        let mut f = parse("func @f(%i: index) {\nbb0:\n  %a = neura.add %i {rhs_const = 1 : index} : index\n  neura.return %a\n}\n");
        canonicalize_cast(&mut f, 64).unwrap();
        let text = print_function(&f);
        assert!(!text.contains("index"), "{}", text);
        assert!(text.contains("%arg0: i64"));
        let mut g = parse("func @f(%i: index) {\nbb0:\n  neura.return %i\n}\n");
        canonicalize_cast(&mut g, 32).unwrap();
        assert_eq!(g.params[0].1, Type::plain(ScalarType::I32));
    }

    #[test]
    fn bad_width_rejected() {
        let mut f = parse("func @f() {\nbb0:\n  %0 = neura.constant {value = 1 : i64} : i64\n  neura.return %0\n}\n");
        assert_eq!(canonicalize_cast(&mut f, 16), Err(PassError::IndexWidth(16)));
    }

    #[test]
    fn identity_and_round_trip_casts_removed() {
        let mut f = parse(
            "func @f(%x: i32, %y: i64) {
bb0:
  %a = neura.cast %y : i64
  %w = neura.cast %x : i64
  %n = neura.cast %w : i32
  %k = neura.cast %n : i64
  %s = neura.add %a, %k : i64
  neura.return %s
}
",
        );
        let before = f.op_count();
        canonicalize_cast(&mut f, 64).unwrap();
        // %a is an identity cast, %n undoes %w, and %w is then dead.
        assert_eq!(f.count_opcode(Opcode::Cast), 1);
        assert!(f.op_count() < before);
        assert!(crate::ir::verify(&f).is_empty());
    }

    #[test]
    fn no_casts_no_change() {
        let src = "func @f(%x: i64) {\nbb0:\n  %a = neura.add %x, %x : i64\n  neura.return %a\n}\n";
        let mut f = parse(src);
        canonicalize_cast(&mut f, 64).unwrap();
        assert_eq!(print_function(&f), print_function(&parse(src)));
    }
}
