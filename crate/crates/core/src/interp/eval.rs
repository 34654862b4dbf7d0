use super::{InterpError, Payload};
use crate::ir::{CmpKind, Opcode, Operation, ScalarType};

fn width_mask(t: ScalarType) -> u32 {
    match t.width() {
        Some(w) if w > 1 => w - 1,
        _ => 63,
    }
}

/// Evaluates a pure op on its slot values (immediates already spliced in).
/// `ty` is the result payload type. Division by zero is reported as an error;
/// callers decide whether the predicate makes it observable.
pub fn eval_op(op: &Operation, x: &[Payload], ty: ScalarType) -> Result<Payload, InterpError> {
    use Opcode::*;
    let need = |n: usize| {
        if x.len() < n {
            Err(InterpError::Type(format!("{} needs {} inputs, got {}", op.opcode, n, x.len())))
        } else {
            Ok(())
        }
    };
    let int2 = |f: fn(i64, i64) -> i64| -> Result<Payload, InterpError> {
        need(2)?;
        Ok(Payload::Int(f(x[0].as_int(), x[1].as_int())).normalize(ty))
    };
    let flt2 = |f: fn(f64, f64) -> f64| -> Result<Payload, InterpError> {
        need(2)?;
        Ok(Payload::Float(f(x[0].as_float(), x[1].as_float())).normalize(ty))
    };
    let cmp = || -> Result<CmpKind, InterpError> {
        op.cmp_kind().ok_or_else(|| InterpError::Type(format!("{} ({}) lacks a cmp attribute", op.opcode, op.id)))
    };
    let r = match op.opcode {
        Add => int2(i64::wrapping_add)?,
        Sub => int2(i64::wrapping_sub)?,
        Mul => int2(i64::wrapping_mul)?,
        Div | Rem => {
            need(2)?;
            let (a, b) = (x[0].as_int(), x[1].as_int());
            if b == 0 {
                return Err(InterpError::DivByZero(op.id));
            }
            let v = if op.opcode == Div { a.wrapping_div(b) } else { a.wrapping_rem(b) };
            Payload::Int(v).normalize(ty)
        }
        And => int2(|a, b| a & b)?,
        Or => int2(|a, b| a | b)?,
        Xor => int2(|a, b| a ^ b)?,
        Shl => {
            need(2)?;
            let s = (x[1].as_int() as u32) & width_mask(ty);
            Payload::Int(x[0].as_int().wrapping_shl(s)).normalize(ty)
        }
        Shr => {
            need(2)?;
            let s = (x[1].as_int() as u32) & width_mask(ty);
            Payload::Int(x[0].as_int().wrapping_shr(s)).normalize(ty)
        }
        FAdd => flt2(|a, b| a + b)?,
        FSub => flt2(|a, b| a - b)?,
        FMul => flt2(|a, b| a * b)?,
        FDiv => flt2(|a, b| a / b)?,
        Icmp => {
            need(2)?;
            Payload::Int(cmp()?.eval(x[0].as_int(), x[1].as_int()) as i64)
        }
        Fcmp => {
            need(2)?;
            let (a, b) = (x[0].as_float(), x[1].as_float());
            let v = match cmp()? {
                CmpKind::Eq => a == b,
                CmpKind::Ne => a != b,
                CmpKind::Slt => a < b,
                CmpKind::Sle => a <= b,
                CmpKind::Sgt => a > b,
                CmpKind::Sge => a >= b,
            };
            Payload::Int(v as i64)
        }
        Not => {
            need(1)?;
            if ty == ScalarType::I1 {
                Payload::Int(!x[0].as_bool() as i64)
            } else {
                Payload::Int(!x[0].as_int()).normalize(ty)
            }
        }
        Sel => {
            need(3)?;
            if x[0].as_bool() {
                x[1].normalize(ty)
            } else {
                x[2].normalize(ty)
            }
        }
        Cast => {
            need(1)?;
            x[0].normalize(ty)
        }
        MulAdd => {
            need(3)?;
            Payload::Int(x[0].as_int().wrapping_mul(x[1].as_int()).wrapping_add(x[2].as_int())).normalize(ty)
        }
        other => return Err(InterpError::Type(format!("{} is not a pure op", other))),
    };
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::{Attr, Form, Function, Type};

    fn op(opcode: Opcode) -> Operation {
        let mut f = Function::new("t", Form::Cdfg);
        f.make_op(opcode, vec![], &[Type::plain(ScalarType::I64)])
    }

    #[test]
    fn wrapping_and_width() {
        let x = [Payload::Int(i32::MAX as i64), Payload::Int(1)];
        assert_eq!(eval_op(&op(Opcode::Add), &x, ScalarType::I32).unwrap(), Payload::Int(i32::MIN as i64));
        assert_eq!(eval_op(&op(Opcode::Add), &x, ScalarType::I64).unwrap(), Payload::Int(i32::MAX as i64 + 1));
        let y = [Payload::Int(i64::MIN), Payload::Int(-1)];
        assert_eq!(eval_op(&op(Opcode::Div), &y, ScalarType::I64).unwrap(), Payload::Int(i64::MIN));
    }

    #[test]
    fn division_by_zero() {
        let x = [Payload::Int(3), Payload::Int(0)];
        assert!(matches!(eval_op(&op(Opcode::Rem), &x, ScalarType::I64), Err(InterpError::DivByZero(_))));
    }

    #[test]
    fn compare_and_not() {
        let mut c = op(Opcode::Icmp);
        c.attrs.insert("cmp".into(), Attr::Str("sle".into()));
        assert_eq!(eval_op(&c, &[Payload::Int(2), Payload::Int(2)], ScalarType::I1).unwrap(), Payload::Int(1));
        assert_eq!(eval_op(&op(Opcode::Not), &[Payload::Int(1)], ScalarType::I1).unwrap(), Payload::Int(0));
        assert_eq!(eval_op(&op(Opcode::Not), &[Payload::Int(5)], ScalarType::I64).unwrap(), Payload::Int(-6));
    }

    #[test]
    fn f32_rounding() {
        let x = [Payload::Float(0.1), Payload::Float(0.2)];
        let r = eval_op(&op(Opcode::FAdd), &x, ScalarType::F32).unwrap();
        assert_eq!(r, Payload::Float((0.1f64 + 0.2f64) as f32 as f64));
    }
}
