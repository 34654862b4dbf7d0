use std::collections::HashMap;

use super::{eval_op, InterpError, Memory, Outcome, Payload};
use crate::ir::{Attr, Form, Function, Input, Opcode, Operation, ScalarType, ValueId};

pub(crate) fn attr_payload(a: &Attr) -> Result<Payload, InterpError> {
    match a {
        Attr::Int(v, t) => Ok(Payload::Int(*v).normalize(*t)),
        Attr::Float(v, t) => Ok(Payload::Float(*v).normalize(*t)),
        Attr::Str(s) => Err(InterpError::Type(format!("string attribute {:?} used as operand", s))),
    }
}

/// Value of a `constant` op: its `value` attribute or the promoted argument.
pub(crate) fn constant_value(op: &Operation, args: &[Payload]) -> Result<Payload, InterpError> {
    let ty = op.result_type().scalar;
    if let Some(k) = op.attr_int("arg") {
        return args
            .get(k as usize)
            .map(|p| p.normalize(ty))
            .ok_or_else(|| InterpError::BadInput(format!("missing argument {}", k)));
    }
    match op.attrs.get("value") {
        Some(a) => Ok(attr_payload(a)?.normalize(ty)),
        None => Err(InterpError::Type(format!("constant {} has no value", op.id))),
    }
}

pub(crate) fn check_args(f: &Function, args: &[Payload]) -> Result<(), InterpError> {
    if args.len() != f.params.len() {
        return Err(InterpError::BadInput(format!(
            "@{} takes {} arguments, got {}",
            f.name,
            f.params.len(),
            args.len()
        )));
    }
    Ok(())
}

/// Reference sequential interpreter for CDFG form (predicated types allowed;
/// every predicate is true). `fuel` bounds the number of executed ops.
pub fn interpret_cdfg(f: &Function, args: &[Payload], mem: Memory, fuel: u64) -> Result<Outcome, InterpError> {
    if f.form != Form::Cdfg {
        return Err(InterpError::WrongForm("interpret_cdfg expects cdfg form".into()));
    }
    check_args(f, args)?;
    let mut mem = mem;
    let mut env: HashMap<ValueId, Payload> = HashMap::new();
    for (&(v, t), a) in f.params.iter().zip(args) {
        env.insert(v, a.normalize(t.scalar));
    }
    let index: HashMap<_, _> = f.blocks.iter().enumerate().map(|(i, b)| (b.id, i)).collect();
    let mut block = 0usize;
    let mut steps = 0u64;
    loop {
        let b = &f.blocks[block];
        let mut next = None;
        for op in &b.ops {
            steps += 1;
            if steps > fuel {
                return Err(InterpError::FuelExhausted(fuel));
            }
            let get = |v: &ValueId| {
                env.get(v).copied().ok_or_else(|| InterpError::Type(format!("{} read before definition", v)))
            };
            let mut x = Vec::new();
            for i in op.inputs() {
                x.push(match i {
                    Input::Value(v) => get(&v)?,
                    Input::Imm(a) => attr_payload(&a)?,
                });
            }
            let rty = op.results.first().map(|r| r.1.scalar).unwrap_or(ScalarType::I64);
            match op.opcode {
                Opcode::Constant => {
                    env.insert(op.result(), constant_value(op, args)?);
                }
                Opcode::Load => {
                    let v = mem.load(x[0].as_int(), rty)?;
                    env.insert(op.result(), v);
                }
                Opcode::LoadIndexed => {
                    let addr = x.iter().fold(0i64, |s, p| s.wrapping_add(p.as_int()));
                    env.insert(op.result(), mem.load(addr, rty)?);
                }
                Opcode::Store => mem.store(x[1].as_int(), x[0])?,
                Opcode::Return => {
                    return Ok(Outcome { ret: x.first().copied(), memory: mem });
                }
                Opcode::Br | Opcode::CondBr => {
                    let k = if op.opcode == Opcode::CondBr && !x[0].as_bool() { 1 } else { 0 };
                    let s = &op.successors[k];
                    let vals: Vec<Payload> = s.args.iter().map(get).collect::<Result<_, _>>()?;
                    next = Some((index[&s.block], vals));
                }
                o if o.is_dataflow_only() => {
                    return Err(InterpError::WrongForm(format!("{} in cdfg form", o)));
                }
                _ => {
                    env.insert(op.result(), eval_op(op, &x, rty)?);
                }
            }
        }
        let Some((target, vals)) = next else {
            return Err(InterpError::Type(format!("block bb{} fell through", block)));
        };
        for (&(a, t), v) in f.blocks[target].args.iter().zip(vals) {
            env.insert(a, v.normalize(t.scalar));
        }
        block = target;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::parse_module;

    pub(crate) const ACCUMULATE: &str = "func @acc(%n: i64) {
bb0:
  %z = neura.constant {value = 0 : i64} : i64
  neura.br bb1(%z, %z)
bb1(%i: i64, %s: i64):
  %c = neura.icmp %i, %n {cmp = \"slt\"} : i1
  neura.cond_br %c, bb2, bb3
bb2:
  %a = neura.load %i : i64
  %s2 = neura.add %s, %a : i64
  %i2 = neura.add %i {rhs_const = 1 : i64} : i64
  neura.br bb1(%i2, %s2)
bb3:
  neura.return %s
}
";

    fn run(src: &str, args: &[i64], mem: &str) -> Result<Outcome, InterpError> {
        let f = parse_module(src).unwrap().functions.remove(0);
        let args: Vec<Payload> = args.iter().map(|&a| Payload::Int(a)).collect();
        interpret_cdfg(&f, &args, Memory::parse(mem).unwrap(), 10_000)
    }

    #[test]
    fn accumulation_sums_memory() {
        let out = run(ACCUMULATE, &[4], "0: 1\n1: 2\n2: 3\n3: 4").unwrap();
        assert_eq!(out.ret, Some(Payload::Int(10)));
    }

    #[test]
    fn zero_trip_loop_returns_initial_value() {
        let out = run(ACCUMULATE, &[0], "").unwrap();
        assert_eq!(out.ret, Some(Payload::Int(0)));
    }

    #[test]
    fn store_out_of_bounds() {
        let src = "func @f(%v: i64) {\nbb0:\n  neura.store %v {rhs_const = 9 : i64}\n  neura.return %v\n}\n";
        assert!(matches!(run(src, &[1], "size: 4"), Err(InterpError::OutOfBounds { addr: 9, size: 4 })));
    }

    #[test]
    fn fuel_bounds_execution() {
        let f = parse_module(ACCUMULATE).unwrap().functions.remove(0);
        let r = interpret_cdfg(&f, &[Payload::Int(1000)], Memory::new(1000), 50);
        assert_eq!(r, Err(InterpError::FuelExhausted(50)));
    }
}
