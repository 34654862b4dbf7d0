use std::collections::BTreeMap;

use crate::ir::{Attr, Function, Opcode, ScalarType};

/// Replaces every use of a function parameter by a `constant {arg = k}` op at
/// the top of the entry block. Unused parameters get no constant.
pub fn promote_function_arguments(f: &mut Function) {
    let uses = f.use_counts();
    let mut new_ops = Vec::new();
    for k in 0..f.params.len() {
        let (p, ty) = f.params[k];
        if uses.get(&p).copied().unwrap_or(0) == 0 {
            continue;
        }
        let mut op = f.make_op(Opcode::Constant, vec![], &[ty]);
        op.attrs = BTreeMap::from([("arg".to_string(), Attr::Int(k as i64, ScalarType::I64))]);
        let c = op.result();
        f.rename_uses_unchecked(p, c);
        new_ops.push(op);
    }
    if let Some(entry) = f.blocks.first_mut() {
        entry.ops.splice(0..0, new_ops);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::parse_module;

    #[test]
    fn one_constant_per_used_parameter() {
        let m = parse_module(
            "func @f(%n: i64, %unused: i64) {
bb0:
  %a = neura.add %n, %n : i64
  %b = neura.mul %a, %n : i64
  neura.return %b
}
",
        )
        .unwrap();
        let mut f = m.functions[0].clone();
        promote_function_arguments(&mut f);
        assert_eq!(f.count_opcode(Opcode::Constant), 1);
        let p = f.params[0].0;
        assert!(f.ops().all(|o| !o.operands.contains(&p)));
        assert_eq!(f.blocks[0].ops[0].attr_int("arg"), Some(0));
        assert!(crate::ir::verify(&f).is_empty());
    }

    #[test]
    fn no_parameters_is_noop() {
        let m = parse_module("func @f() {\nbb0:\n  %0 = neura.constant {value = 1 : i64} : i64\n  neura.return %0\n}\n").unwrap();
        let mut f = m.functions[0].clone();
        promote_function_arguments(&mut f);
        assert_eq!(crate::text::print_function(&f), crate::text::print_function(&m.functions[0]));
    }
}
