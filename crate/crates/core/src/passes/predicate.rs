use super::PassError;
use crate::ir::{Form, Function, ScalarType};

/// Turns every value type into its predicated counterpart. Block structure is
/// left untouched; the function stays in CDFG form until flattening.
pub fn apply_data_predication(f: &mut Function) -> Result<(), PassError> {
    if f.form != Form::Cdfg {
        return Err(PassError::WrongForm("leverage-predicated-value expects cdfg form".into()));
    }
    let mut types: Vec<&mut crate::ir::Type> = f.params.iter_mut().map(|p| &mut p.1).collect();
    for b in &mut f.blocks {
        types.extend(b.args.iter_mut().map(|a| &mut a.1));
        for op in &mut b.ops {
            types.extend(op.results.iter_mut().map(|r| &mut r.1));
        }
    }
    if types.iter().any(|t| t.scalar == ScalarType::Index) {
        return Err(PassError::PreprocessingIncomplete(
            "index-typed value left; run canonicalize-cast first".into(),
        ));
    }
    for t in types {
        t.predicated = true;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::Type;
    use crate::text::{parse_module, print_function};

    #[test]
    fn types_become_predicated_and_structure_is_kept() {
        let src = "func @f(%arg0: i64) {
bb0:
  %0 = neura.add %arg0, %arg0 : i64
  neura.br bb1(%0)
bb1(%1: i64):
  neura.return %1
}
";
        let mut f = parse_module(src).unwrap().functions.remove(0);
        apply_data_predication(&mut f).unwrap();
        assert!(f.value_types().values().all(|t| *t == Type::pred(ScalarType::I64)));
        let expected = src.replace(": i64", ": !pred<i64>");
        assert_eq!(print_function(&f), expected);
        assert!(crate::ir::verify(&f).is_empty());
    }
}
