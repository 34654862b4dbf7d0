use std::collections::HashMap;
use std::fmt::Write;

use crate::ir::{BlockId, Form, Function, Module, ValueId};

/// Prints every function, separated by blank lines.
pub fn print_module(m: &Module) -> String {
    let parts: Vec<String> = m.functions.iter().map(print_function).collect();
    parts.join("\n")
}

/// Canonical text for `f`. Parameters print as `%argN`, other values are
/// numbered in definition order and blocks by position, so the output does not
/// depend on internal ids.
pub fn print_function(f: &Function) -> String {
    let mut names: HashMap<ValueId, String> = HashMap::new();
    for (i, (v, _)) in f.params.iter().enumerate() {
        names.insert(*v, format!("%arg{}", i));
    }
    let mut n = 0usize;
    let mut def = |v: ValueId, names: &mut HashMap<ValueId, String>| {
        names.entry(v).or_insert_with(|| {
            let s = format!("%{}", n);
            n += 1;
            s
        });
    };
    for b in &f.blocks {
        for (v, _) in &b.args {
            def(*v, &mut names);
        }
        for op in &b.ops {
            for (v, _) in &op.results {
                def(*v, &mut names);
            }
        }
    }
    let blocks: HashMap<BlockId, String> =
        f.blocks.iter().enumerate().map(|(i, b)| (b.id, format!("bb{}", i))).collect();
    let name = |v: &ValueId| names.get(v).cloned().unwrap_or_else(|| format!("%undef{}", v.0));
    let block_name = |b: &BlockId| blocks.get(b).cloned().unwrap_or_else(|| format!("bb_unknown{}", b.0));

    let mut out = String::new();
    if f.form == Form::Dataflow {
        out.push_str("dataflow ");
    }
    let params: Vec<String> = f.params.iter().map(|(v, t)| format!("{}: {}", name(v), t)).collect();
    writeln!(out, "func @{}({}) {{", f.name, params.join(", ")).unwrap();
    for b in &f.blocks {
        let label = block_name(&b.id);
        if b.args.is_empty() {
            writeln!(out, "{}:", label).unwrap();
        } else {
            let args: Vec<String> = b.args.iter().map(|(v, t)| format!("{}: {}", name(v), t)).collect();
            writeln!(out, "{}({}):", label, args.join(", ")).unwrap();
        }
        for op in &b.ops {
            out.push_str("  ");
            if !op.results.is_empty() {
                let rs: Vec<String> = op.results.iter().map(|(v, _)| name(v)).collect();
                write!(out, "{} = ", rs.join(", ")).unwrap();
            }
            write!(out, "{}", op.opcode).unwrap();
            let mut items: Vec<String> = op.operands.iter().map(name).collect();
            for s in &op.successors {
                if s.args.is_empty() {
                    items.push(block_name(&s.block));
                } else {
                    let a: Vec<String> = s.args.iter().map(name).collect();
                    items.push(format!("{}({})", block_name(&s.block), a.join(", ")));
                }
            }
            if !items.is_empty() {
                write!(out, " {}", items.join(", ")).unwrap();
            }
            if !op.attrs.is_empty() {
                let a: Vec<String> = op.attrs.iter().map(|(k, v)| format!("{} = {}", k, v)).collect();
                write!(out, " {{{}}}", a.join(", ")).unwrap();
            }
            if !op.results.is_empty() {
                let ts: Vec<String> = op.results.iter().map(|(_, t)| t.to_string()).collect();
                write!(out, " : {}", ts.join(", ")).unwrap();
            }
            out.push('\n');
        }
    }
    out.push_str("}\n");
    out
}
