//! In-memory IR shared by the CDFG and dataflow forms.
//!
//! A [`Function`] is a list of basic blocks in SSA form. In CDFG form every block
//! ends with a terminator and blocks pass values to successors through block
//! arguments. In dataflow form the function is a single block with no branches;
//! values carry predicates and loop-carried dependencies go through
//! `reserve`/`ctrl_mov` pairs.

pub mod cfg;
mod opcode;
mod types;
mod verify;

use std::collections::{BTreeMap, HashMap};
use std::fmt;

pub use opcode::{slot_attr, Arity, CmpKind, Opcode};
pub use types::{ScalarType, Type};
pub use verify::{verify, Violation};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ValueId(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OpId(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BlockId(pub u32);

impl fmt::Display for ValueId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "%v{}", self.0)
    }
}

impl fmt::Display for OpId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "op{}", self.0)
    }
}

impl fmt::Display for BlockId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "bb{}", self.0)
    }
}

/// 1-based source position of a parsed operation.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct SourceSpan {
    pub file: Option<String>,
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.file {
            Some(file) => write!(f, "{}:{}:{}", file, self.line, self.col),
            None => write!(f, "{}:{}", self.line, self.col),
        }
    }
}

/// Attribute literal.
#[derive(Clone, Debug)]
pub enum Attr {
    Int(i64, ScalarType),
    Float(f64, ScalarType),
    Str(String),
}

impl Attr {
    pub fn as_int(&self) -> Option<i64> {
        match self {
            Attr::Int(v, _) => Some(*v),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Attr::Str(s) => Some(s),
            _ => None,
        }
    }
}

impl PartialEq for Attr {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Attr::Int(a, ta), Attr::Int(b, tb)) => a == b && ta == tb,
            (Attr::Float(a, ta), Attr::Float(b, tb)) => a.to_bits() == b.to_bits() && ta == tb,
            (Attr::Str(a), Attr::Str(b)) => a == b,
            _ => false,
        }
    }
}

impl fmt::Display for Attr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Attr::Int(v, t) => write!(f, "{} : {}", v, t),
            Attr::Float(v, t) => write!(f, "{:?} : {}", v, t),
            Attr::Str(s) => write!(f, "{:?}", s),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Successor {
    pub block: BlockId,
    pub args: Vec<ValueId>,
}

#[derive(Clone, Debug)]
pub struct Operation {
    pub id: OpId,
    pub opcode: Opcode,
    pub operands: Vec<ValueId>,
    pub results: Vec<(ValueId, Type)>,
    pub attrs: BTreeMap<String, Attr>,
    pub successors: Vec<Successor>,
    pub span: Option<SourceSpan>,
}

/// A logical input slot of an operation.
#[derive(Clone, Debug, PartialEq)]
pub enum Input {
    Value(ValueId),
    Imm(Attr),
}

impl Operation {
    pub fn result(&self) -> ValueId {
        self.results[0].0
    }

    pub fn result_type(&self) -> Type {
        self.results[0].1
    }

    /// Number of slots filled by immediates.
    pub fn immediate_count(&self) -> usize {
        (0..4).filter(|&s| self.attrs.contains_key(slot_attr(s))).count()
    }

    /// Number of logical slots this op has (value operands plus immediates), excluding
    /// trigger operands.
    pub fn slot_count(&self) -> usize {
        match self.opcode.arity() {
            Arity::Fixed(n) => n,
            Arity::AtLeast(_) => self.operands.len(),
        }
    }

    /// Logical inputs in slot order; immediates are spliced in from attributes.
    pub fn inputs(&self) -> Vec<Input> {
        let n = self.slot_count();
        let mut values = self.operands.iter();
        let mut out = Vec::with_capacity(n);
        for slot in 0..n {
            match self.attrs.get(slot_attr(slot)) {
                Some(a) if self.opcode.accepts_immediates() => out.push(Input::Imm(a.clone())),
                _ => match values.next() {
                    Some(v) => out.push(Input::Value(*v)),
                    None => break,
                },
            }
        }
        out
    }

    /// Operands beyond the logical slots. They contribute only their predicate
    /// (and their arrival) to the op's firing.
    pub fn triggers(&self) -> &[ValueId] {
        let used = self.slot_count().saturating_sub(self.immediate_count());
        if self.operands.len() > used && matches!(self.opcode.arity(), Arity::Fixed(_)) {
            &self.operands[used..]
        } else {
            &[]
        }
    }

    /// All values read by this op, including successor arguments.
    pub fn all_uses(&self) -> impl Iterator<Item = ValueId> + '_ {
        self.operands
            .iter()
            .copied()
            .chain(self.successors.iter().flat_map(|s| s.args.iter().copied()))
    }

    pub fn attr_int(&self, name: &str) -> Option<i64> {
        self.attrs.get(name).and_then(Attr::as_int)
    }

    pub fn attr_str(&self, name: &str) -> Option<&str> {
        self.attrs.get(name).and_then(Attr::as_str)
    }

    pub fn cmp_kind(&self) -> Option<CmpKind> {
        self.attr_str("cmp").and_then(CmpKind::from_name)
    }
}

#[derive(Clone, Debug)]
pub struct Block {
    pub id: BlockId,
    pub args: Vec<(ValueId, Type)>,
    pub ops: Vec<Operation>,
}

impl Block {
    pub fn terminator(&self) -> Option<&Operation> {
        self.ops.last().filter(|op| op.opcode.is_terminator())
    }

    pub fn terminator_mut(&mut self) -> Option<&mut Operation> {
        self.ops.last_mut().filter(|op| op.opcode.is_terminator())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Form {
    Cdfg,
    Dataflow,
}

/// Where a value is defined.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DefSite {
    Param(usize),
    BlockArg { block: usize, index: usize },
    OpResult { block: usize, op: usize, index: usize },
}

impl DefSite {
    /// Block index the definition belongs to; parameters belong to the entry block.
    pub fn block(self) -> usize {
        match self {
            DefSite::Param(_) => 0,
            DefSite::BlockArg { block, .. } | DefSite::OpResult { block, .. } => block,
        }
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum IrError {
    #[error("type mismatch: {old} has type {old_ty}, {new} has type {new_ty}")]
    TypeMismatch {
        old: ValueId,
        new: ValueId,
        old_ty: Type,
        new_ty: Type,
    },
    #[error("unknown value {0}")]
    UnknownValue(ValueId),
    #[error("unknown block {0}")]
    UnknownBlock(BlockId),
}

#[derive(Clone, Debug)]
pub struct Function {
    pub name: String,
    pub form: Form,
    pub params: Vec<(ValueId, Type)>,
    pub blocks: Vec<Block>,
    /// Source names of values, used only in diagnostics.
    pub value_names: HashMap<ValueId, String>,
    next_value: u32,
    next_op: u32,
    next_block: u32,
}

impl Function {
    pub fn new(name: impl Into<String>, form: Form) -> Self {
        Function {
            name: name.into(),
            form,
            params: Vec::new(),
            blocks: Vec::new(),
            value_names: HashMap::new(),
            next_value: 0,
            next_op: 0,
            next_block: 0,
        }
    }

    pub fn fresh_value(&mut self) -> ValueId {
        let v = ValueId(self.next_value);
        self.next_value += 1;
        v
    }

    pub fn fresh_op_id(&mut self) -> OpId {
        let o = OpId(self.next_op);
        self.next_op += 1;
        o
    }

    pub fn fresh_block_id(&mut self) -> BlockId {
        let b = BlockId(self.next_block);
        self.next_block += 1;
        b
    }

    /// Keeps the id counters above every id already present, for functions
    /// assembled by hand.
    pub fn reserve_ids(&mut self, values: u32, ops: u32, blocks: u32) {
        self.next_value = self.next_value.max(values);
        self.next_op = self.next_op.max(ops);
        self.next_block = self.next_block.max(blocks);
    }

    pub fn add_param(&mut self, ty: Type) -> ValueId {
        let v = self.fresh_value();
        self.params.push((v, ty));
        v
    }

    pub fn add_block(&mut self) -> BlockId {
        let id = self.fresh_block_id();
        self.blocks.push(Block { id, args: Vec::new(), ops: Vec::new() });
        id
    }

    pub fn add_block_arg(&mut self, block: BlockId, ty: Type) -> ValueId {
        let v = self.fresh_value();
        let idx = self.block_index(block).expect("unknown block");
        self.blocks[idx].args.push((v, ty));
        v
    }

    /// Builds an operation with fresh ids; the caller inserts it.
    pub fn make_op(
        &mut self,
        opcode: Opcode,
        operands: Vec<ValueId>,
        result_types: &[Type],
    ) -> Operation {
        let id = self.fresh_op_id();
        let results = result_types.iter().map(|&t| (self.fresh_value(), t)).collect();
        Operation {
            id,
            opcode,
            operands,
            results,
            attrs: BTreeMap::new(),
            successors: Vec::new(),
            span: None,
        }
    }

    /// Appends an op to `block` and returns its first result (if any).
    pub fn push_op(
        &mut self,
        block: BlockId,
        opcode: Opcode,
        operands: Vec<ValueId>,
        result_types: &[Type],
    ) -> Option<ValueId> {
        let op = self.make_op(opcode, operands, result_types);
        let r = op.results.first().map(|r| r.0);
        let idx = self.block_index(block).expect("unknown block");
        self.blocks[idx].ops.push(op);
        r
    }

    pub fn block_index(&self, id: BlockId) -> Option<usize> {
        self.blocks.iter().position(|b| b.id == id)
    }

    pub fn entry(&self) -> Option<&Block> {
        self.blocks.first()
    }

    pub fn ops(&self) -> impl Iterator<Item = &Operation> {
        self.blocks.iter().flat_map(|b| b.ops.iter())
    }

    pub fn op_count(&self) -> usize {
        self.blocks.iter().map(|b| b.ops.len()).sum()
    }

    pub fn count_opcode(&self, opcode: Opcode) -> usize {
        self.ops().filter(|o| o.opcode == opcode).count()
    }

    /// Ops that occupy a functional unit when mapped.
    pub fn materialized_op_count(&self) -> usize {
        self.ops().filter(|o| o.opcode.is_materialized()).count()
    }

    pub fn find_op(&self, id: OpId) -> Option<&Operation> {
        self.ops().find(|o| o.id == id)
    }

    /// Type of every defined value. Duplicate definitions keep the first.
    pub fn value_types(&self) -> HashMap<ValueId, Type> {
        let mut m = HashMap::new();
        for &(v, t) in &self.params {
            m.entry(v).or_insert(t);
        }
        for b in &self.blocks {
            for &(v, t) in &b.args {
                m.entry(v).or_insert(t);
            }
            for op in &b.ops {
                for &(v, t) in &op.results {
                    m.entry(v).or_insert(t);
                }
            }
        }
        m
    }

    pub fn def_sites(&self) -> HashMap<ValueId, DefSite> {
        let mut m = HashMap::new();
        for (i, &(v, _)) in self.params.iter().enumerate() {
            m.entry(v).or_insert(DefSite::Param(i));
        }
        for (bi, b) in self.blocks.iter().enumerate() {
            for (i, &(v, _)) in b.args.iter().enumerate() {
                m.entry(v).or_insert(DefSite::BlockArg { block: bi, index: i });
            }
            for (oi, op) in b.ops.iter().enumerate() {
                for (i, &(v, _)) in op.results.iter().enumerate() {
                    m.entry(v).or_insert(DefSite::OpResult { block: bi, op: oi, index: i });
                }
            }
        }
        m
    }

    /// Map from value to the op that defines it.
    pub fn defining_ops(&self) -> HashMap<ValueId, &Operation> {
        let mut m = HashMap::new();
        for op in self.ops() {
            for &(v, _) in &op.results {
                m.insert(v, op);
            }
        }
        m
    }

    /// Number of uses of each value (operands and successor arguments).
    pub fn use_counts(&self) -> HashMap<ValueId, usize> {
        let mut m = HashMap::new();
        for op in self.ops() {
            for v in op.all_uses() {
                *m.entry(v).or_insert(0) += 1;
            }
        }
        m
    }

    /// Successor block indices of block `idx`, in terminator order.
    pub fn successor_indices(&self, idx: usize) -> Vec<usize> {
        self.blocks[idx]
            .terminator()
            .map(|t| {
                t.successors
                    .iter()
                    .filter_map(|s| self.block_index(s.block))
                    .collect()
            })
            .unwrap_or_default()
    }

    /// Predecessor block indices for every block, deduplicated and sorted.
    pub fn predecessor_indices(&self) -> Vec<Vec<usize>> {
        let mut preds = vec![Vec::new(); self.blocks.len()];
        for i in 0..self.blocks.len() {
            for s in self.successor_indices(i) {
                if !preds[s].contains(&i) {
                    preds[s].push(i);
                }
            }
        }
        for p in &mut preds {
            p.sort_unstable();
        }
        preds
    }

    /// Replaces uses of `old` by `new`, optionally restricted to one block.
    /// Successor arguments of the block's terminator count as uses inside it.
    pub fn replace_all_uses(
        &mut self,
        old: ValueId,
        new: ValueId,
        scope: Option<BlockId>,
    ) -> Result<(), IrError> {
        let types = self.value_types();
        let old_ty = *types.get(&old).ok_or(IrError::UnknownValue(old))?;
        let new_ty = *types.get(&new).ok_or(IrError::UnknownValue(new))?;
        if old_ty != new_ty {
            return Err(IrError::TypeMismatch { old, new, old_ty, new_ty });
        }
        if let Some(b) = scope {
            if self.block_index(b).is_none() {
                return Err(IrError::UnknownBlock(b));
            }
        }
        for block in &mut self.blocks {
            if scope.is_some_and(|s| s != block.id) {
                continue;
            }
            for op in &mut block.ops {
                rename_uses(op, old, new);
            }
        }
        Ok(())
    }

    /// Renames uses without type checking; used by passes that retype values.
    pub fn rename_uses_unchecked(&mut self, old: ValueId, new: ValueId) {
        for block in &mut self.blocks {
            for op in &mut block.ops {
                rename_uses(op, old, new);
            }
        }
    }
}

fn rename_uses(op: &mut Operation, old: ValueId, new: ValueId) {
    for v in op.operands.iter_mut() {
        if *v == old {
            *v = new;
        }
    }
    for s in op.successors.iter_mut() {
        for v in s.args.iter_mut() {
            if *v == old {
                *v = new;
            }
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct Module {
    pub functions: Vec<Function>,
}

impl Module {
    pub fn function(&self, name: &str) -> Option<&Function> {
        self.functions.iter().find(|f| f.name == name)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_block_fn() -> (Function, ValueId, ValueId, BlockId, BlockId) {
        let mut f = Function::new("f", Form::Cdfg);
        let i64t = Type::plain(ScalarType::I64);
        let b0 = f.add_block();
        let b1 = f.add_block();
        let b2 = f.add_block();
        let v = f.push_op(b0, Opcode::Constant, vec![], &[i64t]).unwrap();
        let mut br = f.make_op(Opcode::Br, vec![], &[]);
        br.successors.push(Successor { block: b1, args: vec![] });
        f.blocks[0].ops.push(br);
        let a = f.add_block_arg(b1, i64t);
        let s = f.push_op(b1, Opcode::Add, vec![v, v], &[i64t]).unwrap();
        let mut br = f.make_op(Opcode::Br, vec![], &[]);
        br.successors.push(Successor { block: b2, args: vec![] });
        f.blocks[1].ops.push(br);
        f.push_op(b2, Opcode::Add, vec![v, s], &[i64t]);
        (f, v, a, b1, b2)
    }

    #[test]
    fn scoped_replacement_leaves_other_blocks() {
        let (mut f, v, a, b1, _) = two_block_fn();
        f.replace_all_uses(v, a, Some(b1)).unwrap();
        assert_eq!(f.blocks[1].ops[0].operands, vec![a, a]);
        assert_eq!(f.blocks[2].ops[0].operands[0], v);
    }

    #[test]
    fn replacing_unused_value_is_noop() {
        let (mut f, _, a, _, _) = two_block_fn();
        let extra = f.add_param(Type::plain(ScalarType::I64));
        let before = format!("{:?}", f.blocks);
        f.replace_all_uses(extra, a, None).unwrap();
        assert_eq!(before, format!("{:?}", f.blocks));
    }

    #[test]
    fn replacement_rejects_type_mismatch() {
        let (mut f, v, _, _, _) = two_block_fn();
        let p = f.add_param(Type::plain(ScalarType::F32));
        assert!(matches!(
            f.replace_all_uses(v, p, None),
            Err(IrError::TypeMismatch { .. })
        ));
    }

    #[test]
    fn swapped_replacement_restores_uses() {
        let (mut f, v, a, b1, _) = two_block_fn();
        let before = format!("{:?}", f.blocks[1].ops);
        f.replace_all_uses(v, a, Some(b1)).unwrap();
        f.replace_all_uses(a, v, Some(b1)).unwrap();
        assert_eq!(before, format!("{:?}", f.blocks[1].ops));
    }

    #[test]
    fn immediates_splice_into_slots() {
        let mut f = Function::new("f", Form::Cdfg);
        let b = f.add_block();
        let x = f.add_param(Type::plain(ScalarType::I64));
        f.push_op(b, Opcode::Add, vec![x], &[Type::plain(ScalarType::I64)]);
        let op = &mut f.blocks[0].ops[0];
        op.attrs.insert("rhs_const".into(), Attr::Int(1, ScalarType::I64));
        assert_eq!(
            op.inputs(),
            vec![Input::Value(x), Input::Imm(Attr::Int(1, ScalarType::I64))]
        );
        assert!(op.triggers().is_empty());
    }
}
