use std::collections::{BTreeMap, HashMap, HashSet};

use super::edges::{classify_cfg_edges, Direction, EdgeClass};
use super::PassError;
use crate::ir::cfg::Cfg;
use crate::ir::{verify, BlockId, Form, Function, OpId, Opcode, Operation, ValueId};

/// Ops inserted while rewriting one CFG edge.
#[derive(Clone, Debug, PartialEq)]
pub struct RewriteRecord {
    pub source: BlockId,
    pub target: BlockId,
    pub class: EdgeClass,
    pub inserted_ops: Vec<OpId>,
}

/// Lowers a predicated, live-in-canonical CDFG into a single dataflow block.
///
/// Blocks are laid out in a topological order that keeps each loop's body
/// together, so op order follows execution order. Each block argument becomes the
/// value arriving on its only forward edge, or a `phi` over all incoming edges
/// when there are several; loop-back edges feed the phi through a
/// `reserve`/`ctrl_mov` pair. Values leaving a `cond_br` are gated with
/// `grant_predicate` on the condition (or its `not` for the false edge) and
/// values leaving the entry block pass through `grant_once`.
pub fn flatten_to_dataflow(f: &mut Function) -> Result<Vec<RewriteRecord>, PassError> {
    if f.form != Form::Cdfg {
        return Err(PassError::WrongForm("transform-ctrl-to-data-flow expects cdfg form".into()));
    }
    if f.value_types().values().any(|t| !t.predicated) {
        return Err(PassError::PreprocessingIncomplete(
            "unpredicated value; run leverage-predicated-value first".into(),
        ));
    }
    let edges = classify_cfg_edges(f)?;
    if let Some((s, t, c)) = edges.iter().find(|e| !e.2.carries_values) {
        return Err(PassError::PreprocessingIncomplete(format!(
            "edge {} -> {} is category {}",
            block_label(f, *s),
            block_label(f, *t),
            c.category()
        )));
    }
    let cfg = Cfg::new(f);
    if cfg.rpo.len() != f.blocks.len() {
        return Err(PassError::DeadCode("unreachable block".into()));
    }
    let class_of: HashMap<(BlockId, BlockId), EdgeClass> =
        edges.iter().map(|&(s, t, c)| ((s, t), c)).collect();
    let types = f.value_types();
    let blocks = std::mem::take(&mut f.blocks);
    let entry_id = blocks[0].id;
    let index: HashMap<BlockId, usize> = blocks.iter().enumerate().map(|(i, b)| (b.id, i)).collect();

    let layout = loop_layout(&cfg, |p, s| class_of[&(blocks[p].id, blocks[s].id)].direction == Direction::Backward);

    // Incoming edges per block: (pred index, successor slot), in layout order.
    let mut incoming: Vec<Vec<(usize, usize)>> = vec![Vec::new(); blocks.len()];
    for &p in &layout {
        if let Some(t) = blocks[p].terminator() {
            for (k, s) in t.successors.iter().enumerate() {
                incoming[index[&s.block]].push((p, k));
            }
        }
    }

    let mut records: BTreeMap<(usize, usize), RewriteRecord> = BTreeMap::new();
    for (bi, inc) in incoming.iter().enumerate() {
        for &(p, k) in inc {
            let class = class_of[&(blocks[p].id, blocks[bi].id)];
            let rec = RewriteRecord { source: blocks[p].id, target: blocks[bi].id, class, inserted_ops: Vec::new() };
            records.insert((p, k), rec);
        }
    }

    let mut out: Vec<Operation> = Vec::new();
    let mut subst: HashMap<ValueId, ValueId> = HashMap::new();
    // Values delivered on forward edges, keyed by (pred, slot).
    let mut edge_values: HashMap<(usize, usize), Vec<ValueId>> = HashMap::new();
    // Reserves waiting for their ctrl_mov, keyed by the backward edge.
    let mut pending: HashMap<(usize, usize), Vec<ValueId>> = HashMap::new();
    let mut target_ops: HashMap<usize, Vec<OpId>> = HashMap::new();

    for &bi in &layout {
        let block = &blocks[bi];
        let is_entry = bi == 0;
        // Block arguments.
        let forward: Vec<(usize, usize)> = incoming[bi]
            .iter()
            .copied()
            .filter(|&(p, _)| class_of[&(blocks[p].id, block.id)].direction == Direction::Forward)
            .collect();
        let backward: Vec<(usize, usize)> = incoming[bi]
            .iter()
            .copied()
            .filter(|&(p, _)| class_of[&(blocks[p].id, block.id)].direction == Direction::Backward)
            .collect();
        let mut inserted = Vec::new();
        for (j, &(arg, ty)) in block.args.iter().enumerate() {
            let mut inputs: Vec<ValueId> = forward.iter().map(|e| edge_values[e][j]).collect();
            if inputs.len() == 1 && backward.is_empty() {
                subst.insert(arg, inputs[0]);
                continue;
            }
            for e in &backward {
                let r = f.make_op(Opcode::Reserve, vec![], &[ty]);
                pending.entry(*e).or_default().push(r.result());
                inputs.push(r.result());
                inserted.push(r.id);
                out.push(r);
            }
            let phi = f.make_op(Opcode::Phi, inputs, &[ty]);
            subst.insert(arg, phi.result());
            inserted.push(phi.id);
            out.push(phi);
        }
        target_ops.insert(bi, inserted);

        let trigger = block.args.first().map(|a| subst[&a.0]);
        let mut local: HashSet<ValueId> = block.args.iter().map(|a| a.0).collect();
        if is_entry {
            local.extend(f.params.iter().map(|p| p.0));
        }
        for op in &block.ops {
            if let Some(v) = op.all_uses().find(|v| !local.contains(v)) {
                return Err(PassError::PreprocessingIncomplete(format!(
                    "{} reaches bb{} without a block argument",
                    v, bi
                )));
            }
            if op.opcode.is_branch() {
                continue;
            }
            local.extend(op.results.iter().map(|r| r.0));
            let mut op = op.clone();
            for v in op.operands.iter_mut() {
                *v = *subst.get(v).unwrap_or(v);
            }
            if !is_entry
                && op.operands.is_empty() {
                    match trigger {
                        Some(t) => op.operands.push(t),
                        None => {
                            return Err(PassError::PreprocessingIncomplete(format!(
                                "{} in bb{} has no input to fire on",
                                op.opcode, bi
                            )))
                        }
                    }
                }
            out.push(op);
        }

        let Some(term) = block.terminator() else { continue };
        if !term.opcode.is_branch() {
            continue;
        }
        let cond = (term.opcode == Opcode::CondBr).then(|| *subst.get(&term.operands[0]).unwrap_or(&term.operands[0]));
        let mut negated: Option<ValueId> = None;
        for (k, s) in term.successors.iter().enumerate() {
            let mut ops_here = Vec::new();
            let mut vals = Vec::new();
            let mut once: HashMap<ValueId, ValueId> = HashMap::new();
            for &v in &s.args {
                let mut v = *subst.get(&v).unwrap_or(&v);
                let ty = types[&s.args[vals.len()]];
                if is_entry {
                    v = match once.get(&v) {
                        Some(&g) => g,
                        None => {
                            let g = f.make_op(Opcode::GrantOnce, vec![v], &[ty]);
                            let gv = g.result();
                            once.insert(v, gv);
                            ops_here.push(g.id);
                            out.push(g);
                            gv
                        }
                    };
                }
                if let Some(c) = cond {
                    let gate = if k == 0 {
                        c
                    } else {
                        match negated {
                            Some(n) => n,
                            None => {
                                let cty = types[&term.operands[0]];
                                let n = f.make_op(Opcode::Not, vec![c], &[cty]);
                                negated = Some(n.result());
                                ops_here.push(n.id);
                                out.push(n);
                                negated.unwrap()
                            }
                        }
                    };
                    let g = f.make_op(Opcode::GrantPredicate, vec![v, gate], &[ty]);
                    v = g.result();
                    ops_here.push(g.id);
                    out.push(g);
                }
                vals.push(v);
            }
            let class = class_of[&(block.id, s.block)];
            if class.direction == Direction::Backward {
                let reserves = pending.remove(&(bi, k)).unwrap_or_default();
                for (v, r) in vals.iter().zip(reserves) {
                    let m = f.make_op(Opcode::CtrlMov, vec![*v, r], &[]);
                    ops_here.push(m.id);
                    out.push(m);
                }
            } else {
                edge_values.insert((bi, k), vals);
            }
            records.get_mut(&(bi, k)).expect("edge recorded").inserted_ops.extend(ops_here);
        }
    }

    for (&(p, k), rec) in records.iter_mut() {
        let target = index[&blocks[p].terminator().unwrap().successors[k].block];
        rec.inserted_ops.extend(target_ops.get(&target).into_iter().flatten());
    }
    for op in &mut out {
        for v in op.operands.iter_mut() {
            if let Some(&n) = subst.get(v) {
                *v = n;
            }
        }
    }
    let mut entry = blocks.into_iter().next().unwrap();
    entry.id = entry_id;
    entry.args.clear();
    entry.ops = out;
    f.blocks = vec![entry];
    f.form = Form::Dataflow;
    let violations = verify(f);
    if !violations.is_empty() {
        return Err(PassError::Verify { pass: "transform-ctrl-to-data-flow".into(), violations });
    }
    Ok(records.into_values().collect())
}

/// Topological order of the forward edges. Among ready blocks, the one inside
/// the most loops whose header is placed but whose body is not yet complete
/// goes first; ties follow reverse post-order.
fn loop_layout(cfg: &Cfg, backward: impl Fn(usize, usize) -> bool) -> Vec<usize> {
    let n = cfg.succs.len();
    let mut loops: Vec<(usize, HashSet<usize>)> = Vec::new();
    for s in 0..n {
        for &h in &cfg.succs[s] {
            if !backward(s, h) {
                continue;
            }
            let mut body = HashSet::from([h]);
            let mut stack = vec![s];
            while let Some(b) = stack.pop() {
                if body.insert(b) {
                    stack.extend(cfg.preds[b].iter().copied());
                }
            }
            loops.push((h, body));
        }
    }
    let rank: HashMap<usize, usize> = cfg.rpo.iter().enumerate().map(|(i, &b)| (b, i)).collect();
    let mut waiting: Vec<usize> =
        (0..n).map(|b| cfg.preds[b].iter().filter(|&&p| !backward(p, b)).count()).collect();
    let mut placed = vec![false; n];
    let mut ready = vec![0usize];
    let mut out = Vec::with_capacity(n);
    while !ready.is_empty() {
        let open = |b: usize| {
            loops.iter().filter(|(h, body)| placed[*h] && body.contains(&b) && body.iter().any(|&x| !placed[x])).count()
        };
        let pick = (0..ready.len()).max_by_key(|&i| (open(ready[i]), std::cmp::Reverse(rank[&ready[i]]))).expect("nonempty");
        let b = ready.swap_remove(pick);
        placed[b] = true;
        out.push(b);
        for &s in &cfg.succs[b] {
            if !backward(b, s) {
                waiting[s] -= 1;
                if waiting[s] == 0 {
                    ready.push(s);
                }
            }
        }
    }
    out
}

fn block_label(f: &Function, b: BlockId) -> String {
    match f.block_index(b) {
        Some(i) => format!("bb{}", i),
        None => b.to_string(),
    }
}
