use std::fmt;

use super::PassError;
use crate::ir::cfg::Cfg;
use crate::ir::{BlockId, Function, Opcode};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Direction {
    Forward,
    Backward,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct EdgeClass {
    pub direction: Direction,
    /// Whether the edge leaves a `cond_br` (as opposed to a `br`).
    pub conditional: bool,
    pub carries_values: bool,
}

impl EdgeClass {
    /// Category index 1..=8: value-less edges are 1-4, value-carrying 5-8;
    /// within each group forward `br`, forward `cond_br`, backward `br`,
    /// backward `cond_br`.
    pub fn category(self) -> u8 {
        let mut c = 1;
        if self.conditional {
            c += 1;
        }
        if self.direction == Direction::Backward {
            c += 2;
        }
        if self.carries_values {
            c += 4;
        }
        c
    }
}

impl fmt::Display for EdgeClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let dir = match self.direction {
            Direction::Forward => "forward",
            Direction::Backward => "backward",
        };
        let term = if self.conditional { "cond_br" } else { "br" };
        let vals = if self.carries_values { "values" } else { "no values" };
        write!(f, "{} ({} {}, {})", self.category(), dir, term, vals)
    }
}

/// Classifies every (terminator, successor) pair. An edge is backward when its
/// target dominates its source; an edge that goes against reverse post-order
/// without such a dominating header makes the CFG irreducible.
pub fn classify_cfg_edges(f: &Function) -> Result<Vec<(BlockId, BlockId, EdgeClass)>, PassError> {
    let cfg = Cfg::new(f);
    let mut out = Vec::new();
    for (bi, b) in f.blocks.iter().enumerate() {
        let Some(term) = b.terminator() else { continue };
        let conditional = term.opcode == Opcode::CondBr;
        for s in &term.successors {
            let Some(ti) = f.block_index(s.block) else { continue };
            let backward = match (cfg.rpo_position(bi), cfg.rpo_position(ti)) {
                (Some(src), Some(dst)) if dst <= src => {
                    if !cfg.dominates(ti, bi) {
                        return Err(PassError::Irreducible { from: bi_name(bi), to: bi_name(ti) });
                    }
                    true
                }
                _ => false,
            };
            let class = EdgeClass {
                direction: if backward { Direction::Backward } else { Direction::Forward },
                conditional,
                carries_values: !s.args.is_empty(),
            };
            out.push((b.id, s.block, class));
        }
    }
    Ok(out)
}

fn bi_name(i: usize) -> String {
    format!("bb{}", i)
}

/// Number of edges per category; index 0 holds category 1.
pub fn category_counts(edges: &[(BlockId, BlockId, EdgeClass)]) -> [usize; 8] {
    let mut c = [0; 8];
    for (_, _, e) in edges {
        c[e.category() as usize - 1] += 1;
    }
    c
}
