//! Control-flow graph utilities over block indices: reverse post-order and dominators.

use super::Function;

#[derive(Clone, Debug)]
pub struct Cfg {
    pub succs: Vec<Vec<usize>>,
    pub preds: Vec<Vec<usize>>,
    /// Reachable blocks in reverse post-order, starting at the entry.
    pub rpo: Vec<usize>,
    /// Immediate dominator per block; `None` for the entry and unreachable blocks.
    pub idom: Vec<Option<usize>>,
    rpo_index: Vec<Option<usize>>,
}

impl Cfg {
    pub fn new(f: &Function) -> Self {
        let n = f.blocks.len();
        let succs: Vec<Vec<usize>> = (0..n).map(|i| f.successor_indices(i)).collect();
        let preds = f.predecessor_indices();
        let mut rpo = Vec::with_capacity(n);
        if n > 0 {
            // Iterative DFS producing post-order.
            let mut visited = vec![false; n];
            let mut stack: Vec<(usize, usize)> = vec![(0, 0)];
            visited[0] = true;
            while let Some((b, i)) = stack.pop() {
                if i < succs[b].len() {
                    stack.push((b, i + 1));
                    let s = succs[b][i];
                    if !visited[s] {
                        visited[s] = true;
                        stack.push((s, 0));
                    }
                } else {
                    rpo.push(b);
                }
            }
            rpo.reverse();
        }
        let mut rpo_index = vec![None; n];
        for (i, &b) in rpo.iter().enumerate() {
            rpo_index[b] = Some(i);
        }
        let idom = compute_idom(&preds, &rpo, &rpo_index);
        Cfg { succs, preds, rpo, idom, rpo_index }
    }

    pub fn reachable(&self, b: usize) -> bool {
        self.rpo_index[b].is_some()
    }

    pub fn rpo_position(&self, b: usize) -> Option<usize> {
        self.rpo_index[b]
    }

    /// Whether block `a` dominates block `b` (reflexive).
    pub fn dominates(&self, a: usize, b: usize) -> bool {
        if !self.reachable(b) {
            return false;
        }
        let mut cur = b;
        loop {
            if cur == a {
                return true;
            }
            match self.idom[cur] {
                Some(p) => cur = p,
                None => return false,
            }
        }
    }
}

fn compute_idom(preds: &[Vec<usize>], rpo: &[usize], rpo_index: &[Option<usize>]) -> Vec<Option<usize>> {
    let n = preds.len();
    let mut idom: Vec<Option<usize>> = vec![None; n];
    if rpo.is_empty() {
        return idom;
    }
    let entry = rpo[0];
    idom[entry] = Some(entry);
    let intersect = |idom: &[Option<usize>], mut a: usize, mut b: usize| {
        while a != b {
            while rpo_index[a] > rpo_index[b] {
                a = idom[a].unwrap();
            }
            while rpo_index[b] > rpo_index[a] {
                b = idom[b].unwrap();
            }
        }
        a
    };
    let mut changed = true;
    while changed {
        changed = false;
        for &b in &rpo[1..] {
            let mut new_idom: Option<usize> = None;
            for &p in &preds[b] {
                if idom[p].is_none() {
                    continue;
                }
                new_idom = Some(match new_idom {
                    None => p,
                    Some(cur) => intersect(&idom, p, cur),
                });
            }
            if new_idom.is_some() && idom[b] != new_idom {
                idom[b] = new_idom;
                changed = true;
            }
        }
    }
    idom[entry] = None;
    idom
}
