//! Modulo scheduling, placement and routing of dataflow functions onto a
//! tile fabric.

mod mii;
mod place;
mod validate;

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use crate::arch::ExecutionModel;
use crate::interp::InterpError;

pub use mii::{compute_min_ii, rec_mii, res_mii};
pub use place::{map_dfg, DEFAULT_BUDGET};
pub use validate::validate_mapping;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MapError {
    #[error("DFG exceeds fabric ({ops} ops, {tiles} tiles)")]
    ExceedsFabric { ops: usize, tiles: usize },
    #[error("mapping failed at ii ≤ {0}")]
    Failed(usize),
    #[error("no tile implements {0}")]
    Unsupported(String),
    #[error(transparent)]
    Graph(#[from] InterpError),
    #[error("malformed mapping at line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Where and when an op executes. `time` is the op's start cycle in the
/// schedule of iteration 0; `slot` is `time mod ii`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Placement {
    pub tile: usize,
    pub slot: usize,
    pub time: i64,
}

/// One link traversal; `cycle` is the departure cycle modulo ii.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Hop {
    pub from: usize,
    pub to: usize,
    pub cycle: usize,
}

/// Path of one producer-to-consumer token edge. Nodes are indices into the
/// function's op list.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Route {
    pub producer: usize,
    pub result: usize,
    pub consumer: usize,
    pub port: usize,
    pub back: bool,
    pub hops: Vec<Hop>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MappingResult {
    pub ii: usize,
    pub res_mii: usize,
    pub rec_mii: usize,
    pub model: ExecutionModel,
    pub rows: usize,
    pub cols: usize,
    pub placements: BTreeMap<usize, Placement>,
    pub routes: Vec<Route>,
    pub schedule_length: usize,
}

impl MappingResult {
    fn tile_name(&self, t: usize) -> String {
        format!("tile({},{})", t / self.cols, t % self.cols)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let model = match self.model {
            ExecutionModel::SpatialOnly => "spatial_only",
            ExecutionModel::SpatioTemporal => "spatio_temporal",
        };
        let _ = writeln!(s, "fabric {}x{} {}", self.rows, self.cols, model);
        let _ = writeln!(s, "ii {}", self.ii);
        let _ = writeln!(s, "min_ii res {} rec {}", self.res_mii, self.rec_mii);
        let _ = writeln!(s, "schedule_length {}", self.schedule_length);
        for (n, p) in &self.placements {
            let _ = writeln!(s, "op %{} -> {} slot {} time {}", n, self.tile_name(p.tile), p.slot, p.time);
        }
        for r in &self.routes {
            let back = if r.back { " back" } else { "" };
            let _ = writeln!(s, "route %{}.{} -> %{}.{}{}", r.producer, r.result, r.consumer, r.port, back);
            for h in &r.hops {
                let _ = writeln!(s, "  hop {} -> {} cycle {}", self.tile_name(h.from), self.tile_name(h.to), h.cycle);
            }
        }
        s
    }

    /// Inverse of [`MappingResult::to_text`].
    pub fn parse(text: &str) -> Result<Self, MapError> {
        let mut m = MappingResult {
            ii: 0,
            res_mii: 0,
            rec_mii: 0,
            model: ExecutionModel::SpatioTemporal,
            rows: 0,
            cols: 0,
            placements: BTreeMap::new(),
            routes: Vec::new(),
            schedule_length: 0,
        };
        for (i, raw) in text.lines().enumerate() {
            let bad = |message: &str| MapError::Parse { line: i + 1, message: message.to_string() };
            let w: Vec<&str> = raw.split_whitespace().collect();
            if w.is_empty() {
                continue;
            }
            let num = |s: &str| s.parse::<usize>().map_err(|_| bad(&format!("expected a number, got '{}'", s)));
            let node = |s: &str| -> Result<(usize, usize), MapError> {
                let s = s.strip_prefix('%').ok_or_else(|| bad("expected %node"))?;
                match s.split_once('.') {
                    Some((a, b)) => Ok((num(a)?, num(b)?)),
                    None => Ok((num(s)?, 0)),
                }
            };
            let tile = |s: &str, cols: usize| -> Result<usize, MapError> {
                let inner = s.strip_prefix("tile(").and_then(|x| x.strip_suffix(')')).ok_or_else(|| bad("expected tile(r,c)"))?;
                let (r, c) = inner.split_once(',').ok_or_else(|| bad("expected tile(r,c)"))?;
                Ok(num(r)? * cols + num(c)?)
            };
            match w.as_slice() {
                ["fabric", dims, model] => {
                    let (r, c) = dims.split_once('x').ok_or_else(|| bad("expected RxC"))?;
                    m.rows = num(r)?;
                    m.cols = num(c)?;
                    m.model = match *model {
                        "spatial_only" => ExecutionModel::SpatialOnly,
                        "spatio_temporal" => ExecutionModel::SpatioTemporal,
                        _ => return Err(bad("unknown execution model")),
                    };
                }
                ["ii", v] => m.ii = num(v)?,
                ["min_ii", "res", a, "rec", b] => {
                    m.res_mii = num(a)?;
                    m.rec_mii = num(b)?;
                }
                ["schedule_length", v] => m.schedule_length = num(v)?,
                ["op", n, "->", t, "slot", s, "time", time] => {
                    let time = time.parse::<i64>().map_err(|_| bad("bad time"))?;
                    m.placements.insert(node(n)?.0, Placement { tile: tile(t, m.cols)?, slot: num(s)?, time });
                }
                ["route", p, "->", c, rest @ ..] => {
                    let (producer, result) = node(p)?;
                    let (consumer, port) = node(c)?;
                    let back = match rest {
                        [] => false,
                        ["back"] => true,
                        _ => return Err(bad("unexpected trailing words")),
                    };
                    m.routes.push(Route { producer, result, consumer, port, back, hops: Vec::new() });
                }
                ["hop", a, "->", b, "cycle", c] => {
                    let h = Hop { from: tile(a, m.cols)?, to: tile(b, m.cols)?, cycle: num(c)? };
                    m.routes.last_mut().ok_or_else(|| bad("hop before any route"))?.hops.push(h);
                }
                _ => return Err(bad("unrecognised line")),
            }
        }
        Ok(m)
    }
}

impl fmt::Display for MappingResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}
