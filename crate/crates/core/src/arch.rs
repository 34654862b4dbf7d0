//! Target fabric description.

use std::collections::BTreeSet;
use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Topology {
    Mesh4,
    KingMesh8,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExecutionModel {
    SpatialOnly,
    SpatioTemporal,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ArchSpec {
    pub rows: usize,
    pub cols: usize,
    pub topology: Topology,
    pub execution_model: ExecutionModel,
    pub ctrl_mem_depth: usize,
    /// Fused op tags the tiles implement. Base ops are always available.
    pub fused_ops: BTreeSet<String>,
    pub link_latency: u32,
    pub regs_per_tile: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ArchError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("{0}")]
    Invalid(String),
}

/// Fused op tags a spec may list.
pub const FUSED_TAGS: [&str; 3] = ["load_indexed", "muladd", "loop_control"];

impl ArchSpec {
    pub fn new(rows: usize, cols: usize, topology: Topology, model: ExecutionModel, depth: usize) -> Self {
        ArchSpec {
            rows,
            cols,
            topology,
            execution_model: model,
            ctrl_mem_depth: depth,
            fused_ops: BTreeSet::new(),
            link_latency: 1,
            regs_per_tile: 8,
        }
    }

    /// Parses the `key = value` format. `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, ArchError> {
        let mut rows = None;
        let mut cols = None;
        let mut topology = Topology::KingMesh8;
        let mut model = ExecutionModel::SpatioTemporal;
        let mut depth = None;
        let mut fused = BTreeSet::new();
        let mut link_latency = 1;
        let mut regs = 8;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |message: String| ArchError::Malformed { line: i + 1, message };
            let (key, value) = line.split_once('=').ok_or_else(|| bad(format!("expected 'key = value', got '{}'", line)))?;
            let (key, value) = (key.trim(), value.trim());
            let num = |v: &str| v.parse::<usize>().map_err(|_| bad(format!("{} expects an unsigned integer, got '{}'", key, v)));
            match key {
                "rows" => rows = Some(num(value)?),
                "cols" => cols = Some(num(value)?),
                "topology" => {
                    topology = match value {
                        "mesh4" => Topology::Mesh4,
                        "king_mesh8" => Topology::KingMesh8,
                        _ => return Err(bad(format!("unknown topology '{}'", value))),
                    }
                }
                "execution_model" => {
                    model = match value {
                        "spatial_only" => ExecutionModel::SpatialOnly,
                        "spatio_temporal" => ExecutionModel::SpatioTemporal,
                        _ => return Err(bad(format!("unknown execution model '{}'", value))),
                    }
                }
                "ctrl_mem_depth" => depth = Some(num(value)?),
                "fused_ops" | "capabilities" => {
                    for tag in value.split(',').map(str::trim).filter(|t| !t.is_empty()) {
                        if !FUSED_TAGS.contains(&tag) {
                            return Err(bad(format!("unknown fused op '{}'", tag)));
                        }
                        fused.insert(tag.to_string());
                    }
                }
                "link_latency" => link_latency = num(value)? as u32,
                "regs_per_tile" => regs = num(value)?,
                _ => return Err(bad(format!("unknown key '{}'", key))),
            }
        }
        let rows = rows.ok_or_else(|| ArchError::Invalid("missing 'rows'".into()))?;
        let cols = cols.ok_or_else(|| ArchError::Invalid("missing 'cols'".into()))?;
        let depth = depth.unwrap_or(match model {
            ExecutionModel::SpatialOnly => 1,
            ExecutionModel::SpatioTemporal => 8,
        });
        let spec = ArchSpec {
            rows,
            cols,
            topology,
            execution_model: model,
            ctrl_mem_depth: depth,
            fused_ops: fused,
            link_latency,
            regs_per_tile: regs,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), ArchError> {
        if self.rows == 0 || self.cols == 0 {
            return Err(ArchError::Invalid("rows and cols must be at least 1".into()));
        }
        if self.ctrl_mem_depth == 0 {
            return Err(ArchError::Invalid("ctrl_mem_depth must be at least 1".into()));
        }
        if self.execution_model == ExecutionModel::SpatialOnly && self.ctrl_mem_depth != 1 {
            return Err(ArchError::Invalid(format!(
                "spatial_only requires ctrl_mem_depth = 1, got {}",
                self.ctrl_mem_depth
            )));
        }
        if self.link_latency == 0 {
            return Err(ArchError::Invalid("link_latency must be at least 1".into()));
        }
        Ok(())
    }

    pub fn tiles(&self) -> usize {
        self.rows * self.cols
    }

    pub fn coord(&self, tile: usize) -> (usize, usize) {
        (tile / self.cols, tile % self.cols)
    }

    /// Neighbouring tiles in ascending index order.
    pub fn neighbors(&self, tile: usize) -> Vec<usize> {
        let (r, c) = self.coord(tile);
        let mut out = Vec::new();
        for dr in -1i64..=1 {
            for dc in -1i64..=1 {
                if (dr, dc) == (0, 0) || (self.topology == Topology::Mesh4 && dr != 0 && dc != 0) {
                    continue;
                }
                let (nr, nc) = (r as i64 + dr, c as i64 + dc);
                if nr >= 0 && nc >= 0 && (nr as usize) < self.rows && (nc as usize) < self.cols {
                    out.push(nr as usize * self.cols + nc as usize);
                }
            }
        }
        out
    }

    pub fn adjacent(&self, a: usize, b: usize) -> bool {
        a < self.tiles() && b < self.tiles() && self.neighbors(a).contains(&b)
    }

    /// Minimum hop count between two tiles.
    pub fn distance(&self, a: usize, b: usize) -> usize {
        let (ar, ac) = self.coord(a);
        let (br, bc) = self.coord(b);
        let (dr, dc) = (ar.abs_diff(br), ac.abs_diff(bc));
        match self.topology {
            Topology::Mesh4 => dr + dc,
            Topology::KingMesh8 => dr.max(dc),
        }
    }

    pub fn supports(&self, tag: &str) -> bool {
        self.fused_ops.contains(tag)
    }
}

impl fmt::Display for ArchSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "rows = {}", self.rows)?;
        writeln!(f, "cols = {}", self.cols)?;
        let topo = match self.topology {
            Topology::Mesh4 => "mesh4",
            Topology::KingMesh8 => "king_mesh8",
        };
        writeln!(f, "topology = {}", topo)?;
        let model = match self.execution_model {
            ExecutionModel::SpatialOnly => "spatial_only",
            ExecutionModel::SpatioTemporal => "spatio_temporal",
        };
        writeln!(f, "execution_model = {}", model)?;
        writeln!(f, "ctrl_mem_depth = {}", self.ctrl_mem_depth)?;
        let fused: Vec<&str> = self.fused_ops.iter().map(String::as_str).collect();
        writeln!(f, "fused_ops = {}", fused.join(", "))?;
        writeln!(f, "link_latency = {}", self.link_latency)?;
        writeln!(f, "regs_per_tile = {}", self.regs_per_tile)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evaluation_fabric_parses() {
        let a = ArchSpec::parse(
            "# 6x6 fabric\nrows = 6\ncols = 6\ntopology = king_mesh8\nexecution_model = spatio_temporal\nctrl_mem_depth = 8\n",
        )
        .unwrap();
        assert_eq!(a.tiles(), 36);
        assert_eq!(a.ctrl_mem_depth, 8);
        assert_eq!(ArchSpec::parse(&a.to_string()).unwrap(), a);
    }

    #[test]
    fn four_by_four_has_sixteen_tiles() {
        assert_eq!(ArchSpec::parse("rows = 4\ncols = 4\n").unwrap().tiles(), 16);
    }

    #[test]
    fn spatial_only_rejects_deep_ctrl_mem() {
        let e = ArchSpec::parse("rows = 4\ncols = 4\nexecution_model = spatial_only\nctrl_mem_depth = 4\n").unwrap_err();
        assert!(e.to_string().contains("spatial_only"), "{e}");
        assert!(ArchSpec::parse("rows = 4\ncols = 4\nexecution_model = spatial_only\n").is_ok());
    }

    #[test]
    fn malformed_lines_report_position() {
        let e = ArchSpec::parse("rows = 4\ncols four\n").unwrap_err();
        assert_eq!(e.to_string(), "line 2: expected 'key = value', got 'cols four'");
        assert!(ArchSpec::parse("rows = 4\ncols = x\n").is_err());
        assert!(ArchSpec::parse("rows = 0\ncols = 4\n").is_err());
        assert!(ArchSpec::parse("rows = 4\ncols = 4\ncolor = red\n").is_err());
    }

    #[test]
    fn neighbor_counts() {
        let k = ArchSpec::parse("rows = 4\ncols = 4\ntopology = king_mesh8\n").unwrap();
        let m = ArchSpec::parse("rows = 4\ncols = 4\ntopology = mesh4\n").unwrap();
        for t in 0..16 {
            assert!(k.neighbors(t).len() <= 8);
            assert!(m.neighbors(t).len() <= 4);
            for n in k.neighbors(t) {
                assert_eq!(k.distance(t, n), 1);
            }
        }
        assert_eq!(k.neighbors(5).len(), 8);
        assert_eq!(m.neighbors(5).len(), 4);
        assert_eq!(k.distance(0, 15), 3);
        assert_eq!(m.distance(0, 15), 6);
    }
}
