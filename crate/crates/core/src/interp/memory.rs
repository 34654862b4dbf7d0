use super::{InterpError, Payload};
use crate::ir::ScalarType;

/// Flat array of 64-bit cells. Integers are stored as their sign-extended
/// value and floats as their `f64` bit pattern.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Memory {
    pub cells: Vec<i64>,
}

impl Memory {
    pub fn new(size: usize) -> Self {
        Memory { cells: vec![0; size] }
    }

    pub fn size(&self) -> usize {
        self.cells.len()
    }

    fn index(&self, addr: i64) -> Result<usize, InterpError> {
        if addr < 0 || addr as usize >= self.cells.len() {
            return Err(InterpError::OutOfBounds { addr, size: self.cells.len() });
        }
        Ok(addr as usize)
    }

    pub fn load(&self, addr: i64, t: ScalarType) -> Result<Payload, InterpError> {
        Ok(Payload::from_cell(self.cells[self.index(addr)?], t))
    }

    pub fn store(&mut self, addr: i64, v: Payload) -> Result<(), InterpError> {
        let i = self.index(addr)?;
        self.cells[i] = v.to_cell();
        Ok(())
    }

    /// Parses `addr: value` lines. `size: N` declares the cell count; without
    /// it the memory is just large enough for the highest address. Blank lines
    /// and `#` or `//` comments are ignored.
    pub fn parse(text: &str) -> Result<Self, InterpError> {
        let mut size = None;
        let mut entries = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("");
            let line = line.split("//").next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = || InterpError::BadInput(format!("memory line {}: {:?}", n + 1, raw));
            let (k, v) = line.split_once(':').ok_or_else(bad)?;
            let (k, v) = (k.trim(), v.trim());
            if k == "size" {
                size = Some(v.parse::<usize>().map_err(|_| bad())?);
                continue;
            }
            let addr = k.parse::<usize>().map_err(|_| bad())?;
            let val = Payload::parse(v).ok_or_else(bad)?;
            entries.push((addr, val));
        }
        let needed = entries.iter().map(|e| e.0 + 1).max().unwrap_or(0);
        let size = size.unwrap_or(needed);
        if needed > size {
            return Err(InterpError::BadInput(format!("address {} beyond declared size {}", needed - 1, size)));
        }
        let mut m = Memory::new(size);
        for (a, v) in entries {
            m.cells[a] = v.to_cell();
        }
        Ok(m)
    }

    /// Inverse of [`Memory::parse`] for integer contents: one line per nonzero cell.
    pub fn to_text(&self) -> String {
        let mut out = format!("size: {}\n", self.cells.len());
        for (i, c) in self.cells.iter().enumerate() {
            if *c != 0 {
                out.push_str(&format!("{}: {}\n", i, c));
            }
        }
        out
    }
}

/// Parses a comma-separated argument list such as `4,0` or `1.5, -2`.
pub fn parse_args(text: &str) -> Result<Vec<Payload>, InterpError> {
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    text.split(',')
        .map(|s| Payload::parse(s).ok_or_else(|| InterpError::BadInput(format!("bad argument {:?}", s))))
        .collect()
}
