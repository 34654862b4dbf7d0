use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Arity {
    Fixed(usize),
    AtLeast(usize),
}

impl Arity {
    pub fn accepts(self, n: usize) -> bool {
        match self {
            Arity::Fixed(k) => n == k,
            Arity::AtLeast(k) => n >= k,
        }
    }
}

macro_rules! opcodes {
    ($($variant:ident => $name:literal),* $(,)?) => {
        /// Every operation known to the IR, covering both the CDFG and dataflow forms.
        #[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum Opcode {
            $($variant),*
        }

        impl Opcode {
            pub const ALL: &'static [Opcode] = &[$(Opcode::$variant),*];

            pub fn name(self) -> &'static str {
                match self {
                    $(Opcode::$variant => $name),*
                }
            }

            pub fn from_name(s: &str) -> Option<Opcode> {
                match s {
                    $($name => Some(Opcode::$variant),)*
                    _ => None,
                }
            }
        }
    };
}

opcodes! {
    Constant => "constant",
    Add => "add",
    Sub => "sub",
    Mul => "mul",
    Div => "div",
    Rem => "rem",
    And => "and",
    Or => "or",
    Xor => "xor",
    Shl => "shl",
    Shr => "shr",
    FAdd => "fadd",
    FSub => "fsub",
    FMul => "fmul",
    FDiv => "fdiv",
    Icmp => "icmp",
    Fcmp => "fcmp",
    Not => "not",
    Sel => "sel",
    Cast => "cast",
    Load => "load",
    Store => "store",
    Return => "return",
    Br => "br",
    CondBr => "cond_br",
    GrantOnce => "grant_once",
    GrantPredicate => "grant_predicate",
    Phi => "phi",
    Reserve => "reserve",
    CtrlMov => "ctrl_mov",
    LoadIndexed => "load_indexed",
    MulAdd => "muladd",
    LoopControl => "loop_control",
}

impl Opcode {
    /// Number of logical input slots. Slots may be filled by value operands or by
    /// folded immediates held in attributes.
    pub fn arity(self) -> Arity {
        use Opcode::*;
        match self {
            Constant | Reserve | Br => Arity::Fixed(0),
            Not | Cast | Load | Return | CondBr | GrantOnce | LoopControl => Arity::Fixed(1),
            Add | Sub | Mul | Div | Rem | And | Or | Xor | Shl | Shr | FAdd | FSub | FMul
            | FDiv | Icmp | Fcmp | Store | GrantPredicate | CtrlMov => Arity::Fixed(2),
            Sel | MulAdd => Arity::Fixed(3),
            Phi => Arity::AtLeast(1),
            LoadIndexed => Arity::AtLeast(2),
        }
    }

    /// Number of results the operation defines.
    pub fn result_count(self) -> usize {
        use Opcode::*;
        match self {
            Store | Return | Br | CondBr | CtrlMov => 0,
            LoopControl => 2,
            _ => 1,
        }
    }

    pub fn is_terminator(self) -> bool {
        matches!(self, Opcode::Br | Opcode::CondBr | Opcode::Return)
    }

    pub fn is_branch(self) -> bool {
        matches!(self, Opcode::Br | Opcode::CondBr)
    }

    /// Operations that only exist after flattening.
    pub fn is_dataflow_only(self) -> bool {
        matches!(
            self,
            Opcode::GrantOnce
                | Opcode::GrantPredicate
                | Opcode::Phi
                | Opcode::Reserve
                | Opcode::CtrlMov
                | Opcode::LoopControl
        )
    }

    /// Structural operations that never occupy a functional unit.
    pub fn is_materialized(self) -> bool {
        !matches!(self, Opcode::Reserve | Opcode::CtrlMov | Opcode::Br | Opcode::CondBr)
    }

    /// Whether constant operands may be embedded into this op's attributes.
    pub fn accepts_immediates(self) -> bool {
        use Opcode::*;
        matches!(
            self,
            Add | Sub | Mul | Div | Rem | And | Or | Xor | Shl | Shr | FAdd | FSub | FMul
                | FDiv | Icmp | Fcmp | Not | Sel | Cast | Load | Store | Return | MulAdd
        )
    }

    /// Whether removing an unused instance changes observable behaviour.
    pub fn has_side_effects(self) -> bool {
        use Opcode::*;
        matches!(self, Store | Return | Br | CondBr | CtrlMov | LoopControl)
    }

    /// Computational ops whose result predicate is the conjunction of input predicates.
    pub fn is_computational(self) -> bool {
        use Opcode::*;
        matches!(
            self,
            Add | Sub | Mul | Div | Rem | And | Or | Xor | Shl | Shr | FAdd | FSub | FMul
                | FDiv | Icmp | Fcmp | Not | Sel | Cast | MulAdd | Constant
        )
    }

    /// The capability tag a tile must declare to execute this op, if it is a fused op.
    pub fn capability_tag(self) -> Option<&'static str> {
        match self {
            Opcode::LoadIndexed => Some("load_indexed"),
            Opcode::MulAdd => Some("muladd"),
            Opcode::LoopControl => Some("loop_control"),
            _ => None,
        }
    }
}

impl fmt::Display for Opcode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "neura.{}", self.name())
    }
}

/// Attribute name holding an immediate for logical slot `slot`.
pub fn slot_attr(slot: usize) -> &'static str {
    match slot {
        0 => "lhs_const",
        1 => "rhs_const",
        2 => "third_const",
        _ => "extra_const",
    }
}

/// Comparison kinds accepted by `icmp`/`fcmp` and `loop_control`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CmpKind {
    Eq,
    Ne,
    Slt,
    Sle,
    Sgt,
    Sge,
}

impl CmpKind {
    pub fn from_name(s: &str) -> Option<Self> {
        Some(match s {
            "eq" => CmpKind::Eq,
            "ne" => CmpKind::Ne,
            "slt" | "lt" => CmpKind::Slt,
            "sle" | "le" => CmpKind::Sle,
            "sgt" | "gt" => CmpKind::Sgt,
            "sge" | "ge" => CmpKind::Sge,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            CmpKind::Eq => "eq",
            CmpKind::Ne => "ne",
            CmpKind::Slt => "slt",
            CmpKind::Sle => "sle",
            CmpKind::Sgt => "sgt",
            CmpKind::Sge => "sge",
        }
    }

    pub fn eval<T: PartialOrd>(self, a: T, b: T) -> bool {
        match self {
            CmpKind::Eq => a == b,
            CmpKind::Ne => a != b,
            CmpKind::Slt => a < b,
            CmpKind::Sle => a <= b,
            CmpKind::Sgt => a > b,
            CmpKind::Sge => a >= b,
        }
    }
}
