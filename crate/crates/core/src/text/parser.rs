use std::collections::{BTreeMap, HashMap};

use super::lexer::{tokenize, Tok, Token};
use super::TextError;
use crate::ir::{
    verify, Attr, BlockId, Form, Function, Module, Opcode, Operation, ScalarType, SourceSpan,
    Successor, Type, ValueId,
};

/// Parses a module and verifies every function in it.
pub fn parse_module(text: &str) -> Result<Module, TextError> {
    parse_module_named(text, None)
}

/// Like [`parse_module`], tagging spans with `file`.
pub fn parse_module_named(text: &str, file: Option<&str>) -> Result<Module, TextError> {
    let module = parse_unverified(text, file)?;
    for f in &module.functions {
        let violations = verify(f);
        if !violations.is_empty() {
            return Err(TextError::Verify { function: f.name.clone(), violations });
        }
    }
    Ok(module)
}

/// Parses without running the verifier.
pub fn parse_unverified(text: &str, file: Option<&str>) -> Result<Module, TextError> {
    let tokens = tokenize(text).map_err(|(mut span, message)| {
        span.file = file.map(String::from);
        TextError::Syntax { span, message }
    })?;
    let mut p = Parser { toks: tokens, pos: 0, file: file.map(String::from) };
    let mut module = Module::default();
    loop {
        if p.peek() == &Tok::Eof {
            if module.functions.is_empty() {
                return Err(p.error("expected 'func'"));
            }
            break;
        }
        module.functions.push(p.function()?);
    }
    Ok(module)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    file: Option<String>,
}

struct FnScope {
    values: HashMap<String, ValueId>,
    defined: HashMap<String, SourceSpan>,
    used: Vec<(String, SourceSpan)>,
    blocks: HashMap<String, BlockId>,
    block_defined: Vec<String>,
    block_used: Vec<(String, SourceSpan)>,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn span(&self) -> SourceSpan {
        let t = &self.toks[self.pos];
        SourceSpan { file: self.file.clone(), line: t.line, col: t.col }
    }

    fn next(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, expected: &str) -> TextError {
        TextError::Syntax {
            span: self.span(),
            message: format!("{}, found {}", expected, self.peek().describe()),
        }
    }

    fn eat_punct(&mut self, c: char) -> bool {
        if self.peek() == &Tok::Punct(c) {
            self.next();
            true
        } else {
            false
        }
    }

    fn expect_punct(&mut self, c: char) -> Result<(), TextError> {
        if self.eat_punct(c) {
            Ok(())
        } else {
            Err(self.error(&format!("expected '{}'", c)))
        }
    }

    fn expect_keyword(&mut self, kw: &str) -> Result<(), TextError> {
        match self.peek() {
            Tok::Ident(s) if s == kw => {
                self.next();
                Ok(())
            }
            _ => Err(self.error(&format!("expected '{}'", kw))),
        }
    }

    fn value_ref(&mut self, f: &mut Function, scope: &mut FnScope, name: &str) -> ValueId {
        if let Some(&v) = scope.values.get(name) {
            return v;
        }
        let v = f.fresh_value();
        scope.values.insert(name.to_string(), v);
        f.value_names.insert(v, name.to_string());
        v
    }

    fn define(&mut self, f: &mut Function, scope: &mut FnScope, name: &str, span: SourceSpan) -> ValueId {
        let v = self.value_ref(f, scope, name);
        scope.defined.entry(name.to_string()).or_insert(span);
        v
    }

    fn block_ref(&mut self, f: &mut Function, scope: &mut FnScope, name: &str) -> BlockId {
        if let Some(&b) = scope.blocks.get(name) {
            return b;
        }
        let b = f.fresh_block_id();
        scope.blocks.insert(name.to_string(), b);
        b
    }

    fn ty(&mut self) -> Result<Type, TextError> {
        if self.eat_punct('!') {
            self.expect_keyword("pred")?;
            self.expect_punct('<')?;
            let s = self.scalar()?;
            self.expect_punct('>')?;
            Ok(Type::pred(s))
        } else {
            Ok(Type::plain(self.scalar()?))
        }
    }

    fn scalar(&mut self) -> Result<ScalarType, TextError> {
        if let Tok::Ident(s) = self.peek() {
            if let Some(t) = ScalarType::from_name(s) {
                self.next();
                return Ok(t);
            }
        }
        Err(self.error("expected a type"))
    }

    fn function(&mut self) -> Result<Function, TextError> {
        let form = match self.peek() {
            Tok::Ident(s) if s == "dataflow" => {
                self.next();
                Form::Dataflow
            }
            _ => Form::Cdfg,
        };
        self.expect_keyword("func")?;
        let name = match self.next() {
            Tok::Symbol(s) => s,
            _ => {
                self.pos -= 1;
                return Err(self.error("expected '@name'"));
            }
        };
        let mut f = Function::new(name, form);
        let mut scope = FnScope {
            values: HashMap::new(),
            defined: HashMap::new(),
            used: Vec::new(),
            blocks: HashMap::new(),
            block_defined: Vec::new(),
            block_used: Vec::new(),
        };
        self.expect_punct('(')?;
        if !self.eat_punct(')') {
            loop {
                let span = self.span();
                let Tok::Value(pname) = self.next() else {
                    self.pos -= 1;
                    return Err(self.error("expected parameter name"));
                };
                self.expect_punct(':')?;
                let ty = self.ty()?;
                let v = self.define(&mut f, &mut scope, &pname, span);
                f.params.push((v, ty));
                if self.eat_punct(')') {
                    break;
                }
                self.expect_punct(',')?;
            }
        }
        self.expect_punct('{')?;
        while !self.eat_punct('}') {
            self.block(&mut f, &mut scope)?;
        }
        if f.blocks.is_empty() {
            return Err(self.error("expected at least one block"));
        }
        for (name, span) in &scope.used {
            if !scope.defined.contains_key(name) {
                return Err(TextError::Syntax {
                    span: span.clone(),
                    message: format!("undefined value %{}", name),
                });
            }
        }
        for (name, span) in &scope.block_used {
            if !scope.block_defined.contains(name) {
                return Err(TextError::Syntax {
                    span: span.clone(),
                    message: format!("undefined block {}", name),
                });
            }
        }
        Ok(f)
    }

    fn block(&mut self, f: &mut Function, scope: &mut FnScope) -> Result<(), TextError> {
        let label = match self.peek() {
            Tok::Ident(s) if !s.starts_with("neura.") => s.clone(),
            _ => return Err(self.error("expected block label")),
        };
        self.next();
        if scope.block_defined.contains(&label) {
            return Err(self.error(&format!("duplicate block label {}", label)));
        }
        let id = self.block_ref(f, scope, &label);
        scope.block_defined.push(label);
        let mut args = Vec::new();
        if self.eat_punct('(') && !self.eat_punct(')') {
            loop {
                let span = self.span();
                let Tok::Value(aname) = self.next() else {
                    self.pos -= 1;
                    return Err(self.error("expected block argument name"));
                };
                self.expect_punct(':')?;
                let ty = self.ty()?;
                let v = self.define(f, scope, &aname, span);
                args.push((v, ty));
                if self.eat_punct(')') {
                    break;
                }
                self.expect_punct(',')?;
            }
        }
        self.expect_punct(':')?;
        let mut ops = Vec::new();
        loop {
            match self.peek() {
                Tok::Value(_) => {}
                Tok::Ident(s) if s.starts_with("neura.") => {}
                _ => break,
            }
            ops.push(self.op(f, scope)?);
        }
        f.blocks.push(crate::ir::Block { id, args, ops });
        Ok(())
    }

    fn op(&mut self, f: &mut Function, scope: &mut FnScope) -> Result<Operation, TextError> {
        let span = self.span();
        let mut result_names = Vec::new();
        while let Tok::Value(n) = self.peek() {
            result_names.push((n.clone(), self.span()));
            self.next();
            if !self.eat_punct(',') {
                break;
            }
        }
        if !result_names.is_empty() {
            self.expect_punct('=')?;
        }
        let opcode = match self.peek() {
            Tok::Ident(s) => match s.strip_prefix("neura.").and_then(Opcode::from_name) {
                Some(op) => op,
                None => return Err(self.error("expected an opcode")),
            },
            _ => return Err(self.error("expected an opcode")),
        };
        self.next();
        let mut operands = Vec::new();
        let mut successors = Vec::new();
        // Operands and successors, comma separated, all on the opcode's line.
        loop {
            if self.toks[self.pos].line_start {
                break;
            }
            match self.peek().clone() {
                Tok::Value(n) => {
                    let sp = self.span();
                    self.next();
                    let v = self.value_ref(f, scope, &n);
                    scope.used.push((n, sp));
                    operands.push(v);
                }
                Tok::Ident(b) if opcode.is_branch() => {
                    let sp = self.span();
                    self.next();
                    let block = self.block_ref(f, scope, &b);
                    scope.block_used.push((b, sp));
                    let mut args = Vec::new();
                    if self.eat_punct('(') && !self.eat_punct(')') {
                        loop {
                            let sp = self.span();
                            let Tok::Value(n) = self.next() else {
                                self.pos -= 1;
                                return Err(self.error("expected successor argument"));
                            };
                            let v = self.value_ref(f, scope, &n);
                            scope.used.push((n, sp));
                            args.push(v);
                            if self.eat_punct(')') {
                                break;
                            }
                            self.expect_punct(',')?;
                        }
                    }
                    successors.push(Successor { block, args });
                }
                _ => break,
            }
            if !self.eat_punct(',') {
                break;
            }
        }
        let mut attrs = BTreeMap::new();
        if !self.toks[self.pos].line_start && self.eat_punct('{') && !self.eat_punct('}') {
            loop {
                let key = match self.next() {
                    Tok::Ident(k) => k,
                    _ => {
                        self.pos -= 1;
                        return Err(self.error("expected attribute name"));
                    }
                };
                self.expect_punct('=')?;
                let val = self.attr_value()?;
                attrs.insert(key, val);
                if self.eat_punct('}') {
                    break;
                }
                self.expect_punct(',')?;
            }
        }
        let mut types = Vec::new();
        if !self.toks[self.pos].line_start && self.eat_punct(':') {
            loop {
                types.push(self.ty()?);
                if !self.eat_punct(',') {
                    break;
                }
            }
        }
        if !self.toks[self.pos].line_start && self.peek() != &Tok::Eof {
            return Err(self.error("expected end of line"));
        }
        if types.len() != result_names.len() {
            return Err(TextError::Syntax {
                span,
                message: format!(
                    "{} names {} results but lists {} types",
                    opcode,
                    result_names.len(),
                    types.len()
                ),
            });
        }
        let id = f.fresh_op_id();
        let mut results = Vec::new();
        for ((n, sp), t) in result_names.into_iter().zip(types) {
            let v = self.define(f, scope, &n, sp);
            results.push((v, t));
        }
        Ok(Operation { id, opcode, operands, results, attrs, successors, span: Some(span) })
    }

    fn attr_value(&mut self) -> Result<Attr, TextError> {
        match self.next() {
            Tok::Str(s) => Ok(Attr::Str(s)),
            Tok::Number(n) => {
                let is_float = n.contains(['.', 'e', 'E']);
                let explicit = if self.eat_punct(':') { Some(self.scalar()?) } else { None };
                if is_float {
                    let v: f64 = n.parse().map_err(|_| self.error("malformed float"))?;
                    Ok(Attr::Float(v, explicit.unwrap_or(ScalarType::F64)))
                } else {
                    let v: i64 = n.parse().map_err(|_| self.error("malformed integer"))?;
                    Ok(Attr::Int(v, explicit.unwrap_or(ScalarType::I64)))
                }
            }
            Tok::Ident(s) if s == "NaN" || s == "inf" => {
                let v = if s == "NaN" { f64::NAN } else { f64::INFINITY };
                let explicit = if self.eat_punct(':') { Some(self.scalar()?) } else { None };
                Ok(Attr::Float(v, explicit.unwrap_or(ScalarType::F64)))
            }
            Tok::Punct('-') if matches!(self.peek(), Tok::Ident(s) if s == "inf") => {
                self.next();
                let explicit = if self.eat_punct(':') { Some(self.scalar()?) } else { None };
                Ok(Attr::Float(f64::NEG_INFINITY, explicit.unwrap_or(ScalarType::F64)))
            }
            _ => {
                self.pos -= 1;
                Err(self.error("expected attribute value"))
            }
        }
    }
}
