//! OpenQASM 2.0 reader and writer for the gate subset the router understands.
//!
//! Every `qreg` is flattened into one contiguous index space in declaration
//! order; `creg`s likewise. `measure` and `barrier` become single-qubit
//! marker gates, so `barrier q;` expands into one marker per qubit.

use std::fmt::Write as _;

use thiserror::Error;

use super::{Circuit, Gate, SingleOp};

#[derive(Debug, Error, PartialEq)]
pub enum QasmError {
    #[error("syntax error at {line}:{col}: {message}")]
    Syntax { line: usize, col: usize, message: String },
    #[error("unsupported gate `{name}` at {line}:{col}")]
    UnsupportedGate { name: String, line: usize, col: usize },
    #[error("unsupported include \"{path}\" at {line}:{col} (only qelib1.inc is accepted)")]
    UnsupportedInclude { path: String, line: usize, col: usize },
    #[error("index {index} out of range for register `{register}` of size {size} at {line}:{col}")]
    IndexOutOfRange { register: String, index: usize, size: usize, line: usize, col: usize },
    #[error("unknown register `{name}` at {line}:{col}")]
    UnknownRegister { name: String, line: usize, col: usize },
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Int(usize),
    Real(f64),
    Str(String),
    Arrow,
    Sym(char),
    Eof,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

fn tokenize(source: &str) -> Result<Vec<Token>, QasmError> {
    let chars: Vec<char> = source.chars().collect();
    let mut tokens = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let syntax = |line, col, message: String| QasmError::Syntax { line, col, message };

    while i < chars.len() {
        let c = chars[i];
        let (tl, tc) = (line, col);
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            let word: String = chars[start..i].iter().collect();
            col += i - start;
            tokens.push(Token { tok: Tok::Ident(word), line: tl, col: tc });
            continue;
        }
        if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            let start = i;
            let mut is_real = false;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            if i < chars.len() && chars[i] == '.' {
                is_real = true;
                i += 1;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    is_real = true;
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text: String = chars[start..i].iter().collect();
            col += i - start;
            let tok = if is_real {
                Tok::Real(text.parse().map_err(|_| syntax(tl, tc, format!("bad number `{text}`")))?)
            } else {
                Tok::Int(text.parse().map_err(|_| syntax(tl, tc, format!("bad integer `{text}`")))?)
            };
            tokens.push(Token { tok, line: tl, col: tc });
            continue;
        }
        if c == '"' {
            let start = i + 1;
            i += 1;
            while i < chars.len() && chars[i] != '"' && chars[i] != '\n' {
                i += 1;
            }
            if i >= chars.len() || chars[i] != '"' {
                return Err(syntax(tl, tc, "unterminated string".into()));
            }
            let text: String = chars[start..i].iter().collect();
            i += 1;
            col += text.chars().count() + 2;
            tokens.push(Token { tok: Tok::Str(text), line: tl, col: tc });
            continue;
        }
        if c == '-' && chars.get(i + 1) == Some(&'>') {
            i += 2;
            col += 2;
            tokens.push(Token { tok: Tok::Arrow, line: tl, col: tc });
            continue;
        }
        if ";,[](){}+-*/^".contains(c) {
            i += 1;
            col += 1;
            tokens.push(Token { tok: Tok::Sym(c), line: tl, col: tc });
            continue;
        }
        return Err(syntax(tl, tc, format!("unexpected character `{c}`")));
    }
    tokens.push(Token { tok: Tok::Eof, line, col });
    Ok(tokens)
}

struct Register {
    name: String,
    offset: usize,
    size: usize,
}

/// A gate argument: one bit, or a whole register for broadcasting.
#[derive(Clone, Copy)]
enum Arg {
    Bit(usize),
    Whole { offset: usize, size: usize },
}

impl Arg {
    fn width(&self) -> Option<usize> {
        match self {
            Arg::Bit(_) => None,
            Arg::Whole { size, .. } => Some(*size),
        }
    }

    fn at(&self, k: usize) -> usize {
        match *self {
            Arg::Bit(b) => b,
            Arg::Whole { offset, .. } => offset + k,
        }
    }
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    qregs: Vec<Register>,
    cregs: Vec<Register>,
    gates: Vec<Gate>,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn next(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn error_at(&self, t: &Token, message: impl Into<String>) -> QasmError {
        QasmError::Syntax { line: t.line, col: t.col, message: message.into() }
    }

    fn expect_sym(&mut self, c: char) -> Result<(), QasmError> {
        let t = self.next();
        if t.tok == Tok::Sym(c) {
            Ok(())
        } else {
            Err(self.error_at(&t, format!("expected `{c}`, found {}", describe(&t.tok))))
        }
    }

    fn expect_ident(&mut self) -> Result<(String, Token), QasmError> {
        let t = self.next();
        match &t.tok {
            Tok::Ident(s) => Ok((s.clone(), t.clone())),
            other => Err(self.error_at(&t, format!("expected identifier, found {}", describe(other)))),
        }
    }

    fn expect_int(&mut self) -> Result<usize, QasmError> {
        let t = self.next();
        match t.tok {
            Tok::Int(v) => Ok(v),
            ref other => Err(self.error_at(&t, format!("expected integer, found {}", describe(other)))),
        }
    }

    fn parse_program(&mut self) -> Result<(), QasmError> {
        if matches!(&self.peek().tok, Tok::Ident(s) if s == "OPENQASM") {
            self.next();
            let t = self.next();
            match t.tok {
                Tok::Real(v) if (2.0..3.0).contains(&v) => {}
                Tok::Int(2) => {}
                _ => return Err(self.error_at(&t, "only OPENQASM 2.x is supported")),
            }
            self.expect_sym(';')?;
        }
        loop {
            let t = self.peek().clone();
            match &t.tok {
                Tok::Eof => return Ok(()),
                Tok::Ident(word) => {
                    let word = word.clone();
                    self.next();
                    self.statement(&word, &t)?;
                }
                other => return Err(self.error_at(&t, format!("expected statement, found {}", describe(other)))),
            }
        }
    }

    fn statement(&mut self, word: &str, at: &Token) -> Result<(), QasmError> {
        match word {
            "include" => {
                let t = self.next();
                let Tok::Str(path) = &t.tok else {
                    return Err(self.error_at(&t, "expected include path string"));
                };
                if path != "qelib1.inc" {
                    return Err(QasmError::UnsupportedInclude { path: path.clone(), line: t.line, col: t.col });
                }
                self.expect_sym(';')
            }
            "qreg" | "creg" => {
                let (name, name_tok) = self.expect_ident()?;
                self.expect_sym('[')?;
                let size = self.expect_int()?;
                self.expect_sym(']')?;
                self.expect_sym(';')?;
                let regs = if word == "qreg" { &mut self.qregs } else { &mut self.cregs };
                if regs.iter().any(|r| r.name == name) {
                    return Err(self.error_at(&name_tok, format!("register `{name}` declared twice")));
                }
                let offset = regs.iter().map(|r| r.size).sum();
                regs.push(Register { name, offset, size });
                Ok(())
            }
            "measure" => {
                let q = self.argument(true)?;
                let t = self.next();
                if t.tok != Tok::Arrow {
                    return Err(self.error_at(&t, "expected `->` in measure"));
                }
                let c = self.argument(false)?;
                self.expect_sym(';')?;
                match (q.width(), c.width()) {
                    (None, None) => self.gates.push(Gate::single(SingleOp::Measure { clbit: c.at(0) }, q.at(0))),
                    (Some(a), Some(b)) if a == b => {
                        for k in 0..a {
                            self.gates.push(Gate::single(SingleOp::Measure { clbit: c.at(k) }, q.at(k)));
                        }
                    }
                    _ => return Err(self.error_at(at, "measure operands must both be bits or equal-size registers")),
                }
                Ok(())
            }
            "barrier" => {
                let args = self.argument_list()?;
                self.expect_sym(';')?;
                for arg in args {
                    for k in 0..arg.width().unwrap_or(1) {
                        self.gates.push(Gate::single(SingleOp::Barrier, arg.at(k)));
                    }
                }
                Ok(())
            }
            "cx" | "CX" | "swap" => {
                let args = self.argument_list()?;
                self.expect_sym(';')?;
                if args.len() != 2 {
                    return Err(self.error_at(at, format!("`{word}` takes 2 qubit arguments, found {}", args.len())));
                }
                let width = match (args[0].width(), args[1].width()) {
                    (None, None) => 1,
                    (Some(n), None) | (None, Some(n)) => n,
                    (Some(a), Some(b)) if a == b => a,
                    _ => return Err(self.error_at(at, "register arguments differ in size")),
                };
                for k in 0..width {
                    let (a, b) = (args[0].at(k), args[1].at(k));
                    if a == b {
                        return Err(self.error_at(at, format!("`{word}` applied twice to qubit {a}")));
                    }
                    self.gates.push(if word == "swap" {
                        Gate::Swap { a, b }
                    } else {
                        Gate::Cnot { control: a, target: b }
                    });
                }
                Ok(())
            }
            "gate" | "opaque" | "if" | "reset" => {
                Err(QasmError::UnsupportedGate { name: word.to_string(), line: at.line, col: at.col })
            }
            name => {
                let op = SingleOp::from_gate_name(name).ok_or_else(|| QasmError::UnsupportedGate {
                    name: name.to_string(),
                    line: at.line,
                    col: at.col,
                })?;
                let params = if self.peek().tok == Tok::Sym('(') {
                    self.next();
                    let mut params = vec![self.expr()?];
                    while self.peek().tok == Tok::Sym(',') {
                        self.next();
                        params.push(self.expr()?);
                    }
                    self.expect_sym(')')?;
                    params
                } else {
                    Vec::new()
                };
                if params.len() != op.num_params() {
                    return Err(self.error_at(
                        at,
                        format!("`{name}` takes {} parameters, found {}", op.num_params(), params.len()),
                    ));
                }
                let args = self.argument_list()?;
                self.expect_sym(';')?;
                if args.len() != 1 {
                    return Err(self.error_at(at, format!("`{name}` takes 1 qubit argument, found {}", args.len())));
                }
                for k in 0..args[0].width().unwrap_or(1) {
                    self.gates.push(Gate::rotation(op, args[0].at(k), params.clone()));
                }
                Ok(())
            }
        }
    }

    fn argument_list(&mut self) -> Result<Vec<Arg>, QasmError> {
        let mut args = vec![self.argument(true)?];
        while self.peek().tok == Tok::Sym(',') {
            self.next();
            args.push(self.argument(true)?);
        }
        Ok(args)
    }

    fn argument(&mut self, quantum: bool) -> Result<Arg, QasmError> {
        let (name, tok) = self.expect_ident()?;
        let regs = if quantum { &self.qregs } else { &self.cregs };
        let Some(reg) = regs.iter().find(|r| r.name == name) else {
            return Err(QasmError::UnknownRegister { name, line: tok.line, col: tok.col });
        };
        let (offset, size) = (reg.offset, reg.size);
        if self.peek().tok != Tok::Sym('[') {
            return Ok(Arg::Whole { offset, size });
        }
        self.next();
        let idx_tok = self.peek().clone();
        let index = self.expect_int()?;
        self.expect_sym(']')?;
        if index >= size {
            return Err(QasmError::IndexOutOfRange {
                register: name,
                index,
                size,
                line: idx_tok.line,
                col: idx_tok.col,
            });
        }
        Ok(Arg::Bit(offset + index))
    }

    fn expr(&mut self) -> Result<f64, QasmError> {
        let mut value = self.term()?;
        loop {
            match self.peek().tok {
                Tok::Sym('+') => {
                    self.next();
                    value += self.term()?;
                }
                Tok::Sym('-') => {
                    self.next();
                    value -= self.term()?;
                }
                _ => return Ok(value),
            }
        }
    }

    fn term(&mut self) -> Result<f64, QasmError> {
        let mut value = self.power()?;
        loop {
            match self.peek().tok {
                Tok::Sym('*') => {
                    self.next();
                    value *= self.power()?;
                }
                Tok::Sym('/') => {
                    self.next();
                    value /= self.power()?;
                }
                _ => return Ok(value),
            }
        }
    }

    fn power(&mut self) -> Result<f64, QasmError> {
        let base = self.unary()?;
        if self.peek().tok == Tok::Sym('^') {
            self.next();
            let exponent = self.power()?;
            return Ok(base.powf(exponent));
        }
        Ok(base)
    }

    fn unary(&mut self) -> Result<f64, QasmError> {
        match self.peek().tok {
            Tok::Sym('-') => {
                self.next();
                Ok(-self.unary()?)
            }
            Tok::Sym('+') => {
                self.next();
                self.unary()
            }
            _ => self.primary(),
        }
    }

    fn primary(&mut self) -> Result<f64, QasmError> {
        let t = self.next();
        match &t.tok {
            Tok::Int(v) => Ok(*v as f64),
            Tok::Real(v) => Ok(*v),
            Tok::Sym('(') => {
                let v = self.expr()?;
                self.expect_sym(')')?;
                Ok(v)
            }
            Tok::Ident(name) if name == "pi" => Ok(std::f64::consts::PI),
            Tok::Ident(name) => {
                let f: fn(f64) -> f64 = match name.as_str() {
                    "sin" => f64::sin,
                    "cos" => f64::cos,
                    "tan" => f64::tan,
                    "exp" => f64::exp,
                    "ln" => f64::ln,
                    "sqrt" => f64::sqrt,
                    _ => return Err(self.error_at(&t, format!("unknown identifier `{name}` in expression"))),
                };
                self.expect_sym('(')?;
                let v = self.expr()?;
                self.expect_sym(')')?;
                Ok(f(v))
            }
            other => Err(self.error_at(&t, format!("expected expression, found {}", describe(other)))),
        }
    }
}

fn describe(tok: &Tok) -> String {
    match tok {
        Tok::Ident(s) => format!("`{s}`"),
        Tok::Int(v) => format!("`{v}`"),
        Tok::Real(v) => format!("`{v}`"),
        Tok::Str(s) => format!("\"{s}\""),
        Tok::Arrow => "`->`".into(),
        Tok::Sym(c) => format!("`{c}`"),
        Tok::Eof => "end of input".into(),
    }
}

/// Parses OpenQASM 2.0 source into a [`Circuit`] named `"circuit"`.
pub fn parse_qasm(source: &str) -> Result<Circuit, QasmError> {
    let tokens = tokenize(source)?;
    let mut parser = Parser { tokens, pos: 0, qregs: Vec::new(), cregs: Vec::new(), gates: Vec::new() };
    parser.parse_program()?;
    Ok(Circuit {
        name: "circuit".to_string(),
        num_qubits: parser.qregs.iter().map(|r| r.size).sum(),
        num_clbits: parser.cregs.iter().map(|r| r.size).sum(),
        gates: parser.gates,
    })
}

/// Writes a circuit as OpenQASM 2.0, one statement per line, over a single
/// `q` register (and a single `c` register when the circuit measures).
pub fn emit_qasm(circuit: &Circuit) -> String {
    let mut out = String::new();
    out.push_str("OPENQASM 2.0;\ninclude \"qelib1.inc\";\n");
    let _ = writeln!(out, "qreg q[{}];", circuit.num_qubits);
    if circuit.num_clbits > 0 {
        let _ = writeln!(out, "creg c[{}];", circuit.num_clbits);
    }
    for gate in &circuit.gates {
        let _ = match gate {
            Gate::Cnot { control, target } => writeln!(out, "cx q[{control}],q[{target}];"),
            Gate::Swap { a, b } => writeln!(out, "swap q[{a}],q[{b}];"),
            Gate::Single { op: SingleOp::Measure { clbit }, qubit, .. } => {
                writeln!(out, "measure q[{qubit}] -> c[{clbit}];")
            }
            Gate::Single { op, qubit, params } if params.is_empty() => writeln!(out, "{} q[{qubit}];", op.name()),
            Gate::Single { op, qubit, params } => {
                let joined: Vec<String> = params.iter().map(|p| format!("{p}")).collect();
                writeln!(out, "{}({}) q[{qubit}];", op.name(), joined.join(","))
            }
        };
    }
    out
}
