use crate::gates::{Circuit, CircuitError, Instruction, OneQubitGate};

use super::QasmError;

/// Largest register (and total register width) the parser accepts.
pub const MAX_QUBITS: usize = 64;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Int(String),
    Real(String),
    Str(String),
    Semi,
    Comma,
    LBracket,
    RBracket,
    Arrow,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Int(s) | Tok::Real(s) => format!("number `{s}`"),
            Tok::Str(s) => format!("string \"{s}\""),
            Tok::Semi => "`;`".into(),
            Tok::Comma => "`,`".into(),
            Tok::LBracket => "`[`".into(),
            Tok::RBracket => "`]`".into(),
            Tok::Arrow => "`->`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(src: &str) -> Result<Vec<Spanned>, QasmError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);

    while i < chars.len() {
        let ch = chars[i];
        let (tl, tc) = (line, col);
        let advance = |n: usize, i: &mut usize, col: &mut usize| {
            *i += n;
            *col += n;
        };
        match ch {
            '\n' => {
                i += 1;
                line += 1;
                col = 1;
            }
            c if c.is_whitespace() => advance(1, &mut i, &mut col),
            '/' if chars.get(i + 1) == Some(&'/') => {
                while i < chars.len() && chars[i] != '\n' {
                    advance(1, &mut i, &mut col);
                }
            }
            ';' => {
                out.push(Spanned { tok: Tok::Semi, line: tl, col: tc });
                advance(1, &mut i, &mut col);
            }
            ',' => {
                out.push(Spanned { tok: Tok::Comma, line: tl, col: tc });
                advance(1, &mut i, &mut col);
            }
            '[' => {
                out.push(Spanned { tok: Tok::LBracket, line: tl, col: tc });
                advance(1, &mut i, &mut col);
            }
            ']' => {
                out.push(Spanned { tok: Tok::RBracket, line: tl, col: tc });
                advance(1, &mut i, &mut col);
            }
            '-' if chars.get(i + 1) == Some(&'>') => {
                out.push(Spanned { tok: Tok::Arrow, line: tl, col: tc });
                advance(2, &mut i, &mut col);
            }
            '"' => {
                let start = i + 1;
                let mut j = start;
                while j < chars.len() && chars[j] != '"' && chars[j] != '\n' {
                    j += 1;
                }
                if j >= chars.len() || chars[j] != '"' {
                    return Err(QasmError::Syntax { message: "unterminated string".into(), line: tl, col: tc });
                }
                let s: String = chars[start..j].iter().collect();
                out.push(Spanned { tok: Tok::Str(s), line: tl, col: tc });
                advance(j + 1 - i, &mut i, &mut col);
            }
            c if c.is_ascii_digit() => {
                let mut j = i;
                while j < chars.len() && chars[j].is_ascii_digit() {
                    j += 1;
                }
                let mut real = false;
                if j < chars.len() && chars[j] == '.' {
                    real = true;
                    j += 1;
                    while j < chars.len() && chars[j].is_ascii_digit() {
                        j += 1;
                    }
                }
                let s: String = chars[i..j].iter().collect();
                out.push(Spanned { tok: if real { Tok::Real(s) } else { Tok::Int(s) }, line: tl, col: tc });
                advance(j - i, &mut i, &mut col);
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut j = i;
                while j < chars.len() && (chars[j].is_ascii_alphanumeric() || chars[j] == '_') {
                    j += 1;
                }
                let s: String = chars[i..j].iter().collect();
                out.push(Spanned { tok: Tok::Ident(s), line: tl, col: tc });
                advance(j - i, &mut i, &mut col);
            }
            other => {
                return Err(QasmError::Syntax { message: format!("unexpected character `{other}`"), line: tl, col: tc });
            }
        }
    }
    out.push(Spanned { tok: Tok::Eof, line, col });
    Ok(out)
}

struct Register {
    name: String,
    offset: usize,
    size: usize,
}

/// Operand as written: `name` or `name[index]`.
struct Operand {
    name: String,
    index: Option<usize>,
    line: usize,
    col: usize,
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    qregs: Vec<Register>,
    cregs: Vec<Register>,
    /// Instructions with the position of the statement that produced them.
    body: Vec<(Instruction, usize, usize)>,
}

impl Parser {
    fn peek(&self) -> &Spanned {
        &self.toks[self.pos]
    }

    fn next(&mut self) -> Spanned {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn syntax(t: &Spanned, message: impl Into<String>) -> QasmError {
        QasmError::Syntax { message: message.into(), line: t.line, col: t.col }
    }

    fn expect(&mut self, want: Tok) -> Result<Spanned, QasmError> {
        let t = self.next();
        if t.tok == want {
            Ok(t)
        } else {
            Err(Self::syntax(&t, format!("expected {}, found {}", want.describe(), t.tok.describe())))
        }
    }

    fn ident(&mut self) -> Result<(String, Spanned), QasmError> {
        let t = self.next();
        match &t.tok {
            Tok::Ident(s) => Ok((s.clone(), t.clone())),
            other => Err(Self::syntax(&t, format!("expected identifier, found {}", other.describe()))),
        }
    }

    fn int(&mut self) -> Result<usize, QasmError> {
        let t = self.next();
        match &t.tok {
            Tok::Int(s) => s.parse().map_err(|_| Self::syntax(&t, format!("integer `{s}` is too large"))),
            other => Err(Self::syntax(&t, format!("expected integer, found {}", other.describe()))),
        }
    }

    fn header(&mut self) -> Result<(), QasmError> {
        let t = self.peek().clone();
        match &t.tok {
            Tok::Ident(s) if s == "OPENQASM" => {
                self.next();
                let v = self.next();
                match &v.tok {
                    Tok::Real(s) if s == "2.0" => {}
                    Tok::Int(s) if s == "2" => {}
                    other => return Err(Self::syntax(&v, format!("unsupported version {}", other.describe()))),
                }
                self.expect(Tok::Semi)?;
                Ok(())
            }
            _ => Err(QasmError::MissingHeader { line: t.line, col: t.col }),
        }
    }

    fn operand(&mut self) -> Result<Operand, QasmError> {
        let (name, t) = self.ident()?;
        let index = if self.peek().tok == Tok::LBracket {
            self.next();
            let i = self.int()?;
            self.expect(Tok::RBracket)?;
            Some(i)
        } else {
            None
        };
        Ok(Operand { name, index, line: t.line, col: t.col })
    }

    fn operand_list(&mut self) -> Result<Vec<Operand>, QasmError> {
        let mut ops = vec![self.operand()?];
        while self.peek().tok == Tok::Comma {
            self.next();
            ops.push(self.operand()?);
        }
        Ok(ops)
    }

    fn lookup<'a>(regs: &'a [Register], op: &Operand) -> Result<&'a Register, QasmError> {
        regs.iter()
            .find(|r| r.name == op.name)
            .ok_or_else(|| QasmError::UnknownRegister { name: op.name.clone(), line: op.line, col: op.col })
    }

    /// Flat index of an indexed operand.
    fn resolve(regs: &[Register], op: &Operand) -> Result<usize, QasmError> {
        let reg = Self::lookup(regs, op)?;
        let index = op.index.ok_or_else(|| QasmError::Syntax {
            message: format!("operand `{}` must be indexed", op.name),
            line: op.line,
            col: op.col,
        })?;
        if index >= reg.size {
            return Err(QasmError::IndexOutOfRange {
                register: reg.name.clone(),
                index,
                size: reg.size,
                line: op.line,
                col: op.col,
            });
        }
        Ok(reg.offset + index)
    }

    fn declare(&mut self, quantum: bool) -> Result<(), QasmError> {
        let (name, name_tok) = self.ident()?;
        self.expect(Tok::LBracket)?;
        let size_tok = self.peek().clone();
        let size = self.int()?;
        self.expect(Tok::RBracket)?;
        self.expect(Tok::Semi)?;
        if self.qregs.iter().chain(&self.cregs).any(|r| r.name == name) {
            return Err(QasmError::DuplicateRegister { name, line: name_tok.line, col: name_tok.col });
        }
        let regs = if quantum { &mut self.qregs } else { &mut self.cregs };
        let offset: usize = regs.iter().map(|r| r.size).sum();
        if size == 0 || offset + size > MAX_QUBITS {
            return Err(Self::syntax(&size_tok, format!("register size must be between 1 and {MAX_QUBITS} in total")));
        }
        regs.push(Register { name, offset, size });
        Ok(())
    }

    fn statement(&mut self) -> Result<bool, QasmError> {
        let start = self.peek().clone();
        let word = match &start.tok {
            Tok::Eof => return Ok(false),
            Tok::Ident(s) => s.clone(),
            other => return Err(Self::syntax(&start, format!("expected statement, found {}", other.describe()))),
        };
        self.next();
        match word.as_str() {
            "OPENQASM" => return Err(Self::syntax(&start, "duplicate OPENQASM header")),
            "include" => {
                let t = self.next();
                if !matches!(t.tok, Tok::Str(_)) {
                    return Err(Self::syntax(&t, format!("expected file name, found {}", t.tok.describe())));
                }
                self.expect(Tok::Semi)?;
            }
            "qreg" => self.declare(true)?,
            "creg" => self.declare(false)?,
            "measure" => {
                let q = self.operand()?;
                self.expect(Tok::Arrow)?;
                let c = self.operand()?;
                self.expect(Tok::Semi)?;
                let qubit = Self::resolve(&self.qregs, &q)?;
                let clbit = Self::resolve(&self.cregs, &c)?;
                self.body.push((Instruction::Measure { qubit, clbit }, start.line, start.col));
            }
            "barrier" => {
                let ops = self.operand_list()?;
                self.expect(Tok::Semi)?;
                let mut qubits = Vec::new();
                for op in &ops {
                    if op.index.is_some() {
                        qubits.push(Self::resolve(&self.qregs, op)?);
                    } else {
                        let reg = Self::lookup(&self.qregs, op)?;
                        qubits.extend(reg.offset..reg.offset + reg.size);
                    }
                }
                self.body.push((Instruction::Barrier { qubits }, start.line, start.col));
            }
            name => {
                let gate = if name == "cx" {
                    None
                } else {
                    Some(name.parse::<OneQubitGate>().ok().filter(|g| g.name() == name).ok_or_else(|| {
                        QasmError::UnknownGate { name: name.to_string(), line: start.line, col: start.col }
                    })?)
                };
                let ops = self.operand_list()?;
                self.expect(Tok::Semi)?;
                let want = if gate.is_some() { 1 } else { 2 };
                if ops.len() != want {
                    return Err(Self::syntax(&start, format!("`{name}` takes {want} operand(s), got {}", ops.len())));
                }
                let qubits = ops.iter().map(|op| Self::resolve(&self.qregs, op)).collect::<Result<Vec<_>, _>>()?;
                let inst = match gate {
                    Some(gate) => Instruction::Single { gate, qubit: qubits[0] },
                    None => {
                        if qubits[0] == qubits[1] {
                            return Err(QasmError::RepeatedOperand { qubit: qubits[0], line: ops[1].line, col: ops[1].col });
                        }
                        Instruction::Cnot { control: qubits[0], target: qubits[1] }
                    }
                };
                self.body.push((inst, start.line, start.col));
            }
        }
        Ok(true)
    }
}

pub(super) fn parse(src: &str) -> Result<Circuit, QasmError> {
    let mut p = Parser { toks: lex(src)?, pos: 0, qregs: Vec::new(), cregs: Vec::new(), body: Vec::new() };
    p.header()?;
    while p.statement()? {}

    let n_qubits = p.qregs.iter().map(|r| r.size).sum();
    let n_clbits = p.cregs.iter().map(|r| r.size).sum();
    let mut circuit = Circuit::new(n_qubits, n_clbits, "qasm");
    for (inst, line, col) in p.body {
        circuit.push(inst).map_err(|e| match e {
            CircuitError::RepeatedOperand(qubit) => QasmError::RepeatedOperand { qubit, line, col },
            other => QasmError::InvalidCircuit { message: other.to_string(), line, col },
        })?;
    }
    Ok(circuit)
}
