//! A tiny monotone expression machine over binary program tapes.
//!
//! A program is one expression, read bit by bit from the tape through a
//! complete prefix code of operators:
//!
//! ```text
//! 00      emit 0
//! 01      emit 1
//! 10      seq   <expr> <expr>     run both in order
//! 110     rep   <lit> <expr>      run expr lit times; lit = 1 means forever
//! 1110    prn   <lit>             emit the binary expansion of lit
//! 11110   setc  <lit>             counter := lit
//! 111110  putc                    emit the binary expansion of the counter
//! 111111  inc                     counter := counter + 1
//! ```
//!
//! Literals start at one and are built most-significant-first: token `0`
//! doubles, token `10` doubles and adds one, token `11` ends. A power of
//! two therefore costs two bits plus one per doubling, which is what makes
//! round instance numbers cheap for this machine.
//!
//! Both operator and literal token sets are complete prefix codes, so every
//! infinite bit stream parses deterministically and the only mid-tape
//! outcome is "needs more bits". The set of exactly parsed tapes, the
//! minimal programs, is prefix-free by construction; enumeration and the
//! mass estimators lean on that.
//!
//! Execution is budgeted: one step per expression entered plus one per bit
//! emitted, a hard step ceiling, and an output cap. A program that runs out
//! of either budget is recorded as not halted with whatever monotone output
//! it had produced.

use super::bits::Bits;
use crate::error::{Error, Result};

/// Machine revision stamped into cache files; bump on any change to the
/// operator table, literal coding, or step accounting.
pub const INSTRUCTION_SET_VERSION: u32 = 1;

/// Hard ceiling on the enumeration length budget.
pub const MAX_ENUMERATION_LEN: usize = 24;

/// Resource limits for one run and for enumeration.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Budget {
    /// Longest program length enumerated, in bits.
    pub max_len: usize,
    /// Step ceiling per program run.
    pub max_steps: u64,
    /// Output cap per program run, in bits.
    pub max_output: usize,
}

impl Budget {
    /// The house defaults: L = 20, T = 10^4 steps, 512 output bits.
    #[must_use]
    pub fn standard() -> Self {
        Budget {
            max_len: 20,
            max_steps: 10_000,
            max_output: 512,
        }
    }

    #[must_use]
    pub fn with_max_len(self, max_len: usize) -> Self {
        Budget { max_len, ..self }
    }

    #[must_use]
    pub fn with_max_steps(self, max_steps: u64) -> Self {
        Budget { max_steps, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_len == 0 || self.max_steps == 0 || self.max_output == 0 {
            return Err(Error::Domain {
                what: "every budget component must be positive".into(),
            });
        }
        if self.max_len > MAX_ENUMERATION_LEN {
            return Err(Error::BudgetExceeded {
                task: "program enumeration",
                needed: 1u64 << self.max_len.min(63),
                cap: 1u64 << MAX_ENUMERATION_LEN,
            });
        }
        Ok(())
    }
}

/// One enumerated (or directly run) program with everything its execution
/// produced. Immutable once built.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProgramRecord {
    /// The exact bits the machine consumed.
    pub program: Bits,
    /// Monotone output, truncated at the output cap.
    pub output: Bits,
    /// The whole expression ran to completion within both budgets.
    pub halted: bool,
    /// Steps consumed when execution stopped.
    pub steps: u64,
}

/// Result of offering a tape to the machine.
#[derive(Clone, Debug)]
pub enum VmOutcome {
    /// The tape ended in the middle of the expression; `consumed` bits were
    /// read and more are required.
    NeedsMoreBits { consumed: usize },
    /// A complete expression was parsed; the record's program holds exactly
    /// the consumed prefix, so a tape with trailing bits is recognizable by
    /// comparing lengths.
    Ran(ProgramRecord),
}

#[derive(Clone, Debug)]
pub(crate) enum Expr {
    Emit(bool),
    Seq(Box<Expr>, Box<Expr>),
    Rep(u64, Box<Expr>),
    PrintN(u64),
    SetC(u64),
    PutC,
    Inc,
}

pub(crate) enum Parse {
    Complete { expr: Expr, consumed: usize },
    NeedsMoreBits,
}

struct Cursor<'a> {
    tape: &'a Bits,
    pos: usize,
}

impl Cursor<'_> {
    fn next(&mut self) -> Option<bool> {
        if self.pos < self.tape.len() {
            let bit = self.tape.get(self.pos);
            self.pos += 1;
            Some(bit)
        } else {
            None
        }
    }
}

fn parse_literal(cur: &mut Cursor) -> Option<u64> {
    let mut value: u64 = 1;
    loop {
        if cur.next()? {
            if cur.next()? {
                return Some(value);
            }
            value = value.saturating_mul(2).saturating_add(1);
        } else {
            value = value.saturating_mul(2);
        }
    }
}

fn parse_expr(cur: &mut Cursor) -> Option<Expr> {
    if !cur.next()? {
        return Some(Expr::Emit(cur.next()?));
    }
    if !cur.next()? {
        let first = parse_expr(cur)?;
        let second = parse_expr(cur)?;
        return Some(Expr::Seq(Box::new(first), Box::new(second)));
    }
    if !cur.next()? {
        let count = parse_literal(cur)?;
        let body = parse_expr(cur)?;
        return Some(Expr::Rep(count, Box::new(body)));
    }
    if !cur.next()? {
        return Some(Expr::PrintN(parse_literal(cur)?));
    }
    if !cur.next()? {
        return Some(Expr::SetC(parse_literal(cur)?));
    }
    if !cur.next()? {
        return Some(Expr::PutC);
    }
    Some(Expr::Inc)
}

/// Parses one whole expression from the start of the tape.
pub(crate) fn parse_program(tape: &Bits) -> Parse {
    let mut cur = Cursor { tape, pos: 0 };
    match parse_expr(&mut cur) {
        Some(expr) => Parse::Complete {
            expr,
            consumed: cur.pos,
        },
        None => Parse::NeedsMoreBits,
    }
}

struct Machine<'a> {
    budget: &'a Budget,
    steps: u64,
    output: Bits,
    counter: u64,
}

impl Machine<'_> {
    /// Consumes one step; false once the ceiling is hit.
    fn charge(&mut self) -> bool {
        if self.steps >= self.budget.max_steps {
            return false;
        }
        self.steps += 1;
        true
    }

    fn emit(&mut self, bit: bool) -> bool {
        if self.output.len() >= self.budget.max_output || !self.charge() {
            return false;
        }
        self.output.push(bit);
        true
    }

    fn emit_number(&mut self, value: u64) -> bool {
        let top = 63 - value.leading_zeros().min(63);
        for shift in (0..=top).rev() {
            if !self.emit((value >> shift) & 1 == 1) {
                return false;
            }
        }
        true
    }

    /// Runs one expression; false when a budget cut execution short.
    fn exec(&mut self, expr: &Expr) -> bool {
        if !self.charge() {
            return false;
        }
        match expr {
            Expr::Emit(bit) => self.emit(*bit),
            Expr::Seq(first, second) => self.exec(first) && self.exec(second),
            Expr::Rep(1, body) => loop {
                if !self.exec(body) {
                    return false;
                }
            },
            Expr::Rep(count, body) => {
                for _ in 0..*count {
                    if !self.exec(body) {
                        return false;
                    }
                }
                true
            }
            Expr::PrintN(value) => self.emit_number(*value),
            Expr::SetC(value) => {
                self.counter = *value;
                true
            }
            Expr::PutC => self.emit_number(self.counter),
            Expr::Inc => {
                self.counter = self.counter.saturating_add(1);
                true
            }
        }
    }
}

pub(crate) fn execute(expr: &Expr, program: Bits, budget: &Budget) -> ProgramRecord {
    let mut machine = Machine {
        budget,
        steps: 0,
        output: Bits::new(),
        counter: 1,
    };
    let halted = machine.exec(expr);
    ProgramRecord {
        program,
        output: machine.output,
        halted,
        steps: machine.steps,
    }
}

/// Runs the machine on a tape. Reading is demand-driven: the record covers
/// exactly the consumed prefix, trailing bits are never touched, and a tape
/// that ends mid-expression reports how much was read. Identical inputs
/// produce identical records.
#[must_use]
pub fn vm_run(tape: &Bits, budget: &Budget) -> VmOutcome {
    match parse_program(tape) {
        Parse::NeedsMoreBits => VmOutcome::NeedsMoreBits {
            consumed: tape.len(),
        },
        Parse::Complete { expr, consumed } => {
            let mut program = tape.clone();
            while program.len() > consumed {
                program.pop();
            }
            VmOutcome::Ran(execute(&expr, program, budget))
        }
    }
}
