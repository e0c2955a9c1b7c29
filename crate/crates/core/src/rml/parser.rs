use super::ast::*;
use super::lexer::{tokenize, Tok, Token};
use super::FrontendError;

/// Untyped expression tree; checked into [`ArithExpr`] / [`BoolExpr`] afterwards.
#[derive(Debug)]
enum Raw {
    Int(i64, Pos),
    Var(String, Pos),
    Bool(bool, Pos),
    Not(Box<Raw>, Pos),
    Neg(Box<Raw>, Pos),
    Arith(ArithOp, Box<Raw>, Box<Raw>, Pos),
    Cmp(CmpOp, Box<Raw>, Box<Raw>, Pos),
    And(Box<Raw>, Box<Raw>, Pos),
    Or(Box<Raw>, Box<Raw>, Pos),
    Iff(Box<Raw>, Box<Raw>, Pos),
}

impl Raw {
    fn pos(&self) -> Pos {
        match self {
            Raw::Int(_, p)
            | Raw::Var(_, p)
            | Raw::Bool(_, p)
            | Raw::Not(_, p)
            | Raw::Neg(_, p)
            | Raw::Arith(_, _, _, p)
            | Raw::Cmp(_, _, _, p)
            | Raw::And(_, _, p)
            | Raw::Or(_, _, p)
            | Raw::Iff(_, _, p) => *p,
        }
    }

    fn is_bool(&self) -> bool {
        matches!(
            self,
            Raw::Bool(..) | Raw::Not(..) | Raw::Cmp(..) | Raw::And(..) | Raw::Or(..) | Raw::Iff(..)
        )
    }
}

fn type_error(raw: &Raw, expected: &str) -> FrontendError {
    FrontendError::Syntax {
        pos: raw.pos(),
        expected: expected.into(),
        found: if raw.is_bool() {
            "a Boolean expression".into()
        } else {
            "an arithmetic expression".into()
        },
    }
}

fn to_arith(raw: Raw) -> Result<ArithExpr, FrontendError> {
    Ok(match raw {
        Raw::Int(n, _) => ArithExpr::Const(n),
        Raw::Var(name, pos) => ArithExpr::Var(VarRef {
            name,
            slot: usize::MAX,
            pos,
        }),
        Raw::Neg(e, _) => ArithExpr::Neg(Box::new(to_arith(*e)?)),
        Raw::Arith(op, l, r, _) => ArithExpr::bin(op, to_arith(*l)?, to_arith(*r)?),
        other => return Err(type_error(&other, "an arithmetic expression")),
    })
}

fn to_bool(raw: Raw) -> Result<BoolExpr, FrontendError> {
    Ok(match raw {
        Raw::Bool(b, _) => BoolExpr::Const(b),
        Raw::Not(e, _) => BoolExpr::Not(Box::new(to_bool(*e)?)),
        Raw::And(l, r, _) => BoolExpr::and(to_bool(*l)?, to_bool(*r)?),
        Raw::Or(l, r, _) => BoolExpr::or(to_bool(*l)?, to_bool(*r)?),
        Raw::Iff(l, r, _) => BoolExpr::Iff(Box::new(to_bool(*l)?), Box::new(to_bool(*r)?)),
        Raw::Cmp(op, l, r, _) => BoolExpr::Cmp(op, to_arith(*l)?, to_arith(*r)?),
        other => return Err(type_error(&other, "a Boolean expression")),
    })
}

pub(crate) struct Parser {
    toks: Vec<Token>,
    at: usize,
}

impl Parser {
    pub(crate) fn new(src: &str) -> Result<Self, FrontendError> {
        Ok(Parser {
            toks: tokenize(src)?,
            at: 0,
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.at].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let i = (self.at + k).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn pos(&self) -> Pos {
        self.toks[self.at].pos
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.at].clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == tok {
            self.bump();
            true
        } else {
            false
        }
    }

    fn error(&self, expected: impl Into<String>) -> FrontendError {
        FrontendError::Syntax {
            pos: self.pos(),
            expected: expected.into(),
            found: self.peek().describe(),
        }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<Pos, FrontendError> {
        if self.peek() == &tok {
            Ok(self.bump().pos)
        } else {
            Err(self.error(what))
        }
    }

    fn ident(&mut self, what: &str) -> Result<(String, Pos), FrontendError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                let pos = self.bump().pos;
                Ok((s, pos))
            }
            _ => Err(self.error(what)),
        }
    }

    fn int(&mut self) -> Result<i64, FrontendError> {
        let neg = self.eat(&Tok::Minus);
        match *self.peek() {
            Tok::Int(n) => {
                self.bump();
                Ok(if neg { -n } else { n })
            }
            _ => Err(self.error("integer")),
        }
    }

    pub(crate) fn expect_eof(&mut self) -> Result<(), FrontendError> {
        if self.peek() == &Tok::Eof {
            Ok(())
        } else {
            Err(self.error("end of input"))
        }
    }

    pub(crate) fn program(&mut self) -> Result<Program, FrontendError> {
        let mut safety_invariant = None;
        if self.eat(&Tok::Lightning) {
            self.expect(Tok::Eq, "`=` after `lightning`")?;
            safety_invariant = Some(self.bool_expr()?);
            self.expect(Tok::Semi, "`;` after the safety invariant")?;
        }
        let mut modules = Vec::new();
        while self.peek() != &Tok::Eof {
            modules.push(self.module()?);
        }
        Ok(Program {
            safety_invariant,
            modules,
        })
    }

    fn module(&mut self) -> Result<Module, FrontendError> {
        let pos = self.expect(Tok::Module, "`module`")?;
        let (name, _) = self.ident("module name")?;
        let mut decls = Vec::new();
        while matches!(self.peek(), Tok::Ident(_)) && self.peek_at(1) == &Tok::Colon {
            decls.push(self.decl()?);
        }
        let mut commands = Vec::new();
        while self.peek() == &Tok::LBracket {
            commands.push(self.command()?);
        }
        if self.peek() != &Tok::EndModule {
            return Err(self.error(if commands.is_empty() {
                "declaration, command or `endmodule`"
            } else {
                "command or `endmodule`"
            }));
        }
        self.bump();
        Ok(Module {
            name,
            decls,
            commands,
            pos,
        })
    }

    fn decl(&mut self) -> Result<Decl, FrontendError> {
        let (name, pos) = self.ident("variable name")?;
        self.expect(Tok::Colon, "`:`")?;
        self.expect(Tok::LBracket, "`[`")?;
        let lower = self.int()?;
        self.expect(Tok::DotDot, "`..`")?;
        let upper = self.int()?;
        self.expect(Tok::RBracket, "`]`")?;
        self.expect(Tok::Init, "`init`")?;
        let init = self.int()?;
        self.expect(Tok::Semi, "`;`")?;
        Ok(Decl {
            name,
            lower,
            upper,
            init,
            pos,
        })
    }

    fn command(&mut self) -> Result<Command, FrontendError> {
        let pos = self.expect(Tok::LBracket, "`[`")?;
        let action = match self.peek().clone() {
            Tok::Ident(a) => {
                self.bump();
                Some(a)
            }
            _ => None,
        };
        self.expect(Tok::RBracket, "`]` or action name")?;
        let guard = self.bool_expr()?;
        self.expect(Tok::Arrow, "`->`")?;
        let updates = self.updates()?;
        self.expect(Tok::Semi, "`;` after command")?;
        Ok(Command {
            action,
            guard,
            updates,
            pos,
        })
    }

    fn updates(&mut self) -> Result<Vec<Update>, FrontendError> {
        match (self.peek(), self.peek_at(1), self.peek_at(2)) {
            (Tok::Semi, _, _) => return Ok(Vec::new()),
            (Tok::True, Tok::Semi, _) | (Tok::Empty, Tok::Semi, _) => {
                self.bump();
                return Ok(Vec::new());
            }
            (Tok::LParen, Tok::Empty, Tok::RParen) => {
                self.bump();
                self.bump();
                self.bump();
                return Ok(Vec::new());
            }
            _ => {}
        }
        let mut out = vec![self.assignment()?];
        while self.eat(&Tok::Amp) {
            out.push(self.assignment()?);
        }
        Ok(out)
    }

    fn assignment(&mut self) -> Result<Update, FrontendError> {
        let parens = self.peek() == &Tok::LParen
            && matches!(self.peek_at(1), Tok::Ident(_))
            && self.peek_at(2) == &Tok::Assign;
        if parens {
            self.bump();
        }
        let (name, pos) = self.ident("assignment target")?;
        self.expect(Tok::Assign, "`:=` or `'=`")?;
        let value = to_arith(self.additive()?)?;
        if parens {
            self.expect(Tok::RParen, "`)`")?;
        }
        Ok(Update {
            var: VarRef {
                name,
                slot: usize::MAX,
                pos,
            },
            value,
        })
    }

    pub(crate) fn bool_expr(&mut self) -> Result<BoolExpr, FrontendError> {
        let raw = self.iff()?;
        to_bool(raw)
    }

    fn iff(&mut self) -> Result<Raw, FrontendError> {
        let mut lhs = self.or()?;
        while self.peek() == &Tok::Iff {
            let pos = self.bump().pos;
            let rhs = self.or()?;
            lhs = Raw::Iff(Box::new(lhs), Box::new(rhs), pos);
        }
        Ok(lhs)
    }

    fn or(&mut self) -> Result<Raw, FrontendError> {
        let mut lhs = self.and()?;
        while self.peek() == &Tok::Bar {
            let pos = self.bump().pos;
            let rhs = self.and()?;
            lhs = Raw::Or(Box::new(lhs), Box::new(rhs), pos);
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<Raw, FrontendError> {
        let mut lhs = self.not()?;
        while self.peek() == &Tok::Amp {
            let pos = self.bump().pos;
            let rhs = self.not()?;
            lhs = Raw::And(Box::new(lhs), Box::new(rhs), pos);
        }
        Ok(lhs)
    }

    fn not(&mut self) -> Result<Raw, FrontendError> {
        if self.peek() == &Tok::Bang {
            let pos = self.bump().pos;
            let inner = self.not()?;
            return Ok(Raw::Not(Box::new(inner), pos));
        }
        self.comparison()
    }

    fn comparison(&mut self) -> Result<Raw, FrontendError> {
        let lhs = self.additive()?;
        let op = match self.peek() {
            Tok::Eq => CmpOp::Eq,
            Tok::Ne => CmpOp::Ne,
            Tok::Lt => CmpOp::Lt,
            Tok::Le => CmpOp::Le,
            Tok::Gt => CmpOp::Gt,
            Tok::Ge => CmpOp::Ge,
            _ => return Ok(lhs),
        };
        let pos = self.bump().pos;
        let rhs = self.additive()?;
        Ok(Raw::Cmp(op, Box::new(lhs), Box::new(rhs), pos))
    }

    fn additive(&mut self) -> Result<Raw, FrontendError> {
        let mut lhs = self.multiplicative()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => ArithOp::Add,
                Tok::Minus => ArithOp::Sub,
                _ => return Ok(lhs),
            };
            let pos = self.bump().pos;
            let rhs = self.multiplicative()?;
            lhs = Raw::Arith(op, Box::new(lhs), Box::new(rhs), pos);
        }
    }

    fn multiplicative(&mut self) -> Result<Raw, FrontendError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Star => ArithOp::Mul,
                Tok::Slash => ArithOp::Div,
                Tok::Mod => ArithOp::Mod,
                _ => return Ok(lhs),
            };
            let pos = self.bump().pos;
            let rhs = self.unary()?;
            lhs = Raw::Arith(op, Box::new(lhs), Box::new(rhs), pos);
        }
    }

    fn unary(&mut self) -> Result<Raw, FrontendError> {
        if self.peek() == &Tok::Minus {
            let pos = self.bump().pos;
            if let Tok::Int(n) = *self.peek() {
                self.bump();
                return Ok(Raw::Int(-n, pos));
            }
            let inner = self.unary()?;
            return Ok(Raw::Neg(Box::new(inner), pos));
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Raw, FrontendError> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Int(n) => {
                self.bump();
                Ok(Raw::Int(n, pos))
            }
            Tok::Ident(name) => {
                self.bump();
                Ok(Raw::Var(name, pos))
            }
            Tok::True => {
                self.bump();
                Ok(Raw::Bool(true, pos))
            }
            Tok::False => {
                self.bump();
                Ok(Raw::Bool(false, pos))
            }
            Tok::LParen => {
                self.bump();
                let inner = self.iff()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(inner)
            }
            _ => Err(self.error("expression")),
        }
    }
}
