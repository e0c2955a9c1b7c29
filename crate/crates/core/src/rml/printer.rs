use std::fmt::{self, Display, Formatter};

use super::ast::*;

fn arith_prec(e: &ArithExpr) -> u8 {
    match e {
        ArithExpr::Bin(ArithOp::Add | ArithOp::Sub, ..) => 1,
        ArithExpr::Bin(..) => 2,
        ArithExpr::Neg(_) | ArithExpr::Const(_) | ArithExpr::Var(_) => 3,
    }
}

fn bool_prec(e: &BoolExpr) -> u8 {
    match e {
        BoolExpr::Iff(..) => 1,
        BoolExpr::Or(..) => 2,
        BoolExpr::And(..) => 3,
        BoolExpr::Not(_) => 4,
        BoolExpr::Cmp(..) => 5,
        BoolExpr::Const(_) => 6,
    }
}

struct Wrap<'a, T>(&'a T, bool);

impl Display for Wrap<'_, ArithExpr> {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        if self.1 {
            write!(f, "({})", self.0)
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl Display for Wrap<'_, BoolExpr> {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        if self.1 {
            write!(f, "({})", self.0)
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl Display for ArithExpr {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            ArithExpr::Const(n) => write!(f, "{n}"),
            ArithExpr::Var(v) => write!(f, "{}", v.name),
            ArithExpr::Neg(inner) => {
                let bare = matches!(**inner, ArithExpr::Var(_));
                write!(f, "-{}", Wrap(&**inner, !bare))
            }
            ArithExpr::Bin(op, l, r) => {
                let p = arith_prec(self);
                let sym = match op {
                    ArithOp::Add => "+",
                    ArithOp::Sub => "-",
                    ArithOp::Mul => "*",
                    ArithOp::Div => "/",
                    ArithOp::Mod => "mod",
                };
                write!(
                    f,
                    "{} {sym} {}",
                    Wrap(&**l, arith_prec(l) < p),
                    Wrap(&**r, arith_prec(r) <= p)
                )
            }
        }
    }
}

impl Display for BoolExpr {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        let p = bool_prec(self);
        let infix = |f: &mut Formatter<'_>, sym: &str, l: &BoolExpr, r: &BoolExpr| {
            write!(
                f,
                "{} {sym} {}",
                Wrap(l, bool_prec(l) < p),
                Wrap(r, bool_prec(r) <= p)
            )
        };
        match self {
            BoolExpr::Const(b) => write!(f, "{b}"),
            BoolExpr::Not(inner) => write!(f, "!{}", Wrap(&**inner, bool_prec(inner) < p)),
            BoolExpr::And(l, r) => infix(f, "&", l, r),
            BoolExpr::Or(l, r) => infix(f, "|", l, r),
            BoolExpr::Iff(l, r) => infix(f, "<=>", l, r),
            BoolExpr::Cmp(op, l, r) => {
                let sym = match op {
                    CmpOp::Eq => "=",
                    CmpOp::Ne => "!=",
                    CmpOp::Lt => "<",
                    CmpOp::Le => "<=",
                    CmpOp::Ge => ">=",
                    CmpOp::Gt => ">",
                };
                write!(f, "{l} {sym} {r}")
            }
        }
    }
}

impl Display for Command {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] {} -> ",
            self.action.as_deref().unwrap_or(""),
            self.guard
        )?;
        if self.updates.is_empty() {
            return write!(f, "true;");
        }
        for (i, u) in self.updates.iter().enumerate() {
            if i > 0 {
                write!(f, " & ")?;
            }
            write!(f, "{} := {}", u.var.name, u.value)?;
        }
        write!(f, ";")
    }
}

impl Display for Module {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        writeln!(f, "module {}", self.name)?;
        for d in &self.decls {
            writeln!(
                f,
                "  {}: [{}..{}] init {};",
                d.name, d.lower, d.upper, d.init
            )?;
        }
        for c in &self.commands {
            writeln!(f, "  {c}")?;
        }
        writeln!(f, "endmodule")
    }
}

impl Display for Program {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        if let Some(phi) = &self.safety_invariant {
            writeln!(f, "lightning = {phi};")?;
        }
        for m in &self.modules {
            writeln!(f)?;
            write!(f, "{m}")?;
        }
        Ok(())
    }
}
