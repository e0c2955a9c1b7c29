use super::ast::{ArithExpr, ArithOp, BoolExpr, CmpOp};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("integer overflow")]
    Overflow,
}

/// Evaluates `e` over a state given as values indexed by variable slot.
///
/// Division truncates toward zero and `mod` takes the sign of the dividend.
pub fn eval_arith(e: &ArithExpr, state: &[i64]) -> Result<i64, EvalError> {
    match e {
        ArithExpr::Const(n) => Ok(*n),
        ArithExpr::Var(v) => Ok(state[v.slot]),
        ArithExpr::Neg(inner) => eval_arith(inner, state)?
            .checked_neg()
            .ok_or(EvalError::Overflow),
        ArithExpr::Bin(op, l, r) => {
            let a = eval_arith(l, state)?;
            let b = eval_arith(r, state)?;
            match op {
                ArithOp::Add => a.checked_add(b).ok_or(EvalError::Overflow),
                ArithOp::Sub => a.checked_sub(b).ok_or(EvalError::Overflow),
                ArithOp::Mul => a.checked_mul(b).ok_or(EvalError::Overflow),
                ArithOp::Div if b == 0 => Err(EvalError::DivisionByZero),
                ArithOp::Mod if b == 0 => Err(EvalError::DivisionByZero),
                ArithOp::Div => a.checked_div(b).ok_or(EvalError::Overflow),
                ArithOp::Mod => a.checked_rem(b).ok_or(EvalError::Overflow),
            }
        }
    }
}

pub fn eval_bool(b: &BoolExpr, state: &[i64]) -> Result<bool, EvalError> {
    match b {
        BoolExpr::Const(v) => Ok(*v),
        BoolExpr::Not(e) => Ok(!eval_bool(e, state)?),
        BoolExpr::And(l, r) => Ok(eval_bool(l, state)? && eval_bool(r, state)?),
        BoolExpr::Or(l, r) => Ok(eval_bool(l, state)? || eval_bool(r, state)?),
        BoolExpr::Iff(l, r) => Ok(eval_bool(l, state)? == eval_bool(r, state)?),
        BoolExpr::Cmp(op, l, r) => {
            let a = eval_arith(l, state)?;
            let b = eval_arith(r, state)?;
            Ok(match op {
                CmpOp::Eq => a == b,
                CmpOp::Ne => a != b,
                CmpOp::Lt => a < b,
                CmpOp::Le => a <= b,
                CmpOp::Ge => a >= b,
                CmpOp::Gt => a > b,
            })
        }
    }
}
