//! Frontend for the reactive-modules language: lexing, parsing, validation,
//! expression evaluation and pretty-printing.
//!
//! ```text
//! lightning = x = 5 & y = 5;      // optional safety invariant
//! module A
//!   x: [0..5] init 0;
//!   [] x<5 -> x:=x+1;
//!   [reset] x=5 -> x:=0;
//! endmodule
//! ```
//!
//! Both `:=` and `'=` assign. An empty update list is written as `true`,
//! `∅`, `(∅)` or left out entirely.

mod ast;
mod eval;
mod lexer;
mod parser;
mod printer;

use std::collections::{HashMap, HashSet};

use thiserror::Error;

pub use ast::*;
pub use eval::{eval_arith, eval_bool, EvalError};
pub use lexer::{is_ident_continue, is_ident_start, is_keyword};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FrontendError {
    #[error("{pos}: syntax error: expected {expected}, found {found}")]
    Syntax {
        pos: Pos,
        expected: String,
        found: String,
    },
    #[error("{pos}: undeclared variable `{name}`")]
    UndeclaredVariable { name: String, pos: Pos },
    #[error("{pos}: module `{module}` assigns `{var}`, which is declared in another module")]
    CrossModuleAssignment {
        var: String,
        module: String,
        pos: Pos,
    },
    #[error("{pos}: variable `{name}` declared more than once")]
    DuplicateVariable { name: String, pos: Pos },
    #[error("{pos}: module `{name}` defined more than once")]
    DuplicateModule { name: String, pos: Pos },
    #[error("{pos}: initial value {init} of `{name}` is outside [{lower}..{upper}]")]
    InitOutOfRange {
        name: String,
        lower: i64,
        upper: i64,
        init: i64,
        pos: Pos,
    },
    #[error("{pos}: variable `{var}` assigned twice in one command")]
    DuplicateAssignment { var: String, pos: Pos },
}

/// Parses and validates a complete program.
pub fn parse_program(source: &str) -> Result<Program, FrontendError> {
    let mut p = parser::Parser::new(source)?;
    let program = p.program()?;
    p.expect_eof()?;
    validate(program)
}

/// Parses a standalone Boolean expression and resolves its variables against `vars`.
pub fn parse_bool_expr(source: &str, vars: &[VarInfo]) -> Result<BoolExpr, FrontendError> {
    let mut p = parser::Parser::new(source)?;
    let mut e = p.bool_expr()?;
    p.expect_eof()?;
    let slots = slot_map(vars);
    let mut err = None;
    e.visit_vars_mut(&mut |v| resolve(v, &slots, &mut err));
    match err {
        Some(e) => Err(e),
        None => Ok(e),
    }
}

fn slot_map(vars: &[VarInfo]) -> HashMap<&str, usize> {
    vars.iter()
        .enumerate()
        .map(|(i, v)| (v.name.as_str(), i))
        .collect()
}

fn resolve(v: &mut VarRef, slots: &HashMap<&str, usize>, err: &mut Option<FrontendError>) {
    match slots.get(v.name.as_str()) {
        Some(&slot) => v.slot = slot,
        None => {
            if err.is_none() {
                *err = Some(FrontendError::UndeclaredVariable {
                    name: v.name.clone(),
                    pos: v.pos,
                });
            }
        }
    }
}

/// Checks the program invariants and assigns variable slots.
pub fn validate(mut program: Program) -> Result<Program, FrontendError> {
    let mut module_names = HashSet::new();
    for m in &program.modules {
        if !module_names.insert(m.name.as_str()) {
            return Err(FrontendError::DuplicateModule {
                name: m.name.clone(),
                pos: m.pos,
            });
        }
    }
    let mut owner: HashMap<String, usize> = HashMap::new();
    for (mi, m) in program.modules.iter().enumerate() {
        for d in &m.decls {
            if owner.insert(d.name.clone(), mi).is_some() {
                return Err(FrontendError::DuplicateVariable {
                    name: d.name.clone(),
                    pos: d.pos,
                });
            }
            if !(d.lower <= d.init && d.init <= d.upper) {
                return Err(FrontendError::InitOutOfRange {
                    name: d.name.clone(),
                    lower: d.lower,
                    upper: d.upper,
                    init: d.init,
                    pos: d.pos,
                });
            }
        }
    }
    let vars = program.variables();
    let slots = slot_map(&vars);
    let mut err = None;
    if let Some(phi) = program.safety_invariant.as_mut() {
        phi.visit_vars_mut(&mut |v| resolve(v, &slots, &mut err));
    }
    for m in program.modules.iter_mut() {
        for c in m.commands.iter_mut() {
            c.guard.visit_vars_mut(&mut |v| resolve(v, &slots, &mut err));
            for u in c.updates.iter_mut() {
                resolve(&mut u.var, &slots, &mut err);
                u.value.visit_vars_mut(&mut |v| resolve(v, &slots, &mut err));
            }
        }
    }
    if let Some(e) = err {
        return Err(e);
    }
    for (mi, m) in program.modules.iter().enumerate() {
        for c in &m.commands {
            let mut assigned = HashSet::new();
            for u in &c.updates {
                if vars[u.var.slot].module != mi {
                    return Err(FrontendError::CrossModuleAssignment {
                        var: u.var.name.clone(),
                        module: m.name.clone(),
                        pos: u.var.pos,
                    });
                }
                if !assigned.insert(u.var.slot) {
                    return Err(FrontendError::DuplicateAssignment {
                        var: u.var.name.clone(),
                        pos: u.var.pos,
                    });
                }
            }
        }
    }
    Ok(program)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    pub(crate) const FIG3: &str = "
        lightning = false;
        module A
            x: [0..5] init 0;
            [] x<5 -> x:=x+1;
            [reset] x=5 -> x:=0;
        endmodule
        module B
            y: [0..5] init 0;
            [] y<5 -> y:=y+1;
            [reset] y=5 -> y:=0;
        endmodule";

    const PUZZLE: &str = "
        lightning = counter != 60 & steps = 20;
        module PuzzleBox
            counter: [0..61] init 0;
            steps: [0..20] init 0;
            [btn1] steps<20 -> counter:=counter+2 & steps:=steps+1;
            [btn2] steps<20 -> counter:=counter*7+1 & steps:=steps+1;
            [btn3] steps<20 -> counter:=counter*counter & steps:=steps+1;
        endmodule";

    #[test]
    fn two_module_program() {
        let p = parse_program(FIG3).unwrap();
        assert_eq!(p.modules.len(), 2);
        assert_eq!(p.modules[0].name, "A");
        assert_eq!(p.modules[1].name, "B");
        let d = &p.modules[0].decls[0];
        assert_eq!((d.name.as_str(), d.lower, d.upper, d.init), ("x", 0, 5, 0));
        assert_eq!(p.modules[0].commands.len(), 2);
        assert_eq!(p.modules[0].commands[1].action.as_deref(), Some("reset"));
        assert_eq!(p.modules[0].commands[0].action, None);
        assert_eq!(p.synchronising_actions(), vec!["reset".to_string()]);
    }

    #[test]
    fn minimal_program() {
        let p = parse_program("lightning = false; module M x:[0..0] init 0; endmodule").unwrap();
        assert_eq!(p.modules.len(), 1);
        assert!(p.modules[0].commands.is_empty());
        assert_eq!(p.safety_invariant, Some(BoolExpr::Const(false)));
    }

    #[test]
    fn puzzle_box_program() {
        let p = parse_program(PUZZLE).unwrap();
        assert_eq!(p.modules.len(), 1);
        let m = &p.modules[0];
        assert_eq!(m.decls.len(), 2);
        let actions: Vec<_> = m.commands.iter().map(|c| c.action.clone().unwrap()).collect();
        assert_eq!(actions, ["btn1", "btn2", "btn3"]);
    }

    #[test]
    fn window_syntax_variants() {
        let p = parse_program(
            "module Window w: [0..3] init 0;
               [install] w=0 -> w'=r;
               [a_throws] w=1 -> (∅);
               [a_throws] w=2 -> (w'=3);
               [j_throws] w=1 -> ;
               [j_throws] w=2 -> true;
             endmodule
             module Rebeca r: [0..2] init 0; [install] r>0 -> ∅; endmodule",
        )
        .unwrap();
        let cmds = &p.modules[0].commands;
        assert_eq!(cmds[0].updates[0].value, ArithExpr::var("r"));
        assert!(cmds[1].updates.is_empty());
        assert_eq!(cmds[2].updates.len(), 1);
        assert!(cmds[3].updates.is_empty() && cmds[4].updates.is_empty());
        assert!(p.safety_invariant.is_none());
    }

    #[test]
    fn error_kinds() {
        let err = |s: &str| parse_program(s).unwrap_err();
        assert!(matches!(
            err("module M x:[0..1] init 0; [] y=0 -> x:=1; endmodule"),
            FrontendError::UndeclaredVariable { ref name, .. } if name == "y"
        ));
        assert!(matches!(
            err("module M x:[0..1] init 0; endmodule module N y:[0..1] init 0; [] true -> x:=1; endmodule"),
            FrontendError::CrossModuleAssignment { .. }
        ));
        assert!(matches!(
            err("module M x:[0..1] init 0; endmodule module N x:[0..1] init 0; endmodule"),
            FrontendError::DuplicateVariable { .. }
        ));
        assert!(matches!(
            err("module M x:[0..1] init 2; endmodule"),
            FrontendError::InitOutOfRange { init: 2, .. }
        ));
        assert!(matches!(
            err("module M x:[0..1] init 0; [] true -> x:=1 & x:=0; endmodule"),
            FrontendError::DuplicateAssignment { .. }
        ));
        assert!(matches!(
            err("module M x:[0..1] init 0; endmodule module M y:[0..1] init 0; endmodule"),
            FrontendError::DuplicateModule { .. }
        ));
        match err("module M x:[0..1] init 0;\n [] x<1 x:=1; endmodule") {
            FrontendError::Syntax { pos, expected, .. } => {
                assert_eq!(pos, Pos { line: 2, col: 9 });
                assert!(expected.contains("->"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn keywords_are_reserved() {
        assert!(matches!(
            parse_program("module init x:[0..1] init 0; endmodule"),
            Err(FrontendError::Syntax { .. })
        ));
    }

    /// Mutating any variable occurrence into an unknown name must be rejected.
    #[test]
    fn undeclared_mutations_rejected() {
        let src = PUZZLE;
        let vars = ["counter", "steps"];
        let mut occurrences = Vec::new();
        let bytes = src.as_bytes();
        let mut i = 0;
        while i < bytes.len() {
            if is_ident_start(bytes[i] as char) && (i == 0 || !is_ident_continue(bytes[i - 1] as char)) {
                let start = i;
                while i < bytes.len() && is_ident_continue(bytes[i] as char) {
                    i += 1;
                }
                if vars.contains(&&src[start..i]) {
                    occurrences.push(start..i);
                }
            } else {
                i += 1;
            }
        }
        assert!(occurrences.len() > 10);
        for r in occurrences {
            let mutated = format!("{}zz_undeclared{}", &src[..r.start], &src[r.end..]);
            assert!(
                matches!(parse_program(&mutated), Err(FrontendError::UndeclaredVariable { .. })),
                "mutation at {r:?} accepted"
            );
        }
    }

    #[test]
    fn standalone_expression() {
        let p = parse_program(FIG3).unwrap();
        let vars = p.variables();
        let e = parse_bool_expr("x = 5 & y = 5", &vars).unwrap();
        assert!(eval_bool(&e, &[5, 5]).unwrap());
        assert!(matches!(
            parse_bool_expr("z = 1", &vars),
            Err(FrontendError::UndeclaredVariable { .. })
        ));
    }

    #[test]
    fn print_reparse_fixed_programs() {
        for src in [FIG3, PUZZLE] {
            let p = parse_program(src).unwrap();
            let q = parse_program(&p.to_string()).unwrap();
            assert_eq!(p, q);
        }
    }

    fn arb_arith(vars: Vec<String>) -> BoxedStrategy<ArithExpr> {
        let leaf = prop_oneof![
            (-20i64..20).prop_map(ArithExpr::Const),
            proptest::sample::select(vars).prop_map(|v| ArithExpr::var(&v)),
        ];
        leaf.prop_recursive(3, 16, 2, |inner| {
            let op = prop_oneof![
                Just(ArithOp::Add),
                Just(ArithOp::Sub),
                Just(ArithOp::Mul),
                Just(ArithOp::Div),
                Just(ArithOp::Mod)
            ];
            prop_oneof![
                inner.clone().prop_map(|e| ArithExpr::Neg(Box::new(e))),
                (op, inner.clone(), inner).prop_map(|(o, l, r)| ArithExpr::bin(o, l, r)),
            ]
        })
        .boxed()
    }

    fn arb_bool(vars: Vec<String>) -> BoxedStrategy<BoolExpr> {
        let cmp = prop_oneof![
            Just(CmpOp::Eq),
            Just(CmpOp::Ne),
            Just(CmpOp::Lt),
            Just(CmpOp::Le),
            Just(CmpOp::Ge),
            Just(CmpOp::Gt)
        ];
        let leaf = prop_oneof![
            any::<bool>().prop_map(BoolExpr::Const),
            (cmp, arb_arith(vars.clone()), arb_arith(vars)).prop_map(|(o, l, r)| BoolExpr::Cmp(o, l, r)),
        ];
        leaf.prop_recursive(3, 16, 2, |inner| {
            prop_oneof![
                inner.clone().prop_map(|e| BoolExpr::Not(Box::new(e))),
                (inner.clone(), inner.clone()).prop_map(|(l, r)| BoolExpr::and(l, r)),
                (inner.clone(), inner.clone()).prop_map(|(l, r)| BoolExpr::or(l, r)),
                (inner.clone(), inner).prop_map(|(l, r)| BoolExpr::Iff(Box::new(l), Box::new(r))),
            ]
        })
        .boxed()
    }

    fn arb_program() -> impl Strategy<Value = Program> {
        let vars: Vec<String> = vec!["a".into(), "b".into(), "c".into()];
        let cmd = (
            proptest::option::of(proptest::sample::select(vec!["go", "sync"])),
            arb_bool(vars.clone()),
            proptest::option::of(arb_arith(vars.clone())),
        );
        (
            proptest::option::of(arb_bool(vars.clone())),
            proptest::collection::vec(cmd.clone(), 0..4),
            proptest::collection::vec(cmd, 0..4),
        )
            .prop_map(|(phi, c1, c2)| {
                let mk = |cmds: Vec<(Option<&str>, BoolExpr, Option<ArithExpr>)>, target: &str| {
                    cmds.into_iter()
                        .map(|(a, g, u)| Command {
                            action: a.map(str::to_string),
                            guard: g,
                            updates: u
                                .map(|value| Update {
                                    var: VarRef::new(target),
                                    value,
                                })
                                .into_iter()
                                .collect(),
                            pos: Pos::default(),
                        })
                        .collect()
                };
                let decl = |n: &str, lo: i64| Decl {
                    name: n.into(),
                    lower: lo,
                    upper: lo + 4,
                    init: lo,
                    pos: Pos::default(),
                };
                Program {
                    safety_invariant: phi,
                    modules: vec![
                        Module {
                            name: "P".into(),
                            decls: vec![decl("a", -2), decl("b", 0)],
                            commands: mk(c1, "a"),
                            pos: Pos::default(),
                        },
                        Module {
                            name: "Q".into(),
                            decls: vec![decl("c", 1)],
                            commands: mk(c2, "c"),
                            pos: Pos::default(),
                        },
                    ],
                }
            })
    }

    proptest! {
        #[test]
        fn print_parse_round_trip(p in arb_program()) {
            let text = p.to_string();
            let parsed = parse_program(&text).unwrap();
            prop_assert_eq!(&parsed, &p);
            let again = parse_program(&parsed.to_string()).unwrap();
            prop_assert_eq!(again, parsed);
        }
    }
}
