use std::fmt;

/// Line/column position in a source file, both 1-based.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct Pos {
    pub line: u32,
    pub col: u32,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

/// A variable occurrence. `slot` is the global variable index assigned during
/// validation; equality ignores both `slot` and `pos`.
#[derive(Debug, Clone)]
pub struct VarRef {
    pub name: String,
    pub slot: usize,
    pub pos: Pos,
}

impl VarRef {
    pub fn new(name: impl Into<String>) -> Self {
        VarRef {
            name: name.into(),
            slot: usize::MAX,
            pos: Pos::default(),
        }
    }
}

impl PartialEq for VarRef {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
    }
}

impl Eq for VarRef {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Ge,
    Gt,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ArithExpr {
    Const(i64),
    Var(VarRef),
    Neg(Box<ArithExpr>),
    Bin(ArithOp, Box<ArithExpr>, Box<ArithExpr>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BoolExpr {
    Const(bool),
    Not(Box<BoolExpr>),
    And(Box<BoolExpr>, Box<BoolExpr>),
    Or(Box<BoolExpr>, Box<BoolExpr>),
    Iff(Box<BoolExpr>, Box<BoolExpr>),
    Cmp(CmpOp, ArithExpr, ArithExpr),
}

impl ArithExpr {
    pub fn var(name: &str) -> Self {
        ArithExpr::Var(VarRef::new(name))
    }

    pub fn bin(op: ArithOp, l: ArithExpr, r: ArithExpr) -> Self {
        ArithExpr::Bin(op, Box::new(l), Box::new(r))
    }

    pub fn visit_vars<'a>(&'a self, f: &mut impl FnMut(&'a VarRef)) {
        match self {
            ArithExpr::Const(_) => {}
            ArithExpr::Var(v) => f(v),
            ArithExpr::Neg(e) => e.visit_vars(f),
            ArithExpr::Bin(_, l, r) => {
                l.visit_vars(f);
                r.visit_vars(f);
            }
        }
    }

    pub(crate) fn visit_vars_mut(&mut self, f: &mut impl FnMut(&mut VarRef)) {
        match self {
            ArithExpr::Const(_) => {}
            ArithExpr::Var(v) => f(v),
            ArithExpr::Neg(e) => e.visit_vars_mut(f),
            ArithExpr::Bin(_, l, r) => {
                l.visit_vars_mut(f);
                r.visit_vars_mut(f);
            }
        }
    }
}

impl BoolExpr {
    pub fn cmp(op: CmpOp, l: ArithExpr, r: ArithExpr) -> Self {
        BoolExpr::Cmp(op, l, r)
    }

    pub fn and(l: BoolExpr, r: BoolExpr) -> Self {
        BoolExpr::And(Box::new(l), Box::new(r))
    }

    pub fn or(l: BoolExpr, r: BoolExpr) -> Self {
        BoolExpr::Or(Box::new(l), Box::new(r))
    }

    /// Left-nested disjunction; `false` when empty.
    pub fn any(items: impl IntoIterator<Item = BoolExpr>) -> Self {
        items
            .into_iter()
            .reduce(BoolExpr::or)
            .unwrap_or(BoolExpr::Const(false))
    }

    /// Left-nested conjunction; `true` when empty.
    pub fn all(items: impl IntoIterator<Item = BoolExpr>) -> Self {
        items
            .into_iter()
            .reduce(BoolExpr::and)
            .unwrap_or(BoolExpr::Const(true))
    }

    pub fn visit_vars<'a>(&'a self, f: &mut impl FnMut(&'a VarRef)) {
        match self {
            BoolExpr::Const(_) => {}
            BoolExpr::Not(e) => e.visit_vars(f),
            BoolExpr::And(l, r) | BoolExpr::Or(l, r) | BoolExpr::Iff(l, r) => {
                l.visit_vars(f);
                r.visit_vars(f);
            }
            BoolExpr::Cmp(_, l, r) => {
                l.visit_vars(f);
                r.visit_vars(f);
            }
        }
    }

    pub(crate) fn visit_vars_mut(&mut self, f: &mut impl FnMut(&mut VarRef)) {
        match self {
            BoolExpr::Const(_) => {}
            BoolExpr::Not(e) => e.visit_vars_mut(f),
            BoolExpr::And(l, r) | BoolExpr::Or(l, r) | BoolExpr::Iff(l, r) => {
                l.visit_vars_mut(f);
                r.visit_vars_mut(f);
            }
            BoolExpr::Cmp(_, l, r) => {
                l.visit_vars_mut(f);
                r.visit_vars_mut(f);
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct Decl {
    pub name: String,
    pub lower: i64,
    pub upper: i64,
    pub init: i64,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Update {
    pub var: VarRef,
    pub value: ArithExpr,
}

#[derive(Debug, Clone)]
pub struct Command {
    /// `None` is the empty action.
    pub action: Option<String>,
    pub guard: BoolExpr,
    pub updates: Vec<Update>,
    pub pos: Pos,
}

#[derive(Debug, Clone)]
pub struct Module {
    pub name: String,
    pub decls: Vec<Decl>,
    pub commands: Vec<Command>,
    pub pos: Pos,
}

// Source positions are metadata and do not take part in structural equality.
impl PartialEq for Decl {
    fn eq(&self, o: &Self) -> bool {
        (&self.name, self.lower, self.upper, self.init) == (&o.name, o.lower, o.upper, o.init)
    }
}
impl Eq for Decl {}

impl PartialEq for Command {
    fn eq(&self, o: &Self) -> bool {
        self.action == o.action && self.guard == o.guard && self.updates == o.updates
    }
}
impl Eq for Command {}

impl PartialEq for Module {
    fn eq(&self, o: &Self) -> bool {
        self.name == o.name && self.decls == o.decls && self.commands == o.commands
    }
}
impl Eq for Module {}

/// A parsed and validated reactive-modules program.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Program {
    pub safety_invariant: Option<BoolExpr>,
    pub modules: Vec<Module>,
}

/// One declared variable, in global declaration order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VarInfo {
    pub name: String,
    pub lower: i64,
    pub upper: i64,
    pub init: i64,
    pub module: usize,
}

impl Program {
    /// All declared variables in declaration order; the index is the variable's slot.
    pub fn variables(&self) -> Vec<VarInfo> {
        self.modules
            .iter()
            .enumerate()
            .flat_map(|(m, module)| {
                module.decls.iter().map(move |d| VarInfo {
                    name: d.name.clone(),
                    lower: d.lower,
                    upper: d.upper,
                    init: d.init,
                    module: m,
                })
            })
            .collect()
    }

    pub fn module_index(&self, name: &str) -> Option<usize> {
        self.modules.iter().position(|m| m.name == name)
    }

    /// Named actions in order of first appearance.
    pub fn named_actions(&self) -> Vec<String> {
        let mut seen = Vec::<String>::new();
        for m in &self.modules {
            for c in &m.commands {
                if let Some(a) = &c.action {
                    if !seen.contains(a) {
                        seen.push(a.clone());
                    }
                }
            }
        }
        seen
    }

    /// Actions occurring in more than one module, in order of first appearance.
    pub fn synchronising_actions(&self) -> Vec<String> {
        self.named_actions()
            .into_iter()
            .filter(|a| self.modules_with_action(a).len() > 1)
            .collect()
    }

    pub fn modules_with_action(&self, action: &str) -> Vec<usize> {
        self.modules
            .iter()
            .enumerate()
            .filter(|(_, m)| {
                m.commands
                    .iter()
                    .any(|c| c.action.as_deref() == Some(action))
            })
            .map(|(i, _)| i)
            .collect()
    }
}

/// Synthetic action name given to the `j`-th command of module `i` when it
/// has the empty action.
pub fn synthetic_action(module: usize, command: usize) -> String {
    format!("__m{module}_c{command}")
}

/// Inverse of [`synthetic_action`].
pub fn parse_synthetic_action(name: &str) -> Option<(usize, usize)> {
    let rest = name.strip_prefix("__m")?;
    let (m, c) = rest.split_once("_c")?;
    Some((m.parse().ok()?, c.parse().ok()?))
}
