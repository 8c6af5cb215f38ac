//! Abstract syntax for the generated SMT-LIB 2.6 scripts.
//!
//! A [`SmtScript`] is the fragment-independent shape of one emitted file:
//! a logic name, datatype/constant/function declarations, and an ordered
//! list of assertions built from a small term language (equality,
//! disequality, disjunction, bitwise and, bit extraction, function
//! application, and literals). Construction lives in [`encode`], byte
//! output in [`print_smtlib`], the inverse reader in [`read_script`],
//! metric extraction in [`formula_stats`], and the reference decision
//! procedure in [`oracle_sat`].

mod encode;
mod oracle;
mod print;
mod read;
mod stats;

pub use encode::{encode, EncodeError};
pub use oracle::{oracle_model, oracle_sat, SatStatus, DEFAULT_ORACLE_BUDGET};
pub use print::print_smtlib;
pub use read::{read_script, ReadError};
pub use stats::{formula_stats, stats_from_script, Cardinality, FormulaStats, StatsError};

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// One of the six quantifier-free logic fragments a script can target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Fragment {
    QfBv,
    QfDt,
    QfIdl,
    QfUfBv,
    QfUfDt,
    QfUfIdl,
}

impl Fragment {
    pub const ALL: [Fragment; 6] = [
        Fragment::QfBv,
        Fragment::QfDt,
        Fragment::QfIdl,
        Fragment::QfUfBv,
        Fragment::QfUfDt,
        Fragment::QfUfIdl,
    ];

    /// The SMT-LIB logic name, also used verbatim in `set-logic`.
    pub fn logic_name(self) -> &'static str {
        match self {
            Fragment::QfBv => "QF_BV",
            Fragment::QfDt => "QF_DT",
            Fragment::QfIdl => "QF_IDL",
            Fragment::QfUfBv => "QF_UFBV",
            Fragment::QfUfDt => "QF_UFDT",
            Fragment::QfUfIdl => "QF_UFIDL",
        }
    }

    /// Lowercase spelling used in command-line flags and file names.
    pub fn lowercase(self) -> &'static str {
        match self {
            Fragment::QfBv => "qf_bv",
            Fragment::QfDt => "qf_dt",
            Fragment::QfIdl => "qf_idl",
            Fragment::QfUfBv => "qf_ufbv",
            Fragment::QfUfDt => "qf_ufdt",
            Fragment::QfUfIdl => "qf_ufidl",
        }
    }

    /// Whether place values are accessed through an uninterpreted function.
    pub fn uses_uf(self) -> bool {
        matches!(self, Fragment::QfUfBv | Fragment::QfUfDt | Fragment::QfUfIdl)
    }
}

impl fmt::Display for Fragment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.logic_name())
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("unknown logic fragment `{0}`")]
pub struct UnknownFragment(pub String);

impl FromStr for Fragment {
    type Err = UnknownFragment;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Fragment::ALL
            .into_iter()
            .find(|f| s.eq_ignore_ascii_case(f.logic_name()))
            .ok_or_else(|| UnknownFragment(s.to_string()))
    }
}

/// How one instance is turned into a script: target fragment, unit count,
/// and whether to embed the oracle's verdict as a `set-info :status` line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodingConfig {
    pub fragment: Fragment,
    pub num_units: u32,
    pub emit_status_hint: bool,
    /// Upper bound on any bitvector width the encoding may declare.
    pub max_width: u32,
}

pub const DEFAULT_MAX_WIDTH: u32 = 65_536;

impl EncodingConfig {
    pub fn new(fragment: Fragment, num_units: u32) -> Self {
        assert!(num_units >= 1, "unit count must be at least 1");
        EncodingConfig { fragment, num_units, emit_status_hint: false, max_width: DEFAULT_MAX_WIDTH }
    }

    pub fn with_status_hint(mut self) -> Self {
        self.emit_status_hint = true;
        self
    }
}

/// Fixed-width bitvector value, least significant bit at index 0.
/// Printed most-significant-first as `#b...`, matching SMT-LIB literals.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Bits {
    bits: Vec<bool>,
}

impl Bits {
    pub fn zeros(width: u32) -> Self {
        assert!(width >= 1, "bitvector width must be at least 1");
        Bits { bits: vec![false; width as usize] }
    }

    /// The low `width` bits of `value`; panics if `value` does not fit.
    pub fn from_value(value: u64, width: u32) -> Self {
        assert!(
            width as usize >= 64 - value.leading_zeros() as usize || value == 0,
            "value {value} does not fit in {width} bits"
        );
        let mut b = Bits::zeros(width);
        for i in 0..(width as usize).min(64) {
            b.bits[i] = value >> i & 1 == 1;
        }
        b
    }

    /// Parses the payload of a `#b...` literal (most significant bit first).
    pub fn from_binary_str(msb_first: &str) -> Option<Self> {
        if msb_first.is_empty() {
            return None;
        }
        let mut bits = Vec::with_capacity(msb_first.len());
        for c in msb_first.chars().rev() {
            match c {
                '0' => bits.push(false),
                '1' => bits.push(true),
                _ => return None,
            }
        }
        Some(Bits { bits })
    }

    /// Parses the payload of a `#x...` literal (most significant digit first).
    pub fn from_hex_str(msd_first: &str) -> Option<Self> {
        if msd_first.is_empty() {
            return None;
        }
        let mut bits = Vec::with_capacity(msd_first.len() * 4);
        for c in msd_first.chars().rev() {
            let d = c.to_digit(16)? as u8;
            for i in 0..4 {
                bits.push(d >> i & 1 == 1);
            }
        }
        Some(Bits { bits })
    }

    pub fn width(&self) -> u32 {
        self.bits.len() as u32
    }

    /// Bit at LSB-first index `i`.
    pub fn get(&self, i: usize) -> bool {
        self.bits[i]
    }

    pub fn set(&mut self, i: usize, value: bool) {
        self.bits[i] = value;
    }

    pub fn is_zero(&self) -> bool {
        self.bits.iter().all(|b| !b)
    }

    /// LSB-first indices of the set bits, ascending.
    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.iter().enumerate().filter(|(_, b)| **b).map(|(i, _)| i)
    }

    /// Most-significant-first character rendering (the part after `#b`).
    pub fn to_binary_string(&self) -> String {
        self.bits.iter().rev().map(|b| if *b { '1' } else { '0' }).collect()
    }
}

impl fmt::Display for Bits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#b{}", self.to_binary_string())
    }
}

/// Sort of a term. `Bool` is only ever inferred, never declared.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Sort {
    Bool,
    Int,
    BitVec(u32),
    Named(String),
}

impl fmt::Display for Sort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sort::Bool => f.write_str("Bool"),
            Sort::Int => f.write_str("Int"),
            Sort::BitVec(w) => write!(f, "(_ BitVec {w})"),
            Sort::Named(name) => f.write_str(name),
        }
    }
}

/// Assertion-level term language: just the operators the six encodings
/// and mainstream solver models need.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Term {
    /// Declared constant or nullary datatype constructor.
    Sym(String),
    Int(i64),
    Bv(Bits),
    Eq(Box<Term>, Box<Term>),
    Distinct(Box<Term>, Box<Term>),
    Or(Vec<Term>),
    BvAnd(Box<Term>, Box<Term>),
    /// `((_ extract hi lo) arg)`: bits `hi..=lo` of `arg`, LSB-first.
    Extract { hi: u32, lo: u32, arg: Box<Term> },
    /// Uninterpreted-function application.
    App(String, Vec<Term>),
}

impl Term {
    pub fn sym(name: impl Into<String>) -> Term {
        Term::Sym(name.into())
    }

    pub fn eq(a: Term, b: Term) -> Term {
        Term::Eq(Box::new(a), Box::new(b))
    }

    pub fn distinct(a: Term, b: Term) -> Term {
        Term::Distinct(Box::new(a), Box::new(b))
    }

    pub fn bvand(a: Term, b: Term) -> Term {
        Term::BvAnd(Box::new(a), Box::new(b))
    }

    pub fn extract(hi: u32, lo: u32, arg: Term) -> Term {
        Term::Extract { hi, lo, arg: Box::new(arg) }
    }

    /// A disjunction, except that a single disjunct is kept bare: the
    /// emitted scripts never wrap one-armed `or`s.
    pub fn disjunction(mut disjuncts: Vec<Term>) -> Term {
        assert!(!disjuncts.is_empty(), "disjunction needs at least one arm");
        if disjuncts.len() == 1 {
            disjuncts.pop().unwrap()
        } else {
            Term::Or(disjuncts)
        }
    }

    /// Number of operator-application nodes in this term. Every non-leaf
    /// node counts one; literals and symbols are leaves.
    pub fn op_count(&self) -> u64 {
        match self {
            Term::Sym(_) | Term::Int(_) | Term::Bv(_) => 0,
            Term::Eq(a, b) | Term::Distinct(a, b) | Term::BvAnd(a, b) => {
                1 + a.op_count() + b.op_count()
            }
            Term::Or(xs) | Term::App(_, xs) => {
                1 + xs.iter().map(Term::op_count).sum::<u64>()
            }
            Term::Extract { arg, .. } => 1 + arg.op_count(),
        }
    }
}

/// Algebraic datatype declaration with nullary constructors only.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Datatype {
    pub name: String,
    pub constructors: Vec<String>,
}

/// Uninterpreted function declaration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunDecl {
    pub name: String,
    pub args: Vec<Sort>,
    pub ret: Sort,
}

/// Status recorded in an optional `set-info :status` line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StatusHint {
    Sat,
    Unsat,
}

/// One SMT-LIB file in abstract form. The trailing `check-sat` and `exit`
/// commands are implicit; the printer always emits them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SmtScript {
    pub logic: String,
    pub status_hint: Option<StatusHint>,
    pub datatypes: Vec<Datatype>,
    pub consts: Vec<(String, Sort)>,
    pub funs: Vec<FunDecl>,
    pub asserts: Vec<Term>,
}

impl SmtScript {
    pub fn new(logic: impl Into<String>) -> Self {
        SmtScript {
            logic: logic.into(),
            status_hint: None,
            datatypes: Vec::new(),
            consts: Vec::new(),
            funs: Vec::new(),
            asserts: Vec::new(),
        }
    }

    pub fn num_asserts(&self) -> u64 {
        self.asserts.len() as u64
    }

    pub fn num_ops(&self) -> u64 {
        self.asserts.iter().map(Term::op_count).sum()
    }

    /// Checks that every symbol used in an assertion is declared and that
    /// all operators are applied at consistent sorts, with each assertion
    /// inferring to `Bool`.
    pub fn validate(&self) -> Result<(), SortError> {
        let ctx = SortContext::build(self)?;
        for (index, term) in self.asserts.iter().enumerate() {
            let sort = ctx.infer(term)?;
            if sort != Sort::Bool {
                return Err(SortError::AssertNotBoolean { index, found: sort.to_string() });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SortError {
    #[error("symbol `{0}` declared more than once")]
    DuplicateSymbol(String),
    #[error("symbol `{0}` used but never declared")]
    UndeclaredSymbol(String),
    #[error("operator `{operator}` applied at incompatible sorts {left} and {right}")]
    OperandMismatch { operator: &'static str, left: String, right: String },
    #[error("extraction [{hi}:{lo}] does not fit argument sort {arg}")]
    BadExtraction { hi: u32, lo: u32, arg: String },
    #[error("`{name}` applied to {found} arguments, declared with {expected}")]
    ArityMismatch { name: String, expected: usize, found: usize },
    #[error("assertion {index} has sort {found}, expected Bool")]
    AssertNotBoolean { index: usize, found: String },
}

struct SortContext {
    consts: std::collections::HashMap<String, Sort>,
    funs: std::collections::HashMap<String, (Vec<Sort>, Sort)>,
}

impl SortContext {
    fn build(script: &SmtScript) -> Result<Self, SortError> {
        let mut consts = std::collections::HashMap::new();
        let mut funs = std::collections::HashMap::new();
        let declare = |name: &str, sort: Sort, consts: &mut std::collections::HashMap<String, Sort>| {
            if consts.insert(name.to_string(), sort).is_some() {
                return Err(SortError::DuplicateSymbol(name.to_string()));
            }
            Ok(())
        };
        for dt in &script.datatypes {
            for ctor in &dt.constructors {
                declare(ctor, Sort::Named(dt.name.clone()), &mut consts)?;
            }
        }
        for (name, sort) in &script.consts {
            declare(name, sort.clone(), &mut consts)?;
        }
        for f in &script.funs {
            let clash = consts.contains_key(&f.name)
                || funs.insert(f.name.clone(), (f.args.clone(), f.ret.clone())).is_some();
            if clash {
                return Err(SortError::DuplicateSymbol(f.name.clone()));
            }
        }
        Ok(SortContext { consts, funs })
    }

    fn infer(&self, term: &Term) -> Result<Sort, SortError> {
        match term {
            Term::Sym(name) => self
                .consts
                .get(name)
                .cloned()
                .ok_or_else(|| SortError::UndeclaredSymbol(name.clone())),
            Term::Int(_) => Ok(Sort::Int),
            Term::Bv(bits) => Ok(Sort::BitVec(bits.width())),
            Term::Eq(a, b) => self.homogeneous("=", a, b).map(|_| Sort::Bool),
            Term::Distinct(a, b) => self.homogeneous("distinct", a, b).map(|_| Sort::Bool),
            Term::Or(xs) => {
                for x in xs {
                    let sort = self.infer(x)?;
                    if sort != Sort::Bool {
                        return Err(SortError::OperandMismatch {
                            operator: "or",
                            left: Sort::Bool.to_string(),
                            right: sort.to_string(),
                        });
                    }
                }
                Ok(Sort::Bool)
            }
            Term::BvAnd(a, b) => {
                let sort = self.homogeneous("bvand", a, b)?;
                match sort {
                    Sort::BitVec(_) => Ok(sort),
                    other => Err(SortError::OperandMismatch {
                        operator: "bvand",
                        left: other.to_string(),
                        right: other.to_string(),
                    }),
                }
            }
            Term::Extract { hi, lo, arg } => {
                let sort = self.infer(arg)?;
                match sort {
                    Sort::BitVec(w) if lo <= hi && *hi < w => Ok(Sort::BitVec(hi - lo + 1)),
                    other => Err(SortError::BadExtraction {
                        hi: *hi,
                        lo: *lo,
                        arg: other.to_string(),
                    }),
                }
            }
            Term::App(name, args) => {
                let (arg_sorts, ret) = self
                    .funs
                    .get(name)
                    .ok_or_else(|| SortError::UndeclaredSymbol(name.clone()))?;
                if arg_sorts.len() != args.len() {
                    return Err(SortError::ArityMismatch {
                        name: name.clone(),
                        expected: arg_sorts.len(),
                        found: args.len(),
                    });
                }
                for (arg, expected) in args.iter().zip(arg_sorts) {
                    let found = self.infer(arg)?;
                    if found != *expected {
                        return Err(SortError::OperandMismatch {
                            operator: "apply",
                            left: expected.to_string(),
                            right: found.to_string(),
                        });
                    }
                }
                Ok(ret.clone())
            }
        }
    }

    fn homogeneous(&self, operator: &'static str, a: &Term, b: &Term) -> Result<Sort, SortError> {
        let left = self.infer(a)?;
        let right = self.infer(b)?;
        if left == right {
            Ok(left)
        } else {
            Err(SortError::OperandMismatch {
                operator,
                left: left.to_string(),
                right: right.to_string(),
            })
        }
    }
}

/// Smallest `w` with `2^w >= x`; 0 for `x <= 1`.
pub(crate) fn ceil_log2(x: u32) -> u32 {
    if x <= 1 {
        0
    } else {
        32 - (x - 1).leading_zeros()
    }
}

/// Bit width of the uninterpreted function's argument in QF_UFBV:
/// enough bits to injectively number `place_count` places, at least 1
/// because zero-width bitvector sorts are not legal SMT-LIB.
pub(crate) fn lambda_width(place_count: u32) -> u32 {
    ceil_log2(place_count).max(1)
}

/// Conventional file name for an emitted script:
/// `<net>_<fragment>_n<units>.smt2` with the fragment lowercased.
pub fn script_file_name(net_name: &str, fragment: Fragment, num_units: u32) -> String {
    format!("{net_name}_{}_n{num_units}.smt2", fragment.lowercase())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bits_round_trip_and_order() {
        let b = Bits::from_value(0b01, 2);
        assert!(b.get(0));
        assert!(!b.get(1));
        assert_eq!(b.to_string(), "#b01");
        assert_eq!(Bits::from_binary_str("01"), Some(b));
        assert_eq!(Bits::from_hex_str("a").unwrap().to_string(), "#b1010");
        assert!(Bits::from_binary_str("0x1").is_none());
    }

    #[test]
    fn ceil_log2_matches_power_boundaries() {
        let cases = [(1, 0), (2, 1), (3, 2), (4, 2), (5, 3), (56, 6), (64, 6), (65, 7), (80, 7), (128, 7), (129, 8)];
        for (x, expected) in cases {
            assert_eq!(ceil_log2(x), expected, "ceil_log2({x})");
        }
        assert_eq!(lambda_width(1), 1);
        assert_eq!(lambda_width(2), 1);
        assert_eq!(lambda_width(3), 2);
    }

    #[test]
    fn op_count_counts_every_application() {
        // (or (distinct ((_ extract 0 0) b) #b0) (distinct ((_ extract 1 0) b) #b00))
        let arm = |hi| {
            Term::distinct(Term::extract(hi, 0, Term::sym("b")), Term::Bv(Bits::zeros(hi + 1)))
        };
        let t = Term::Or(vec![arm(0), arm(1)]);
        assert_eq!(t.op_count(), 5);
        assert_eq!(Term::sym("b").op_count(), 0);
    }

    #[test]
    fn disjunction_keeps_single_arm_bare() {
        let single = Term::disjunction(vec![Term::sym("a")]);
        assert_eq!(single, Term::sym("a"));
        let double = Term::disjunction(vec![Term::sym("a"), Term::sym("b")]);
        assert!(matches!(double, Term::Or(_)));
    }

    #[test]
    fn fragment_names_round_trip() {
        for f in Fragment::ALL {
            assert_eq!(f.logic_name().parse::<Fragment>(), Ok(f));
            assert_eq!(f.lowercase().parse::<Fragment>(), Ok(f));
        }
        assert!("qf_lra".parse::<Fragment>().is_err());
    }

    #[test]
    fn file_name_scheme() {
        assert_eq!(script_file_name("demo", Fragment::QfUfBv, 4), "demo_qf_ufbv_n4.smt2");
    }

    #[test]
    fn validate_catches_sort_errors() {
        let mut script = SmtScript::new("QF_BV");
        script.consts.push(("b".to_string(), Sort::BitVec(2)));
        script.asserts.push(Term::eq(Term::sym("b"), Term::Bv(Bits::zeros(2))));
        assert_eq!(script.validate(), Ok(()));

        script.asserts.push(Term::eq(Term::sym("b"), Term::Bv(Bits::zeros(3))));
        assert!(matches!(script.validate(), Err(SortError::OperandMismatch { .. })));
        script.asserts.pop();

        script.asserts.push(Term::sym("b"));
        assert!(matches!(script.validate(), Err(SortError::AssertNotBoolean { .. })));
        script.asserts.pop();

        script.asserts.push(Term::eq(Term::sym("missing"), Term::Int(1)));
        assert!(matches!(script.validate(), Err(SortError::UndeclaredSymbol(_))));
    }
}
