//! Byte-deterministic SMT-LIB 2.6 rendering of a script.
//!
//! Command order is fixed: optional `set-info :status`, `set-logic`,
//! datatype declarations, constant declarations, function declarations,
//! assertions in script order, `check-sat`, `exit`. One command per line,
//! LF endings. Printing the same script twice yields identical bytes.

use std::fmt::Write as _;

use crate::sexp::fmt_symbol;

use super::{SmtScript, Sort, StatusHint, Term};

pub fn print_smtlib(script: &SmtScript) -> String {
    let mut out = String::new();
    if let Some(hint) = script.status_hint {
        let status = match hint {
            StatusHint::Sat => "sat",
            StatusHint::Unsat => "unsat",
        };
        writeln!(out, "(set-info :status {status})").unwrap();
    }
    writeln!(out, "(set-logic {})", script.logic).unwrap();
    for dt in &script.datatypes {
        write!(out, "(declare-datatype {} (", fmt_symbol(&dt.name)).unwrap();
        for (i, ctor) in dt.constructors.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            write!(out, "({})", fmt_symbol(ctor)).unwrap();
        }
        out.push_str("))\n");
    }
    for (name, sort) in &script.consts {
        writeln!(out, "(declare-const {} {})", fmt_symbol(name), sort_text(sort)).unwrap();
    }
    for f in &script.funs {
        let args: Vec<String> = f.args.iter().map(sort_text).collect();
        writeln!(
            out,
            "(declare-fun {} ({}) {})",
            fmt_symbol(&f.name),
            args.join(" "),
            sort_text(&f.ret)
        )
        .unwrap();
    }
    for assert in &script.asserts {
        out.push_str("(assert ");
        write_term(&mut out, assert);
        out.push_str(")\n");
    }
    out.push_str("(check-sat)\n(exit)\n");
    out
}

fn sort_text(sort: &Sort) -> String {
    match sort {
        Sort::Named(name) => fmt_symbol(name),
        other => other.to_string(),
    }
}

fn write_term(out: &mut String, term: &Term) {
    match term {
        Term::Sym(name) => out.push_str(&fmt_symbol(name)),
        Term::Int(v) => {
            if *v < 0 {
                write!(out, "(- {})", v.unsigned_abs()).unwrap();
            } else {
                write!(out, "{v}").unwrap();
            }
        }
        Term::Bv(bits) => write!(out, "{bits}").unwrap(),
        Term::Eq(a, b) => write_app2(out, "=", a, b),
        Term::Distinct(a, b) => write_app2(out, "distinct", a, b),
        Term::BvAnd(a, b) => write_app2(out, "bvand", a, b),
        Term::Or(xs) => {
            out.push_str("(or");
            for x in xs {
                out.push(' ');
                write_term(out, x);
            }
            out.push(')');
        }
        Term::Extract { hi, lo, arg } => {
            write!(out, "((_ extract {hi} {lo}) ").unwrap();
            write_term(out, arg);
            out.push(')');
        }
        Term::App(name, args) => {
            write!(out, "({}", fmt_symbol(name)).unwrap();
            for arg in args {
                out.push(' ');
                write_term(out, arg);
            }
            out.push(')');
        }
    }
}

fn write_app2(out: &mut String, op: &str, a: &Term, b: &Term) {
    write!(out, "({op} ").unwrap();
    write_term(out, a);
    out.push(' ');
    write_term(out, b);
    out.push(')');
}
