//! Reader for the subset of SMT-LIB 2.6 this crate emits.
//!
//! `read_script(print_smtlib(s))` reconstructs `s` exactly; the reader
//! also powers metric extraction from `.smt2` files on disk. Commands and
//! operators outside the emitted subset are rejected rather than skipped,
//! so silent misreads cannot happen.

use thiserror::Error;

use crate::sexp::{parse_all, Sexp, SexpError};

use super::{Bits, Datatype, FunDecl, SmtScript, Sort, StatusHint, Term};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ReadError {
    #[error(transparent)]
    Syntax(#[from] SexpError),
    #[error("unsupported form: {0}")]
    Unsupported(String),
    #[error("malformed {what}: {detail}")]
    Malformed { what: &'static str, detail: String },
}

fn malformed(what: &'static str, s: &Sexp) -> ReadError {
    ReadError::Malformed { what, detail: s.to_string() }
}

/// Parses a full script: `set-info :status` (optional), `set-logic`,
/// declarations, assertions, `check-sat`, `exit`.
pub fn read_script(text: &str) -> Result<SmtScript, ReadError> {
    let forms = parse_all(text)?;
    let mut script = SmtScript::new("");
    let mut logic_seen = false;
    for form in &forms {
        let items = form.as_list().ok_or_else(|| malformed("command", form))?;
        let head = items
            .first()
            .and_then(Sexp::as_atom)
            .ok_or_else(|| malformed("command", form))?;
        match head {
            "set-info" => match items {
                [_, key, value] if key.as_atom() == Some(":status") => {
                    script.status_hint = Some(match value.as_atom() {
                        Some("sat") => StatusHint::Sat,
                        Some("unsat") => StatusHint::Unsat,
                        _ => return Err(malformed("status", form)),
                    });
                }
                // Other metadata carries no script content.
                _ => {}
            },
            "set-logic" => match items {
                [_, name] => {
                    script.logic = name
                        .symbol()
                        .ok_or_else(|| malformed("logic", form))?
                        .to_string();
                    logic_seen = true;
                }
                _ => return Err(malformed("set-logic", form)),
            },
            "declare-datatype" => match items {
                [_, name, ctors] => {
                    let name =
                        name.symbol().ok_or_else(|| malformed("datatype", form))?.to_string();
                    let ctor_list =
                        ctors.as_list().ok_or_else(|| malformed("datatype", form))?;
                    let mut constructors = Vec::with_capacity(ctor_list.len());
                    for ctor in ctor_list {
                        match ctor.as_list() {
                            Some([sym]) => constructors.push(
                                sym.symbol()
                                    .ok_or_else(|| malformed("constructor", ctor))?
                                    .to_string(),
                            ),
                            // Constructors with fields are outside the
                            // emitted subset.
                            _ => return Err(malformed("constructor", ctor)),
                        }
                    }
                    script.datatypes.push(Datatype { name, constructors });
                }
                _ => return Err(malformed("declare-datatype", form)),
            },
            "declare-const" => match items {
                [_, name, sort] => {
                    let name =
                        name.symbol().ok_or_else(|| malformed("const", form))?.to_string();
                    script.consts.push((name, sort_from_sexp(sort)?));
                }
                _ => return Err(malformed("declare-const", form)),
            },
            "declare-fun" => match items {
                [_, name, args, ret] => {
                    let name = name.symbol().ok_or_else(|| malformed("fun", form))?.to_string();
                    let arg_list = args.as_list().ok_or_else(|| malformed("fun", form))?;
                    if arg_list.is_empty() {
                        // Nullary declare-fun is just a constant.
                        script.consts.push((name, sort_from_sexp(ret)?));
                    } else {
                        let args = arg_list
                            .iter()
                            .map(sort_from_sexp)
                            .collect::<Result<Vec<_>, _>>()?;
                        script.funs.push(FunDecl { name, args, ret: sort_from_sexp(ret)? });
                    }
                }
                _ => return Err(malformed("declare-fun", form)),
            },
            "assert" => match items {
                [_, term] => script.asserts.push(term_from_sexp(term)?),
                _ => return Err(malformed("assert", form)),
            },
            "check-sat" | "exit" => {}
            other => return Err(ReadError::Unsupported(other.to_string())),
        }
    }
    if !logic_seen {
        return Err(ReadError::Malformed {
            what: "script",
            detail: "no set-logic command".to_string(),
        });
    }
    Ok(script)
}

pub(super) fn sort_from_sexp(s: &Sexp) -> Result<Sort, ReadError> {
    match s {
        Sexp::Atom(_) => {
            let name = s.symbol().expect("atom");
            Ok(match name {
                "Bool" => Sort::Bool,
                "Int" => Sort::Int,
                other => Sort::Named(other.to_string()),
            })
        }
        Sexp::List(items) => match items.as_slice() {
            [u, bv, w]
                if u.as_atom() == Some("_") && bv.as_atom() == Some("BitVec") =>
            {
                let width = w
                    .as_atom()
                    .and_then(|a| a.parse::<u32>().ok())
                    .ok_or_else(|| malformed("sort", s))?;
                Ok(Sort::BitVec(width))
            }
            _ => Err(malformed("sort", s)),
        },
    }
}

pub(super) fn term_from_sexp(s: &Sexp) -> Result<Term, ReadError> {
    match s {
        Sexp::Atom(raw) => atom_term(raw, s),
        Sexp::List(items) => {
            // Indexed operator head: ((_ extract hi lo) arg).
            if let Some(head_items) = items.first().and_then(Sexp::as_list) {
                return match (head_items, &items[1..]) {
                    ([u, ex, hi, lo], [arg])
                        if u.as_atom() == Some("_") && ex.as_atom() == Some("extract") =>
                    {
                        let parse_index = |x: &Sexp| {
                            x.as_atom()
                                .and_then(|a| a.parse::<u32>().ok())
                                .ok_or_else(|| malformed("extract index", s))
                        };
                        Ok(Term::extract(parse_index(hi)?, parse_index(lo)?, term_from_sexp(arg)?))
                    }
                    _ => Err(malformed("term", s)),
                };
            }
            let head = items
                .first()
                .and_then(Sexp::as_atom)
                .ok_or_else(|| malformed("term", s))?;
            let args = &items[1..];
            match (head, args) {
                ("=", [a, b]) => Ok(Term::eq(term_from_sexp(a)?, term_from_sexp(b)?)),
                ("distinct", [a, b]) => {
                    Ok(Term::distinct(term_from_sexp(a)?, term_from_sexp(b)?))
                }
                ("bvand", [a, b]) => Ok(Term::bvand(term_from_sexp(a)?, term_from_sexp(b)?)),
                ("or", _) if !args.is_empty() => Ok(Term::Or(
                    args.iter().map(term_from_sexp).collect::<Result<Vec<_>, _>>()?,
                )),
                ("-", [k]) => match term_from_sexp(k)? {
                    Term::Int(v) => Ok(Term::Int(-v)),
                    _ => Err(malformed("negation", s)),
                },
                (_, _) if !args.is_empty() => {
                    let name = items[0].symbol().expect("atom").to_string();
                    Ok(Term::App(
                        name,
                        args.iter().map(term_from_sexp).collect::<Result<Vec<_>, _>>()?,
                    ))
                }
                _ => Err(malformed("term", s)),
            }
        }
    }
}

fn atom_term(raw: &str, s: &Sexp) -> Result<Term, ReadError> {
    if let Some(bin) = raw.strip_prefix("#b") {
        return Bits::from_binary_str(bin).map(Term::Bv).ok_or_else(|| malformed("literal", s));
    }
    if let Some(hex) = raw.strip_prefix("#x") {
        return Bits::from_hex_str(hex).map(Term::Bv).ok_or_else(|| malformed("literal", s));
    }
    if raw.chars().all(|c| c.is_ascii_digit()) {
        return raw.parse::<i64>().map(Term::Int).map_err(|_| malformed("integer", s));
    }
    Ok(Term::sym(s.symbol().expect("atom")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::{numbering, parse_net};
    use crate::reach::ConcurrencyRelation;
    use crate::smt::{encode, print_smtlib, EncodingConfig, Fragment};

    #[test]
    fn round_trips_every_fragment() {
        let net = parse_net("places p1 p2 p3\n").unwrap();
        let num = numbering(&net);
        let rel = ConcurrencyRelation::from_pairs([(1, 2), (2, 3)]);
        for f in Fragment::ALL {
            let cfg = EncodingConfig::new(f, 2).with_status_hint();
            let script = encode(&num, &rel, &cfg).unwrap();
            let text = print_smtlib(&script);
            let back = read_script(&text).unwrap();
            assert_eq!(back, script, "{f}");
            assert_eq!(print_smtlib(&back), text, "{f}");
        }
    }

    #[test]
    fn quoted_symbols_round_trip() {
        let places = vec!["a place".to_string(), "b".to_string()];
        let num = crate::net::PlaceNumbering::new(&places);
        let rel = ConcurrencyRelation::from_pairs([(1, 2)]);
        let script = encode(&num, &rel, &EncodingConfig::new(Fragment::QfUfDt, 2)).unwrap();
        let back = read_script(&print_smtlib(&script)).unwrap();
        assert_eq!(back, script);
    }

    #[test]
    fn rejects_unknown_command() {
        let err = read_script("(set-logic QF_BV)\n(push 1)\n").unwrap_err();
        assert_eq!(err, ReadError::Unsupported("push".to_string()));
    }

    #[test]
    fn rejects_missing_logic() {
        assert!(matches!(
            read_script("(check-sat)\n"),
            Err(ReadError::Malformed { what: "script", .. })
        ));
    }

    #[test]
    fn reads_hex_literals_and_negatives() {
        let script =
            read_script("(set-logic QF_BV)\n(declare-const b (_ BitVec 8))\n(assert (= b #x0f))\n")
                .unwrap();
        assert_eq!(script.asserts[0], Term::eq(Term::sym("b"), Term::Bv(Bits::from_value(15, 8))));
        let idl = read_script("(set-logic QF_IDL)\n(declare-const x Int)\n(assert (= x (- 2)))\n")
            .unwrap();
        assert_eq!(idl.asserts[0], Term::eq(Term::sym("x"), Term::Int(-2)));
    }

    #[test]
    fn reads_status_hint() {
        let script = read_script("(set-info :status unsat)\n(set-logic QF_IDL)\n").unwrap();
        assert_eq!(script.status_hint, Some(StatusHint::Unsat));
    }
}
