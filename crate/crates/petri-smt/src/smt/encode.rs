//! Construction of the six unit-partition encodings.
//!
//! All fragments share one skeleton. Concurrent pairs are iterated with
//! the smaller place number first, ascending, and each pair contributes a
//! disjointness/disequality assertion. Then every place (except, in the
//! datatype fragments, places whose number reaches the unit count)
//! contributes a symmetry-breaking assertion restricting place `#p` to
//! units `1..=min(#p, n)`. Pair assertions come first, then the per-place
//! assertions in place order, so output is deterministic.

use thiserror::Error;

use crate::color::BudgetExceeded;
use crate::net::PlaceNumbering;
use crate::reach::ConcurrencyRelation;

use super::oracle::{oracle_sat, SatStatus, DEFAULT_ORACLE_BUDGET};
use super::{
    lambda_width, Bits, Datatype, EncodingConfig, Fragment, FunDecl, SmtScript, Sort, StatusHint,
    Term,
};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EncodeError {
    #[error("required bitvector width {width} exceeds the configured maximum {max_width}")]
    WidthOverflow { width: u32, max_width: u32 },
    #[error("place identifier `{symbol}` collides with a symbol the encoding declares")]
    SymbolClash { symbol: String },
    #[error("status hint computation gave up: {0}")]
    HintBudget(#[from] BudgetExceeded),
}

/// Encodes "partition the places into `cfg.num_units` conflict-free
/// units" over the places of `num` with conflict edges `rel`.
pub fn encode(
    num: &PlaceNumbering,
    rel: &ConcurrencyRelation,
    cfg: &EncodingConfig,
) -> Result<SmtScript, EncodeError> {
    assert!(num.count() >= 1, "encoding needs at least one place");
    let n = cfg.num_units;
    let count = num.count();
    let mut script = SmtScript::new(cfg.fragment.logic_name());

    let check_width = |width: u32| {
        if width > cfg.max_width {
            Err(EncodeError::WidthOverflow { width, max_width: cfg.max_width })
        } else {
            Ok(())
        }
    };

    // Declarations, plus how an assertion refers to place k's value.
    let place_term: Box<dyn Fn(u32) -> Term> = match cfg.fragment {
        Fragment::QfBv => {
            check_width(n)?;
            for (k, _) in num.iter() {
                script.consts.push((format!("b_p{k}"), Sort::BitVec(n)));
            }
            Box::new(|k| Term::sym(format!("b_p{k}")))
        }
        Fragment::QfUfBv => {
            check_width(n)?;
            let w = lambda_width(count);
            check_width(w)?;
            script.funs.push(FunDecl {
                name: "u".to_string(),
                args: vec![Sort::BitVec(w)],
                ret: Sort::BitVec(n),
            });
            // The injection numbering places as bitvectors: k maps to the
            // binary encoding of k - 1.
            Box::new(move |k| Term::App("u".to_string(), vec![Term::Bv(Bits::from_value(k as u64 - 1, w))]))
        }
        Fragment::QfDt => {
            script.datatypes.push(unit_datatype(n));
            for (k, _) in num.iter() {
                script.consts.push((format!("x_p{k}"), Sort::Named("Unit".to_string())));
            }
            Box::new(|k| Term::sym(format!("x_p{k}")))
        }
        Fragment::QfUfDt => {
            for place in num.places() {
                if place == "u" || is_unit_ctor(place, n) {
                    return Err(EncodeError::SymbolClash { symbol: place.clone() });
                }
            }
            script.datatypes.push(unit_datatype(n));
            script.datatypes.push(Datatype {
                name: "Place".to_string(),
                constructors: num.places().to_vec(),
            });
            script.funs.push(FunDecl {
                name: "u".to_string(),
                args: vec![Sort::Named("Place".to_string())],
                ret: Sort::Named("Unit".to_string()),
            });
            let names: Vec<String> = num.places().to_vec();
            Box::new(move |k| {
                Term::App("u".to_string(), vec![Term::sym(names[k as usize - 1].clone())])
            })
        }
        Fragment::QfIdl => {
            for (k, _) in num.iter() {
                script.consts.push((format!("x_p{k}"), Sort::Int));
            }
            Box::new(|k| Term::sym(format!("x_p{k}")))
        }
        Fragment::QfUfIdl => {
            script.funs.push(FunDecl {
                name: "u".to_string(),
                args: vec![Sort::Int],
                ret: Sort::Int,
            });
            Box::new(|k| Term::App("u".to_string(), vec![Term::Int(k as i64)]))
        }
    };

    // Concurrent places may not share a unit.
    for (a, b) in rel.pairs() {
        let assert = match cfg.fragment {
            Fragment::QfBv | Fragment::QfUfBv => Term::eq(
                Term::bvand(place_term(a), place_term(b)),
                Term::Bv(Bits::zeros(n)),
            ),
            _ => Term::distinct(place_term(a), place_term(b)),
        };
        script.asserts.push(assert);
    }

    // Symmetry breaking: place k stays within units 1..=min(k, n).
    for (k, _) in num.iter() {
        let bound = k.min(n);
        let assert = match cfg.fragment {
            Fragment::QfBv | Fragment::QfUfBv => {
                // Some bit in the prefix [1:u] is set, for one u <= bound;
                // the disjuncts are redundant prefixes of each other but
                // mirror the expanded published form.
                Term::disjunction(
                    (1..=bound)
                        .map(|u| {
                            Term::distinct(
                                Term::extract(u - 1, 0, place_term(k)),
                                Term::Bv(Bits::zeros(u)),
                            )
                        })
                        .collect(),
                )
            }
            Fragment::QfDt | Fragment::QfUfDt => {
                if k >= n {
                    // The enumerated type already bounds the value.
                    continue;
                }
                Term::disjunction(
                    (1..=bound).map(|u| Term::eq(place_term(k), Term::sym(format!("u{u}")))).collect(),
                )
            }
            Fragment::QfIdl | Fragment::QfUfIdl => {
                // Integers are unbounded, so places at or past n still
                // need the bounding disjunction over all n units.
                Term::disjunction(
                    (1..=bound).map(|u| Term::eq(place_term(k), Term::Int(u as i64))).collect(),
                )
            }
        };
        script.asserts.push(assert);
    }

    if cfg.emit_status_hint {
        let status = oracle_sat(count, rel, cfg, DEFAULT_ORACLE_BUDGET)?;
        script.status_hint = Some(match status {
            SatStatus::Sat => StatusHint::Sat,
            SatStatus::Unsat => StatusHint::Unsat,
        });
    }
    Ok(script)
}

fn unit_datatype(n: u32) -> Datatype {
    Datatype {
        name: "Unit".to_string(),
        constructors: (1..=n).map(|u| format!("u{u}")).collect(),
    }
}

/// Whether `id` is spelled exactly like one of the constructors `u1..un`.
fn is_unit_ctor(id: &str, n: u32) -> bool {
    id.strip_prefix('u')
        .and_then(|digits| digits.parse::<u32>().ok())
        .is_some_and(|v| 1 <= v && v <= n && id == format!("u{v}"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::{numbering, parse_net};

    fn two_concurrent_places() -> (PlaceNumbering, ConcurrencyRelation) {
        let net = parse_net("places p1 p2\nmarking p1 p2\n").unwrap();
        let num = numbering(&net);
        let rel = ConcurrencyRelation::from_pairs([(1, 2)]);
        (num, rel)
    }

    #[test]
    fn qf_dt_two_place_shape() {
        let (num, rel) = two_concurrent_places();
        let cfg = EncodingConfig::new(Fragment::QfDt, 2);
        let script = encode(&num, &rel, &cfg).unwrap();

        assert_eq!(script.logic, "QF_DT");
        assert_eq!(script.datatypes.len(), 1);
        assert_eq!(script.datatypes[0].name, "Unit");
        assert_eq!(script.datatypes[0].constructors, vec!["u1", "u2"]);
        assert_eq!(
            script.consts,
            vec![
                ("x_p1".to_string(), Sort::Named("Unit".to_string())),
                ("x_p2".to_string(), Sort::Named("Unit".to_string())),
            ]
        );
        // p2 has #p = n, so only p1 gets a symmetry assertion.
        assert_eq!(
            script.asserts,
            vec![
                Term::distinct(Term::sym("x_p1"), Term::sym("x_p2")),
                Term::eq(Term::sym("x_p1"), Term::sym("u1")),
            ]
        );
    }

    #[test]
    fn qf_bv_two_place_shape() {
        let (num, rel) = two_concurrent_places();
        let cfg = EncodingConfig::new(Fragment::QfBv, 2);
        let script = encode(&num, &rel, &cfg).unwrap();

        assert_eq!(script.logic, "QF_BV");
        assert_eq!(
            script.consts,
            vec![
                ("b_p1".to_string(), Sort::BitVec(2)),
                ("b_p2".to_string(), Sort::BitVec(2)),
            ]
        );
        let prefix_nonzero = |k: u32, u: u32| {
            Term::distinct(
                Term::extract(u - 1, 0, Term::sym(format!("b_p{k}"))),
                Term::Bv(Bits::zeros(u)),
            )
        };
        assert_eq!(
            script.asserts,
            vec![
                Term::eq(
                    Term::bvand(Term::sym("b_p1"), Term::sym("b_p2")),
                    Term::Bv(Bits::zeros(2)),
                ),
                prefix_nonzero(1, 1),
                Term::Or(vec![prefix_nonzero(2, 1), prefix_nonzero(2, 2)]),
            ]
        );
    }

    #[test]
    fn qf_idl_bounds_every_place() {
        let (num, rel) = two_concurrent_places();
        let cfg = EncodingConfig::new(Fragment::QfIdl, 2);
        let script = encode(&num, &rel, &cfg).unwrap();
        assert_eq!(
            script.asserts,
            vec![
                Term::distinct(Term::sym("x_p1"), Term::sym("x_p2")),
                Term::eq(Term::sym("x_p1"), Term::Int(1)),
                Term::Or(vec![
                    Term::eq(Term::sym("x_p2"), Term::Int(1)),
                    Term::eq(Term::sym("x_p2"), Term::Int(2)),
                ]),
            ]
        );
    }

    #[test]
    fn qf_ufbv_replaces_consts_with_applications() {
        let (num, rel) = two_concurrent_places();
        let cfg = EncodingConfig::new(Fragment::QfUfBv, 2);
        let script = encode(&num, &rel, &cfg).unwrap();

        assert!(script.consts.is_empty());
        assert_eq!(
            script.funs,
            vec![FunDecl {
                name: "u".to_string(),
                args: vec![Sort::BitVec(1)],
                ret: Sort::BitVec(2),
            }]
        );
        let apply = |k: u32| {
            Term::App("u".to_string(), vec![Term::Bv(Bits::from_value(k as u64 - 1, 1))])
        };
        assert_eq!(
            script.asserts[0],
            Term::eq(Term::bvand(apply(1), apply(2)), Term::Bv(Bits::zeros(2)))
        );
        // Same assertion count as the non-UF form.
        let plain = encode(&num, &rel, &EncodingConfig::new(Fragment::QfBv, 2)).unwrap();
        assert_eq!(script.asserts.len(), plain.asserts.len());
    }

    #[test]
    fn qf_ufdt_declares_place_datatype() {
        let net = parse_net("places left right\n").unwrap();
        let num = numbering(&net);
        let rel = ConcurrencyRelation::from_pairs([(1, 2)]);
        let script = encode(&num, &rel, &EncodingConfig::new(Fragment::QfUfDt, 2)).unwrap();

        assert_eq!(script.datatypes.len(), 2);
        assert_eq!(script.datatypes[1].name, "Place");
        assert_eq!(script.datatypes[1].constructors, vec!["left", "right"]);
        assert_eq!(
            script.asserts[0],
            Term::distinct(
                Term::App("u".to_string(), vec![Term::sym("left")]),
                Term::App("u".to_string(), vec![Term::sym("right")]),
            )
        );
    }

    #[test]
    fn qf_ufidl_applies_to_place_numbers() {
        let (num, rel) = two_concurrent_places();
        let script = encode(&num, &rel, &EncodingConfig::new(Fragment::QfUfIdl, 2)).unwrap();
        assert_eq!(
            script.asserts[0],
            Term::distinct(
                Term::App("u".to_string(), vec![Term::Int(1)]),
                Term::App("u".to_string(), vec![Term::Int(2)]),
            )
        );
        // Bounding assertion for the place with #p = n.
        assert_eq!(
            script.asserts[2],
            Term::Or(vec![
                Term::eq(Term::App("u".to_string(), vec![Term::Int(2)]), Term::Int(1)),
                Term::eq(Term::App("u".to_string(), vec![Term::Int(2)]), Term::Int(2)),
            ])
        );
    }

    #[test]
    fn assertion_counts_follow_fragment_rules() {
        // 5 places, a 4-cycle plus an isolated place, n = 3.
        let net = parse_net("places a b c d e\n").unwrap();
        let num = numbering(&net);
        let rel = ConcurrencyRelation::from_pairs([(1, 2), (2, 3), (3, 4), (1, 4)]);
        let pairs = rel.len() as u64;
        for f in Fragment::ALL {
            let script = encode(&num, &rel, &EncodingConfig::new(f, 3)).unwrap();
            let expected = match f {
                // Places 3, 4, 5 have #p >= n and need no symmetry assert.
                Fragment::QfDt | Fragment::QfUfDt => pairs + 2,
                _ => pairs + 5,
            };
            assert_eq!(script.num_asserts(), expected, "{f}");
        }
    }

    #[test]
    fn lambda_width_grows_with_place_count() {
        for (count, expected) in [(2u32, 1), (3, 2), (64, 6), (80, 7)] {
            let places: Vec<String> = (1..=count).map(|i| format!("p{i}")).collect();
            let num = PlaceNumbering::new(&places);
            let rel = ConcurrencyRelation::new();
            let script = encode(&num, &rel, &EncodingConfig::new(Fragment::QfUfBv, 2)).unwrap();
            assert_eq!(script.funs[0].args, vec![Sort::BitVec(expected)], "count {count}");
        }
    }

    #[test]
    fn width_overflow_reported() {
        let (num, rel) = two_concurrent_places();
        let mut cfg = EncodingConfig::new(Fragment::QfBv, 100);
        cfg.max_width = 64;
        assert_eq!(
            encode(&num, &rel, &cfg),
            Err(EncodeError::WidthOverflow { width: 100, max_width: 64 })
        );
    }

    #[test]
    fn place_named_like_generated_symbol_rejected() {
        for bad in ["u", "u2"] {
            let places = vec!["ok".to_string(), bad.to_string()];
            let num = PlaceNumbering::new(&places);
            let rel = ConcurrencyRelation::new();
            let err = encode(&num, &rel, &EncodingConfig::new(Fragment::QfUfDt, 2)).unwrap_err();
            assert_eq!(err, EncodeError::SymbolClash { symbol: bad.to_string() });
        }
        // "u01" is not spelled like a constructor, and other fragments
        // never reuse place identifiers.
        let places = vec!["u01".to_string(), "u".to_string()];
        let num = PlaceNumbering::new(&places);
        let rel = ConcurrencyRelation::new();
        assert!(encode(&num, &rel, &EncodingConfig::new(Fragment::QfDt, 2)).is_ok());
    }

    #[test]
    fn status_hint_from_oracle() {
        let net = parse_net("places p1 p2 p3\n").unwrap();
        let num = numbering(&net);
        let triangle = ConcurrencyRelation::from_pairs([(1, 2), (2, 3), (1, 3)]);
        for f in Fragment::ALL {
            let sat = encode(&num, &triangle, &EncodingConfig::new(f, 3).with_status_hint());
            assert_eq!(sat.unwrap().status_hint, Some(StatusHint::Sat));
            let unsat = encode(&num, &triangle, &EncodingConfig::new(f, 2).with_status_hint());
            assert_eq!(unsat.unwrap().status_hint, Some(StatusHint::Unsat));
        }
    }

    #[test]
    fn encoding_is_deterministic_and_well_sorted() {
        let net = parse_net("places a b c d\n").unwrap();
        let num = numbering(&net);
        let rel = ConcurrencyRelation::from_pairs([(1, 3), (2, 4), (1, 4)]);
        for f in Fragment::ALL {
            for n in 1..=4 {
                let cfg = EncodingConfig::new(f, n);
                let one = encode(&num, &rel, &cfg).unwrap();
                let two = encode(&num, &rel, &cfg).unwrap();
                assert_eq!(one, two);
                one.validate().unwrap_or_else(|e| panic!("{f} n={n}: {e}"));
            }
        }
    }
}
