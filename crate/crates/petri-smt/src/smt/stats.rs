//! Size and domain metrics of a generated script.
//!
//! Non-UF fragments report the declared-constant count and the value
//! domain of one place variable (`card`); UF fragments instead report the
//! domain and codomain of the uninterpreted function (`card_in`,
//! `card_out`). Assertion and operator counts apply to every fragment:
//! an operator is any non-leaf term node, literals and symbols are leaves.

use std::fmt;

use thiserror::Error;

use super::{lambda_width, EncodingConfig, Fragment, SmtScript, Sort};

/// Size of a value domain: an exact count, a power of two kept in
/// exponent form (the way bitvector domains are usually quoted), or
/// infinite for integer fragments.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cardinality {
    Finite(u64),
    Pow2(u32),
    Infinite,
}

impl Cardinality {
    /// The exact count when it fits in a `u128`; `None` when infinite or
    /// too large.
    pub fn numeric(self) -> Option<u128> {
        match self {
            Cardinality::Finite(v) => Some(v as u128),
            Cardinality::Pow2(e) if e < 128 => Some(1u128 << e),
            _ => None,
        }
    }
}

impl fmt::Display for Cardinality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cardinality::Finite(v) => write!(f, "{v}"),
            Cardinality::Pow2(e) => write!(f, "2^{e}"),
            Cardinality::Infinite => f.write_str("inf"),
        }
    }
}

/// Metrics of one script. Fields are `None` where the notion does not
/// apply: `num_variables`/`card` for UF fragments (places live inside a
/// function, not in declared constants), `card_in`/`card_out` for the
/// fragments without an uninterpreted function.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FormulaStats {
    pub num_variables: Option<u64>,
    pub card: Option<Cardinality>,
    pub card_in: Option<Cardinality>,
    pub card_out: Option<Cardinality>,
    pub num_asserts: u64,
    pub num_ops: u64,
}

/// Metrics of a script produced by [`super::encode`] with `cfg` over
/// `place_count` places.
pub fn formula_stats(script: &SmtScript, cfg: &EncodingConfig, place_count: u32) -> FormulaStats {
    let n = cfg.num_units;
    let (num_variables, card, card_in, card_out) = match cfg.fragment {
        Fragment::QfBv => (Some(script.consts.len() as u64), Some(Cardinality::Pow2(n)), None, None),
        Fragment::QfDt => {
            (Some(script.consts.len() as u64), Some(Cardinality::Finite(n as u64)), None, None)
        }
        Fragment::QfIdl => {
            (Some(script.consts.len() as u64), Some(Cardinality::Infinite), None, None)
        }
        Fragment::QfUfBv => {
            (None, None, Some(Cardinality::Pow2(lambda_width(place_count))), Some(Cardinality::Pow2(n)))
        }
        Fragment::QfUfDt => (
            None,
            None,
            Some(Cardinality::Finite(place_count as u64)),
            Some(Cardinality::Finite(n as u64)),
        ),
        Fragment::QfUfIdl => (None, None, Some(Cardinality::Infinite), Some(Cardinality::Infinite)),
    };
    FormulaStats {
        num_variables,
        card,
        card_in,
        card_out,
        num_asserts: script.num_asserts(),
        num_ops: script.num_ops(),
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StatsError {
    #[error("unknown logic `{0}`")]
    UnknownLogic(String),
    #[error("script declares no {0}, cannot infer domains")]
    MissingDeclaration(&'static str),
}

/// Metrics recovered from a script alone, for files read back from disk:
/// the fragment comes from the logic name and the domains from the
/// declarations. Agrees with [`formula_stats`] on every encoded script.
pub fn stats_from_script(script: &SmtScript) -> Result<FormulaStats, StatsError> {
    let fragment: Fragment =
        script.logic.parse().map_err(|_| StatsError::UnknownLogic(script.logic.clone()))?;
    let consts = Some(script.consts.len() as u64);
    let datatype_len = |name: &str| {
        script
            .datatypes
            .iter()
            .find(|dt| dt.name == name)
            .map(|dt| dt.constructors.len() as u64)
    };
    let fun = script.funs.first();
    let fun_widths = || -> Result<(u32, u32), StatsError> {
        match fun.map(|f| (f.args.as_slice(), &f.ret)) {
            Some(([Sort::BitVec(w)], Sort::BitVec(n))) => Ok((*w, *n)),
            _ => Err(StatsError::MissingDeclaration("bitvector function")),
        }
    };

    let (num_variables, card, card_in, card_out) = match fragment {
        Fragment::QfBv => {
            let width = match script.consts.first() {
                Some((_, Sort::BitVec(w))) => *w,
                _ => return Err(StatsError::MissingDeclaration("bitvector constant")),
            };
            (consts, Some(Cardinality::Pow2(width)), None, None)
        }
        Fragment::QfDt => {
            let n = datatype_len("Unit")
                .ok_or(StatsError::MissingDeclaration("Unit datatype"))?;
            (consts, Some(Cardinality::Finite(n)), None, None)
        }
        Fragment::QfIdl => (consts, Some(Cardinality::Infinite), None, None),
        Fragment::QfUfBv => {
            let (w, n) = fun_widths()?;
            (None, None, Some(Cardinality::Pow2(w)), Some(Cardinality::Pow2(n)))
        }
        Fragment::QfUfDt => {
            let places = datatype_len("Place")
                .ok_or(StatsError::MissingDeclaration("Place datatype"))?;
            let n = datatype_len("Unit")
                .ok_or(StatsError::MissingDeclaration("Unit datatype"))?;
            (None, None, Some(Cardinality::Finite(places)), Some(Cardinality::Finite(n)))
        }
        Fragment::QfUfIdl => (None, None, Some(Cardinality::Infinite), Some(Cardinality::Infinite)),
    };
    Ok(FormulaStats {
        num_variables,
        card,
        card_in,
        card_out,
        num_asserts: script.num_asserts(),
        num_ops: script.num_ops(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::{numbering, parse_net, PlaceNumbering};
    use crate::reach::ConcurrencyRelation;
    use crate::smt::encode;

    fn instance(count: u32, pairs: &[(u32, u32)]) -> (PlaceNumbering, ConcurrencyRelation) {
        let places: Vec<String> = (1..=count).map(|i| format!("p{i}")).collect();
        (PlaceNumbering::new(&places), ConcurrencyRelation::from_pairs(pairs.iter().copied()))
    }

    #[test]
    fn qf_bv_two_place_metrics() {
        let net = parse_net("places p1 p2\n").unwrap();
        let num = numbering(&net);
        let rel = ConcurrencyRelation::from_pairs([(1, 2)]);
        let cfg = EncodingConfig::new(Fragment::QfBv, 2);
        let script = encode(&num, &rel, &cfg).unwrap();
        let stats = formula_stats(&script, &cfg, 2);
        assert_eq!(stats.num_variables, Some(2));
        assert_eq!(stats.card, Some(Cardinality::Pow2(2)));
        assert_eq!(stats.card.unwrap().numeric(), Some(4));
        assert_eq!(stats.num_asserts, 3);
        assert_eq!(stats.card_in, None);
    }

    #[test]
    fn qf_idl_domain_is_infinite() {
        let (num, rel) = instance(3, &[(1, 2)]);
        let cfg = EncodingConfig::new(Fragment::QfIdl, 2);
        let script = encode(&num, &rel, &cfg).unwrap();
        let stats = formula_stats(&script, &cfg, 3);
        assert_eq!(stats.card, Some(Cardinality::Infinite));
        assert_eq!(stats.card.unwrap().to_string(), "inf");
    }

    #[test]
    fn qf_ufbv_domain_tracks_place_count() {
        // 80 places need 7 address bits; 64 fit in 6.
        for (count, exponent) in [(80u32, 7), (64, 6), (65, 7)] {
            let (num, rel) = instance(count, &[(1, 2)]);
            let cfg = EncodingConfig::new(Fragment::QfUfBv, 4);
            let script = encode(&num, &rel, &cfg).unwrap();
            let stats = formula_stats(&script, &cfg, count);
            assert_eq!(stats.card_in, Some(Cardinality::Pow2(exponent)), "count {count}");
            assert_eq!(stats.card_out, Some(Cardinality::Pow2(4)));
            assert_eq!(stats.num_variables, None);
        }
    }

    #[test]
    fn qf_ufdt_domains_are_finite_counts() {
        let (num, rel) = instance(5, &[(1, 2), (3, 4)]);
        let cfg = EncodingConfig::new(Fragment::QfUfDt, 3);
        let script = encode(&num, &rel, &cfg).unwrap();
        let stats = formula_stats(&script, &cfg, 5);
        assert_eq!(stats.card_in, Some(Cardinality::Finite(5)));
        assert_eq!(stats.card_out, Some(Cardinality::Finite(3)));
    }

    #[test]
    fn ops_counted_per_application_node() {
        let net = parse_net("places p1 p2\n").unwrap();
        let num = numbering(&net);
        let rel = ConcurrencyRelation::from_pairs([(1, 2)]);
        let cfg = EncodingConfig::new(Fragment::QfBv, 2);
        let script = encode(&num, &rel, &cfg).unwrap();
        // (= (bvand b b) 0): 2 ops; (distinct (extract b) 0): 2 ops;
        // (or 2-op 2-op): 5 ops.
        assert_eq!(formula_stats(&script, &cfg, 2).num_ops, 9);
    }

    #[test]
    fn script_inference_matches_direct_stats() {
        let (num, rel) = instance(6, &[(1, 2), (2, 3), (4, 6)]);
        for f in Fragment::ALL {
            for n in 1..=4 {
                let cfg = EncodingConfig::new(f, n);
                let script = encode(&num, &rel, &cfg).unwrap();
                let direct = formula_stats(&script, &cfg, 6);
                let inferred = stats_from_script(&script).unwrap();
                assert_eq!(direct, inferred, "{f} n={n}");
            }
        }
    }

    #[test]
    fn cardinality_rendering() {
        assert_eq!(Cardinality::Finite(16).to_string(), "16");
        assert_eq!(Cardinality::Pow2(11).to_string(), "2^11");
        assert_eq!(Cardinality::Infinite.to_string(), "inf");
        assert_eq!(Cardinality::Pow2(7).numeric(), Some(128));
        assert_eq!(Cardinality::Infinite.numeric(), None);
    }
}
