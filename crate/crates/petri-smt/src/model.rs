//! Parsing the pragmatic subset of solver model output.
//!
//! Mainstream solvers answer `sat` followed by a sequence of `define-fun`
//! forms, sometimes wrapped in `(model ...)` or a bare list. Non-UF
//! fragments need the constant definitions (bitvector, integer, or
//! constructor literals). UF fragments need the single function
//! definition, whose body is a literal or an if-then-else tree over
//! equalities with the bound variable; it is evaluated at every argument
//! the script applies the function to. Anything richer (arrays, `let`,
//! `as const`) is rejected as unparsable rather than guessed at.

use std::collections::{BTreeMap, HashMap, HashSet};

use thiserror::Error;

use crate::net::PlaceNumbering;
use crate::sexp::{parse_all, Sexp};
use crate::smt::{Bits, EncodingConfig, Fragment, SmtScript, Term};

/// A parsed model value: one of the three shapes place values take
/// across the six fragments.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ModelValue {
    Bits(Bits),
    Ctor(String),
    Int(i64),
}

/// Place values recovered from a model, keyed by the declared constant
/// name (non-UF fragments) or by the printed form of the function
/// argument (UF fragments): `#b…` for bitvectors, the constructor name
/// for datatypes, the decimal numeral for integers.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ModelAssignment {
    values: BTreeMap<String, ModelValue>,
}

impl ModelAssignment {
    pub fn get(&self, key: &str) -> Option<&ModelValue> {
        self.values.get(key)
    }

    pub fn insert(&mut self, key: impl Into<String>, value: ModelValue) {
        self.values.insert(key.into(), value);
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &ModelValue)> {
        self.values.iter().map(|(k, v)| (k.as_str(), v))
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ModelError {
    #[error("unparsable model: {detail}")]
    UnparsableModel { detail: String },
    #[error("model defines no value for `{name}`")]
    MissingVariable { name: String },
}

fn unparsable(detail: impl Into<String>) -> ModelError {
    ModelError::UnparsableModel { detail: detail.into() }
}

/// The key under which [`parse_model`] files the value of one applied
/// argument or constant; [`crate::decomp`] uses the same scheme to look
/// places up.
pub fn term_key(term: &Term) -> Option<String> {
    match term {
        Term::Bv(bits) => Some(bits.to_string()),
        Term::Sym(name) => Some(name.clone()),
        Term::Int(v) => Some(v.to_string()),
        _ => None,
    }
}

/// The [`ModelAssignment`] key holding place number `k`'s value: the
/// constant name for plain fragments, the printed function argument for
/// UF fragments. Mirrors what [`crate::smt::encode`] emits.
pub fn place_key(cfg: &EncodingConfig, num: &PlaceNumbering, k: u32) -> String {
    match cfg.fragment {
        Fragment::QfBv => format!("b_p{k}"),
        Fragment::QfDt | Fragment::QfIdl => format!("x_p{k}"),
        Fragment::QfUfBv => {
            Bits::from_value(k as u64 - 1, crate::smt::lambda_width(num.count())).to_string()
        }
        Fragment::QfUfDt => num.place(k).expect("place within numbering").to_string(),
        Fragment::QfUfIdl => k.to_string(),
    }
}

struct FunDef {
    params: Vec<String>,
    body: Sexp,
}

/// Extracts per-place values from raw `get-model` text. `script` supplies
/// the constant names to look for, or for UF fragments the function name
/// and the arguments it is applied to.
pub fn parse_model(
    raw: &str,
    cfg: &EncodingConfig,
    script: &SmtScript,
) -> Result<ModelAssignment, ModelError> {
    let forms = parse_all(raw).map_err(|e| unparsable(e.to_string()))?;
    let defs = index_definitions(&forms)?;
    let mut out = ModelAssignment::default();

    if !cfg.fragment.uses_uf() {
        for (name, _) in &script.consts {
            let def = defs
                .get(name.as_str())
                .ok_or_else(|| ModelError::MissingVariable { name: name.clone() })?;
            if !def.params.is_empty() {
                return Err(unparsable(format!("`{name}` defined with parameters")));
            }
            out.insert(name.clone(), literal_value(&def.body)?);
        }
    } else {
        let fun = script
            .funs
            .first()
            .ok_or_else(|| unparsable("script declares no uninterpreted function"))?;
        let def = defs
            .get(fun.name.as_str())
            .ok_or_else(|| ModelError::MissingVariable { name: fun.name.clone() })?;
        let param = match def.params.as_slice() {
            [p] => p.as_str(),
            _ => return Err(unparsable(format!("`{}` is not unary", fun.name))),
        };
        // Datatype arguments come from the Place declaration, which lists
        // every place; other UF fragments apply the function to every
        // place inside the symmetry assertions, so the applied arguments
        // are already complete.
        let args: Vec<Term> = match script.datatypes.iter().find(|dt| dt.name == "Place") {
            Some(dt) => dt.constructors.iter().map(Term::sym).collect(),
            None => applied_arguments(script, &fun.name),
        };
        for arg in args {
            let target = match &arg {
                Term::Bv(bits) => ModelValue::Bits(bits.clone()),
                Term::Sym(name) => ModelValue::Ctor(name.clone()),
                Term::Int(v) => ModelValue::Int(*v),
                other => return Err(unparsable(format!("non-literal argument {other:?}"))),
            };
            let value = eval_fun_body(&def.body, param, &target)?;
            out.insert(term_key(&arg).expect("literal argument"), value);
        }
    }
    Ok(out)
}

/// Unwraps the accepted model layouts down to `define-fun` forms:
/// a plain sequence, a `(model …)` wrapper, or one bare list of forms.
fn index_definitions(forms: &[Sexp]) -> Result<HashMap<&str, FunDef>, ModelError> {
    let items: &[Sexp] = match forms {
        [Sexp::List(items)] => match items.first() {
            Some(head) if head.as_atom() == Some("model") => &items[1..],
            Some(head) if head.as_atom() == Some("define-fun") => std::slice::from_ref(&forms[0]),
            _ => items,
        },
        _ => forms,
    };
    let mut defs = HashMap::new();
    for item in items {
        let fields = item.as_list().ok_or_else(|| unparsable(format!("stray atom {item}")))?;
        match fields {
            [head, name, params, _sort, body] if head.as_atom() == Some("define-fun") => {
                let name = name.symbol().ok_or_else(|| unparsable("unnamed define-fun"))?;
                let params = params
                    .as_list()
                    .ok_or_else(|| unparsable("malformed parameter list"))?
                    .iter()
                    .map(|p| match p.as_list() {
                        Some([pname, _psort]) => pname
                            .symbol()
                            .map(str::to_string)
                            .ok_or_else(|| unparsable("malformed parameter")),
                        _ => Err(unparsable("malformed parameter")),
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                defs.insert(name, FunDef { params, body: body.clone() });
            }
            _ => return Err(unparsable(format!("unsupported form {item}"))),
        }
    }
    Ok(defs)
}

fn literal_value(body: &Sexp) -> Result<ModelValue, ModelError> {
    match body {
        Sexp::Atom(raw) => {
            if let Some(bin) = raw.strip_prefix("#b") {
                return Bits::from_binary_str(bin)
                    .map(ModelValue::Bits)
                    .ok_or_else(|| unparsable(format!("bad literal {raw}")));
            }
            if let Some(hex) = raw.strip_prefix("#x") {
                return Bits::from_hex_str(hex)
                    .map(ModelValue::Bits)
                    .ok_or_else(|| unparsable(format!("bad literal {raw}")));
            }
            if raw.chars().all(|c| c.is_ascii_digit()) {
                return raw
                    .parse::<i64>()
                    .map(ModelValue::Int)
                    .map_err(|_| unparsable(format!("oversized numeral {raw}")));
            }
            Ok(ModelValue::Ctor(body.symbol().expect("atom").to_string()))
        }
        Sexp::List(items) => match items.as_slice() {
            // (- k)
            [minus, k] if minus.as_atom() == Some("-") => match literal_value(k)? {
                ModelValue::Int(v) => Ok(ModelValue::Int(-v)),
                _ => Err(unparsable(format!("bad negation {body}"))),
            },
            // (_ bv<value> <width>)
            [underscore, bv, width]
                if underscore.as_atom() == Some("_")
                    && bv.as_atom().is_some_and(|a| a.starts_with("bv")) =>
            {
                let value = bv.as_atom().unwrap()[2..]
                    .parse::<u64>()
                    .map_err(|_| unparsable(format!("bad literal {body}")))?;
                let width = width
                    .as_atom()
                    .and_then(|a| a.parse::<u32>().ok())
                    .ok_or_else(|| unparsable(format!("bad literal {body}")))?;
                Ok(ModelValue::Bits(Bits::from_value(value, width)))
            }
            _ => Err(unparsable(format!("unsupported value {body}"))),
        },
    }
}

/// Evaluates a model function body — a literal or an `ite` tree whose
/// conditions equate the bound variable with a literal — at `target`.
fn eval_fun_body(body: &Sexp, param: &str, target: &ModelValue) -> Result<ModelValue, ModelError> {
    if let Sexp::List(items) = body {
        if let [ite, cond, then_branch, else_branch] = items.as_slice() {
            if ite.as_atom() == Some("ite") {
                let (lhs, rhs) = match cond.as_list() {
                    Some([eq, a, b]) if eq.as_atom() == Some("=") => (a, b),
                    _ => return Err(unparsable(format!("unsupported condition {cond}"))),
                };
                let literal = if lhs.symbol() == Some(param) {
                    rhs
                } else if rhs.symbol() == Some(param) {
                    lhs
                } else {
                    return Err(unparsable(format!("condition {cond} does not test the argument")));
                };
                let branch = if literal_value(literal)? == *target { then_branch } else { else_branch };
                return eval_fun_body(branch, param, target);
            }
        }
    }
    literal_value(body)
}

/// The distinct literal arguments `fun` is applied to across the
/// script's assertions, in first-use order.
fn applied_arguments(script: &SmtScript, fun: &str) -> Vec<Term> {
    let mut seen: HashSet<String> = HashSet::new();
    let mut out = Vec::new();
    fn walk(term: &Term, fun: &str, seen: &mut HashSet<String>, out: &mut Vec<Term>) {
        match term {
            Term::App(name, args) => {
                if name == fun && args.len() == 1 {
                    if let Some(key) = term_key(&args[0]) {
                        if seen.insert(key) {
                            out.push(args[0].clone());
                        }
                    }
                }
                for arg in args {
                    walk(arg, fun, seen, out);
                }
            }
            Term::Eq(a, b) | Term::Distinct(a, b) | Term::BvAnd(a, b) => {
                walk(a, fun, seen, out);
                walk(b, fun, seen, out);
            }
            Term::Or(xs) => xs.iter().for_each(|x| walk(x, fun, seen, out)),
            Term::Extract { arg, .. } => walk(arg, fun, seen, out),
            Term::Sym(_) | Term::Int(_) | Term::Bv(_) => {}
        }
    }
    for assert in &script.asserts {
        walk(assert, fun, &mut seen, &mut out);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::PlaceNumbering;
    use crate::reach::ConcurrencyRelation;
    use crate::smt::{encode, Fragment};

    fn instance(count: u32, pairs: &[(u32, u32)]) -> (PlaceNumbering, ConcurrencyRelation) {
        let places: Vec<String> = (1..=count).map(|i| format!("p{i}")).collect();
        (PlaceNumbering::new(&places), ConcurrencyRelation::from_pairs(pairs.iter().copied()))
    }

    fn script_for(fragment: Fragment, count: u32, pairs: &[(u32, u32)], n: u32) -> (SmtScript, EncodingConfig) {
        let (num, rel) = instance(count, pairs);
        let cfg = EncodingConfig::new(fragment, n);
        (encode(&num, &rel, &cfg).unwrap(), cfg)
    }

    #[test]
    fn constructor_constant() {
        let (script, cfg) = script_for(Fragment::QfDt, 1, &[], 2);
        let model = parse_model("(define-fun x_p1 () Unit u2)", &cfg, &script).unwrap();
        assert_eq!(model.get("x_p1"), Some(&ModelValue::Ctor("u2".to_string())));
    }

    #[test]
    fn bitvector_constant() {
        let (script, cfg) = script_for(Fragment::QfBv, 1, &[], 2);
        let model = parse_model("(define-fun b_p1 () (_ BitVec 2) #b01)", &cfg, &script).unwrap();
        assert_eq!(model.get("b_p1"), Some(&ModelValue::Bits(Bits::from_value(1, 2))));
    }

    #[test]
    fn ufbv_ite_tree_evaluated_at_each_argument() {
        let (script, cfg) = script_for(Fragment::QfUfBv, 2, &[(1, 2)], 2);
        let raw = "(define-fun u ((a (_ BitVec 1))) (_ BitVec 2) (ite (= a #b0) #b01 #b10))";
        let model = parse_model(raw, &cfg, &script).unwrap();
        assert_eq!(model.get("#b0"), Some(&ModelValue::Bits(Bits::from_value(1, 2))));
        assert_eq!(model.get("#b1"), Some(&ModelValue::Bits(Bits::from_value(2, 2))));
        assert_eq!(model.len(), 2);
    }

    #[test]
    fn ufdt_and_ufidl_bodies() {
        let places = vec!["left".to_string(), "right".to_string()];
        let num = PlaceNumbering::new(&places);
        let rel = ConcurrencyRelation::from_pairs([(1, 2)]);
        let cfg = EncodingConfig::new(Fragment::QfUfDt, 2);
        let script = encode(&num, &rel, &cfg).unwrap();
        let raw = "(define-fun u ((p Place)) Unit (ite (= p left) u1 u2))";
        let model = parse_model(raw, &cfg, &script).unwrap();
        assert_eq!(model.get("left"), Some(&ModelValue::Ctor("u1".to_string())));
        assert_eq!(model.get("right"), Some(&ModelValue::Ctor("u2".to_string())));

        let (script, cfg) = script_for(Fragment::QfUfIdl, 2, &[(1, 2)], 2);
        let raw = "(define-fun u ((k Int)) Int (ite (= 2 k) 2 1))";
        let model = parse_model(raw, &cfg, &script).unwrap();
        assert_eq!(model.get("1"), Some(&ModelValue::Int(1)));
        assert_eq!(model.get("2"), Some(&ModelValue::Int(2)));
    }

    #[test]
    fn ufdt_covers_places_absent_from_assertions() {
        // `right` has #p = n and no conflicts, so no assertion applies u
        // to it; its value must still come out of the model.
        let places = vec!["left".to_string(), "mid".to_string(), "right".to_string()];
        let num = PlaceNumbering::new(&places);
        let rel = ConcurrencyRelation::from_pairs([(1, 2)]);
        let cfg = EncodingConfig::new(Fragment::QfUfDt, 3);
        let script = encode(&num, &rel, &cfg).unwrap();
        let raw = "(define-fun u ((p Place)) Unit (ite (= p left) u1 (ite (= p mid) u2 u3)))";
        let model = parse_model(raw, &cfg, &script).unwrap();
        assert_eq!(model.get("right"), Some(&ModelValue::Ctor("u3".to_string())));
        assert_eq!(model.len(), 3);
    }

    #[test]
    fn constant_function_body() {
        let (script, cfg) = script_for(Fragment::QfUfIdl, 3, &[], 1);
        let model = parse_model("(define-fun u ((k Int)) Int 1)", &cfg, &script).unwrap();
        for key in ["1", "2", "3"] {
            assert_eq!(model.get(key), Some(&ModelValue::Int(1)));
        }
    }

    #[test]
    fn wrapped_model_layouts() {
        let (script, cfg) = script_for(Fragment::QfIdl, 2, &[(1, 2)], 2);
        let layouts = [
            "(define-fun x_p1 () Int 1) (define-fun x_p2 () Int 2)",
            "(model (define-fun x_p1 () Int 1) (define-fun x_p2 () Int 2))",
            "((define-fun x_p1 () Int 1) (define-fun x_p2 () Int 2))",
        ];
        for raw in layouts {
            let model = parse_model(raw, &cfg, &script).unwrap();
            assert_eq!(model.get("x_p1"), Some(&ModelValue::Int(1)), "{raw}");
            assert_eq!(model.get("x_p2"), Some(&ModelValue::Int(2)), "{raw}");
        }
    }

    #[test]
    fn negative_and_indexed_literals() {
        let (script, cfg) = script_for(Fragment::QfIdl, 1, &[], 2);
        let model = parse_model("(define-fun x_p1 () Int (- 3))", &cfg, &script).unwrap();
        assert_eq!(model.get("x_p1"), Some(&ModelValue::Int(-3)));

        let (script, cfg) = script_for(Fragment::QfBv, 1, &[], 2);
        let model =
            parse_model("(define-fun b_p1 () (_ BitVec 2) (_ bv3 2))", &cfg, &script).unwrap();
        assert_eq!(model.get("b_p1"), Some(&ModelValue::Bits(Bits::from_value(3, 2))));
    }

    #[test]
    fn missing_variable_reported() {
        let (script, cfg) = script_for(Fragment::QfIdl, 2, &[(1, 2)], 2);
        let err = parse_model("(define-fun x_p1 () Int 1)", &cfg, &script).unwrap_err();
        assert_eq!(err, ModelError::MissingVariable { name: "x_p2".to_string() });
    }

    #[test]
    fn array_style_values_rejected() {
        let (script, cfg) = script_for(Fragment::QfBv, 1, &[], 2);
        let raw = "(define-fun b_p1 () (_ BitVec 2) ((as const (Array Int Int)) 0))";
        assert!(matches!(
            parse_model(raw, &cfg, &script),
            Err(ModelError::UnparsableModel { .. })
        ));
    }

    #[test]
    fn extra_definitions_are_ignored() {
        let (script, cfg) = script_for(Fragment::QfIdl, 1, &[], 1);
        let raw = "(define-fun helper () Int 7) (define-fun x_p1 () Int 1)";
        let model = parse_model(raw, &cfg, &script).unwrap();
        assert_eq!(model.len(), 1);
    }

    #[test]
    fn place_key_matches_what_scripts_use() {
        let places = vec!["left".to_string(), "mid".to_string(), "right".to_string()];
        let num = PlaceNumbering::new(&places);
        let rel = ConcurrencyRelation::from_pairs([(1, 2), (2, 3), (1, 3)]);
        for f in Fragment::ALL {
            let cfg = EncodingConfig::new(f, 2);
            let script = encode(&num, &rel, &cfg).unwrap();
            let keys: Vec<String> = (1..=3).map(|k| place_key(&cfg, &num, k)).collect();
            if f.uses_uf() {
                let used: Vec<String> = applied_arguments(&script, "u")
                    .iter()
                    .map(|a| term_key(a).unwrap())
                    .collect();
                assert_eq!(keys, used, "{f}");
            } else {
                let declared: Vec<String> =
                    script.consts.iter().map(|(name, _)| name.clone()).collect();
                assert_eq!(keys, declared, "{f}");
            }
        }
    }

    #[test]
    fn ufbv_arguments_collected_from_script() {
        let (script, _) = script_for(Fragment::QfUfBv, 3, &[(1, 2), (2, 3)], 2);
        let args = applied_arguments(&script, "u");
        let keys: Vec<String> = args.iter().map(|a| term_key(a).unwrap()).collect();
        assert_eq!(keys, vec!["#b00", "#b01", "#b10"]);
    }
}
