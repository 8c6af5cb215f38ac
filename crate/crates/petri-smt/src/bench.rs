//! Benchmark family curation over solver-timing records.
//!
//! Input is a CSV of per-solver observations (`formula, fragment, status,
//! solver, time_s, file_size`), one row per solver attempt. Rows are
//! grouped into per-formula records whose key timing is the smallest time
//! any solver needed. Formulas whose solvers disagree on sat/unsat, or
//! whose rows contradict each other, are rejected rather than guessed
//! about. Records keep their formula only if some solver answered.
//!
//! A family is one (fragment, status) pair. Its records are windowed to
//! [10 s, 3600 s], grouped into per-minute classes (nearest minute, half
//! rounds up; sub-30-second records form class 0), and selected round
//! robin across classes in ascending key order, smallest file first, up
//! to 100 per family — so class sizes in the selection differ by at most
//! one and easier formulas are preferred within each class.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use serde::Deserialize;
use thiserror::Error;

use crate::smt::{Fragment, SatStatus};

/// Per-formula solver observations and the derived minimum time.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkRecord {
    pub formula: String,
    pub fragment: Fragment,
    pub status: SatStatus,
    /// Wall time per solver that answered; solvers that timed out or gave
    /// up are simply absent.
    pub solver_times: BTreeMap<String, f64>,
    pub file_size: u64,
}

impl BenchmarkRecord {
    /// Smallest time any solver needed; `None` when nobody answered.
    pub fn min_time(&self) -> Option<f64> {
        self.solver_times.values().copied().fold(None, |acc, t| {
            Some(match acc {
                Some(best) if best <= t => best,
                _ => t,
            })
        })
    }
}

/// A formula dropped during record assembly, with the reason.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rejection {
    pub formula: String,
    pub reason: String,
}

/// Result of reading a records CSV: clean per-formula records in first
/// appearance order, plus the formulas that had to be dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedRecords {
    pub records: Vec<BenchmarkRecord>,
    pub rejected: Vec<Rejection>,
}

#[derive(Debug, Error)]
pub enum RecordError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("row {row}: {reason}")]
    BadRow { row: usize, reason: String },
}

#[derive(Deserialize)]
struct CsvRow {
    formula: String,
    fragment: String,
    status: String,
    solver: String,
    time_s: Option<f64>,
    file_size: u64,
}

struct PartialRecord {
    fragment: Fragment,
    status: Option<SatStatus>,
    solver_times: BTreeMap<String, f64>,
    solvers_seen: BTreeSet<String>,
    file_size: u64,
}

/// Reads `formula,fragment,status,solver,time_s,file_size` rows. The
/// status column also accepts `timeout`, `unknown`, and `error` for
/// attempts that produced no answer; such rows need no time. Structural
/// problems (unknown fragment, missing time on an answered row) fail the
/// whole read; contradictory data for one formula only rejects that
/// formula.
pub fn read_records_csv(text: &str) -> Result<LoadedRecords, RecordError> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let mut order: Vec<String> = Vec::new();
    let mut partials: HashMap<String, PartialRecord> = HashMap::new();
    let mut rejected: Vec<Rejection> = Vec::new();
    let mut rejected_set: BTreeSet<String> = BTreeSet::new();

    for (index, row) in reader.deserialize::<CsvRow>().enumerate() {
        let row_number = index + 1;
        let row = row?;
        let bad = |reason: String| RecordError::BadRow { row: row_number, reason };

        let fragment: Fragment = row
            .fragment
            .parse()
            .map_err(|_| bad(format!("unknown fragment `{}`", row.fragment)))?;
        let answer = match row.status.as_str() {
            "sat" => Some(SatStatus::Sat),
            "unsat" => Some(SatStatus::Unsat),
            "timeout" | "unknown" | "error" => None,
            other => return Err(bad(format!("unknown status `{other}`"))),
        };
        if answer.is_some() {
            match row.time_s {
                Some(t) if t.is_finite() && t >= 0.0 => {}
                Some(t) => return Err(bad(format!("invalid time {t}"))),
                None => return Err(bad("answered row lacks a time".to_string())),
            }
        }

        if rejected_set.contains(&row.formula) {
            continue;
        }
        let mut reject = |formula: &str, reason: String| {
            rejected_set.insert(formula.to_string());
            rejected.push(Rejection { formula: formula.to_string(), reason });
        };

        match partials.get_mut(&row.formula) {
            None => {
                let mut partial = PartialRecord {
                    fragment,
                    status: answer,
                    solver_times: BTreeMap::new(),
                    solvers_seen: BTreeSet::from([row.solver.clone()]),
                    file_size: row.file_size,
                };
                if answer.is_some() {
                    partial.solver_times.insert(row.solver, row.time_s.unwrap());
                }
                order.push(row.formula.clone());
                partials.insert(row.formula, partial);
            }
            Some(partial) => {
                if partial.fragment != fragment {
                    reject(&row.formula, "rows disagree on the fragment".to_string());
                } else if partial.file_size != row.file_size {
                    reject(&row.formula, "rows disagree on the file size".to_string());
                } else if !partial.solvers_seen.insert(row.solver.clone()) {
                    reject(&row.formula, format!("duplicate row for solver `{}`", row.solver));
                } else if let Some(status) = answer {
                    match partial.status {
                        Some(existing) if existing != status => {
                            reject(
                                &row.formula,
                                "solvers disagree on satisfiability".to_string(),
                            );
                        }
                        _ => {
                            partial.status = Some(status);
                            partial.solver_times.insert(row.solver, row.time_s.unwrap());
                        }
                    }
                }
            }
        }
    }

    let records = order
        .into_iter()
        .filter(|formula| !rejected_set.contains(formula))
        .filter_map(|formula| {
            let partial = partials.remove(&formula)?;
            let status = partial.status?;
            Some(BenchmarkRecord {
                formula,
                fragment: partial.fragment,
                status,
                solver_times: partial.solver_times,
                file_size: partial.file_size,
            })
        })
        .collect();
    Ok(LoadedRecords { records, rejected })
}

/// Splits records into (fragment, status) families, preserving record
/// order within each family.
pub fn partition_families(
    records: Vec<BenchmarkRecord>,
) -> BTreeMap<(Fragment, SatStatus), Vec<BenchmarkRecord>> {
    let mut families: BTreeMap<(Fragment, SatStatus), Vec<BenchmarkRecord>> = BTreeMap::new();
    for record in records {
        families.entry((record.fragment, record.status)).or_default().push(record);
    }
    families
}

/// Class key for a record timing: nearest minute with half rounding up,
/// computed only inside the [10 s, 3600 s] selection window. Sub-30-second
/// records land in class 0, so at most 61 distinct keys exist.
pub fn minute_class(min_time: f64) -> Option<u32> {
    if !(10.0..=3600.0).contains(&min_time) {
        return None;
    }
    Some((min_time / 60.0 + 0.5).floor() as u32)
}

/// Groups one family's records into minute classes, discarding records
/// outside the window (or with no answering solver at all).
pub fn classify(records: Vec<BenchmarkRecord>) -> BTreeMap<u32, Vec<BenchmarkRecord>> {
    let mut classes: BTreeMap<u32, Vec<BenchmarkRecord>> = BTreeMap::new();
    for record in records {
        if let Some(key) = record.min_time().and_then(minute_class) {
            classes.entry(key).or_default().push(record);
        }
    }
    classes
}

/// One selected formula: its class and its 1-based rank in selection
/// order across the family.
#[derive(Debug, Clone, PartialEq)]
pub struct Chosen {
    pub formula: String,
    pub class: u32,
    pub rank: u32,
    pub file_size: u64,
    pub min_time: f64,
}

/// A curated family: the class supply it drew from and the chosen
/// formulas in selection order.
#[derive(Debug, Clone, PartialEq)]
pub struct FamilySelection {
    pub fragment: Fragment,
    pub status: SatStatus,
    pub class_sizes: BTreeMap<u32, usize>,
    pub chosen: Vec<Chosen>,
}

pub const DEFAULT_FAMILY_TARGET: usize = 100;

/// Selects up to `target` records: passes over the classes in ascending
/// key order, each pass taking every class's smallest unchosen file
/// (ties broken by formula id), stopping mid-pass at the target. With
/// ample supply every class contributes the same count give or take one;
/// with short supply everything is taken.
pub fn select_family(
    fragment: Fragment,
    status: SatStatus,
    classes: BTreeMap<u32, Vec<BenchmarkRecord>>,
    target: usize,
) -> FamilySelection {
    let class_sizes: BTreeMap<u32, usize> =
        classes.iter().map(|(k, v)| (*k, v.len())).collect();
    let mut queues: BTreeMap<u32, VecDeque<BenchmarkRecord>> = classes
        .into_iter()
        .map(|(key, mut records)| {
            records.sort_by(|a, b| {
                a.file_size.cmp(&b.file_size).then_with(|| a.formula.cmp(&b.formula))
            });
            (key, records.into())
        })
        .collect();

    let mut chosen: Vec<Chosen> = Vec::new();
    while chosen.len() < target && !queues.is_empty() {
        let keys: Vec<u32> = queues.keys().copied().collect();
        for key in keys {
            if chosen.len() == target {
                break;
            }
            let queue = queues.get_mut(&key).expect("key just listed");
            let record = queue.pop_front().expect("empty queues are removed");
            chosen.push(Chosen {
                class: key,
                rank: chosen.len() as u32 + 1,
                min_time: record.min_time().expect("classified records have a time"),
                formula: record.formula,
                file_size: record.file_size,
            });
            if queue.is_empty() {
                queues.remove(&key);
            }
        }
    }
    FamilySelection { fragment, status, class_sizes, chosen }
}

/// Renders a selection as `formula,class,rank` CSV.
pub fn selection_csv(selection: &FamilySelection) -> String {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(["formula", "class", "rank"]).expect("in-memory write");
    for c in &selection.chosen {
        writer
            .write_record([c.formula.as_str(), &c.class.to_string(), &c.rank.to_string()])
            .expect("in-memory write");
    }
    String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("utf-8 csv")
}

/// One-line account of a family selection for logs and stdout.
pub fn summary_line(selection: &FamilySelection) -> String {
    let supply: usize = selection.class_sizes.values().sum();
    format!(
        "family {}/{}: selected {} of {} records across {} classes",
        selection.fragment.lowercase(),
        selection.status,
        selection.chosen.len(),
        supply,
        selection.class_sizes.len(),
    )
}
