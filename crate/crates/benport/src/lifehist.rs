//! Ingestion of external life-history panels: education-years coding from
//! school and vocational degrees, employment-exit derivation, years-in-
//! employment band counts, and occupational prestige extraction.
//!
//! Input files use the cohort panel CSV schema, optionally extended with
//! `prestige`, `school_degree`, and `vocational_degree` columns. Malformed
//! rows are reported with line numbers and parsing aborts after a
//! configurable error cap.

use std::collections::BTreeMap;
use std::io::Read;
use std::str::FromStr;

use thiserror::Error;

use crate::cohort::State;

pub const DEFAULT_ERROR_CAP: usize = 100;

pub const PRESTIGE_MIN: i64 = 18;
pub const PRESTIGE_MAX: i64 = 78;

#[derive(Debug, Error)]
pub enum LifeHistError {
    #[error("row {row}: {message}")]
    MalformedRow { row: usize, message: String },
    #[error("too many malformed rows ({count}); first errors:\n{sample}")]
    ErrorCapExceeded { count: usize, sample: String },
    #[error("agent {id}: ages are not contiguous ({prev} then {next})")]
    GapInAges { id: u64, prev: i64, next: i64 },
    #[error("prestige score {value} outside {PRESTIGE_MIN}..={PRESTIGE_MAX}")]
    OutOfRange { value: i64 },
    #[error("unknown degree token '{0}'")]
    UnknownDegree(String),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("missing required column '{0}'")]
    MissingColumn(String),
}

/// Highest general-school degree, with the minimum years needed to earn it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SchoolDegree {
    None8,
    Sonderschule8,
    Hauptschule8,
    MittlereReife10,
    Fachhochschulreife12,
    Abitur13,
}

impl SchoolDegree {
    pub const ALL: [SchoolDegree; 6] = [
        SchoolDegree::None8,
        SchoolDegree::Sonderschule8,
        SchoolDegree::Hauptschule8,
        SchoolDegree::MittlereReife10,
        SchoolDegree::Fachhochschulreife12,
        SchoolDegree::Abitur13,
    ];

    pub fn years(&self) -> u32 {
        match self {
            SchoolDegree::None8 | SchoolDegree::Sonderschule8 | SchoolDegree::Hauptschule8 => 8,
            SchoolDegree::MittlereReife10 => 10,
            SchoolDegree::Fachhochschulreife12 => 12,
            SchoolDegree::Abitur13 => 13,
        }
    }
}

impl FromStr for SchoolDegree {
    type Err = LifeHistError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "none8" | "none" => Ok(SchoolDegree::None8),
            "sonderschule8" | "sonderschule" => Ok(SchoolDegree::Sonderschule8),
            "hauptschule8" | "hauptschule" => Ok(SchoolDegree::Hauptschule8),
            "mittlerereife10" | "mittlerereife" => Ok(SchoolDegree::MittlereReife10),
            "fachhochschulreife12" | "fachhochschulreife" => {
                Ok(SchoolDegree::Fachhochschulreife12)
            }
            "abitur13" | "abitur" => Ok(SchoolDegree::Abitur13),
            other => Err(LifeHistError::UnknownDegree(other.to_string())),
        }
    }
}

/// Highest vocational or tertiary degree, with its minimum duration.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum VocationalDegree {
    None0,
    AgriHousehold2,
    Industrial2,
    VocSchool2,
    Commercial3,
    Master4,
    AppliedUni4,
    University5,
    Other2,
}

impl VocationalDegree {
    pub const ALL: [VocationalDegree; 9] = [
        VocationalDegree::None0,
        VocationalDegree::AgriHousehold2,
        VocationalDegree::Industrial2,
        VocationalDegree::VocSchool2,
        VocationalDegree::Commercial3,
        VocationalDegree::Master4,
        VocationalDegree::AppliedUni4,
        VocationalDegree::University5,
        VocationalDegree::Other2,
    ];

    pub fn years(&self) -> u32 {
        match self {
            VocationalDegree::None0 => 0,
            VocationalDegree::AgriHousehold2
            | VocationalDegree::Industrial2
            | VocationalDegree::VocSchool2
            | VocationalDegree::Other2 => 2,
            VocationalDegree::Commercial3 => 3,
            VocationalDegree::Master4 | VocationalDegree::AppliedUni4 => 4,
            VocationalDegree::University5 => 5,
        }
    }
}

impl FromStr for VocationalDegree {
    type Err = LifeHistError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "none0" | "none" => Ok(VocationalDegree::None0),
            "agrihousehold2" | "agrihousehold" => Ok(VocationalDegree::AgriHousehold2),
            "industrial2" | "industrial" => Ok(VocationalDegree::Industrial2),
            "vocschool2" | "vocschool" => Ok(VocationalDegree::VocSchool2),
            "commercial3" | "commercial" => Ok(VocationalDegree::Commercial3),
            "master4" | "master" => Ok(VocationalDegree::Master4),
            "applieduni4" | "applieduni" => Ok(VocationalDegree::AppliedUni4),
            "university5" | "university" => Ok(VocationalDegree::University5),
            "other2" | "other" => Ok(VocationalDegree::Other2),
            other => Err(LifeHistError::UnknownDegree(other.to_string())),
        }
    }
}

/// A school/vocational degree pair. Both fields are always present; the
/// explicit None variants carry the minimum durations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct DegreeCode {
    pub school: SchoolDegree,
    pub vocational: VocationalDegree,
}

/// Minimum years of education implied by a degree pair: school years plus
/// vocational years.
pub fn education_years(code: DegreeCode) -> u32 {
    code.school.years() + code.vocational.years()
}

/// An occupational prestige score, constrained to the 18–78 scale.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct PrestigeScore(i64);

impl PrestigeScore {
    pub fn new(value: i64) -> Result<Self, LifeHistError> {
        if !(PRESTIGE_MIN..=PRESTIGE_MAX).contains(&value) {
            return Err(LifeHistError::OutOfRange { value });
        }
        Ok(Self(value))
    }

    pub fn value(&self) -> i64 {
        self.0
    }
}

/// One parsed life-history observation.
#[derive(Clone, Debug)]
pub struct LifeHistRow {
    pub id: u64,
    pub birth_year: i64,
    pub age: i64,
    pub year: i64,
    pub state: State,
    pub exited_employment: bool,
    pub displaced: bool,
    pub injured: bool,
    pub pow: bool,
    pub female: bool,
    pub prestige: Option<i64>,
    pub degrees: Option<DegreeCode>,
}

fn parse_bool(field: &str) -> Result<bool, String> {
    match field {
        "0" => Ok(false),
        "1" => Ok(true),
        other => Err(format!("expected 0 or 1, got '{other}'")),
    }
}

/// Reads a life-history panel CSV. The required columns are the cohort
/// panel schema; `prestige`, `school_degree`, and `vocational_degree` are
/// recognized when present. Malformed rows are collected with their line
/// numbers; parsing fails once `error_cap` of them accumulate. A clean
/// parse with a few bad rows returns the good rows plus the error list.
pub fn read_panel_csv<R: Read>(
    reader: R,
    error_cap: usize,
) -> Result<(Vec<LifeHistRow>, Vec<LifeHistError>), LifeHistError> {
    let mut csv_reader = csv::Reader::from_reader(reader);
    let headers = csv_reader.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let required = [
        "id",
        "birth_year",
        "age",
        "year",
        "state",
        "exited_employment",
        "displaced",
        "injured",
        "pow",
        "female",
    ];
    let mut idx = [0usize; 10];
    for (slot, name) in idx.iter_mut().zip(required) {
        *slot = col(name).ok_or_else(|| LifeHistError::MissingColumn(name.to_string()))?;
    }
    let prestige_idx = col("prestige");
    let school_idx = col("school_degree");
    let voc_idx = col("vocational_degree");

    let mut rows = Vec::new();
    let mut errors: Vec<LifeHistError> = Vec::new();
    for (row_no, record) in csv_reader.records().enumerate() {
        let line = row_no + 2; // 1-based, after the header
        let fail = |message: String| LifeHistError::MalformedRow { row: line, message };
        let parsed: Result<LifeHistRow, LifeHistError> = (|| {
            let record = record?;
            let field = |i: usize| record.get(i).unwrap_or("");
            let id = field(idx[0])
                .parse::<u64>()
                .map_err(|e| fail(format!("id: {e}")))?;
            let birth_year = field(idx[1])
                .parse::<i64>()
                .map_err(|e| fail(format!("birth_year: {e}")))?;
            let age = field(idx[2])
                .parse::<i64>()
                .map_err(|e| fail(format!("age: {e}")))?;
            let year = field(idx[3])
                .parse::<i64>()
                .map_err(|e| fail(format!("year: {e}")))?;
            let state = field(idx[4])
                .parse::<State>()
                .map_err(|e| fail(format!("state: {e}")))?;
            let exited_employment =
                parse_bool(field(idx[5])).map_err(|e| fail(format!("exited_employment: {e}")))?;
            let displaced =
                parse_bool(field(idx[6])).map_err(|e| fail(format!("displaced: {e}")))?;
            let injured = parse_bool(field(idx[7])).map_err(|e| fail(format!("injured: {e}")))?;
            let pow = parse_bool(field(idx[8])).map_err(|e| fail(format!("pow: {e}")))?;
            let female = parse_bool(field(idx[9])).map_err(|e| fail(format!("female: {e}")))?;
            let prestige = match prestige_idx {
                Some(i) if !field(i).is_empty() => Some(
                    field(i)
                        .parse::<i64>()
                        .map_err(|e| fail(format!("prestige: {e}")))?,
                ),
                _ => None,
            };
            let degrees = match (school_idx, voc_idx) {
                (Some(si), Some(vi)) if !field(si).is_empty() || !field(vi).is_empty() => {
                    let school = field(si)
                        .parse::<SchoolDegree>()
                        .map_err(|e| fail(format!("school_degree: {e}")))?;
                    let vocational = field(vi)
                        .parse::<VocationalDegree>()
                        .map_err(|e| fail(format!("vocational_degree: {e}")))?;
                    Some(DegreeCode { school, vocational })
                }
                _ => None,
            };
            Ok(LifeHistRow {
                id,
                birth_year,
                age,
                year,
                state,
                exited_employment,
                displaced,
                injured,
                pow,
                female,
                prestige,
                degrees,
            })
        })();
        match parsed {
            Ok(row) => rows.push(row),
            Err(e) => {
                errors.push(e);
                if errors.len() >= error_cap {
                    let sample = errors
                        .iter()
                        .take(10)
                        .map(|e| e.to_string())
                        .collect::<Vec<_>>()
                        .join("\n");
                    return Err(LifeHistError::ErrorCapExceeded {
                        count: errors.len(),
                        sample,
                    });
                }
            }
        }
    }
    Ok((rows, errors))
}

fn check_contiguous(rows: &[LifeHistRow]) -> Result<(), LifeHistError> {
    for pair in rows.windows(2) {
        if pair[1].age != pair[0].age + 1 {
            return Err(LifeHistError::GapInAges {
                id: pair[0].id,
                prev: pair[0].age,
                next: pair[1].age,
            });
        }
    }
    Ok(())
}

/// Count of ages with employment state within `[age_lo, age_hi]`,
/// inclusive, for one agent's contiguous rows.
pub fn years_in_employment(
    rows: &[LifeHistRow],
    age_lo: i64,
    age_hi: i64,
) -> Result<u32, LifeHistError> {
    check_contiguous(rows)?;
    Ok(rows
        .iter()
        .filter(|r| r.age >= age_lo && r.age <= age_hi && r.state == State::Employment)
        .count() as u32)
}

/// Maximum prestige over an agent's employment spells; `None` when never
/// employed (or no prestige recorded on any employment row).
pub fn max_prestige(rows: &[LifeHistRow]) -> Result<Option<PrestigeScore>, LifeHistError> {
    let mut best: Option<i64> = None;
    for row in rows {
        if row.state != State::Employment {
            continue;
        }
        if let Some(p) = row.prestige {
            PrestigeScore::new(p)?;
            best = Some(best.map_or(p, |b| b.max(p)));
        }
    }
    best.map(PrestigeScore::new).transpose()
}

/// Per-age exit indicator for one agent: 0 through the final employment
/// age, 1 strictly afterward. Gap years before a later employment spell
/// stay 0 (the last job wins); an agent never observed in employment is
/// coded as exited at every post-education age.
pub fn derive_exit_indicator(rows: &[LifeHistRow]) -> Result<Vec<(i64, bool)>, LifeHistError> {
    check_contiguous(rows)?;
    let last_employment = rows
        .iter()
        .rev()
        .find(|r| r.state == State::Employment)
        .map(|r| r.age);
    let first_non_education = rows
        .iter()
        .find(|r| r.state != State::Education)
        .map(|r| r.age);
    Ok(rows
        .iter()
        .map(|r| {
            let exited = match (last_employment, first_non_education) {
                (Some(last), _) => r.age > last,
                (None, Some(first)) => r.age >= first,
                (None, None) => false,
            };
            (r.age, exited)
        })
        .collect())
}

/// Groups parsed rows by agent id, preserving within-agent order.
pub fn group_by_agent(rows: Vec<LifeHistRow>) -> BTreeMap<u64, Vec<LifeHistRow>> {
    let mut out: BTreeMap<u64, Vec<LifeHistRow>> = BTreeMap::new();
    for row in rows {
        out.entry(row.id).or_default().push(row);
    }
    out
}
