//! Date, time and age shifting.
//!
//! A date mention is parsed into a template of parts (year, month number or
//! name, day, ordinal suffix, weekday, literal separators), shifted by the
//! scope's day offset and re-rendered in the original's exact format.
//! Missing components are anchored: a bare year is July 1, a month without a
//! day is the 15th, and a date without a year uses the leap year 2000.

use chrono::{Datelike, NaiveDate, TimeDelta, Weekday};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::names::{case_of, Case};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OffsetScope {
    Corpus,
    #[default]
    Patient,
    Document,
}

/// Reading of ambiguous all-numeric dates such as `03/04/2014`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DateOrder {
    #[default]
    MonthFirst,
    DayFirst,
}

impl std::str::FromStr for OffsetScope {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "corpus" => Ok(OffsetScope::Corpus),
            "patient" => Ok(OffsetScope::Patient),
            "document" => Ok(OffsetScope::Document),
            other => Err(Error::Config(format!("unknown offset scope {other:?}"))),
        }
    }
}

impl std::str::FromStr for DateOrder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "month-first" | "mdy" => Ok(DateOrder::MonthFirst),
            "day-first" | "dmy" => Ok(DateOrder::DayFirst),
            other => Err(Error::Config(format!("unknown date order {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OffsetPolicy {
    pub date_offset_days: i64,
    pub age_offset_years: i32,
    pub time_offset_minutes: i32,
    pub scope: OffsetScope,
    pub date_order: DateOrder,
}

pub const DATE_OFFSET_RANGE: (i64, i64) = (30, 365);
pub const AGE_OFFSET_MAX: i32 = 5;
pub const TIME_OFFSET_RANGE: (i32, i32) = (1, 720);

impl OffsetPolicy {
    pub fn new(
        date_offset_days: i64,
        age_offset_years: i32,
        time_offset_minutes: i32,
        scope: OffsetScope,
        date_order: DateOrder,
    ) -> Result<Self> {
        if date_offset_days == 0 {
            return Err(Error::Config("date offset must be non-zero".into()));
        }
        if age_offset_years.abs() > AGE_OFFSET_MAX {
            return Err(Error::Config(format!("age offset must be within ±{AGE_OFFSET_MAX} years")));
        }
        Ok(OffsetPolicy {
            date_offset_days,
            age_offset_years,
            time_offset_minutes,
            scope,
            date_order,
        })
    }

    /// Day offset uniform in ±[30, 365], age offset in ±[1, 5], clock offset
    /// in ±[1, 720] minutes.
    pub fn draw<R: Rng + ?Sized>(rng: &mut R, scope: OffsetScope, date_order: DateOrder) -> Self {
        let sign = |rng: &mut R| if rng.random_bool(0.5) { 1 } else { -1 };
        let days = rng.random_range(DATE_OFFSET_RANGE.0..=DATE_OFFSET_RANGE.1) * sign(rng);
        let years = rng.random_range(1..=AGE_OFFSET_MAX) * sign(rng) as i32;
        let minutes = rng.random_range(TIME_OFFSET_RANGE.0..=TIME_OFFSET_RANGE.1) * sign(rng) as i32;
        OffsetPolicy {
            date_offset_days: days,
            age_offset_years: years,
            time_offset_minutes: minutes,
            scope,
            date_order,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Shifted {
    pub value: String,
    /// The original could not be parsed and `value` is a random stand-in.
    pub fallback: bool,
}

impl Shifted {
    fn ok(value: String) -> Self {
        Shifted { value, fallback: false }
    }
}

const MONTHS: [&str; 12] = [
    "January", "February", "March", "April", "May", "June", "July", "August", "September", "October",
    "November", "December",
];
const WEEKDAYS: [&str; 7] = ["Monday", "Tuesday", "Wednesday", "Thursday", "Friday", "Saturday", "Sunday"];

// Fixed-date holidays only; movable feasts fall back.
const HOLIDAYS: &[(&str, u32, u32)] = &[
    ("new year's day", 1, 1),
    ("new years day", 1, 1),
    ("new year's", 1, 1),
    ("new year's eve", 12, 31),
    ("valentine's day", 2, 14),
    ("valentines day", 2, 14),
    ("st. patrick's day", 3, 17),
    ("st patrick's day", 3, 17),
    ("independence day", 7, 4),
    ("fourth of july", 7, 4),
    ("the fourth of july", 7, 4),
    ("halloween", 10, 31),
    ("veterans day", 11, 11),
    ("veterans' day", 11, 11),
    ("christmas eve", 12, 24),
    ("christmas", 12, 25),
    ("christmas day", 12, 25),
    ("xmas", 12, 25),
];

#[derive(Debug, Clone, Copy, PartialEq)]
enum Tok<'a> {
    Num(&'a str),
    Word(&'a str),
    Sep(&'a str),
}

fn tokenize(s: &str) -> Vec<Tok<'_>> {
    #[derive(PartialEq, Clone, Copy)]
    enum K {
        N,
        W,
        S,
    }
    let kind = |c: char| {
        if c.is_ascii_digit() {
            K::N
        } else if c.is_alphabetic() {
            K::W
        } else {
            K::S
        }
    };
    let mut out = Vec::new();
    let mut start = 0;
    let mut cur: Option<K> = None;
    for (i, c) in s.char_indices() {
        let k = kind(c);
        if cur != Some(k) {
            if let Some(prev) = cur {
                out.push(make_tok(prev == K::N, prev == K::W, &s[start..i]));
            }
            start = i;
            cur = Some(k);
        }
    }
    if let Some(prev) = cur {
        out.push(make_tok(prev == K::N, prev == K::W, &s[start..]));
    }
    out
}

fn make_tok(num: bool, word: bool, s: &str) -> Tok<'_> {
    if num {
        Tok::Num(s)
    } else if word {
        Tok::Word(s)
    } else {
        Tok::Sep(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Part {
    Lit(String),
    Year4,
    Year2,
    MonthNum(usize),
    MonthName { abbr: bool, case: Case },
    Day(usize),
    Ordinal(Case),
    Weekday { abbr: bool, case: Case },
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Role {
    Year,
    Month,
    Day,
}

#[derive(Debug, Clone, PartialEq)]
enum Anchor {
    Date(NaiveDate),
    WeekdayOnly(Weekday),
}

#[derive(Debug, Clone, PartialEq)]
struct Template {
    parts: Vec<Part>,
    anchor: Anchor,
}

fn month_word(w: &str) -> Option<(u32, bool)> {
    let lw = w.to_lowercase();
    for (i, m) in MONTHS.iter().enumerate() {
        let lm = m.to_lowercase();
        if lw == lm {
            return Some((i as u32 + 1, false));
        }
        if lw.len() == 3 && lm.starts_with(&lw) {
            return Some((i as u32 + 1, true));
        }
    }
    (lw == "sept").then_some((9, true))
}

fn weekday_word(w: &str) -> Option<(u32, bool)> {
    let lw = w.to_lowercase();
    for (i, d) in WEEKDAYS.iter().enumerate() {
        let ld = d.to_lowercase();
        if lw == ld {
            return Some((i as u32, false));
        }
        if (lw.len() == 3 || lw == "tues" || lw == "thur" || lw == "thurs") && ld.starts_with(&lw) {
            return Some((i as u32, true));
        }
    }
    None
}

fn is_ordinal_suffix(w: &str) -> bool {
    matches!(w.to_lowercase().as_str(), "st" | "nd" | "rd" | "th")
}

fn parse_year(tok: &str) -> Option<(i32, Part)> {
    let v: i32 = tok.parse().ok()?;
    match tok.len() {
        4 if (1000..=2999).contains(&v) => Some((v, Part::Year4)),
        2 => Some((if v >= 50 { 1900 + v } else { 2000 + v }, Part::Year2)),
        _ => None,
    }
}

fn small(tok: &str) -> Option<u32> {
    if tok.len() > 2 {
        return None;
    }
    tok.parse().ok()
}

fn parse_template(original: &str, order: DateOrder) -> Option<Template> {
    let toks = tokenize(original);
    let mut parts: Vec<Part> = Vec::with_capacity(toks.len());
    let mut nums: Vec<(usize, &str)> = Vec::new();
    let mut ordinal_after: Vec<usize> = Vec::new();
    let mut month_name: Option<u32> = None;
    let mut weekday: Option<u32> = None;

    for (i, tok) in toks.iter().enumerate() {
        match *tok {
            Tok::Num(d) => {
                nums.push((parts.len(), d));
                parts.push(Part::Lit(d.to_string()));
            }
            Tok::Word(w) => {
                let after_num = i > 0 && matches!(toks[i - 1], Tok::Num(_));
                if after_num && is_ordinal_suffix(w) {
                    ordinal_after.push(parts.len() - 1);
                    parts.push(Part::Ordinal(case_of(w)));
                } else if let (None, Some((m, abbr))) = (month_name, month_word(w)) {
                    month_name = Some(m);
                    parts.push(Part::MonthName { abbr, case: case_of(w) });
                } else if let (None, Some((d, abbr))) = (weekday, weekday_word(w)) {
                    weekday = Some(d);
                    parts.push(Part::Weekday { abbr, case: case_of(w) });
                } else if w.eq_ignore_ascii_case("of") || w.eq_ignore_ascii_case("the") {
                    parts.push(Part::Lit(w.to_string()));
                } else {
                    return None;
                }
            }
            Tok::Sep(s) => parts.push(Part::Lit(s.to_string())),
        }
    }

    let mut year: Option<i32> = None;
    let mut month: Option<u32> = month_name;
    let mut day: Option<u32> = None;
    let mut assign = |parts: &mut Vec<Part>, idx: usize, tok: &str, role: Role| -> Option<()> {
        match role {
            Role::Year => {
                let (y, p) = parse_year(tok)?;
                year = Some(y);
                parts[idx] = p;
            }
            Role::Month => {
                let m = small(tok)?;
                month = Some(m);
                parts[idx] = Part::MonthNum(tok.len());
            }
            Role::Day => {
                let d = small(tok)?;
                day = Some(d);
                parts[idx] = Part::Day(tok.len());
            }
        }
        Some(())
    };

    match (month_name.is_some(), nums.as_slice()) {
        (true, []) => {}
        (true, [(i, a)]) => {
            let role = if a.len() == 4 { Role::Year } else { Role::Day };
            assign(&mut parts, *i, a, role)?;
        }
        (true, [(i, a), (j, b)]) => {
            if a.len() == 4 && b.len() <= 2 {
                assign(&mut parts, *i, a, Role::Year)?;
                assign(&mut parts, *j, b, Role::Day)?;
            } else if a.len() <= 2 && (b.len() == 4 || b.len() == 2) {
                assign(&mut parts, *i, a, Role::Day)?;
                assign(&mut parts, *j, b, Role::Year)?;
            } else {
                return None;
            }
        }
        (true, _) => return None,
        (false, []) => {
            let wd = weekday?;
            return Some(Template {
                parts,
                anchor: Anchor::WeekdayOnly(Weekday::try_from(wd as u8).ok()?),
            });
        }
        (false, [(i, a)]) => match a.len() {
            4 => assign(&mut parts, *i, a, Role::Year)?,
            8 => {
                let (y, m, d) = (&a[..4], &a[4..6], &a[6..]);
                year = Some(parse_year(y)?.0);
                month = Some(small(m)?);
                day = Some(small(d)?);
                parts.splice(*i..=*i, [Part::Year4, Part::MonthNum(2), Part::Day(2)]);
            }
            _ => return None,
        },
        (false, [(i, a), (j, b)]) => {
            if !numeric_separator(&parts[*i + 1..*j]) {
                return None;
            }
            if b.len() == 4 {
                assign(&mut parts, *i, a, Role::Month)?;
                assign(&mut parts, *j, b, Role::Year)?;
            } else if a.len() == 4 {
                assign(&mut parts, *i, a, Role::Year)?;
                assign(&mut parts, *j, b, Role::Month)?;
            } else {
                let (ra, rb) = numeric_roles(a, b, order);
                assign(&mut parts, *i, a, ra)?;
                assign(&mut parts, *j, b, rb)?;
            }
        }
        (false, [(i, a), (j, b), (k, c)]) => {
            if !numeric_separator(&parts[*i + 1..*j]) || !numeric_separator(&parts[*j + 1..*k]) {
                return None;
            }
            if a.len() == 4 {
                assign(&mut parts, *i, a, Role::Year)?;
                assign(&mut parts, *j, b, Role::Month)?;
                assign(&mut parts, *k, c, Role::Day)?;
            } else {
                let (ra, rb) = numeric_roles(a, b, order);
                assign(&mut parts, *i, a, ra)?;
                assign(&mut parts, *j, b, rb)?;
                assign(&mut parts, *k, c, Role::Year)?;
            }
        }
        _ => return None,
    }

    // an ordinal suffix must follow the day
    for idx in ordinal_after {
        if !matches!(parts[idx], Part::Day(_)) {
            return None;
        }
    }

    let month = month.unwrap_or(7);
    let day = match (day, year, month_name.is_some() || parts.iter().any(|p| matches!(p, Part::MonthNum(_)))) {
        (Some(d), _, _) => d,
        (None, Some(_), false) => 1,
        _ => 15,
    };
    let date = NaiveDate::from_ymd_opt(year.unwrap_or(2000), month, day)?;
    Some(Template {
        parts,
        anchor: Anchor::Date(date),
    })
}

fn numeric_separator(between: &[Part]) -> bool {
    matches!(between, [Part::Lit(s)] if s == "/" || s == "-" || s == ".")
}

/// Month/day roles for two short numbers, swapping when the preferred
/// reading is impossible but the other is not.
fn numeric_roles(a: &str, b: &str, order: DateOrder) -> (Role, Role) {
    let (va, vb) = (small(a).unwrap_or(99), small(b).unwrap_or(99));
    let month_first = match order {
        DateOrder::MonthFirst => !(va > 12 && vb <= 12),
        DateOrder::DayFirst => vb > 12 && va <= 12,
    };
    if month_first {
        (Role::Month, Role::Day)
    } else {
        (Role::Day, Role::Month)
    }
}

fn apply_case(s: &str, case: Case) -> String {
    match case {
        Case::Upper => s.to_uppercase(),
        Case::Lower => s.to_lowercase(),
        Case::Mixed => s.to_string(),
    }
}

fn ordinal_suffix(day: u32) -> &'static str {
    match (day % 10, day % 100) {
        (_, 11..=13) => "th",
        (1, _) => "st",
        (2, _) => "nd",
        (3, _) => "rd",
        _ => "th",
    }
}

fn render(parts: &[Part], date: NaiveDate, weekday: Weekday) -> String {
    let mut out = String::new();
    for p in parts {
        match p {
            Part::Lit(s) => out.push_str(s),
            Part::Year4 => out.push_str(&format!("{:04}", date.year())),
            Part::Year2 => out.push_str(&format!("{:02}", date.year().rem_euclid(100))),
            Part::MonthNum(w) => out.push_str(&pad(date.month(), *w)),
            Part::Day(w) => out.push_str(&pad(date.day(), *w)),
            Part::MonthName { abbr, case } => {
                let name = MONTHS[date.month0() as usize];
                let name = if *abbr { &name[..3] } else { name };
                out.push_str(&apply_case(name, *case));
            }
            Part::Ordinal(case) => out.push_str(&apply_case(ordinal_suffix(date.day()), *case)),
            Part::Weekday { abbr, case } => {
                let name = WEEKDAYS[weekday.num_days_from_monday() as usize];
                let name = if *abbr { &name[..3] } else { name };
                out.push_str(&apply_case(name, *case));
            }
        }
    }
    out
}

fn pad(v: u32, width: usize) -> String {
    if width >= 2 {
        format!("{v:02}")
    } else {
        v.to_string()
    }
}

fn normalize_holiday(s: &str) -> String {
    s.trim()
        .trim_end_matches('.')
        .replace('’', "'")
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

fn random_canonical_date<R: Rng + ?Sized>(rng: &mut R) -> String {
    let base = NaiveDate::from_ymd_opt(1990, 1, 1).expect("valid");
    let d = base + TimeDelta::days(rng.random_range(0..14_600));
    d.format("%m/%d/%Y").to_string()
}

/// Shifts a date mention by `policy.date_offset_days`, keeping its format.
/// Unparseable input yields a random `MM/DD/YYYY` date with `fallback` set.
pub fn offset_date<R: Rng + ?Sized>(original: &str, policy: &OffsetPolicy, rng: &mut R) -> Shifted {
    let offset = TimeDelta::days(policy.date_offset_days);

    if let Some(&(_, m, d)) = HOLIDAYS.iter().find(|(name, _, _)| *name == normalize_holiday(original)) {
        let date = NaiveDate::from_ymd_opt(2001, m, d).expect("holiday table is valid") + offset;
        let value = format!("{} {}", MONTHS[date.month0() as usize], date.day());
        return Shifted::ok(super::names::match_case(&value, original));
    }

    match parse_template(original, policy.date_order) {
        Some(Template {
            parts,
            anchor: Anchor::WeekdayOnly(wd),
        }) => {
            let shifted = wd_shift(wd, policy.date_offset_days);
            let any_date = NaiveDate::from_ymd_opt(2000, 1, 1).expect("valid");
            Shifted::ok(render(&parts, any_date, shifted))
        }
        Some(Template {
            parts,
            anchor: Anchor::Date(date),
        }) => match date.checked_add_signed(offset) {
            Some(d) => Shifted::ok(render(&parts, d, d.weekday())),
            None => Shifted {
                value: random_canonical_date(rng),
                fallback: true,
            },
        },
        None => Shifted {
            value: random_canonical_date(rng),
            fallback: true,
        },
    }
}

fn wd_shift(wd: Weekday, days: i64) -> Weekday {
    let idx = (wd.num_days_from_monday() as i64 + days).rem_euclid(7);
    Weekday::try_from(idx as u8).expect("0..7")
}

/// Shifts `H:MM[:SS][ am|pm]` clock times by the policy's minute offset,
/// wrapping at midnight.
pub fn offset_time<R: Rng + ?Sized>(original: &str, policy: &OffsetPolicy, rng: &mut R) -> Shifted {
    match shift_clock(original, policy.time_offset_minutes) {
        Some(v) => Shifted::ok(v),
        None => Shifted {
            value: format!("{:02}:{:02}", rng.random_range(0..24), rng.random_range(0..60)),
            fallback: true,
        },
    }
}

fn shift_clock(original: &str, minutes: i32) -> Option<String> {
    let clock_end = original
        .find(|c: char| !(c.is_ascii_digit() || c == ':'))
        .unwrap_or(original.len());
    let (clock, rest) = original.split_at(clock_end);
    let fields: Vec<&str> = clock.split(':').collect();
    let (h, m, s) = match fields.as_slice() {
        [h, m] => (*h, *m, None),
        [h, m, s] => (*h, *m, Some(*s)),
        _ => return None,
    };
    if h.is_empty() || h.len() > 2 || m.len() != 2 || s.is_some_and(|s| s.len() != 2) {
        return None;
    }
    let hour: i32 = h.parse().ok()?;
    let minute: i32 = m.parse().ok()?;
    if minute > 59 || s.is_some_and(|s| s.parse::<u32>().map_or(true, |v| v > 59)) {
        return None;
    }
    let meridiem = rest.trim_start().replace('.', "").to_lowercase();
    let pm = match meridiem.as_str() {
        "" => None,
        "am" => Some(false),
        "pm" => Some(true),
        _ => return None,
    };
    let h24 = match pm {
        None if hour <= 23 => hour,
        Some(is_pm) if (1..=12).contains(&hour) => hour % 12 + if is_pm { 12 } else { 0 },
        _ => return None,
    };
    let total = (h24 * 60 + minute + minutes).rem_euclid(24 * 60);
    let (nh, nm) = (total / 60, total % 60);
    let mut out = String::new();
    let shown_hour = if pm.is_some() {
        if nh % 12 == 0 {
            12
        } else {
            nh % 12
        }
    } else {
        nh
    };
    let zero_pad = h.starts_with('0') || (pm.is_none() && h.len() == 2);
    out.push_str(&pad(shown_hour as u32, if zero_pad { 2 } else { 1 }));
    out.push(':');
    out.push_str(&format!("{nm:02}"));
    if let Some(s) = s {
        out.push(':');
        out.push_str(s);
    }
    match pm {
        None => out.push_str(rest),
        Some(was_pm) => {
            if was_pm == (nh >= 12) {
                out.push_str(rest);
            } else {
                out.extend(rest.chars().map(|c| match c {
                    'a' => 'p',
                    'p' => 'a',
                    'A' => 'P',
                    'P' => 'A',
                    o => o,
                }));
            }
        }
    }
    Some(out)
}

/// Ages under 90 move by the policy's year offset, clamped to [1, 89]; when
/// the clamp would keep the age unchanged the offset is applied the other way.
/// Ages of 90 and over become a uniform draw from [90, 99] other than the
/// original. Text without a number
/// becomes a random age in [20, 89].
pub fn offset_age<R: Rng + ?Sized>(original: &str, rng: &mut R, policy: &OffsetPolicy) -> Shifted {
    let Some(start) = original.find(|c: char| c.is_ascii_digit()) else {
        return Shifted {
            value: rng.random_range(20..=89u32).to_string(),
            fallback: true,
        };
    };
    let len = original[start..]
        .find(|c: char| !c.is_ascii_digit())
        .unwrap_or(original.len() - start);
    let digits = &original[start..start + len];
    let age: u64 = digits.parse().unwrap_or(u64::MAX);
    let new_age = if age > 99 {
        rng.random_range(90..=99u64)
    } else if age >= 90 {
        let v = rng.random_range(90..=98u64);
        if age <= v { v + 1 } else { v }
    } else {
        let shift = |years: i64| (age as i64 + years).clamp(1, 89) as u64;
        match shift(policy.age_offset_years as i64) {
            same if same == age => shift(-(policy.age_offset_years as i64)),
            moved => moved,
        }
    };
    Shifted::ok(format!("{}{}{}", &original[..start], new_age, &original[start + len..]))
}
