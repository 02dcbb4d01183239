//! Fitting a "First Last" surrogate to the shape of the original mention.

use crate::seed::fnv1a;

const TITLES: &[&str] = &["dr", "dr.", "mr", "mr.", "mrs", "mrs.", "ms", "ms.", "miss", "prof", "prof."];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Case {
    Upper,
    Lower,
    Mixed,
}

pub(crate) fn case_of(s: &str) -> Case {
    let letters = s.chars().filter(|c| c.is_alphabetic());
    let (mut up, mut low) = (0, 0);
    for c in letters {
        if c.is_uppercase() {
            up += 1;
        } else if c.is_lowercase() {
            low += 1;
        }
    }
    match (up, low) {
        (u, 0) if u > 1 => Case::Upper,
        (0, l) if l > 0 => Case::Lower,
        _ => Case::Mixed,
    }
}

/// Applies the original's all-caps / all-lowercase styling to `value`.
pub(crate) fn match_case(value: &str, original: &str) -> String {
    match case_of(original) {
        Case::Upper => value.to_uppercase(),
        Case::Lower => value.to_lowercase(),
        Case::Mixed => value.to_string(),
    }
}

fn is_initial(tok: &str) -> bool {
    let t = tok.trim_end_matches('.');
    t.chars().count() == 1 && t.chars().all(char::is_alphabetic)
}

/// `value` is "First Last". The original decides which parts are emitted:
/// a bare token becomes a first name, "Last, First" order is kept, titles
/// are carried over with the surname, initials stay initials.
pub fn render_name(value: &str, original: Option<&str>) -> String {
    let (first, last) = value.split_once(' ').unwrap_or((value, value));
    let Some(original) = original.map(str::trim).filter(|o| !o.is_empty()) else {
        return value.to_string();
    };

    let (core, possessive) = match original.strip_suffix("'s").or_else(|| original.strip_suffix("’s")) {
        Some(c) => (c, true),
        None => (original, false),
    };
    let mut toks: Vec<&str> = core.split_whitespace().collect();
    let title = match toks.first() {
        Some(t) if TITLES.contains(&t.to_lowercase().as_str()) => Some(toks.remove(0)),
        _ => None,
    };

    let middle = char::from(b'A' + (fnv1a(value.as_bytes()) % 26) as u8);
    let initial = |name: &str| format!("{}.", name.chars().next().unwrap_or('X'));
    let body = match toks.as_slice() {
        [] => last.to_string(),
        [only] if title.is_some() => {
            if is_initial(only) {
                initial(last)
            } else {
                last.to_string()
            }
        }
        [only] => {
            if only.ends_with(',') {
                format!("{last},")
            } else if is_initial(only) {
                initial(first)
            } else {
                first.to_string()
            }
        }
        [a, b] if a.ends_with(',') => {
            let f = if is_initial(b) { initial(first) } else { first.to_string() };
            format!("{last}, {f}")
        }
        [a, b] => {
            let f = if is_initial(a) { initial(first) } else { first.to_string() };
            let l = if is_initial(b) { initial(last) } else { last.to_string() };
            format!("{f} {l}")
        }
        [a, .., _] if a.ends_with(',') => format!("{last}, {first} {middle}."),
        [a, ..] => {
            let f = if is_initial(a) { initial(first) } else { first.to_string() };
            format!("{f} {middle}. {last}")
        }
    };
    let mut out = match title {
        Some(t) => format!("{t} {body}"),
        None => body,
    };
    out = match_case(&out, core);
    if possessive {
        out.push_str("'s");
    }
    out
}
