//! Positional character-class surrogates for phone numbers and identifiers.
//!
//! Each character of a template is classified as digit, uppercase,
//! lowercase or other; digits and letters are redrawn within their class and
//! everything else is copied verbatim.

use rand::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CharClass {
    Digit,
    Upper,
    Lower,
    Other(char),
}

pub fn classify(c: char) -> CharClass {
    if c.is_ascii_digit() {
        CharClass::Digit
    } else if c.is_ascii_uppercase() {
        CharClass::Upper
    } else if c.is_ascii_lowercase() {
        CharClass::Lower
    } else {
        CharClass::Other(c)
    }
}

pub fn shape_of(s: &str) -> Vec<CharClass> {
    s.chars().map(classify).collect()
}

/// Redraws every digit and ASCII letter of `template` within its class.
/// With `nonzero_lead` the first digit is drawn from 2-9, as in a North
/// American area code.
pub fn fill_shape<R: Rng + ?Sized>(template: &str, rng: &mut R, nonzero_lead: bool) -> String {
    let mut first_digit = true;
    template
        .chars()
        .map(|c| match classify(c) {
            CharClass::Digit => {
                let d = if first_digit && nonzero_lead {
                    rng.random_range(2..=9u8)
                } else {
                    rng.random_range(0..=9u8)
                };
                first_digit = false;
                char::from(b'0' + d)
            }
            CharClass::Upper => char::from(b'A' + rng.random_range(0..26u8)),
            CharClass::Lower => char::from(b'a' + rng.random_range(0..26u8)),
            CharClass::Other(o) => o,
        })
        .collect()
}

pub fn has_variable_chars(s: &str) -> bool {
    s.chars().any(|c| !matches!(classify(c), CharClass::Other(_)))
}

/// Dotted-quad IPv4 address.
pub fn looks_like_ipv4(s: &str) -> bool {
    let parts: Vec<&str> = s.trim().split('.').collect();
    parts.len() == 4
        && parts
            .iter()
            .all(|p| !p.is_empty() && p.len() <= 3 && p.bytes().all(|b| b.is_ascii_digit()) && p.parse::<u16>().is_ok_and(|n| n <= 255))
}

pub fn random_ipv4<R: Rng + ?Sized>(rng: &mut R) -> String {
    format!(
        "{}.{}.{}.{}",
        rng.random_range(11..=223u8),
        rng.random_range(0..=255u8),
        rng.random_range(0..=255u8),
        rng.random_range(1..=254u8)
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from;
    use proptest::prelude::*;

    #[test]
    fn idnum_shape_is_preserved() {
        let mut rng = rng_from(1);
        let out = fill_shape("AB-1234", &mut rng, false);
        let classes: Vec<_> = out.chars().map(classify).collect();
        assert_eq!(
            classes,
            vec![
                CharClass::Upper,
                CharClass::Upper,
                CharClass::Other('-'),
                CharClass::Digit,
                CharClass::Digit,
                CharClass::Digit,
                CharClass::Digit
            ]
        );
    }

    #[test]
    fn phone_area_code_lead() {
        for seed in 0..200 {
            let out = fill_shape("(205) 996-0736", &mut rng_from(seed), true);
            let lead = out.chars().nth(1).unwrap();
            assert!(('2'..='9').contains(&lead), "{out}");
        }
    }

    #[test]
    fn ipv4_detection() {
        assert!(looks_like_ipv4("192.168.0.1"));
        assert!(!looks_like_ipv4("192.168.0"));
        assert!(!looks_like_ipv4("300.1.1.1"));
        assert!(looks_like_ipv4(&random_ipv4(&mut rng_from(3))));
    }

    proptest! {
        #[test]
        fn shape_preserved_for_any_template(template in "[A-Za-z0-9 ()./#:-]{0,24}", seed in any::<u64>(), lead in any::<bool>()) {
            let out = fill_shape(&template, &mut rng_from(seed), lead);
            prop_assert_eq!(shape_of(&out), shape_of(&template));
        }
    }
}
