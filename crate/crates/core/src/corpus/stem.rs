//! Deterministic Spanish suffix stemmer.
//!
//! Operates on accent-folded lowercase ASCII words. At each step the longest
//! suffix from [`SUFFIXES`] whose removal leaves at least [`MIN_STEM_LEN`]
//! characters is stripped; steps repeat until no rule applies. Running to a
//! fixed point makes the stemmer idempotent.
//!
//! Every derivational suffix is listed together with its plural so singular
//! and plural forms reach the same stem.

pub const MIN_STEM_LEN: usize = 4;

pub const SUFFIXES: &[&str] = &[
    // derivational
    "amientos", "imientos", "amiento", "imiento",
    "aciones", "uciones", "acion", "ucion",
    "adoras", "adores", "adora", "ador",
    "logias", "logia",
    "idades", "idad",
    "ismos", "ismo", "istas", "ista",
    "ables", "ibles", "able", "ible",
    "mente",
    // verbal
    "iendo", "ando",
    "ieron", "aron",
    "aban", "aba",
    "ados", "idos", "adas", "idas",
    "ado", "ido", "ada", "ida",
    // inflectional
    "es", "os", "as",
    "a", "o", "e", "s",
];

pub fn stem(word: &str) -> String {
    let mut current = word.to_string();
    loop {
        let len = current.len();
        let rule = SUFFIXES
            .iter()
            .filter(|s| current.ends_with(*s) && len - s.len() >= MIN_STEM_LEN)
            .max_by_key(|s| s.len());
        match rule {
            Some(s) => current.truncate(len - s.len()),
            None => return current,
        }
    }
}
