use serde::{Deserialize, Serialize};

use crate::util::format_number;

/// Engineering scale suffix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suffix {
    F,
    P,
    N,
    U,
    M,
    K,
    Meg,
    G,
}

impl Suffix {
    pub fn canonical(self) -> &'static str {
        match self {
            Suffix::F => "f",
            Suffix::P => "p",
            Suffix::N => "n",
            Suffix::U => "u",
            Suffix::M => "m",
            Suffix::K => "k",
            Suffix::Meg => "meg",
            Suffix::G => "g",
        }
    }

    pub fn multiplier(self) -> f64 {
        match self {
            Suffix::F => 1e-15,
            Suffix::P => 1e-12,
            Suffix::N => 1e-9,
            Suffix::U => 1e-6,
            Suffix::M => 1e-3,
            Suffix::K => 1e3,
            Suffix::Meg => 1e6,
            Suffix::G => 1e9,
        }
    }
}

/// A numeric literal as written in a netlist, e.g. `1K`, `0.5u`, `2.2e-12`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhysicalValue {
    pub magnitude: f64,
    pub suffix: Option<Suffix>,
    pub raw: String,
}

impl PhysicalValue {
    /// Parse a SPICE number. Returns `None` for anything that does not start
    /// with a finite decimal literal or carries non-alphabetic trailing text.
    pub fn parse(raw: &str) -> Option<Self> {
        let num_len = numeric_prefix_len(raw);
        if num_len == 0 {
            return None;
        }
        let magnitude: f64 = raw[..num_len].parse().ok()?;
        if !magnitude.is_finite() {
            return None;
        }
        let rest = &raw[num_len..];
        if !rest.chars().all(|c| c.is_ascii_alphabetic()) {
            return None;
        }
        let lower = rest.to_ascii_lowercase();
        let suffix = if lower.starts_with("meg") {
            Some(Suffix::Meg)
        } else {
            match lower.chars().next() {
                Some('f') => Some(Suffix::F),
                Some('p') => Some(Suffix::P),
                Some('n') => Some(Suffix::N),
                Some('u') => Some(Suffix::U),
                Some('m') => Some(Suffix::M),
                Some('k') => Some(Suffix::K),
                Some('g') => Some(Suffix::G),
                _ => None,
            }
        };
        Some(PhysicalValue {
            magnitude,
            suffix,
            raw: raw.to_string(),
        })
    }

    pub fn from_scaled(magnitude: f64, suffix: Option<Suffix>) -> Self {
        let raw = format!(
            "{}{}",
            format_number(magnitude),
            suffix.map(Suffix::canonical).unwrap_or("")
        );
        PhysicalValue {
            magnitude,
            suffix,
            raw,
        }
    }

    /// Value in base units.
    pub fn si(&self) -> f64 {
        self.magnitude * self.suffix.map_or(1.0, Suffix::multiplier)
    }

    /// The scale suffix exactly as written (`"K"` for `1K`, `"MEG"` for `1MEG`).
    pub fn suffix_text(&self) -> &str {
        let rest = &self.raw[numeric_prefix_len(&self.raw)..];
        match self.suffix {
            Some(Suffix::Meg) => &rest[..3],
            Some(_) => &rest[..1],
            None => "",
        }
    }

    /// Unit letters after the suffix (`F` in `10pF`).
    pub fn unit_text(&self) -> &str {
        let rest = &self.raw[numeric_prefix_len(&self.raw)..];
        &rest[self.suffix_text().len()..]
    }

    /// Same number with the suffix rewritten in canonical lower case.
    pub fn canonical_raw(&self) -> String {
        let num = &self.raw[..numeric_prefix_len(&self.raw)];
        format!(
            "{}{}{}",
            num,
            self.suffix.map(Suffix::canonical).unwrap_or(""),
            self.unit_text()
        )
    }
}

/// Length of the leading decimal literal (sign, digits, fraction, exponent).
pub(crate) fn numeric_prefix_len(s: &str) -> usize {
    let b = s.as_bytes();
    let mut i = 0;
    if i < b.len() && (b[i] == b'+' || b[i] == b'-') {
        i += 1;
    }
    let int_start = i;
    while i < b.len() && b[i].is_ascii_digit() {
        i += 1;
    }
    let mut digits = i - int_start;
    if i < b.len() && b[i] == b'.' {
        i += 1;
        let frac_start = i;
        while i < b.len() && b[i].is_ascii_digit() {
            i += 1;
        }
        digits += i - frac_start;
    }
    if digits == 0 {
        return 0;
    }
    if i < b.len() && (b[i] == b'e' || b[i] == b'E') {
        let mut j = i + 1;
        if j < b.len() && (b[j] == b'+' || b[j] == b'-') {
            j += 1;
        }
        let exp_start = j;
        while j < b.len() && b[j].is_ascii_digit() {
            j += 1;
        }
        if j > exp_start {
            i = j;
        }
    }
    i
}
