//! Small helpers shared across modules.

/// 64-bit FNV-1a. Stable across platforms and toolchains, which `DefaultHasher` is not.
pub(crate) fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        hash ^= u64::from(*b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

/// Shortest text that parses back to exactly `x`.
pub(crate) fn format_number(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    let plain = format!("{x}");
    let sci = format!("{x:e}");
    if plain.len() <= sci.len() {
        plain
    } else {
        sci
    }
}

/// Round to `digits` significant digits through the decimal representation.
pub(crate) fn round_sig(x: f64, digits: usize) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{:.*e}", digits.saturating_sub(1), x)
        .parse()
        .unwrap_or(x)
}

pub(crate) fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_formatting_round_trips() {
        for x in [0.049, 1e-6, 1.8, 100.0, 2.5e-12, -0.3] {
            assert_eq!(format_number(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(format_number(0.0), "0");
        assert_eq!(format_number(1.5), "1.5");
    }

    #[test]
    fn rounding_to_six_digits() {
        assert_eq!(round_sig(1.234_567_89, 6), 1.234_57);
        assert_eq!(round_sig(0.0, 6), 0.0);
    }

    #[test]
    fn edit_distance() {
        assert_eq!(levenshtein("NMOSC", "NMOS"), 1);
        assert_eq!(levenshtein("", "abc"), 3);
        assert_eq!(levenshtein(".OPTION", ".OPTIONS"), 1);
    }
}
