//! Tokenization and stable hashing shared by the featurizer, lexicon
//! matching, augmentation validation, and frequency reports.

/// Splits text into maximal runs of alphanumeric characters.
///
/// This is the single token convention used everywhere in the crate: the
/// hashed featurizer, lexicon membership matching, augmentation leakage
/// checks, and word-frequency tables all agree on it.
pub fn tokenize(text: &str, lowercase: bool) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    for ch in text.chars() {
        if ch.is_alphanumeric() {
            if lowercase {
                current.extend(ch.to_lowercase());
            } else {
                current.push(ch);
            }
        } else if !current.is_empty() {
            tokens.push(std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    tokens
}

/// Case-folded token set of a text, for membership tests.
pub fn token_set(text: &str) -> std::collections::BTreeSet<String> {
    tokenize(text, true).into_iter().collect()
}

/// n-grams of the given orders, each joined with a single space.
/// Orders larger than the token count contribute nothing.
pub fn ngrams(tokens: &[String], orders: &[usize]) -> Vec<String> {
    let mut grams = Vec::new();
    for &order in orders {
        if order == 0 || order > tokens.len() {
            continue;
        }
        for window in tokens.windows(order) {
            grams.push(window.join(" "));
        }
    }
    grams
}

/// FNV-1a 64-bit hash. Stable across platforms and releases, which keeps
/// hashed feature indices and derived seeds reproducible.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    let mut hash = OFFSET;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(PRIME);
    }
    hash
}

/// SplitMix64 finalizer; used to spread stage seeds derived from one
/// global seed.
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokenize_splits_on_non_alphanumeric() {
        assert_eq!(
            tokenize("You, IDIOT! go-away", true),
            vec!["you", "idiot", "go", "away"]
        );
    }

    #[test]
    fn tokenize_preserves_case_when_asked() {
        assert_eq!(tokenize("Ab cD", false), vec!["Ab", "cD"]);
    }

    #[test]
    fn tokenize_empty_and_punctuation_only() {
        assert!(tokenize("", true).is_empty());
        assert!(tokenize("!!! ...", true).is_empty());
    }

    #[test]
    fn ngrams_orders_one_and_two() {
        let toks: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
        assert_eq!(ngrams(&toks, &[1, 2]), vec!["a", "b", "c", "a b", "b c"]);
    }

    #[test]
    fn ngrams_order_above_len_is_empty() {
        let toks: Vec<String> = vec!["only".into()];
        assert_eq!(ngrams(&toks, &[2]), Vec::<String>::new());
    }

    #[test]
    fn fnv1a64_known_vectors() {
        // Reference values for the standard FNV-1a 64 parameters.
        assert_eq!(fnv1a64(b""), 0xcbf2_9ce4_8422_2325);
        assert_eq!(fnv1a64(b"a"), 0xaf63_dc4c_8601_ec8c);
        assert_eq!(fnv1a64(b"foobar"), 0x85944171f73967e8);
    }
}
