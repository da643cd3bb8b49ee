//! Boundary-wrapped character n-grams and their bucket hashing.

pub const BOW: char = '<';
pub const EOW: char = '>';

/// Character n-grams of `<word>`, grouped by length (shortest first) and
/// left to right within a length. The whole wrapped word is appended when
/// the length range did not already produce it.
pub fn char_ngrams(word: &str, ngram_min: usize, ngram_max: usize) -> Vec<String> {
    let wrapped: Vec<char> = std::iter::once(BOW)
        .chain(word.chars())
        .chain(std::iter::once(EOW))
        .collect();
    let len = wrapped.len();
    let mut out = Vec::new();
    for n in ngram_min..=ngram_max.min(len) {
        for start in 0..=len - n {
            out.push(wrapped[start..start + n].iter().collect());
        }
    }
    if !(ngram_min..=ngram_max).contains(&len) {
        out.push(wrapped.iter().collect());
    }
    out
}

/// 32-bit FNV-1a of the UTF-8 bytes.
pub fn fnv1a32(bytes: &[u8]) -> u32 {
    let mut h: u32 = 0x811c_9dc5;
    for &b in bytes {
        h ^= u32::from(b);
        h = h.wrapping_mul(0x0100_0193);
    }
    h
}

/// Bucket index of an n-gram in `[0, bucket_count)`.
pub fn hash_ngram(ngram: &str, bucket_count: usize) -> usize {
    fnv1a32(ngram.as_bytes()) as usize % bucket_count
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    // Independent reference: byte-at-a-time FNV-1a in 64-bit arithmetic,
    // truncated to 32 bits after every multiply.
    fn reference_fnv1a(s: &str) -> u64 {
        let mut h: u64 = 2_166_136_261;
        for b in s.bytes() {
            h ^= b as u64;
            h = (h * 16_777_619) & 0xffff_ffff;
        }
        h
    }

    #[test]
    fn cat_ngrams() {
        assert_eq!(
            char_ngrams("cat", 3, 6),
            vec!["<ca", "cat", "at>", "<cat", "cat>", "<cat>"]
        );
    }

    #[test]
    fn single_char_word() {
        assert_eq!(char_ngrams("a", 3, 6), vec!["<a>"]);
    }

    #[test]
    fn long_word_appends_wrapped_form() {
        let grams = char_ngrams("elephant", 3, 6);
        assert_eq!(grams.last().unwrap(), "<elephant>");
        assert_eq!(
            grams.iter().filter(|g| g.as_str() == "<elephant>").count(),
            1
        );
    }

    #[test]
    fn multibyte_characters_count_as_one() {
        assert_eq!(char_ngrams("é", 3, 3), vec!["<é>"]);
    }

    #[test]
    fn published_fnv_vectors() {
        assert_eq!(fnv1a32(b""), 0x811c9dc5);
        assert_eq!(fnv1a32(b"a"), 0xe40c292c);
        assert_eq!(fnv1a32(b"foobar"), 0xbf9cf968);
    }

    #[test]
    fn hash_matches_reference() {
        let expected = (reference_fnv1a("<ca") % 2_000_000) as usize;
        assert_eq!(hash_ngram("<ca", 2_000_000), expected);
        assert_eq!(hash_ngram("<ca", 2_000_000), hash_ngram("<ca", 2_000_000));
    }

    #[test]
    fn modulo_one_is_zero() {
        for g in ["<ca", "cat>", "ü"] {
            assert_eq!(hash_ngram(g, 1), 0);
        }
    }

    proptest! {
        #[test]
        fn ngram_count_identity(word in "[a-zé]{1,12}", min in 1usize..5, extra in 0usize..4) {
            let max = min + extra;
            let len = word.chars().count() + 2;
            let mut expected: usize = (min..=max.min(len)).map(|n| len - n + 1).sum();
            if !(min..=max).contains(&len) {
                expected += 1;
            }
            prop_assert_eq!(char_ngrams(&word, min, max).len(), expected);
        }

        #[test]
        fn hash_in_range(g in "\\PC{1,8}", buckets in 1usize..5_000_000) {
            let h = hash_ngram(&g, buckets);
            prop_assert!(h < buckets);
            prop_assert_eq!(h as u64, reference_fnv1a(&g) % buckets as u64);
        }
    }
}
