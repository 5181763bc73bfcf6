use alloc::vec::Vec;

/// Levenshtein distance between two token sequences (unit-cost insert,
/// delete and substitute).
pub fn levenshtein<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    if a.is_empty() {
        return b.len();
    }
    if b.is_empty() {
        return a.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = alloc::vec![0; b.len() + 1];
    for (i, x) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, y) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(x != y);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        core::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lexicon::parse_phones;

    fn d(a: &str, b: &str) -> usize {
        levenshtein(&parse_phones(a).unwrap(), &parse_phones(b).unwrap())
    }

    #[test]
    fn phone_level_distances() {
        assert_eq!(d("M AH SH IY N", "M IH SH IY N"), 1);
        assert_eq!(d("AH S", "Y UW EH S"), 3);
        assert_eq!(d("A B C", "A B C"), 0);
        assert_eq!(d("A", "B C D"), 3);
        assert_eq!(levenshtein::<u8>(&[], &[1, 2]), 2);
    }

    #[test]
    fn symmetric() {
        assert_eq!(d("K AE T S", "K AH T"), d("K AH T", "K AE T S"));
    }
}
