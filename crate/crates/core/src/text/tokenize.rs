use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

/// Lowercases, maps every character other than letters, digits and `'` to a
/// space, and splits on whitespace.
pub fn tokenize(raw: &str) -> Vec<String> {
    let cleaned: String = raw
        .chars()
        .flat_map(char::to_lowercase)
        .map(|c| if c.is_alphanumeric() || c == '\'' { c } else { ' ' })
        .collect();
    cleaned.split_whitespace().map(String::from).collect()
}

/// Token indices right-padded with the padding index, plus the count of real
/// tokens at the front.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PaddedTokens {
    pub indices: Vec<usize>,
    pub real_len: usize,
}

impl PaddedTokens {
    pub fn is_all_padding(&self) -> bool {
        self.real_len == 0
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

pub fn pad_tokens(indices: &[usize], min_length: usize) -> PaddedTokens {
    let mut padded = indices.to_vec();
    if padded.len() < min_length {
        padded.extend(vec![super::PAD_INDEX; min_length - padded.len()]);
    }
    PaddedTokens {
        indices: padded,
        real_len: indices.len(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn punctuation_and_case() {
        assert_eq!(tokenize("Hello, WORLD!"), vec!["hello", "world"]);
    }

    #[test]
    fn empty() {
        assert!(tokenize("").is_empty());
        assert!(tokenize("  ?! ").is_empty());
    }

    #[test]
    fn apostrophe_kept() {
        assert_eq!(tokenize("I'm fine."), vec!["i'm", "fine"]);
    }

    #[test]
    fn padding_rules() {
        let long: Vec<usize> = (2..14).collect();
        assert_eq!(pad_tokens(&long, 11).indices, long);

        let short = pad_tokens(&[5, 6], 11);
        assert_eq!(short.len(), 11);
        assert_eq!(short.real_len, 2);
        assert!(short.indices[2..].iter().all(|&i| i == 0));

        let empty = pad_tokens(&[], 11);
        assert_eq!(empty.indices, vec![0; 11]);
        assert!(empty.is_all_padding());
    }
}
