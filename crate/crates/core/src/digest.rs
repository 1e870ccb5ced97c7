//! Stable digests of bound inputs.

use sha2::{Digest, Sha256};

/// Hex SHA-256 of the parts, separated by a unit separator byte.
pub fn inputs_digest(parts: &[&str]) -> String {
    let mut h = Sha256::new();
    for (i, part) in parts.iter().enumerate() {
        if i > 0 {
            h.update([0x1f]);
        }
        h.update(part.as_bytes());
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_is_stable_and_separated() {
        let d = inputs_digest(&["ab", "c"]);
        assert_eq!(d.len(), 64);
        assert_eq!(d, inputs_digest(&["ab", "c"]));
        assert_ne!(d, inputs_digest(&["a", "bc"]));
        // SHA-256 of the empty string
        assert_eq!(
            inputs_digest(&[]),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }
}
