//! Pins the three shipped template bodies by checksum. A change to any body
//! is a breaking change to every recorded cassette and golden prompt, so the
//! digests must only move together with a major version bump.

use sha2::{Digest, Sha256};
use toolforge_core::templates::TemplateRegistry;

fn sha256_hex(data: &str) -> String {
    let digest = Sha256::digest(data.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

const PINNED: &[(&str, &str)] = &[
    ("detail", "29319dc2784328e34567b7fcc8db17ba0752f7e438895780a13f7bfb8115ff12"),
    ("claude", "7050410769ccb9ddc31c6cfa37705daece1b3de21a4458357aee7d258307ee0c"),
    ("simple", "4c5f8c53bc79dd9ec394f22074dcce445d8c8565f19515bb0c4a4233a257dee2"),
];

#[test]
fn template_body_checksums_are_pinned() {
    let registry = TemplateRegistry::builtin();
    for (id, expected) in PINNED {
        let body = &registry.get(id).unwrap().body;
        assert_eq!(&sha256_hex(body), expected, "template `{id}` body changed");
    }
}

#[test]
fn bodies_have_no_trailing_whitespace_or_newline() {
    let registry = TemplateRegistry::builtin();
    for id in ["detail", "claude", "simple"] {
        let body = &registry.get(id).unwrap().body;
        assert_eq!(body.trim_end(), body, "template `{id}` has trailing whitespace");
        for line in body.lines() {
            assert_eq!(line.trim_end(), line, "template `{id}` line has trailing whitespace");
        }
    }
}
