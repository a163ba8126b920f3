#![no_main]

use std::sync::Arc;

use apdestroy::store::parse_perm;
use apdestroy::FieldSpec;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let field = Arc::new(FieldSpec::new(3, 2, None).unwrap());
    if let Ok(pi) = parse_perm(text, &field) {
        assert_eq!(pi.images().len(), 9);
        assert!(pi.compose(&pi.inverse()).unwrap().is_identity());
    }
});
