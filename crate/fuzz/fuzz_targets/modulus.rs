#![no_main]

use apdestroy::gf::{is_irreducible, parse_modulus};
use apdestroy::FieldSpec;
use libfuzzer_sys::fuzz_target;

// First byte picks the characteristic, the rest is the modulus string.
fuzz_target!(|data: &[u8]| {
    let Some((&sel, rest)) = data.split_first() else { return };
    let Ok(text) = std::str::from_utf8(rest) else { return };
    let Ok(m) = parse_modulus(text) else { return };
    let p = [2u32, 3, 5, 7, 11, 13][sel as usize % 6];
    if m.len() < 2 || m.len() > 8 {
        return;
    }
    let k = m.len() as u32 - 1;
    match FieldSpec::new(p, k, Some(m.clone())) {
        Ok(f) => {
            assert!(is_irreducible(p, &m));
            assert_eq!(f.modulus(), m.as_slice());
        }
        Err(_) => assert!(m.iter().any(|&c| c >= p) || m[k as usize] != 1 || !is_irreducible(p, &m)),
    }
});
