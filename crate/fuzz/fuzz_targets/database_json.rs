#![no_main]

use apdestroy::Database;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(db) = Database::from_json(text) else { return };
    let again = Database::from_json(&db.to_json()).expect("re-serialized database parses");
    assert_eq!(again, db);
    let _ = db.verify_all();
});
