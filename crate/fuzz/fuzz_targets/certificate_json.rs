#![no_main]

use apdestroy::store::verify_record;
use apdestroy::CertificateRecord;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(record) = CertificateRecord::from_json(text) else { return };
    if let Ok(report) = verify_record(&record) {
        if report.verified() {
            assert_eq!(report.survivor_count, Some(0));
        }
    }
});
