#![no_main]

use libfuzzer_sys::fuzz_target;
use marlkit_core::canon;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(v) = canon::from_str(text) {
        // whatever decodes must re-encode to a fixed point
        let once = canon::to_canonical_string(&v);
        let again = canon::to_canonical_string(&canon::from_str(&once).expect("canonical text decodes"));
        assert_eq!(once, again);
        let _ = canon::value_hash(&v);
    }
    if let Ok(j) = serde_json::from_str::<serde_json::Value>(text) {
        let _ = canon::bundle_from_json(&j);
    }
});
