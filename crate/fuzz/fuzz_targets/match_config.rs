#![no_main]

use libfuzzer_sys::fuzz_target;
use marlkit_harness::{MatchSpec, TourneySpec};

fuzz_target!(|data: &[u8]| {
    if let Ok(m) = serde_json::from_slice::<MatchSpec>(data) {
        let back: MatchSpec = serde_json::from_value(serde_json::to_value(&m).unwrap()).unwrap();
        assert_eq!(m, back);
    }
    let _ = serde_json::from_slice::<TourneySpec>(data);
});
