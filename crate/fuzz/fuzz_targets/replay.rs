#![no_main]

use libfuzzer_sys::fuzz_target;
use marlkit_harness::replay::{render_frames, verify_str};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let _ = verify_str(text);
    let _ = render_frames(text, 0);
});
