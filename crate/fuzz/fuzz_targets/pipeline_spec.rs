#![no_main]

use libfuzzer_sys::fuzz_target;
use marlkit_harness::registry::{build_pipeline, BuildCtx};
use marlkit_harness::{parse_agents, parse_pipeline};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(p) = parse_pipeline(text) {
        let _ = build_pipeline(&p, &BuildCtx { default_groups: Some(vec![vec![0, 1]]) });
    }
    let _ = parse_agents(text);
});
