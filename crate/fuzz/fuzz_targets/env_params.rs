#![no_main]

use libfuzzer_sys::fuzz_target;
use marlkit_harness::registry::{build_env, ENVS};

// first byte picks the environment, the rest is a JSON parameter object
fuzz_target!(|data: &[u8]| {
    let Some((&pick, rest)) = data.split_first() else { return };
    let Ok(serde_json::Value::Object(params)) = serde_json::from_slice(rest) else { return };
    let (name, _) = ENVS[pick as usize % ENVS.len()];
    if let Ok(mut env) = build_env(name, &params) {
        let _ = env.reset(u64::from(pick));
    }
});
