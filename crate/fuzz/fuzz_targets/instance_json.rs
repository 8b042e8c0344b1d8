#![no_main]

use fl_offload::scenario::{validate, ScenarioInstance};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(inst) = ScenarioInstance::from_json(text) {
        let _ = validate(&inst);
        if let Ok(json) = inst.to_json() {
            let back = ScenarioInstance::from_json(&json).expect("written instance parses");
            // NaN never compares equal; compare the serialized forms instead.
            assert_eq!(back.to_json().unwrap(), json);
        }
    }
});
