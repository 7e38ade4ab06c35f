#![no_main]

use holval::polytope::Polytope;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(p) = Polytope::parse_json(text) {
            let again = serde_json::to_string(&p.to_json()).unwrap();
            assert!(Polytope::parse_json(&again).is_ok());
        }
    }
});
