#![no_main]

use holval::forms::AlternatingForm;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(f) = AlternatingForm::parse_json(text) {
            let again = serde_json::to_string(&f.to_json()).unwrap();
            assert_eq!(AlternatingForm::parse_json(&again).unwrap(), f);
        }
    }
});
