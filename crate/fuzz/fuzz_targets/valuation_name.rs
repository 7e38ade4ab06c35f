#![no_main]

use holval::valuations::{Ambient, ValuationId};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let (kind, ambient) = text.split_once('@').unwrap_or((text, "G2"));
        if let Ok(a) = ambient.parse::<Ambient>() {
            if let Ok(id) = ValuationId::parse(kind, a) {
                assert_eq!(ValuationId::parse(&id.kind.to_string(), a).unwrap(), id);
            }
        }
    }
});
