#![no_main]

use holval::grassmann::Subspace;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(w) = Subspace::parse_json(text) {
            assert!(w.orthonormality_residual() < 1e-6);
        }
    }
});
