#![no_main]

use holval::config::{ConfigFile, ExperimentConfig};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(file) = ConfigFile::parse(text) {
            let _ = ExperimentConfig::resolve(&file, std::path::Path::new("."));
        }
    }
});
