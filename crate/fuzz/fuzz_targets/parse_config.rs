#![no_main]

use critical_otto::io::config::parse_config;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(cfg) = parse_config(s) {
            let again = parse_config(&cfg.to_toml()).expect("rendered config parses");
            assert_eq!(again.to_toml(), cfg.to_toml());
        }
    }
});
