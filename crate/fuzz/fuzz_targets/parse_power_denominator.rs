#![no_main]

use critical_otto::io::spec::{format_power_denominator, parse_power_denominator};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(p) = parse_power_denominator(s) {
            assert_eq!(parse_power_denominator(&format_power_denominator(&p)).ok(), Some(p));
        }
    }
});
