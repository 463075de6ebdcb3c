#![no_main]

use critical_otto::io::spec::parse_window;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok((lo, hi)) = parse_window(s) {
            assert!(lo > 0.0 && hi > lo && hi.is_finite());
        }
    }
});
