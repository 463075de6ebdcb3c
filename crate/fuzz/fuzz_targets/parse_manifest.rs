#![no_main]

use critical_otto::io::manifest::parse_manifest;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(m) = parse_manifest(s) {
            let again = parse_manifest(&m.render()).expect("rendered manifest parses");
            assert_eq!(again.outputs, m.outputs);
        }
    }
});
