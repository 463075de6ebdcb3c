#![no_main]

use critical_otto::io::spec::parse_grid;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(grid) = parse_grid(s) {
            let values = grid.values().expect("parsed grids are valid");
            assert!(!values.is_empty());
            assert!(values.windows(2).all(|w| w[0] < w[1]));
        }
    }
});
