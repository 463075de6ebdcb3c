#![no_main]

use critical_otto::io::csv::parse_csv;
use critical_otto::io::svg::svg_from_csv;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(table) = parse_csv(s) {
            assert!(table.rows.iter().all(|r| r.len() == table.header.len()));
            if table.header.len() >= 2 {
                let (x, y) = (&table.header[0], &table.header[1]);
                let _ = svg_from_csv(s, x, y, true, None);
            }
        }
    }
});
