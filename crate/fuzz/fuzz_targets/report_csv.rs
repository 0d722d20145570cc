#![no_main]

use libfuzzer_sys::fuzz_target;

use polychaos::experiment::{read_report_str, report_to_string};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(blocks) = read_report_str(text) {
        let _ = report_to_string(&blocks);
    }
});
