#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(spec) = polychaos::laws::LawSpec::from_json_str(text) {
        if let Ok(law) = spec.build() {
            let _ = law.standardize();
        }
    }
});
