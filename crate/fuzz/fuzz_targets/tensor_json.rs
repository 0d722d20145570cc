#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(t) = polychaos::CoefficientTensor::from_json_str(text) {
        let again = polychaos::CoefficientTensor::from_json_str(&t.to_json_string()).expect("round trip");
        assert_eq!(again, t);
    }
});
