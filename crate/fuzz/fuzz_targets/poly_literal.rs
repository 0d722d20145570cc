#![no_main]

use libfuzzer_sys::fuzz_target;

use polychaos::jacobi::CubePolynomial;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(p) = CubePolynomial::from_literal(text) {
        assert_eq!(CubePolynomial::from_literal(&p.to_literal()).expect("round trip"), p);
    }
});
