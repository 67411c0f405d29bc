#![no_main]

use chr_nabla::typeinfer::parse_expr;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(src) = std::str::from_utf8(data) else { return };
    if let Ok(e) = parse_expr(src) {
        assert_eq!(parse_expr(&e.to_string()).as_ref(), Ok(&e));
    }
});
