#![no_main]

use chr_nabla::typeinfer::parse_type;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(src) = std::str::from_utf8(data) else { return };
    if let Ok(t) = parse_type(src) {
        assert_eq!(parse_type(&t.to_string()).as_ref(), Ok(&t));
    }
});
