#![no_main]

use chr_nabla::syntax::parse_goals;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(src) = std::str::from_utf8(data) {
        let _ = parse_goals(src);
    }
});
