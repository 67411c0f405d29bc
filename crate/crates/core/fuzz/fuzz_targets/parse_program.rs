#![no_main]

use chr_nabla::syntax::{parse_program, parse_program_unchecked};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(src) = std::str::from_utf8(data) else { return };
    let _ = parse_program_unchecked(src);
    if let Ok(p) = parse_program(src) {
        let printed = p.to_string();
        let again = parse_program(&printed).expect("printed program reparses");
        assert_eq!(again.to_string(), printed);
    }
});
