#![no_main]

use chr_nabla::syntax::parse_term;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(src) = std::str::from_utf8(data) else { return };
    if let Ok(t) = parse_term(src) {
        let back = parse_term(&t.to_string()).expect("printed term reparses");
        assert!(chr_nabla::term::alpha_equal(&back, &t));
    }
});
