#![no_main]

use libfuzzer_sys::fuzz_target;
use mlti_core::io::{format_tensor_text, parse_tensor_text};

fuzz_target!(|data: &[u8]| {
    let Ok(src) = std::str::from_utf8(data) else { return };
    if let Ok(t) = parse_tensor_text(src) {
        // accepted input must survive a format/parse round trip
        let again = parse_tensor_text(&format_tensor_text(&t)).expect("formatted tensor parses");
        assert_eq!(t, again);
    }
});
