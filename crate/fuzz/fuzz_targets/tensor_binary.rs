#![no_main]

use libfuzzer_sys::fuzz_target;
use mlti_core::io::{decode_tensor_binary, encode_tensor_binary};

fuzz_target!(|data: &[u8]| {
    if let Ok(t) = decode_tensor_binary(data) {
        assert_eq!(encode_tensor_binary(&t), data);
    }
});
