#![no_main]

use gsign_core::io::decode_spectral_cache;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok((_, basis)) = decode_spectral_cache(data) {
        assert_eq!(basis.u().nrows(), basis.lambdas().len());
    }
});
