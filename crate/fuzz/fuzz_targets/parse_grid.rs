#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(spec) = std::str::from_utf8(data) {
        if let Ok(grid) = torusboot_cli::parse_grid(spec) {
            assert!(!grid.is_empty());
            assert!(grid.iter().all(|v| v.is_finite()));
        }
    }
});
