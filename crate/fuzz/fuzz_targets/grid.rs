#![no_main]

use cartanflow::spec_io::parse_grid;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let s = String::from_utf8_lossy(data);
    if let Ok(g) = parse_grid(&s) {
        if g.n <= 1 << 16 {
            let pts = g.points();
            assert_eq!(pts.len(), g.n);
        }
    }
});
