#![no_main]

use cartanflow::spec_io::apply_tolerance;
use cartanflow::Tolerances;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let s = String::from_utf8_lossy(data);
    let mut tol = Tolerances::default();
    let _ = apply_tolerance(&mut tol, &s);
});
