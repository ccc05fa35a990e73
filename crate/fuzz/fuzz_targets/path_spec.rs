#![no_main]

use cartanflow::path::eval_path;
use cartanflow::spec_io::{parse_path_spec, path_spec_to_json};
use cartanflow::Tolerances;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(spec) = parse_path_spec(text, &Tolerances::default()) else {
        return;
    };
    // anything accepted must serialize back to an equal spec
    let again = parse_path_spec(&path_spec_to_json(&spec).to_string(), &Tolerances::default());
    assert_eq!(again.ok().as_ref(), Some(&spec));
    let _ = eval_path(&spec, spec.domain.0);
});
