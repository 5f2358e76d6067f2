#![no_main]

use libfuzzer_sys::fuzz_target;

// Parse, elaborate and check; a short trace of each named term too.
fuzz_target!(|data: &[u8]| {
    let Ok(src) = std::str::from_utf8(data) else { return };
    let Ok(d) = pts_core::dev::load(src, None) else { return };
    let _ = d.report(false);
    if d.ok() {
        for (_, t) in d.traces() {
            let _ = pts_core::reduce::trace(&d.env, t, pts_core::reduce::Strategy::HeadDef, 4);
        }
    }
});
