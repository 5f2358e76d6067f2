#![no_main]

use std::sync::OnceLock;

use libfuzzer_sys::fuzz_target;
use pts_core::corpus::{self, ParadoxBundle, ParadoxId};

fn bundle() -> &'static ParadoxBundle {
    static B: OnceLock<ParadoxBundle> = OnceLock::new();
    B.get_or_init(|| corpus::build(ParadoxId::RefinedAxiomatic).unwrap())
}

// Display strings are parsed against a real environment, then folded back.
fuzz_target!(|data: &[u8]| {
    let Ok(src) = std::str::from_utf8(data) else { return };
    let env = bundle().env();
    if let Ok(t) = pts_core::parse::parse_term(src, env) {
        let _ = pts_core::fold_display(&t, env);
    }
});
