//! A pure type system kernel with global definitions, first-order rewrite
//! rules, head-reduction traces and erasure, plus a corpus of encoded
//! inconsistency proofs.

pub mod corpus;
pub mod dev;
pub mod env;
pub mod parse;
pub mod print;
pub mod pts;
pub mod reduce;
pub mod term;
pub mod typeck;

pub use env::{EnvEntry, EnvError, GlobalEnv, Pattern, RewriteRule};
pub use print::{fold_display, Printer, Style};
pub use pts::{PresetId, PtsSpec};
pub use term::{Hint, Sort, Term};
pub use typeck::{Kernel, LocalCtx, TypeError, TypeErrorKind};
