//! The guide under `book/` is mdbook Markdown. Each chapter is included here
//! as a module doc so that `cargo test --doc` runs its listings; a failing
//! doc-test names the module, and so the chapter.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/spectra.md")]
pub mod spectra {}
#[doc = include_str!("../../../book/src/controlled_qubit.md")]
pub mod controlled_qubit {}
#[doc = include_str!("../../../book/src/strong_dephasing.md")]
pub mod strong_dephasing {}
#[doc = include_str!("../../../book/src/quantum_walk.md")]
pub mod quantum_walk {}
#[doc = include_str!("../../../book/src/open_walk.md")]
pub mod open_walk {}
#[doc = include_str!("../../../book/src/non_markovianity.md")]
pub mod non_markovianity {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
