//! Every chapter of `book/` as a module, so `cargo test --doc` runs the
//! snippets.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/models.md")]
pub mod models {}
#[doc = include_str!("../../../book/src/estimators.md")]
pub mod estimators {}
#[doc = include_str!("../../../book/src/truth.md")]
pub mod truth {}
#[doc = include_str!("../../../book/src/bootstrap.md")]
pub mod bootstrap {}
#[doc = include_str!("../../../book/src/asymptotics.md")]
pub mod asymptotics {}
#[doc = include_str!("../../../book/src/study.md")]
pub mod study {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
