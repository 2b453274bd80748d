// mdbook cannot run snippets that depend on workspace crates, so every chapter
// is pulled in as a module doc and `cargo test --doc` checks them.

#[doc = include_str!("src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("src/capacities.md")]
pub mod capacities {}
#[doc = include_str!("src/attitudes.md")]
pub mod attitudes {}
#[doc = include_str!("src/models.md")]
pub mod models {}
#[doc = include_str!("src/insurance.md")]
pub mod insurance {}
#[doc = include_str!("src/cli.md")]
pub mod cli {}
