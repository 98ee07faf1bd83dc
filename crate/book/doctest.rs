// mdbook cannot run the guide's Rust listings against a workspace crate, so
// every chapter is pulled in as a module doc and `cargo test --doc` runs them.
// Each chapter gets its own module so a failing listing names its chapter.

#[doc = include_str!("src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("src/coreness.md")]
pub mod coreness {}
#[doc = include_str!("src/counting.md")]
pub mod counting {}
#[doc = include_str!("src/exact-protocol.md")]
pub mod exact_protocol {}
#[doc = include_str!("src/memoryless.md")]
pub mod memoryless {}
#[doc = include_str!("src/approximate.md")]
pub mod approximate {}
#[doc = include_str!("src/densest.md")]
pub mod densest {}
#[doc = include_str!("src/audits.md")]
pub mod audits {}
#[doc = include_str!("src/experiments.md")]
pub mod experiments {}
#[doc = include_str!("../README.md")]
pub mod readme {}
