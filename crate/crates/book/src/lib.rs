// Copyright 2026 The sapa-sim Authors
// SPDX-License-Identifier: Apache-2.0

// mdbook cannot test snippets against workspace crates, so each chapter is
// pulled in as the doc comment of an empty module and `cargo test --doc`
// runs its code blocks. One module per chapter keeps failures traceable to
// a file.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/units.md")]
pub mod units {}
#[doc = include_str!("../../../book/src/model.md")]
pub mod model {}
#[doc = include_str!("../../../book/src/linear-response.md")]
pub mod linear_response {}
#[doc = include_str!("../../../book/src/pumped.md")]
pub mod pumped {}
#[doc = include_str!("../../../book/src/oracle.md")]
pub mod oracle {}
#[doc = include_str!("../../../book/src/readout.md")]
pub mod readout {}
#[doc = include_str!("../../../book/src/fitting.md")]
pub mod fitting {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
