// SPDX-License-Identifier: Apache-2.0

pub mod cdfg;
pub mod corpus;
pub mod emit;
pub mod frontend;
pub mod interp;
pub mod pipeline;
pub mod sim;
pub mod ssa;
pub mod typeinfer;
pub mod value;
