// SPDX-License-Identifier: Apache-2.0

//! Bundled test programs.

pub const IF_ELSE: &str = include_str!("../corpus/if_else.mjl");
pub const POWER: &str = include_str!("../corpus/power.mjl");
pub const NEWTON_RAPHSON: &str = include_str!("../corpus/newton_raphson.mjl");
/// Same iteration as [`NEWTON_RAPHSON`] with a looser stopping tolerance.
pub const NEWTON_RAPHSON_LOOSE: &str = include_str!("../corpus/newton_raphson_loose.mjl");

pub const ALL: [(&str, &str); 4] = [
    ("if_else", IF_ELSE),
    ("power", POWER),
    ("newton_raphson", NEWTON_RAPHSON),
    ("newton_raphson_loose", NEWTON_RAPHSON_LOOSE),
];
