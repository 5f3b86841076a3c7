//! Deterministic generators for randomized call-list suites.
//!
//! Seeded xorshift generation keeps the property suites reproducible across
//! runs and platforms. Used by this crate's tests and the workspace
//! acceptance suite; not part of the stable API surface.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use alloc::format;

use crate::grammar::{CallList, FunctionCall, Number, Value};

/// xorshift64 with a splitmix-style seed scramble.
pub struct Rng(u64);

impl Rng {
    pub fn new(seed: u64) -> Self {
        let mut x = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(0x1234_5678_9ABC_DEF1);
        x ^= x >> 30;
        Rng(x | 1)
    }

    pub fn next_u64(&mut self) -> u64 {
        let mut x = self.0;
        x ^= x << 13;
        x ^= x >> 7;
        x ^= x << 17;
        self.0 = x;
        x
    }

    pub fn below(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        (self.next_u64() % n as u64) as usize
    }

    pub fn chance(&mut self, percent: u64) -> bool {
        self.next_u64() % 100 < percent
    }

    pub fn pick<'a, T>(&mut self, items: &'a [T]) -> &'a T {
        &items[self.below(items.len())]
    }
}

const NAMES: &[&str] = &[
    "f",
    "g",
    "fetch_data",
    "Market Trends API",
    "Get Weather Data",
    "search.cve",
    "VT_lookup",
    "tool-42",
];

const KEYS: &[&str] = &[
    "a", "b", "c", "x", "y", "trend_type", "country", "verbose", "mode", "limit", "q1", "p_2",
    "k.sub",
];

const STRINGS: &[&str] = &[
    "us",
    "MARKET_INDEXES",
    "hello world",
    "line\nbreak",
    "quote\"inside",
    "back\\slash",
    "tab\tchar",
    "emoji \u{2713}",
    "",
    "trailing space ",
];

#[derive(Debug, Clone, Copy)]
pub struct GenConfig {
    pub max_calls: usize,
    pub max_args: usize,
    pub max_depth: usize,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig { max_calls: 4, max_args: 4, max_depth: 5 }
    }
}

pub fn gen_call_list(rng: &mut Rng, cfg: &GenConfig) -> CallList {
    let n = rng.below(cfg.max_calls + 1);
    let calls = (0..n).map(|_| gen_call(rng, cfg.max_depth, cfg)).collect();
    CallList::new(calls)
}

pub fn gen_call(rng: &mut Rng, depth: usize, cfg: &GenConfig) -> FunctionCall {
    let name = rng.pick(NAMES).to_string();
    let mut keys: Vec<&str> = KEYS.to_vec();
    shuffle(rng, &mut keys);
    let n_args = rng.below(cfg.max_args + 1);
    let args = keys[..n_args]
        .iter()
        .map(|key| (key.to_string(), gen_value(rng, depth, cfg)))
        .collect();
    FunctionCall { name, args }
}

pub fn gen_value(rng: &mut Rng, depth: usize, cfg: &GenConfig) -> Value {
    let choices = if depth == 0 { 4 } else { 7 };
    match rng.below(choices) {
        0 => Value::Str(gen_string(rng)),
        1 => Value::Number(gen_number(rng)),
        2 => Value::Bool(rng.chance(50)),
        3 => Value::Null,
        4 => {
            let n = rng.below(4);
            Value::List((0..n).map(|_| gen_value(rng, depth - 1, cfg)).collect())
        }
        5 => {
            let mut keys: Vec<&str> = KEYS.to_vec();
            shuffle(rng, &mut keys);
            let n = rng.below(4);
            Value::Mapping(
                keys[..n].iter().map(|k| (k.to_string(), gen_value(rng, depth - 1, cfg))).collect(),
            )
        }
        _ => Value::Call(gen_call(rng, depth - 1, cfg)),
    }
}

pub fn gen_string(rng: &mut Rng) -> String {
    if rng.chance(70) {
        rng.pick(STRINGS).to_string()
    } else {
        let len = rng.below(12);
        (0..len)
            .map(|_| {
                let c = rng.below(96) as u8 + 0x20;
                c as char
            })
            .collect()
    }
}

pub fn gen_number(rng: &mut Rng) -> Number {
    let magnitude = rng.next_u64() % 1_000_000;
    let lexeme = match rng.below(6) {
        0 => format!("{magnitude}"),
        1 => format!("-{magnitude}"),
        2 => format!("+{magnitude}"),
        3 => format!("00{magnitude}"),
        4 => format!("{}.{:03}", magnitude, rng.next_u64() % 1000),
        _ => format!("{}e{}", magnitude % 100, rng.below(6)),
    };
    Number::new(lexeme).expect("generated lexeme is valid")
}

pub fn shuffle<T>(rng: &mut Rng, items: &mut [T]) {
    for i in (1..items.len()).rev() {
        let j = rng.below(i + 1);
        items.swap(i, j);
    }
}

/// Reorders calls and, recursively, argument and mapping-entry order — the
/// transformations the AST check is required to be invariant under. List
/// element order is left alone because it is significant.
pub fn permute_call_list(rng: &mut Rng, list: &CallList) -> CallList {
    let mut calls: Vec<FunctionCall> = list.calls.iter().map(|c| permute_call(rng, c)).collect();
    shuffle(rng, &mut calls);
    CallList::new(calls)
}

pub fn permute_call(rng: &mut Rng, call: &FunctionCall) -> FunctionCall {
    let mut args: Vec<(String, Value)> =
        call.args.iter().map(|(k, v)| (k.clone(), permute_value(rng, v))).collect();
    shuffle(rng, &mut args);
    FunctionCall { name: call.name.clone(), args }
}

fn permute_value(rng: &mut Rng, value: &Value) -> Value {
    match value {
        Value::List(items) => Value::List(items.iter().map(|v| permute_value(rng, v)).collect()),
        Value::Mapping(entries) => {
            let mut entries: Vec<(String, Value)> =
                entries.iter().map(|(k, v)| (k.clone(), permute_value(rng, v))).collect();
            shuffle(rng, &mut entries);
            Value::Mapping(entries)
        }
        Value::Call(call) => Value::Call(permute_call(rng, call)),
        other => other.clone(),
    }
}
