//! Browser bindings. Every export takes program text and returns a JSON
//! string: `{"ok": …}` on success or `{"error": "…"}`.

use serde_json::{json, Value};
use wasm_bindgen::prelude::*;
use whilesem::coinduction::Abstraction;
use whilesem::harness::{classify, run_semantics, Semantics};
use whilesem::parser::{parse_cmd, parse_stream};
use whilesem::small_step::{run_star, SmallConfig};
use whilesem::{Cmd, InputStream, Store};

/// Keeps a page responsive whatever the caller asks for.
pub const MAX_FUEL: u64 = 100_000;

fn prepare(src: &str, input: &str) -> Result<(Cmd, InputStream), String> {
    let program = parse_cmd(src).map_err(|e| format!("program {e}"))?;
    let input = parse_stream(input).map_err(|e| format!("input {e}"))?;
    Ok((program, InputStream::new(input)))
}

fn respond(result: Result<Value, String>) -> String {
    match result {
        Ok(v) => json!({ "ok": v }).to_string(),
        Err(e) => json!({ "error": e }).to_string(),
    }
}

pub fn run_json(src: &str, semantics: &str, input: &str, fuel: u64) -> Result<Value, String> {
    let (program, input) = prepare(src, input)?;
    let sem: Semantics = semantics.parse()?;
    let run = run_semantics(sem, &program, &input, fuel.min(MAX_FUEL));
    Ok(json!({ "text": run.verdict.to_string(), "run": run }))
}

pub fn trace_json(src: &str, input: &str, fuel: u64) -> Result<Value, String> {
    let (program, input) = prepare(src, input)?;
    let (verdict, trace) = run_star(&SmallConfig::new(program, Store::new(), input), fuel.min(MAX_FUEL));
    Ok(json!({ "text": trace.to_text(), "verdict": verdict.to_string() }))
}

pub fn classify_json(src: &str, input: &str, fuel: u64, abstract_vars: &str) -> Result<Value, String> {
    let (program, input) = prepare(src, input)?;
    let vars = abstract_vars
        .split(',')
        .map(str::trim)
        .filter(|v| !v.is_empty())
        .map(String::from);
    let verdict =
        classify(&program, &input, fuel.min(MAX_FUEL), &Abstraction::new(vars), None).map_err(|e| e.to_string())?;
    Ok(json!({ "text": verdict.to_string(), "verdict": verdict }))
}

/// Evaluates under `semantics` (small, big, pretty or flag).
#[wasm_bindgen]
pub fn run_program(src: &str, semantics: &str, input: &str, fuel: u32) -> String {
    respond(run_json(src, semantics, input, fuel.into()))
}

#[wasm_bindgen]
pub fn trace_program(src: &str, input: &str, fuel: u32) -> String {
    respond(trace_json(src, input, fuel.into()))
}

/// Verdict, with a lasso certificate when the run diverges. `abstract_vars`
/// is a comma separated list.
#[wasm_bindgen]
pub fn classify_program(src: &str, input: &str, fuel: u32, abstract_vars: &str) -> String {
    respond(classify_json(src, input, fuel.into(), abstract_vars))
}
