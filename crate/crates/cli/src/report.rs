//! JSON report envelope shared by every subcommand.

use serde_json::{json, Value};

use crate::commands::{Outcome, EXIT_ERROR};

pub const TOOL: &str = "hmm-ident";

pub fn envelope(command: &str, outcome: &Outcome) -> Value {
    json!({
        "tool": TOOL,
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "exit_code": outcome.code,
        "result": outcome.result,
    })
}

pub fn error_envelope(command: &str, err: &anyhow::Error) -> Value {
    let chain: Vec<String> = err.chain().map(ToString::to_string).collect();
    json!({
        "tool": TOOL,
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "exit_code": EXIT_ERROR,
        "error": {
            "message": format!("{err:#}"),
            "chain": chain,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn envelope_keys() {
        let o = Outcome {
            code: 1,
            text: String::new(),
            result: json!({"x": 1}),
        };
        let v = envelope("analyze", &o);
        assert_eq!(v["exit_code"], 1);
        assert_eq!(v["result"]["x"], 1);
        let e = error_envelope("nstar", &anyhow::anyhow!("boom").context("outer"));
        assert_eq!(e["exit_code"], 2);
        assert_eq!(e["error"]["chain"][1], "boom");
    }
}
