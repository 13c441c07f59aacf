//! JSON schemas shipped with the crate, for configs and emitted reports.

use serde_json::Value;

pub const CONFIG: &str = include_str!("../schemas/config.schema.json");
pub const QUBIT_REPORT: &str = include_str!("../schemas/qubit.schema.json");
pub const SPECTRUM_REPORT: &str = include_str!("../schemas/spectrum.schema.json");
pub const LOSS_REPORT: &str = include_str!("../schemas/loss.schema.json");
pub const DISPERSIVE_REPORT: &str = include_str!("../schemas/dispersive.schema.json");
pub const DESIGN_REPORT: &str = include_str!("../schemas/design.schema.json");

/// Validate `instance` against `schema`, listing every violation as
/// `dotted.path: message`.
pub fn check(schema: &str, instance: &Value) -> Result<(), String> {
    let schema: Value = serde_json::from_str(schema).map_err(|e| format!("bad schema: {e}"))?;
    let validator = jsonschema::validator_for(&schema).map_err(|e| format!("bad schema: {e}"))?;
    let problems: Vec<String> = validator
        .iter_errors(instance)
        .map(|e| {
            let path = e.instance_path().to_string();
            let key = path.trim_start_matches('/').replace('/', ".");
            if key.is_empty() {
                e.to_string()
            } else {
                format!("{key}: {e}")
            }
        })
        .collect();
    if problems.is_empty() {
        Ok(())
    } else {
        Err(problems.join("; "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_schemas_compile() {
        for s in [
            CONFIG,
            QUBIT_REPORT,
            SPECTRUM_REPORT,
            LOSS_REPORT,
            DISPERSIVE_REPORT,
            DESIGN_REPORT,
        ] {
            let parsed: Value = serde_json::from_str(s).unwrap();
            assert!(jsonschema::validator_for(&parsed).is_ok());
        }
    }

    #[test]
    fn violations_name_the_key() {
        let err = check(CONFIG, &serde_json::json!({"qubit": {"ec_ghz": -1.0}})).unwrap_err();
        assert!(err.starts_with("qubit.ec_ghz"), "{err}");
    }
}
