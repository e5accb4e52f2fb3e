//! JSON Schema (draft 7) for the report written by `rmprod verify --format json`.

pub const VERIFY_REPORT_SCHEMA: &str = include_str!("../schema/verify_report.schema.json");

pub fn verify_report_schema() -> serde_json::Value {
    serde_json::from_str(VERIFY_REPORT_SCHEMA).expect("bundled schema is valid JSON")
}
