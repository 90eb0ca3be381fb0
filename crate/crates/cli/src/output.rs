use std::io::Write;
use std::path::Path;

use pseudoherm::models::{Assembly, ModelSpec};
use pseudoherm::numerics::Representation;
use serde_json::{json, Map, Value};

use crate::config::{CliError, CliResult};

/// Version of the JSON report layout.
pub const SCHEMA: u64 = 1;

/// Round to `digits` significant digits through decimal text, so the printed
/// value does not depend on the platform's float formatting.
pub fn round_sig(v: f64, digits: usize) -> f64 {
    if !v.is_finite() || v == 0.0 {
        return v;
    }
    format!("{:.*e}", digits - 1, v).parse().unwrap_or(v)
}

#[derive(Debug, Clone, Copy)]
pub struct Numbers {
    pub digits: usize,
}

impl Numbers {
    pub fn json(self, v: f64) -> Value {
        let r = round_sig(v, self.digits);
        if r.is_finite() {
            // normalizes -0 so repeated runs agree on the sign of zero
            json!(if r == 0.0 { 0.0 } else { r })
        } else {
            Value::Null
        }
    }

    pub fn opt(self, v: Option<f64>) -> Value {
        v.map_or(Value::Null, |v| self.json(v))
    }

    pub fn csv(self, v: f64) -> String {
        let r = round_sig(v, self.digits);
        let r = if r == 0.0 { 0.0 } else { r };
        format!("{r:?}")
    }
}

pub fn model_json(model: &ModelSpec) -> Value {
    let params: Map<String, Value> = model.parameters.iter().map(|(k, v)| (k.clone(), json!(v))).collect();
    json!({
        "name": model.name,
        "expression": model.expr.to_string(),
        "parameters": params,
    })
}

pub fn representation_json(rep: &Representation, quad: Option<usize>) -> Value {
    match rep {
        Representation::Grid(g) => json!({
            "kind": "grid",
            "half_width": g.half_width(),
            "half_points": g.half_points(),
            "nodes": g.len(),
            "spacing": g.spacing(),
        }),
        Representation::Basis(b) => json!({
            "kind": "basis",
            "size": b.size(),
            "omega": b.omega(),
            "quadrature_points": quad.unwrap_or(2 * b.size()),
        }),
    }
}

pub fn assembly_name(a: Assembly) -> &'static str {
    match a {
        Assembly::Stencil => "stencil",
        Assembly::Algebraic => "algebraic",
    }
}

/// Pretty JSON with a trailing newline.
pub fn json_text(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values serialize");
    s.push('\n');
    s
}

/// Write to `path`, or to stdout when absent.
pub fn emit(path: Option<&Path>, text: &str) -> CliResult<()> {
    let result = match path {
        Some(p) => std::fs::write(p, text),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).and_then(|_| out.flush())
        }
    };
    result.map_err(|e| {
        let target = path.map_or("stdout".to_string(), |p| p.display().to_string());
        CliError::Config(format!("cannot write {target}: {e}"))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_digits() {
        assert_eq!(round_sig(1.23456789, 3), 1.23);
        assert_eq!(round_sig(-0.000123456, 2), -0.00012);
        assert_eq!(round_sig(98765.0, 2), 99000.0);
        assert_eq!(round_sig(0.0, 5), 0.0);
        assert!(round_sig(f64::NAN, 5).is_nan());
    }

    #[test]
    fn printed_forms() {
        let n = Numbers { digits: 4 };
        assert_eq!(n.csv(3.0), "3.0");
        assert_eq!(n.csv(-0.0), "0.0");
        assert_eq!(n.csv(1.23456e-9), "1.235e-9");
        assert_eq!(n.json(2.0 / 3.0), json!(0.6667));
        assert_eq!(n.json(f64::INFINITY), Value::Null);
    }
}
