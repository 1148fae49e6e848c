//! Certificates as newline-delimited JSON, one object per certificate.

use std::io::Write;

use serde_json::{json, Value};

use super::IoError;
use crate::verifier::Certificate;

/// Fixed key order: claim_id, status, worst_margin, samples, tolerances,
/// params_digest, details. A margin of `+inf` (nothing sampled) is `null`.
pub fn certificate_json(cert: &Certificate, params_digest: &str) -> Value {
    let margin = if cert.worst_margin.is_finite() {
        json!(cert.worst_margin)
    } else {
        Value::Null
    };
    json!({
        "claim_id": cert.claim_id,
        "status": cert.status,
        "worst_margin": margin,
        "samples": cert.samples,
        "tolerances": cert.tolerances,
        "params_digest": params_digest,
        "details": {
            "variant": cert.variant,
            "breaches": cert.breaches,
            "notes": cert.notes,
        },
    })
}

pub fn write_certificates<W: Write>(
    mut out: W,
    certs: &[Certificate],
    params_digest: &str,
) -> Result<(), IoError> {
    for c in certs {
        serde_json::to_writer(&mut out, &certificate_json(c, params_digest))?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}
