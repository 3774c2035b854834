//! Output plumbing shared by the CLI and the experiment drivers: stable
//! numeric formatting for golden-file CSVs, config hashing, run manifests.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Format with 12 significant digits, '.' decimal separator, no locale.
/// Positional notation for moderate exponents, scientific otherwise;
/// trailing zeros trimmed. Bit-stable across runs and platforms.
pub fn fmt_g12(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{:.11e}", x); // mantissa with 12 significant digits
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("valid exponent");
    if (-4..12).contains(&exp) {
        let digits: String = mantissa.chars().filter(|c| c.is_ascii_digit()).collect();
        let neg = mantissa.starts_with('-');
        let mut out = String::new();
        if neg {
            out.push('-');
        }
        if exp >= 0 {
            let int_len = exp as usize + 1;
            out.push_str(&digits[..int_len.min(digits.len())]);
            if int_len > digits.len() {
                out.push_str(&"0".repeat(int_len - digits.len()));
            }
            if int_len < digits.len() {
                out.push('.');
                out.push_str(&digits[int_len..]);
            }
        } else {
            out.push_str("0.");
            out.push_str(&"0".repeat((-exp - 1) as usize));
            out.push_str(&digits);
        }
        trim_fraction(out)
    } else {
        let trimmed = trim_fraction(mantissa.to_string());
        format!("{trimmed}e{exp}")
    }
}

fn trim_fraction(mut s: String) -> String {
    if s.contains('.') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
    }
    s
}

/// Short hex digest of a canonical config serialization; embedded in output
/// file names so datasets are traceable to the exact configuration.
pub fn config_hash<T: Serialize>(config: &T) -> String {
    let bytes = serde_json::to_vec(config).expect("serializable config");
    let digest = Sha256::digest(&bytes);
    hex_prefix(&digest, 12)
}

fn hex_prefix(bytes: &[u8], chars: usize) -> String {
    let mut s = String::with_capacity(chars);
    for b in bytes {
        s.push_str(&format!("{b:02x}"));
        if s.len() >= chars {
            break;
        }
    }
    s.truncate(chars);
    s
}

#[derive(Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: serde_json::Value,
    pub master_seed: u64,
    pub library_version: String,
    pub config_hash: String,
    pub wall_time_secs: f64,
}

impl RunManifest {
    pub fn new<T: Serialize>(command: &str, config: &T, master_seed: u64, wall: f64) -> Self {
        Self {
            command: command.to_string(),
            config: serde_json::to_value(config).expect("serializable config"),
            master_seed,
            library_version: env!("CARGO_PKG_VERSION").to_string(),
            config_hash: config_hash(config),
            wall_time_secs: wall,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formatting_samples() {
        assert_eq!(fmt_g12(0.0), "0");
        assert_eq!(fmt_g12(1.0), "1");
        assert_eq!(fmt_g12(-0.5), "-0.5");
        assert_eq!(fmt_g12(0.1), "0.1");
        assert_eq!(fmt_g12(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt_g12(924.0), "924");
        assert_eq!(fmt_g12(1e-7), "1e-7");
        assert_eq!(fmt_g12(-14.5), "-14.5");
        assert_eq!(fmt_g12(1.23456789012345e13), "1.23456789012e13");
    }

    #[test]
    fn hash_is_stable_per_config() {
        #[derive(Serialize)]
        struct C {
            a: u32,
        }
        assert_eq!(config_hash(&C { a: 1 }), config_hash(&C { a: 1 }));
        assert_ne!(config_hash(&C { a: 1 }), config_hash(&C { a: 2 }));
    }
}
