//! Report bytes are a pure function of the config. Set `UPDATE_GOLDEN=1` to
//! rewrite the stored report after an intentional change.

use std::fs;
use std::path::{Path, PathBuf};

use sqkd_core::harness::{write_report, OutputFormat};
use sqkd_core::{execute, parse_config, ExperimentConfig, ProtocolKind, RotationSpec};

fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

fn report_bytes(cfg: &ExperimentConfig, format: OutputFormat) -> Vec<u8> {
    let mut buf = Vec::new();
    write_report(&execute(cfg).unwrap(), format, &mut buf).unwrap();
    buf
}

#[test]
fn pinned_config_matches_stored_report() {
    let dir = golden_dir();
    let cfg = parse_config(&fs::read_to_string(dir.join("protocol2_small.toml")).unwrap()).unwrap();
    let got = report_bytes(&cfg, OutputFormat::Structured);
    let path = dir.join("protocol2_small.json");
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        fs::write(&path, &got).unwrap();
    }
    let want = fs::read(&path).expect("golden report missing; run with UPDATE_GOLDEN=1");
    assert!(got == want, "report drifted from {}", path.display());
}

#[test]
fn report_schema_has_every_section() {
    let cfg = parse_config(&fs::read_to_string(golden_dir().join("protocol2_small.toml")).unwrap()).unwrap();
    let v: serde_json::Value = serde_json::from_slice(&report_bytes(&cfg, OutputFormat::Structured)).unwrap();
    for key in ["config", "run", "key_rate", "aborted", "final_key"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    let run = &v["run"];
    assert_eq!(run["seed"], 20231105);
    for key in ["sent", "delivered", "basis_matched", "accepted", "z_basis_matched", "z_accepted", "revealed", "key_bits"] {
        assert!(run["totals"].get(key).is_some(), "missing totals.{key}");
    }
    for est in ["estimate", "full_sample"] {
        for key in ["r_b", "acceptance", "t_minus", "t_plus", "t_p", "eps_minus", "eps_plus"] {
            assert!(run[est].get(key).is_some(), "missing {est}.{key}");
        }
        for fam in ["eps_minus", "eps_plus"] {
            for b in ["z", "x", "y"] {
                assert!(run[est][fam][b]["se"].is_number());
            }
        }
    }
    for key in ["rate_per_accepted_bit", "rate_per_sent_code", "no_key"] {
        assert!(v["key_rate"].get(key).is_some(), "missing key_rate.{key}");
    }
    assert_eq!(v["config"]["n_codes"], 600);
}

#[test]
fn same_seed_gives_identical_bytes() {
    for kind in [ProtocolKind::Protocol1, ProtocolKind::Protocol2, ProtocolKind::Protocol3, ProtocolKind::Bb84] {
        let mut cfg = ExperimentConfig::new(kind, 3_000, 77);
        cfg.channel.rotation = RotationSpec::fixed(0.4, 0.3, 0.0);
        cfg.channel.loss_prob = 0.1;
        for format in [OutputFormat::Structured, OutputFormat::Csv] {
            assert_eq!(report_bytes(&cfg, format), report_bytes(&cfg, format), "{kind:?}");
        }
        let mut other = cfg.clone();
        other.seed = 78;
        assert_ne!(
            report_bytes(&cfg, OutputFormat::Structured),
            report_bytes(&other, OutputFormat::Structured)
        );
    }
}
