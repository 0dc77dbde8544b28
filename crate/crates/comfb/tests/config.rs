use std::io::Write;

use comfb::config::{load, ParamSet};
use comfb_core::SystemParams;

fn file(text: &str) -> tempfile::NamedTempFile {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    f.write_all(text.as_bytes()).unwrap();
    f
}

#[test]
fn empty_input_gives_defaults() {
    let r = load(None, &[]).unwrap();
    assert_eq!(r.params, SystemParams::paper_defaults());
    assert!(r.entries.is_empty());
}

#[test]
fn si_and_dimensionless_forms_agree() {
    let si = ParamSet::parse("kappa_a_over_2pi_hz = 0.5e6\ng_over_2pi_hz = 4.0\nE_over_2pi_hz = 60e9\nT_millikelvin = 20").unwrap();
    let du = ParamSet::parse("kappa_a_over_omega_b = 0.5\ng = 4e-6\nE = 6e4\nT_kelvin = 0.02").unwrap();
    let (a, _) = si.resolve().unwrap();
    let (b, _) = du.resolve().unwrap();
    for (x, y) in [(a.kappa_a, b.kappa_a), (a.g, b.g), (a.drive, b.drive), (a.temperature, b.temperature)] {
        assert!((x / y - 1.0).abs() < 1e-12, "{x} vs {y}");
    }
}

#[test]
fn laser_power_sets_the_drive() {
    let (p, _) = ParamSet::parse("laser_power_w = 2.9e-3").unwrap().resolve().unwrap();
    assert!((p.drive / 6.0e4 - 1.0).abs() < 0.02, "{}", p.drive);
}

#[test]
fn conflicting_forms_are_rejected() {
    for text in [
        "kappa_a = 0.5\nkappa_a_over_2pi_hz = 5e5",
        "E = 6e4\nlaser_power_w = 3e-3",
        "G_m = 0.03\nG_m_over_G_c = 1.5",
        "T = 0.02\nT_millikelvin = 20",
    ] {
        let e = ParamSet::parse(text).unwrap_err();
        assert!(e.0.contains("conflicts"), "{text}: {e}");
    }
}

#[test]
fn unknown_and_nested_keys_are_rejected() {
    assert!(ParamSet::parse("kapa_a = 0.5").is_err());
    assert!(ParamSet::parse("[pumps]\nG_c = 0.1").is_err());
    assert!(ParamSet::parse("r_b = \"high\"").unwrap().resolve().is_err());
}

#[test]
fn invalid_values_fail_validation() {
    assert!(load(None, &["r_b=1.2".into()]).is_err());
    assert!(load(None, &["kappa_a=-1".into()]).is_err());
    assert!(load(None, &["rtol=-1".into()]).is_err());
    assert!(load(None, &["initial=sideways".into()]).is_err());
    assert!(load(None, &["no_equals_sign".into()]).is_err());
}

#[test]
fn overrides_apply_after_the_file_in_order() {
    let f = file("r_b = 0.1\nkappa_a_over_2pi_hz = 0.4e6\n");
    let overrides = vec!["r_b=0.2".to_string(), "kappa_a=0.6".to_string(), "r_b=0.3".to_string()];
    let r = load(Some(f.path()), &overrides).unwrap();
    assert_eq!(r.params.r_b, 0.3);
    // The override replaced the SI form instead of conflicting with it.
    assert_eq!(r.params.kappa_a, 0.6);
    assert!(!r.entries.contains_key("kappa_a_over_2pi_hz"));
    assert_eq!(r.overrides, overrides);
}

#[test]
fn ratio_keys_follow_the_resolved_denominator() {
    let r = load(None, &["delta_c=1.0".into(), "omega_m_over_delta_c=1.5".into(), "G_c=0.04".into(), "G_m_over_G_c=2".into()]).unwrap();
    assert!((r.params.omega_m - 1.5).abs() < 1e-15);
    assert!((r.params.g_m - 0.08).abs() < 1e-15);
}

#[test]
fn solver_settings_are_configurable() {
    let r = load(None, &["rtol=1e-8".into(), "max_steps=1000".into(), "initial=displaced".into()]).unwrap();
    assert_eq!(r.settings.integrator.rtol, 1e-8);
    assert_eq!(r.settings.max_steps, 1000);
}
