use std::path::PathBuf;
use std::process::Command;

fn header() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include").join("btrelax.h")
}

#[test]
fn header_declares_the_api() {
    let text = std::fs::read_to_string(header()).unwrap();
    assert!(text.starts_with("#ifndef BTRELAX_H"));
    for sym in [
        "typedef struct BtrGrid BtrGrid;",
        "typedef struct BtrParams BtrParams;",
        "typedef struct BtrState BtrState;",
        "BTR_STATUS_OK = 0",
        "BTR_STATUS_NUMERICAL = 3",
        "btr_last_error_message(void)",
        "btr_grid_new(",
        "btr_params_new(",
        "btr_params_set_matrix(",
        "btr_state_new(",
        "btr_state_density(",
        "btr_state_velocity(",
        "btr_energy(",
        "btr_entropy(",
        "btr_diagnostics(",
        "btr_nsk_step(",
        "btr_bt_step(",
    ] {
        assert!(text.contains(sym), "missing {sym}");
    }
}

#[test]
fn header_compiles_as_c() {
    let Ok(out) = Command::new("cc")
        .args(["-fsyntax-only", "-std=c11", "-Wall", "-Werror", "-x", "c"])
        .arg(header())
        .output()
    else {
        eprintln!("no C compiler found, skipping");
        return;
    };
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
