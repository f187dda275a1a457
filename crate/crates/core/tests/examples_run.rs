//! Every example under `examples/` builds and runs to completion.

use std::process::Command;

const EXAMPLES: [&str; 7] = [
    "stationary_state",
    "simulate_population",
    "many_to_one",
    "spine_sampler",
    "pde_reference",
    "reversed_lineages",
    "ks_and_ou_fit",
];

#[test]
fn examples_run() {
    for name in EXAMPLES {
        let out = Command::new(env!("CARGO"))
            .args(["run", "--quiet", "--release", "-p", "movopt", "--example", name])
            .output()
            .unwrap();
        assert!(out.status.success(), "{name}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(!out.stdout.is_empty(), "{name} printed nothing");
    }
}
