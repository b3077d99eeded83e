//! The command-line front end driven in-process, one call per subcommand.

use std::path::Path;

fn rbnet(args: &[&str]) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = rbnet::cli::run(std::iter::once("rbnet").chain(args.iter().copied()), &mut out, &mut err);
    println!("$ rbnet {}\nexit {code}", args.join(" "));
    let text = String::from_utf8_lossy(&out);
    for line in text.lines().take(8) {
        println!("  {line}");
    }
}

fn main() {
    let assets = Path::new(env!("CARGO_MANIFEST_DIR")).join("assets");
    let asset = |n: &str| assets.join(n).display().to_string();
    let (fig1, fig2) = (asset("fig1.rbn"), asset("fig2.trace.json"));
    let witness = std::env::temp_dir().join("rbnet-witness.json").display().to_string();
    rbnet(&["check", &fig1]);
    rbnet(&["check", &fig1, "--policy", "k=1", "--nodes", "4", "--exhaust"]);
    rbnet(&["check", &fig1, "--policy", "k=2", "--nodes", "3", "--witness", &witness]);
    rbnet(&["validate", &witness, "--protocol", &fig1, "--policy", "k=2"]);
    rbnet(&["validate", &fig2, "--policy", "k=1"]);
    rbnet(&["transform", &fig2, "--kind", "1loc"]);
    rbnet(&["compile", &fig1, "--target", "petri", "--k", "1", "--verify-cap", "5", "--out", &std::env::temp_dir().join("fig1.net").display().to_string()]);
    rbnet(&["compile", &asset("countdown.mm"), "--target", "protocol-from-minsky"]);
}
