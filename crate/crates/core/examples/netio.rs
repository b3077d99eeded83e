//! Writes the compiled net of the three-branch protocol as PNML and as a
//! Tina `.net` file, then reads both back.

use rbnet::dsl::parse_protocol;
use rbnet::reductions::{compile_to_petri, export_net, import_net, NetFormat};

fn main() {
    let p = parse_protocol(include_str!("../assets/fig1.rbn")).expect("bundled protocol parses");
    let net = compile_to_petri(&p, 1);
    let dir = std::env::temp_dir();
    for (format, ext) in [(NetFormat::Pnml, "pnml"), (NetFormat::DotNet, "net")] {
        let path = dir.join(format!("fig1.{ext}"));
        std::fs::write(&path, export_net(&net, format)).expect("temp dir is writable");
        let back = import_net(&std::fs::read_to_string(&path).expect("just written"), format).expect("own output parses");
        println!("{}: {} bytes, round trip equal: {}", path.display(), std::fs::metadata(&path).map(|m| m.len()).unwrap_or(0), back == net);
    }
    let text = export_net(&net, NetFormat::DotNet);
    for line in text.lines().take(6) {
        println!("  {line}");
    }
}
