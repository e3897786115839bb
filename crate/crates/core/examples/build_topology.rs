//! Rebuilds the three topology router configs from the scripted steps and
//! prints them.

use routeplace_core::parser::print_config;
use routeplace_core::pipeline::{run_steps, Step};
use routeplace_core::synthesizer::{ScriptedPlugin, DEFAULT_THRESHOLD};

fn main() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/topology");
    let steps: Vec<Step> = serde_json::from_str(&std::fs::read_to_string(dir.join("steps.json")).unwrap()).unwrap();
    let plugin = ScriptedPlugin::from_json(&std::fs::read_to_string(dir.join("generator.json")).unwrap()).unwrap();
    let (routers, reports) = run_steps(&steps, &plugin, DEFAULT_THRESHOLD).unwrap_or_else(|e| panic!("{e}"));
    for (name, config) in &routers {
        println!("=== {name} ({} route-maps)\n{}", config.route_maps.len(), print_config(config));
    }
    for r in reports {
        eprintln!("{} {}: {} attempts, {} questions", r.router, r.map, r.attempts, r.questions);
    }
}
