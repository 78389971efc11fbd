use gtasep_core::harness::*;
use gtasep_core::model::ModelParams;
use std::time::Instant;
fn main() {
    let args: Vec<String> = std::env::args().collect();
    let ts: Vec<u64> = args[1].split(',').map(|s| s.parse().unwrap()).collect();
    let alt = args.get(2).map(|s| s == "alt").unwrap_or(false);
    let params = ModelParams::new(0.5, 0.5).unwrap();
    let cfg = KpzSweepConfig { params, alternating: alt, t_ladder: ts, density: 0.5, final_tolerance: 1.0 };
    let start = Instant::now();
    let rep = kpz_sweep(&cfg).unwrap();
    for r in &rep.ladder { println!("t={} dist={:.5}", r.parameter, r.distance); }
    println!("monotone={:?} elapsed={:?}", rep.ladder_monotone, start.elapsed());
}
