//! Writes a synthetic keystroke log: `synth_corpus <out.csv> [sessions] [events] [seed]`.

use ptchron::session::write_log;
use ptchron::synth::{synth_corpus, SynthConfig};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let out = args.get(1).expect("usage: synth_corpus <out.csv> [sessions] [events] [seed]");
    let n = args.get(2).map_or(50, |s| s.parse().unwrap());
    let events = args.get(3).map_or(2000, |s| s.parse().unwrap());
    let seed = args.get(4).map_or(1, |s| s.parse().unwrap());
    let cfg = SynthConfig {
        target_events: events,
        ..SynthConfig::default()
    };
    let sessions = synth_corpus(seed, n, &cfg);
    let f = std::fs::File::create(out).unwrap();
    write_log(&sessions, std::io::BufWriter::new(f)).unwrap();
}
