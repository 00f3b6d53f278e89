//! Confidence gates on a scripted matcher: discard below 0.5, move the
//! source only at 0.75 or above, stop after three misses in a row.

use sparse_autolabel::model::{PropagationDirection, TrackId};
use sparse_autolabel::pipeline::{propagate, PipelineConfig};
use sparse_autolabel::providers::{NoiseConfig, OracleProviders, Scripted, ScriptedMatcher};
use sparse_autolabel::sampling::sample_sparse;
use sparse_autolabel::simulator::{simulate, ObjectSpec, SimConfig};

fn main() -> sparse_autolabel::Result<()> {
    let seq = simulate(&SimConfig {
        duration: 12,
        objects: vec![ObjectSpec {
            x: 1.0,
            z: 20.0,
            heading: -std::f64::consts::FRAC_PI_2,
            speed: 10.0,
            turn_rate: 0.0,
            length: 4.2,
            width: 1.8,
            height: 1.5,
        }],
        ..SimConfig::default()
    })?;
    let mut sparse = sample_sparse(&seq, 1, 0)?;
    sparse.tracks.insert(TrackId(0), vec![0]);
    let geometry = OracleProviders::new(&seq, NoiseConfig::noiseless(), 4)?;
    let mut matcher = ScriptedMatcher::new(&seq, Scripted::Confidence(0.9));
    let t = TrackId(0);
    matcher
        .set(t, 1, Scripted::Confidence(0.6))
        .set(t, 2, Scripted::Confidence(0.75))
        .set(t, 3, Scripted::Confidence(0.49))
        .set(t, 4, Scripted::Confidence(0.5))
        .set(t, 5, Scripted::NotFound)
        .set(t, 6, Scripted::Confidence(0.2))
        .set(t, 7, Scripted::Fail);
    let hyps = propagate(&seq, &sparse, &matcher, &geometry, &PipelineConfig::default(), PropagationDirection::Forward)?;
    for h in &hyps {
        for p in &h.pseudolabels {
            println!("frame {:2} accepted, confidence {:.2}, matched from frame {}", p.frame_index, p.confidence, p.provenance.source_frame);
        }
        for m in &h.misses {
            println!("frame {:2} missed: {:?}", m.frame, m.reason);
        }
        println!("segment ended: {:?}", h.end);
    }
    Ok(())
}
