//! Writes a small synthetic corpus (stereo WAVs plus train and eval
//! manifests) for trying the CLI without the challenge data.
//!
//! cargo run --example synth_corpus -- /tmp/si-demo [backend]

use std::path::PathBuf;

use si_predict::features::FeatureBackend;
use si_predict::synth::{write_corpus, SynthSpec};

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let dir = PathBuf::from(args.next().unwrap_or_else(|| "si-demo".into()));
    let backend: FeatureBackend = args
        .next()
        .unwrap_or_else(|| "mock:1:planted:w2-6:d16x12".into())
        .parse()?;
    let corpus = write_corpus(&dir, &SynthSpec::default(), backend.as_mock())?;
    println!("train manifest: {}", corpus.train_manifest.display());
    println!("eval manifest:  {}", corpus.eval_manifest.display());
    println!("{} train / {} eval records", corpus.train.len(), corpus.eval.len());
    Ok(())
}
