//! Loads a manifest, prints its correctness histogram and the partitions
//! built for one challenge split.
//!
//! cargo run --example ingest_manifest -- [train.json eval.json]

use si_predict::data::{correctness_histogram, load_manifest, DatasetSplit};
use si_predict::synth::{write_corpus, SynthSpec};

fn main() -> anyhow::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let _tmp;
    let (train, eval) = match args.as_slice() {
        [t, e] => (load_manifest(t)?, load_manifest(e)?),
        _ => {
            _tmp = tempfile::tempdir()?;
            let corpus = write_corpus(_tmp.path(), &SynthSpec::default(), None)?;
            (corpus.train, corpus.eval)
        }
    };

    let hist = correctness_histogram(&train, 10.0)?;
    println!("{} training records", train.len());
    for (c, p) in hist.centers.iter().zip(&hist.proportions) {
        println!("  {c:>5.1}  {p:.4}  {}", "#".repeat((p * 60.0).round() as usize));
    }

    for split in 1..=3 {
        let s = DatasetSplit::build(&train, &eval, split, 0, false)?;
        println!(
            "split {split}: train {} / disjoint {} / random {} / eval {}, held out {:?} {:?}",
            s.train.len(),
            s.disjoint_validation.len(),
            s.random_validation.len(),
            s.evaluation.len(),
            s.held_out_listeners,
            s.held_out_systems,
        );
    }
    Ok(())
}
