//! Builds the standard families and prints their classification.
use ultradiff::weightseq::{analytic_inclusion, derivation_closed, gamma_index, quasianalyticity_sum, strong_nonquasianalyticity};
use ultradiff::WeightSequence;

fn main() -> ultradiff::Result<()> {
    let k = 2048;
    let seqs = [
        ("G^1", WeightSequence::gevrey(1.0, k)?),
        ("G^2", WeightSequence::gevrey(2.0, k)?),
        ("N^{2,2}", WeightSequence::qpower(2.0, 2.0, k)?),
        ("N^{2,3}", WeightSequence::qpower(2.0, 3.0, k)?),
        ("L^1", WeightSequence::logpower(1.0, k)?),
    ];
    println!("{:<8} {:<17} {:<8} {:<8} {:<8} gamma", "seq", "quasianalytic", "snqa", "incl", "closed");
    for (name, m) in &seqs {
        let qa = quasianalyticity_sum(m, k - 1)?;
        let snqa = strong_nonquasianalyticity(m, k / 2)?;
        let g = gamma_index(m, 64.0, 1e-3)?;
        println!(
            "{name:<8} {:<17} {:<8} {:<8} {:<8} {:.3}",
            format!("{:?}", qa.verdict),
            format!("{:?}", snqa.verdict),
            format!("{:?}", analytic_inclusion(m).verdict),
            format!("{:?}", derivation_closed(m).verdict),
            g.value.as_f64()
        );
    }
    Ok(())
}
