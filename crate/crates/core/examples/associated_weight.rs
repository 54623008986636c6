//! Associated weight of G^2, its inverse, and the power scaling identity.
use ultradiff::assocweight::{power_scaling_check, AssociatedWeight};
use ultradiff::WeightSequence;

fn main() -> ultradiff::Result<()> {
    let m = WeightSequence::gevrey(2.0, 1024)?;
    let w = AssociatedWeight::new(&m);
    for t in [1.0f64, 10.0, 1e3, 1e6] {
        println!("t = {t:>9.0e}  omega = {:>10.4}  log h(1/t) = {:>10.4}", w.omega(t.ln())?, w.h_weight(-t.ln())? + 0.0);
    }
    for k in [5, 20, 50] {
        println!("k = {k:>2}  log M_k = {:.6}  recovered = {:.6}", m.log_m()[k], w.invert_weight(k)?);
    }
    let r = power_scaling_check(&m, 0.5, 1000, 1)?;
    println!("omega of M^0.5 vs 0.5 omega(t^2): max rel discrepancy {:.2e}", r.max_rel_discrepancy);
    Ok(())
}
