//! Moments of the flat kernel exp(-omega_N) against N_k, with the fitted sandwich constants.
use ultradiff::kernel::{verify_moment_sandwich, FlatKernel};
use ultradiff::WeightSequence;

fn main() -> ultradiff::Result<()> {
    let n = WeightSequence::gevrey(2.0, 2048)?;
    let kernel = FlatKernel::new(&n);
    for m in kernel.moments(10, 0.0)? {
        println!("k = {:>2}  log I_k = {:>9.4}  log N_k = {:>9.4}", m.k, m.log_i, m.log_n);
    }
    let r = verify_moment_sandwich(&kernel, 30)?;
    println!("log Q1 = {:.4}  log Q2 = {:.4}  holds = {}", r.q1.log_c, r.q2.log_c, r.holds);
    let closed = kernel.raw_moment(12.5, 1.0)?.log_value;
    let ratio = kernel.moment_by_quadrature(12.5, 1.0, closed)?;
    println!("k = 12.5 from t = 1: quadrature / closed form = {ratio:.12}");
    Ok(())
}
