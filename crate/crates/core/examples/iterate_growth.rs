//! Norms of P^k u on the reporting grid, fitted against M~_k.
use ultradiff::metivier::verify::verify_vector_growth;
use ultradiff::metivier::{select_parameters, DiffOperator, InstanceOptions, RegimeRequest};
use ultradiff::WeightSequence;

fn main() -> ultradiff::Result<()> {
    let m = WeightSequence::gevrey(3.0, 2048)?;
    let op = DiffOperator::parse("D1", Some(2))?;
    let req = RegimeRequest::GammaFinite {
        power_rho: Some(0.4),
        gamma0: Some(2.0),
        gamma_tilde: Some(2.8),
    };
    let inst = select_parameters(&m, &op, req, &InstanceOptions::for_dimension(2))?;
    let r = verify_vector_growth(&inst, 8, 0)?;
    for (n, reference) in r.norms.iter().zip(&r.reference) {
        println!("k = {:>2}  log sup = {:>9.4}  log L2 = {:>9.4}  log M~ = {:>9.4}", n.k, n.log_sup, n.log_l2, reference);
    }
    println!("sup: log C = {:.4}, log h = {:.4}; holds = {}", r.sup.fit.log_c, r.sup.fit.log_h, r.holds);
    Ok(())
}
