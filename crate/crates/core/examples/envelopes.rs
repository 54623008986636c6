//! Envelope constants and dominance margins for P = x2 D1.
use ultradiff::metivier::verify::{verify_qk_envelope, verify_theta_envelope};
use ultradiff::metivier::{select_parameters, DiffOperator, InstanceOptions, RegimeRequest};
use ultradiff::WeightSequence;

fn main() -> ultradiff::Result<()> {
    let m = WeightSequence::gevrey(3.0, 2048)?;
    let op = DiffOperator::parse("x2 D1", Some(2))?;
    let req = RegimeRequest::GammaFinite {
        power_rho: Some(0.4),
        gamma0: Some(2.0),
        gamma_tilde: Some(2.8),
    };
    let inst = select_parameters(&m, &op, req, &InstanceOptions::for_dimension(2))?;
    let mut reports = vec![verify_qk_envelope(&inst, 8, 4)?];
    reports.push(verify_theta_envelope(&inst, 1, 8, 4)?);
    for r in reports {
        println!("{:?}: log A = {:.4}, drift = {:.4}, holds = {}", r.kind, r.log_a, r.drift, r.holds);
        for d in &r.dominance {
            println!("  {}: min margin {:.4}", d.name, d.min_margin);
        }
    }
    Ok(())
}
