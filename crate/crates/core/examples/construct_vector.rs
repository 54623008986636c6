//! Builds u for P = D1 on R^2 with M = G^3 and evaluates it along the characteristic direction.
use ultradiff::metivier::evaluate::{directional_derivative_at_center, evaluate_u};
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
    println!("x0 = {:?}  xi0 = {:?}  eps = {:.6}", inst.x0, inst.xi0, inst.eps);
    for s in [-0.9, -0.5, 0.0, 0.5, 0.9] {
        let x = [inst.x0[0] + s * inst.xi0[0], inst.x0[1] + s * inst.xi0[1]];
        let u = evaluate_u(&inst, &x)?;
        println!("s = {s:>4}  u = {:.6e} {:+.6e}i", u.re, u.im);
    }
    for k in [0, 5, 10, 20] {
        let v = directional_derivative_at_center(&inst, k)?;
        println!("k = {k:>2}  log |(xi0 . D)^k u(x0)| = {:.4}  log N_k = {:.4}", v.log_abs(), inst.n.log_m()[k]);
    }
    Ok(())
}
