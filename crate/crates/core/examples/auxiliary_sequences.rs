//! Equivalence of omega_T and omega_U(s^tau)/tau for T = G^2, U = G^3, and its shifted form.
use ultradiff::assocweight::{aux_equivalence, aux_shift_check};
use ultradiff::WeightSequence;

fn main() -> ultradiff::Result<()> {
    let t = WeightSequence::gevrey(2.0, 2048)?;
    let u = WeightSequence::gevrey(3.0, 2048)?;
    let eq = aux_equivalence(&t, &u, 1.5)?;
    println!("log A = {}  C = {:.6}  holds = {}", eq.log_a, eq.c_breakpoints, eq.holds);
    let shift = aux_shift_check(&t, &u, 1.5, 0.5, 1.6)?;
    println!("shifted C = {:.6}  finite = {}", shift.c_breakpoints, shift.finite);
    Ok(())
}
