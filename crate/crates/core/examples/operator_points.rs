//! Non-elliptic points and the symbol shrinking bound for a few operators.
use ultradiff::metivier::{DiffOperator, SearchBox};

fn main() -> ultradiff::Result<()> {
    for expr in ["D1", "x2 D1", "D1 - D2^2", "heat", "laplacian"] {
        let op = DiffOperator::parse(expr, Some(2))?;
        let search = SearchBox {
            center: vec![0.0; 2],
            half_width: 1.0,
        };
        let p = op.find_nonelliptic_point(&search, 32, 0);
        println!("{expr:<10} found = {:<5} residual = {:.2e} x0 = {:.3?} xi0 = {:.3?}", p.found, p.residual, p.x0, p.xi0);
    }
    Ok(())
}
