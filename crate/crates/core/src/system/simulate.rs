use super::{factored_unforced, FactoredMltiSystem, MltiSystem};
use crate::einstein::einstein_apply;
use crate::error::{Error, Result};
use crate::tensor::DenseTensor;

/// States `X_0..X_k` and outputs `Y_0..Y_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub states: Vec<DenseTensor>,
    pub outputs: Vec<DenseTensor>,
}

fn check_inputs(inputs: &[DenseTensor], k: usize, dims: &[usize]) -> Result<()> {
    if inputs.len() < k {
        return Err(Error::domain(format!("{} inputs for {k} steps", inputs.len())));
    }
    if let Some(u) = inputs[..k].iter().find(|u| u.dims() != dims) {
        return Err(Error::domain(format!("input of shape {:?}, expected {dims:?}", u.dims())));
    }
    Ok(())
}

/// Steps `X_{t+1} = A*X_t + B*U_t` for `k` steps.
pub fn simulate(s: &MltiSystem, x0: &DenseTensor, inputs: &[DenseTensor], k: usize) -> Result<Trajectory> {
    if x0.dims() != s.state_dims() {
        return Err(Error::domain(format!(
            "initial state of shape {:?}, expected {:?}",
            x0.dims(),
            s.state_dims()
        )));
    }
    check_inputs(inputs, k, s.input_dims())?;
    let mut states = Vec::with_capacity(k + 1);
    let mut outputs = Vec::with_capacity(k + 1);
    let mut x = x0.clone();
    for u in &inputs[..k] {
        outputs.push(einstein_apply(s.c(), &x)?);
        let next = einstein_apply(s.a(), &x)?.add(&einstein_apply(s.b(), u)?)?;
        states.push(std::mem::replace(&mut x, next));
    }
    outputs.push(einstein_apply(s.c(), &x)?);
    states.push(x);
    Ok(Trajectory { states, outputs })
}

/// Simulation in factored form. The unforced response `A^t*X_0` comes from
/// [`factored_unforced`] (slice-product expansion while it stays small,
/// factored stepping otherwise); the forced part is stepped with the
/// factored `A` and `B`. Outputs use the factored `C`.
pub fn factored_simulate(
    f: &FactoredMltiSystem,
    x0: &DenseTensor,
    inputs: &[DenseTensor],
    k: usize,
) -> Result<Trajectory> {
    let state = f.a.pshape().rows().to_vec();
    if x0.dims() != state.as_slice() {
        return Err(Error::domain(format!("initial state of shape {:?}, expected {state:?}", x0.dims())));
    }
    check_inputs(inputs, k, f.b.pshape().cols())?;
    let mut forced = DenseTensor::zeros(x0.shape().clone());
    let mut states = Vec::with_capacity(k + 1);
    for t in 0..=k {
        let x = factored_unforced(&f.a, x0, t)?.add(&forced)?;
        states.push(x);
        if t < k {
            forced = f.a.apply(&forced)?.add(&f.b.apply(&inputs[t])?)?;
        }
    }
    let outputs = states.iter().map(|x| f.c.apply(x)).collect::<Result<_>>()?;
    Ok(Trajectory { states, outputs })
}
