//! Central-difference gradient verification for the differentiable losses.

use candle_core::{DType, Device, Tensor, Var};

use crate::error::{Error, Result};

pub const DEFAULT_EPSILON: f64 = 1e-5;

/// Compares the analytic gradient of a scalar loss against central finite
/// differences at every input coordinate and returns the worst relative
/// error, |ga − gn| / max(|ga|, |gn|, 1e-6). Inputs must be f64.
pub fn grad_check<F>(loss_op: F, input: &Tensor, epsilon: f64) -> Result<f64>
where
    F: Fn(&Tensor) -> Result<Tensor>,
{
    if input.dtype() != DType::F64 {
        return Err(Error::config("grad_check requires double-precision inputs"));
    }
    let var = Var::from_tensor(input)?;
    let loss = loss_op(var.as_tensor())?;
    let loss_v: f64 = loss.to_dtype(DType::F64)?.to_scalar()?;
    if !loss_v.is_finite() {
        return Err(Error::numeric(format!("loss is not finite: {loss_v}")));
    }
    let grads = loss.backward()?;
    let shape = input.dims().to_vec();
    let n: usize = shape.iter().product();
    let analytic: Vec<f64> = match grads.get(var.as_tensor()) {
        Some(g) => g.flatten_all()?.to_vec1()?,
        None => vec![0.0; n],
    };

    let base: Vec<f64> = input.flatten_all()?.to_vec1()?;
    let device = Device::Cpu;
    let eval = |data: Vec<f64>| -> Result<f64> {
        let t = Tensor::from_vec(data, shape.as_slice(), &device)?;
        let v: f64 = loss_op(&t)?.to_dtype(DType::F64)?.to_scalar()?;
        if !v.is_finite() {
            return Err(Error::numeric("perturbed loss is not finite"));
        }
        Ok(v)
    };

    let mut worst = 0.0f64;
    for i in 0..n {
        let mut plus = base.clone();
        plus[i] += epsilon;
        let mut minus = base.clone();
        minus[i] -= epsilon;
        let numeric = (eval(plus)? - eval(minus)?) / (2.0 * epsilon);
        let rel = (analytic[i] - numeric).abs() / analytic[i].abs().max(numeric.abs()).max(1e-6);
        if rel > worst {
            worst = rel;
        }
    }
    Ok(worst)
}
