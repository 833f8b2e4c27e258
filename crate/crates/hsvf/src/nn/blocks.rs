//! Convolution and linear blocks built on the parameter store.

use candle_core::Tensor;

use crate::error::Result;

use super::ParamStore;

#[derive(Clone)]
pub struct Conv2d {
    weight: candle_core::Var,
    bias: Option<candle_core::Var>,
    stride: usize,
    padding: usize,
}

impl Conv2d {
    pub fn new(
        store: &mut ParamStore,
        name: &str,
        in_c: usize,
        out_c: usize,
        kernel: usize,
        stride: usize,
        padding: usize,
        bias: bool,
    ) -> Result<Self> {
        let fan_in = (in_c * kernel * kernel) as f64;
        let bound = 1.0 / fan_in.sqrt();
        let weight =
            store.var_uniform(&format!("{name}.weight"), &[out_c, in_c, kernel, kernel], bound)?;
        let bias = if bias {
            Some(store.var_uniform(&format!("{name}.bias"), &[out_c], bound)?)
        } else {
            None
        };
        Ok(Self { weight, bias, stride, padding })
    }

    /// Same as [`Conv2d::new`] but with all parameters initialized to zero;
    /// used for residual heads that must start as the identity.
    pub fn new_zeroed(
        store: &mut ParamStore,
        name: &str,
        in_c: usize,
        out_c: usize,
        kernel: usize,
        stride: usize,
        padding: usize,
    ) -> Result<Self> {
        let weight = store.var_zeros(&format!("{name}.weight"), &[out_c, in_c, kernel, kernel])?;
        let bias = Some(store.var_zeros(&format!("{name}.bias"), &[out_c])?);
        Ok(Self { weight, bias, stride, padding })
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        self.forward_opt(x, false)
    }

    /// Forward pass; with `frozen` the parameters are detached so no
    /// gradient flows into them.
    pub fn forward_opt(&self, x: &Tensor, frozen: bool) -> Result<Tensor> {
        let weight = if frozen { self.weight.as_tensor().detach() } else { self.weight.as_tensor().clone() };
        let y = x.conv2d(&weight, self.padding, self.stride, 1, 1)?;
        match &self.bias {
            Some(b) => {
                let b = b.as_tensor().reshape((1, b.as_tensor().dim(0)?, 1, 1))?;
                let b = if frozen { b.detach() } else { b };
                Ok(y.broadcast_add(&b)?)
            }
            None => Ok(y),
        }
    }
}

#[derive(Clone)]
pub struct Linear {
    weight: candle_core::Var,
    bias: Option<candle_core::Var>,
}

impl Linear {
    pub fn new(
        store: &mut ParamStore,
        name: &str,
        in_dim: usize,
        out_dim: usize,
        bias: bool,
    ) -> Result<Self> {
        let bound = 1.0 / (in_dim as f64).sqrt();
        let weight = store.var_uniform(&format!("{name}.weight"), &[out_dim, in_dim], bound)?;
        let bias = if bias {
            Some(store.var_uniform(&format!("{name}.bias"), &[out_dim], bound)?)
        } else {
            None
        };
        Ok(Self { weight, bias })
    }

    pub fn new_zeroed(
        store: &mut ParamStore,
        name: &str,
        in_dim: usize,
        out_dim: usize,
    ) -> Result<Self> {
        let weight = store.var_zeros(&format!("{name}.weight"), &[out_dim, in_dim])?;
        let bias = Some(store.var_zeros(&format!("{name}.bias"), &[out_dim])?);
        Ok(Self { weight, bias })
    }

    /// x: (N, in_dim) -> (N, out_dim)
    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let y = x.matmul(&self.weight.as_tensor().t()?)?;
        match &self.bias {
            Some(b) => Ok(y.broadcast_add(b.as_tensor())?),
            None => Ok(y),
        }
    }
}
