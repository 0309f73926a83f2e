//! Benchmark inputs shared by the criterion targets.

use permtwist::heisenberg::FockVector;
use permtwist::twist::{tensor_of, TensorState};

/// `α(-1)𝟏`.
pub fn alpha() -> FockVector {
    FockVector::state(&[1])
}

/// `ω ⊗ α(-1)𝟏`, a weight-3 tensor touching both slots of `V^{⊗2}`.
pub fn omega_alpha() -> TensorState {
    tensor_of(&[FockVector::omega(), alpha()])
}
