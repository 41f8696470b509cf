//! Polar periodic orbits of the restricted three-body problem and its Hill
//! lunar limit. Orbits are found by symmetric shooting in regularized
//! coordinates, continued in energy or mass ratio, and classified by the
//! spectrum of their monodromy matrix.

pub mod error;
pub mod expr;
pub mod integrator;
pub mod dynamics;
pub mod regularization;
pub mod orbit;
pub mod stability;
pub mod continuation;
pub mod moser;
