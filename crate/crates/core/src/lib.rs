//! Numerical workbench for conformal geometry on four-manifolds.
//!
//! * [`jet`]: truncated Taylor arithmetic in four variables, used to obtain
//!   exact metric derivatives from analytic charts.
//! * [`tensor_lab`]: pointwise curvature of coordinate charts, the
//!   Weyl / trace-free Ricci decomposition, `sigma_k`, Bach tensor and the
//!   Bach-flat integrand identities.
//! * [`functionals`]: product Gauss-Legendre quadrature over closed model
//!   manifolds (Gauss-Bonnet-Chern, Sobolev/Yamabe checks, mass bounds).
//! * [`neck_ode`]: the radial `sigma_2` equation on the cylinder `R x S^3`.

pub mod functionals;
pub mod jet;
pub mod neck_ode;
pub mod tensor_lab;

pub use jet::Jet;
