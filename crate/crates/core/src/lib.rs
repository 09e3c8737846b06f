//! Pseudo-spectral solvers for incompressible viscous resistive Hall-MHD on the
//! periodic unit cube, together with its reductions: the standalone Hall
//! problem, the axisymmetric swirl/Burgers system, and the Maxwell-regularized
//! non-resistive Hall problem.

pub mod axisym;
pub mod hall;
pub mod integrator;
pub mod io;
pub mod maxreg;
pub mod presets;
pub mod scaling;
pub mod spectral;
pub mod verify;
