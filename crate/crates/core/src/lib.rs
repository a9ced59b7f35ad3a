pub mod associated;
pub mod catalog;
pub mod cover;
pub mod error;
pub mod frontend;
pub mod groups;
pub mod jets;
pub mod linalg;
pub mod principal;
pub mod residual;
pub mod vconn;

pub use error::{Error, Result};
pub use residual::Residual;
