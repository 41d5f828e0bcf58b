pub mod abelian;
pub mod diagonal;
pub mod error;
pub mod io;
pub mod machine;
pub mod straus;
pub mod verify;
pub mod wkl;

pub use error::{Error, Result};
