pub mod cases;
pub mod oracles;
