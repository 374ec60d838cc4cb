pub mod oracles;
pub mod passband;
