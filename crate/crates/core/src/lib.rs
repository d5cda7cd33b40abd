pub mod data;
pub mod factorgraph;
pub mod fgnn;
pub mod geometry;
pub mod neural;
pub mod pipeline;
