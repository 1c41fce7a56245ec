pub mod bilinear;
pub mod flow;
pub mod measure;
pub mod ratio;
