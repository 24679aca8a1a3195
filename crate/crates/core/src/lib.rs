pub mod attribute_model;
pub mod diag;
pub mod fpgrowth;
pub mod ingest;
pub mod noise;
pub mod pipeline;
pub mod popularity;
pub mod registry;
pub mod synthgen;
pub mod trendmine;
