//! Empty by design; the crate exists for `benches/hot_paths.rs`.
