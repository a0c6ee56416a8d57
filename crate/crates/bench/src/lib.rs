//! Criterion benchmarks for the eigensolver, the expression evaluator, loop
//! continuation and localization. Run with `cargo bench -p cusp-bench`.
