//! Every example must run to completion.

macro_rules! example {
    ($name:ident, $path:literal) => {
        #[path = $path]
        mod $name;

        #[test]
        fn $name() {
            $name::run().unwrap();
        }
    };
}

example!(sparse_approx, "../examples/sparse_approx.rs");
example!(support_recovery, "../examples/support_recovery.rs");
example!(norm_estimation, "../examples/norm_estimation.rs");
example!(misspecification, "../examples/misspecification.rs");
example!(constrained_variants, "../examples/constrained_variants.rs");
example!(verify_lemmas, "../examples/verify_lemmas.rs");
example!(experiment_grid, "../examples/experiment_grid.rs");
example!(file_pipeline, "../examples/file_pipeline.rs");
