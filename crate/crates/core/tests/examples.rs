//! Runs every example's `main` so the examples directory cannot rot.

macro_rules! example {
    ($name:ident) => {
        mod $name {
            include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/", stringify!($name), ".rs"));

            #[test]
            fn runs() {
                main().expect(concat!(stringify!($name), " example should run"));
            }
        }
    };
}

example!(brownian_paths);
example!(ito_calculus);
example!(self_financing_ledger);
example!(broken_strategies);
example!(martingale);
example!(hedging_convergence);
example!(defect_refinement);
