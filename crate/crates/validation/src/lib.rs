//! Holds the `acceptance` test target, which checks the numerical criteria end
//! to end and prints one PASS/FAIL line each. Run it with
//! `cargo test -p lunar-polar-validation --test acceptance`.
