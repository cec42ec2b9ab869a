//! Holds the `acceptance` test target. Run it with
//! `cargo test -p qvctl-validation --test acceptance`.
