//! Holds the `acceptance` test target, kept in its own package so it runs after the
//! unit and integration tests of `unfitted-lsfem`.
