//! Reproduction harnesses (in progress).
