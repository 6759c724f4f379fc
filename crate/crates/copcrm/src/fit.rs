//! Maximum-likelihood estimation (in progress).
