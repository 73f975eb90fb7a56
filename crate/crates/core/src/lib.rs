//! Hypothesis tests boosted by auxiliary information.
//!
//! The crate pairs two classical tests (the Z-test for a mean, the
//! chi-square test of cell frequencies) with drop-in variants that exploit
//! external knowledge about the sampled law, either known partition
//! marginals consumed through Raking-Ratio reweighting, or a known
//! conditional mean consumed through a regression adjustment. Both variants
//! keep the asymptotic level of the classical test while shrinking the
//! β-risk exponentially in the sample size.
//!
//! Layout:
//!
//! * [`matrix`] — spectral toolkit for small symmetric PSD matrices
//!   (pseudo-inverse, pseudo-determinant, PSD ordering, product square root).
//! * [`gauss`] — normal/chi-square quantiles, singular multivariate normal
//!   density and sampler.
//! * [`ztest`] / [`chisq`] — the statistics, decision rules, and the
//!   asymptotic β-risk rate machinery.
//! * [`raking`] — the Raking-Ratio engine and its variance-reduction algebra.
//! * [`condmean`] — conditional-mean regression-adjusted estimators.
//! * [`bench`] — the reference distribution, seeded Monte-Carlo power
//!   harness, gain tables, and ECDF exports.
//! * [`events`] / [`rng`] — interval events and the reproducibility-pinned
//!   generator.

pub mod bench;
pub mod chisq;
pub mod condmean;
pub mod events;
pub mod gauss;
pub mod matrix;
pub mod raking;
pub mod rng;
pub mod ztest;
