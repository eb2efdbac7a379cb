//! Shared inputs for the benchmarks.

use lagmmse_core::mixture::{mixture_spectrum, MixingMeasure};
use lagmmse_core::model::OuParams;
use lagmmse_core::spectral::{RationalSpectrum, TabulatedSpectrum};
use lagmmse_core::Dtmc;

pub fn ou() -> OuParams {
    OuParams::new(0.5).expect("valid rate")
}

/// The equal-weight mixture of rates 0.75 and 0.25.
pub fn pair() -> MixingMeasure {
    MixingMeasure::new(vec![0.75, 0.25], vec![0.5, 0.5]).expect("valid mixture")
}

pub fn pair_spectrum() -> RationalSpectrum {
    mixture_spectrum(&pair()).expect("valid mixture")
}

pub fn triangle() -> TabulatedSpectrum {
    TabulatedSpectrum::triangular(4097).expect("valid grid")
}

pub fn chain() -> Dtmc {
    Dtmc::example()
}
