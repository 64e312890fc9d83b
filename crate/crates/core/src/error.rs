use core::fmt;

/// A physical or configuration parameter violated its documented invariant.
#[derive(Debug, Clone, PartialEq)]
pub struct InvalidParameter {
    pub name: &'static str,
    pub reason: &'static str,
}

impl InvalidParameter {
    pub(crate) const fn new(name: &'static str, reason: &'static str) -> Self {
        Self { name, reason }
    }
}

impl fmt::Display for InvalidParameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid parameter `{}`: {}", self.name, self.reason)
    }
}

impl core::error::Error for InvalidParameter {}

/// Integration produced a non-finite state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NumericalBlowUp;

impl fmt::Display for NumericalBlowUp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("integration produced a non-finite state")
    }
}

impl core::error::Error for NumericalBlowUp {}

pub(crate) fn require(cond: bool, name: &'static str, reason: &'static str) -> Result<(), InvalidParameter> {
    if cond {
        Ok(())
    } else {
        Err(InvalidParameter::new(name, reason))
    }
}
