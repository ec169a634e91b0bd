//! Network accuracy-drop estimation for approximate-multiplier variants.
//!
//! Two interchangeable estimators sit behind one interface: a measured
//! lookup table (network, variant) -> drop, and a linear proxy on the
//! multiplier's mean relative error distance. Drops are in percentage
//! points of top-1 accuracy.

use std::collections::BTreeMap;

use crate::approxmul::library::VariantRecord;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub enum AccuracyModel<F> {
    /// Measured drops keyed by network name, then variant id.
    Table(BTreeMap<String, BTreeMap<String, F>>),
    /// drop = max(0, c0 + c1 * MRED). The proxy is monotone in MRED, which
    /// is what the optimizer relies on; it is not a substitute for
    /// retraining-aware evaluation.
    Proxy { c0: F, c1: F },
}

impl<F: Scalar> AccuracyModel<F> {
    pub fn proxy(c0: F, c1: F) -> Result<Self> {
        let model = AccuracyModel::Proxy { c0, c1 };
        model.validate()?;
        Ok(model)
    }

    pub fn table(entries: BTreeMap<String, BTreeMap<String, F>>) -> Result<Self> {
        let model = AccuracyModel::Table(entries);
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            AccuracyModel::Proxy { c0, c1 } => {
                if !(c0.is_finite() && c1.is_finite()) || *c0 < F::zero() || *c1 < F::zero() {
                    return Err(Error::Config(format!(
                        "proxy coefficients must be finite and >= 0, got c0={c0} c1={c1}"
                    )));
                }
            }
            AccuracyModel::Table(entries) => {
                for (network, drops) in entries {
                    for (variant, drop) in drops {
                        if !drop.is_finite() || *drop < F::zero() {
                            return Err(Error::Config(format!(
                                "table drop for ({network}, {variant}) must be finite and >= 0"
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// Estimated top-1 accuracy drop (percentage points) of running `network`
/// with multiplier `record`. Exact multipliers always return zero.
pub fn accuracy_drop<F: Scalar>(
    record: &VariantRecord,
    network: &str,
    model: &AccuracyModel<F>,
) -> Result<F> {
    if record.is_exact() {
        return Ok(F::zero());
    }
    match model {
        AccuracyModel::Proxy { c0, c1 } => {
            let mred = F::from_f64_const(record.error.mred);
            Ok((*c0 + *c1 * mred).max(F::zero()))
        }
        AccuracyModel::Table(entries) => {
            let drops = entries.get(network).ok_or_else(|| {
                Error::Lookup(format!("accuracy table has no entries for network {network:?}"))
            })?;
            drops.get(&record.id).copied().ok_or_else(|| {
                Error::Lookup(format!(
                    "accuracy table has no entry for ({network:?}, {:?})",
                    record.id
                ))
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::approxmul::metrics::ErrorMetrics;
    use crate::approxmul::search::Provenance;

    fn record(id: &str, mred: f64) -> VariantRecord {
        let error = if mred == 0.0 {
            ErrorMetrics::ZERO
        } else {
            ErrorMetrics { med: 1.0, mred, er: 0.5, wce: 8.0 }
        };
        VariantRecord {
            id: id.to_string(),
            area: 100.0,
            error,
            provenance: Provenance::exact(),
            netlist: String::new(),
        }
    }

    #[test]
    fn exact_variant_drops_zero_under_any_model() {
        let exact = record("exact", 0.0);
        let proxy: AccuracyModel<f64> = AccuracyModel::proxy(0.7, 50.0).unwrap();
        assert_eq!(accuracy_drop(&exact, "vgg16", &proxy).unwrap(), 0.0);
        let table: AccuracyModel<f64> = AccuracyModel::table(BTreeMap::new()).unwrap();
        assert_eq!(accuracy_drop(&exact, "vgg16", &table).unwrap(), 0.0);
    }

    #[test]
    fn proxy_is_linear_and_monotone_in_mred() {
        let model: AccuracyModel<f64> = AccuracyModel::proxy(0.1, 50.0).unwrap();
        let lo = accuracy_drop(&record("a", 0.004), "net", &model).unwrap();
        let hi = accuracy_drop(&record("b", 0.02), "net", &model).unwrap();
        assert!((lo - 0.3).abs() < 1e-12);
        assert!((hi - 1.1).abs() < 1e-12);
        assert!(hi > lo);
    }

    #[test]
    fn table_lookup_and_missing_entry() {
        let mut nets = BTreeMap::new();
        let mut drops = BTreeMap::new();
        drops.insert("v001".to_string(), 0.8f64);
        nets.insert("resnet50".to_string(), drops);
        let model = AccuracyModel::table(nets).unwrap();
        let v = record("v001", 0.01);
        assert_eq!(accuracy_drop(&v, "resnet50", &model).unwrap(), 0.8);
        assert!(matches!(
            accuracy_drop(&v, "vgg16", &model),
            Err(Error::Lookup(_))
        ));
        let unknown = record("v999", 0.01);
        assert!(matches!(
            accuracy_drop(&unknown, "resnet50", &model),
            Err(Error::Lookup(_))
        ));
    }

    #[test]
    fn validation_rejects_negative_coefficients() {
        assert!(AccuracyModel::<f64>::proxy(-0.1, 1.0).is_err());
        assert!(AccuracyModel::<f64>::proxy(0.0, -1.0).is_err());
        let mut nets = BTreeMap::new();
        let mut drops = BTreeMap::new();
        drops.insert("x".to_string(), -0.5f64);
        nets.insert("n".to_string(), drops);
        assert!(AccuracyModel::table(nets).is_err());
    }

    #[test]
    fn generic_over_f32_and_f64() {
        let m32: AccuracyModel<f32> = AccuracyModel::proxy(0.0, 50.0).unwrap();
        let m64: AccuracyModel<f64> = AccuracyModel::proxy(0.0, 50.0).unwrap();
        let v = record("v", 0.0125);
        let d32 = accuracy_drop(&v, "n", &m32).unwrap();
        let d64 = accuracy_drop(&v, "n", &m64).unwrap();
        assert!((f64::from(d32) - d64).abs() < 1e-6);
    }
}
